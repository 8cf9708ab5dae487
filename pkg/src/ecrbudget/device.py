"""Device configuration and the default synthetic pair ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PairParams, TransmonParams

SCHEMA_VERSION = "1.0"

# device medians
MEDIAN_T1 = 69.0  # us
MEDIAN_T2E = 103.0  # us
MEDIAN_ANHARMONICITY = -182.0  # MHz
FREQ_RANGE = (4.24, 4.53)  # GHz


class ConfigError(ValueError):
    """Invalid device configuration."""


@dataclass(frozen=True)
class ReadoutModel:
    assignment_error: float = 0.04
    leak_as_one: float = 0.9

    def __post_init__(self):
        if not (0 <= self.assignment_error < 0.5 and 0 <= self.leak_as_one <= 1):
            raise ConfigError("readout probabilities out of range")


@dataclass(frozen=True)
class PairSpec:
    """A pair plus its design cohort labels (documentation only; never used in processing)."""

    params: PairParams
    cohort: str = "clean"  # strong | intermediate | clean
    high_zz: bool = False

    @property
    def label(self) -> str:
        return self.params.label

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "cohort": self.cohort, "high_zz": self.high_zz}

    @classmethod
    def from_dict(cls, d: dict) -> PairSpec:
        return cls(PairParams.from_dict(d["params"]), d.get("cohort", "clean"), bool(d.get("high_zz", False)))


@dataclass(frozen=True)
class DeviceConfig:
    pairs: tuple[PairSpec, ...]
    seed: int
    dt: float = 0.25
    shots: int | None = 1024
    n_seeds: int = 30
    lengths: tuple[int, ...] = (2, 4, 8, 16, 32)
    readout: ReadoutModel = field(default_factory=ReadoutModel)

    def __post_init__(self):
        if not self.pairs:
            raise ConfigError("configuration has no pairs")
        labels = [p.label for p in self.pairs]
        if len(set(labels)) != len(labels):
            raise ConfigError("pair labels must be unique")
        if self.seed is None:
            raise ConfigError("a seed is mandatory")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if len(self.lengths) < 3:
            raise ConfigError("RB needs at least three lengths")

    def pair(self, label: str) -> PairSpec:
        for p in self.pairs:
            if p.label == label:
                return p
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed, "dt": self.dt, "shots": self.shots, "n_seeds": self.n_seeds,
            "lengths": list(self.lengths),
            "readout": {"assignment_error": self.readout.assignment_error, "leak_as_one": self.readout.leak_as_one},
            "pairs": [p.to_dict() for p in self.pairs],
            "units": {"dt": "ns", "frequency": "GHz", "anharmonicity": "MHz", "coupling": "MHz",
                      "t1": "us", "t2e": "us"},
        }

    @classmethod
    def from_dict(cls, d: dict) -> DeviceConfig:
        try:
            pairs = tuple(PairSpec.from_dict(p) for p in d["pairs"])
            return cls(
                pairs=pairs, seed=int(d["seed"]), dt=float(d.get("dt", 0.25)),
                shots=d.get("shots", 1024), n_seeds=int(d.get("n_seeds", 30)),
                lengths=tuple(int(x) for x in d.get("lengths", (2, 4, 8, 16, 32))),
                readout=ReadoutModel(**d.get("readout", {})),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from exc


# (label, detuning MHz, coupling MHz, cohort, high ZZ)
_DESIGN = (
    ("Q01-Q02", 85.5, 3.5, "strong", False),
    ("Q03-Q04", 142.0, 2.6, "strong", False),
    ("Q05-Q06", 142.0, 3.0, "strong", True),
    ("Q07-Q08", 45.0, 2.7, "intermediate", False),
    ("Q09-Q10", 52.0, 2.6, "intermediate", False),
    ("Q11-Q12", 80.0, 2.7, "intermediate", False),
    ("Q13-Q14", 100.0, 2.7, "intermediate", False),
    ("Q15-Q16", 125.0, 2.7, "intermediate", False),
    ("Q17-Q18", 128.0, 3.8, "intermediate", True),
    ("Q19-Q20", 130.0, 3.8, "intermediate", True),
    ("Q21-Q22", 70.0, 2.7, "clean", False),
    ("Q23-Q24", 72.0, 2.7, "clean", False),
    ("Q25-Q26", 105.0, 2.7, "clean", False),
    ("Q27-Q28", 115.0, 2.7, "clean", False),
    ("Q29-Q30", 118.0, 3.8, "clean", True),
)


def default_ensemble(seed: int = 7) -> DeviceConfig:
    """Fifteen pairs: 3 strong-leakage, 7 intermediate, 5 clean; 4 of them high-ZZ.

    Detuning and coupling set the cohort and are fixed by design; the seed
    jitters the absolute frequency inside FREQ_RANGE and the anharmonicities
    by +-2 MHz. Coherence times vary by +-10 %.
    """
    rng = np.random.default_rng(seed)
    specs = []
    for label, detuning, coupling, cohort, high_zz in _DESIGN:
        f_t = rng.uniform(FREQ_RANGE[0], FREQ_RANGE[1] - detuning * 1e-3)
        qubits = []
        for f in (f_t + detuning * 1e-3, f_t):
            t1 = MEDIAN_T1 * rng.uniform(0.9, 1.1)
            t2 = min(MEDIAN_T2E * rng.uniform(0.9, 1.1), 2 * t1)
            qubits.append(TransmonParams(round(f, 6), round(MEDIAN_ANHARMONICITY + rng.uniform(-2, 2), 3),
                                         round(t1, 3), round(t2, 3)))
        specs.append(PairSpec(PairParams(qubits[0], qubits[1], coupling, label), cohort, high_zz))
    return DeviceConfig(tuple(specs), seed)


def single_pair_config(pair: PairParams, seed: int = 0, **kw) -> DeviceConfig:
    return DeviceConfig((PairSpec(pair),), seed, **kw)
