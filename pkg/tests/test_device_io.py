from __future__ import annotations

import json
from collections import Counter
import numpy as np
import pytest

from ecrbudget import io
from ecrbudget.device import FREQ_RANGE, ConfigError, DeviceConfig, ReadoutModel, default_ensemble, single_pair_config

from conftest import make_pair


def test_default_ensemble_cohorts():
    cfg = default_ensemble()
    assert len(cfg.pairs) == 15
    assert Counter(p.cohort for p in cfg.pairs) == {"strong": 3, "intermediate": 7, "clean": 5}
    assert sum(p.high_zz for p in cfg.pairs) == 4


def test_default_ensemble_parameters():
    for spec in default_ensemble().pairs:
        p = spec.params
        assert FREQ_RANGE[0] <= p.target.frequency < p.control.frequency <= FREQ_RANGE[1]
        assert abs(p.control.anharmonicity + 182) <= 2 and abs(p.target.anharmonicity + 182) <= 2
        for q in (p.control, p.target):
            assert 62 <= q.t1 <= 76 and q.t2e <= 2 * q.t1


def test_high_zz_pairs_sit_near_the_anharmonicity():
    for spec in default_ensemble().pairs:
        if spec.high_zz:
            assert spec.params.detuning > 115 and spec.params.coupling >= 3.0


def test_ensemble_is_seeded():
    assert default_ensemble(7) == default_ensemble(7)
    a, b = default_ensemble(7), default_ensemble(8)
    assert a.pairs[0].params != b.pairs[0].params
    assert [p.params.detuning for p in a.pairs] == pytest.approx([p.params.detuning for p in b.pairs])


def test_config_round_trip():
    cfg = default_ensemble()
    text = json.dumps(cfg.to_dict())
    assert DeviceConfig.from_dict(json.loads(text)) == cfg


def test_config_validation():
    spec = default_ensemble().pairs[0]
    with pytest.raises(ConfigError):
        DeviceConfig((), 1)
    with pytest.raises(ConfigError):
        DeviceConfig((spec, spec), 1)
    with pytest.raises(ConfigError):
        DeviceConfig((spec,), None)
    with pytest.raises(ConfigError):
        DeviceConfig((spec,), 1, lengths=(2, 4))
    with pytest.raises(ConfigError):
        ReadoutModel(assignment_error=0.7)


def test_malformed_config_dict():
    d = default_ensemble().to_dict()
    del d["seed"]
    with pytest.raises(ConfigError):
        DeviceConfig.from_dict(d)
    with pytest.raises(ConfigError):
        DeviceConfig.from_dict({"pairs": [{"params": {}}], "seed": 1})


def test_pair_lookup():
    cfg = default_ensemble()
    assert cfg.pair("Q25-Q26").params.detuning == pytest.approx(105.0)
    with pytest.raises(KeyError):
        cfg.pair("nope")


# -- canonical JSON ---------------------------------------------------------------------


def test_jsonable_conversion():
    doc = {"a": np.float64(1.5), "b": np.arange(3), "c": (np.int64(2), np.bool_(True)), "d": float("nan"),
           "e": 1 + 2j, "f": make_pair(105.0)}
    out = io.to_jsonable(doc)
    assert out["a"] == 1.5 and out["b"] == [0, 1, 2] and out["c"] == [2, True]
    assert out["d"] is None and out["e"] == {"re": 1.0, "im": 2.0}
    assert out["f"] == make_pair(105.0).to_dict()
    json.loads(io.dumps(doc))


def test_snapshot_ignores_timestamps():
    doc = {"kind": "x", "pairs": {"p": 1}, "timestamps": {"started": "now"}}
    later = {**doc, "timestamps": {"started": "later"}}
    assert io.snapshot_hash(doc) == io.snapshot_hash(later)
    assert io.snapshot_hash(doc) != io.snapshot_hash({**doc, "pairs": {"p": 2}})


def test_read_write(tmp_path):
    doc = {"kind": "results", "schema_version": io.SCHEMA_VERSION, "pairs": {}}
    path = io.write(tmp_path / "sub" / "r.json", doc)
    assert io.read(path, "results") == doc
    with pytest.raises(io.DocumentError):
        io.read(path, "device-state")
    path.write_text(json.dumps({**doc, "schema_version": "0.1"}))
    with pytest.raises(io.DocumentError):
        io.read(path, "results")
    path.write_text("[1, 2]")
    with pytest.raises(io.DocumentError):
        io.read(path)
    with pytest.raises(io.DocumentError):
        io.read(tmp_path / "missing.json")


def test_single_pair_config():
    cfg = single_pair_config(make_pair(105.0, label="A"), seed=3, n_seeds=4)
    assert [p.label for p in cfg.pairs] == ["A"] and cfg.seed == 3 and cfg.n_seeds == 4
    assert DeviceConfig.from_dict(cfg.to_dict()) == cfg
