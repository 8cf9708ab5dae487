"""CSV tables and dependency-free SVG charts built from a results document."""

from __future__ import annotations

import csv
import io as _io
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .budget import COMPONENTS

CSV_COLUMNS = ("pair", "component", "epg_before", "epg_after", "irb_before", "irb_after")
COLORS = {
    "incoherent": "#4c72b0", "iz": "#dd8452", "zz": "#55a868", "leakage": "#c44e52",
    "unexplained": "#b0b0b0", "before": "#c44e52", "after": "#4c72b0",
}
SERIES_COLORS = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


# -- tables ---------------------------------------------------------------------------


def _budget(pair: dict, mode: str) -> dict | None:
    return pair[mode]["budget"] if mode in pair else None


def budget_rows(doc: dict) -> list[dict]:
    """One row per (pair, component); ``*_after`` cells are blank without a suppressed run."""
    rows = []
    for label in sorted(doc["pairs"]):
        pair = doc["pairs"][label]
        before, after = _budget(pair, "naive"), _budget(pair, "suppressed")
        for comp in COMPONENTS:
            rows.append({
                "pair": label, "component": comp,
                "epg_before": before["components"][comp] if before else "",
                "epg_after": after["components"][comp] if after else "",
                "irb_before": before["irb_epg"] if before else "",
                "irb_after": after["irb_epg"] if after else "",
            })
    return rows


def budget_csv(doc: dict) -> str:
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(budget_rows(doc))
    return buf.getvalue()


def survival_csv(irb: dict) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("length", "ref_mean", "ref_std", "int_mean", "int_std"))
    for row in zip(irb["lengths"], irb["ref_mean"], irb["ref_std"], irb["int_mean"], irb["int_std"]):
        w.writerow(row)
    return buf.getvalue()


# -- SVG canvas -----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


@dataclass
class Canvas:
    """A single plot area with linear axes; children are raw SVG strings."""

    title: str
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    xlabel: str = ""
    ylabel: str = ""
    width: int = 720
    height: int = 400
    margin: tuple[int, int, int, int] = (40, 20, 60, 70)  # top, right, bottom, left
    items: list[str] = field(default_factory=list)

    def x(self, v: float) -> float:
        top, right, bottom, left = self.margin
        lo, hi = self.xlim
        return left + (v - lo) / (hi - lo) * (self.width - left - right)

    def y(self, v: float) -> float:
        top, right, bottom, left = self.margin
        lo, hi = self.ylim
        return self.height - bottom - (v - lo) / (hi - lo) * (self.height - top - bottom)

    def rect(self, x0, x1, y0, y1, color, **attrs) -> str:
        extra = "".join(f' {k.replace("_", "-")}="{escape(str(v))}"' for k, v in attrs.items())
        px, py = self.x(x0), self.y(y1)
        return (f'<rect x="{_fmt(px)}" y="{_fmt(py)}" width="{_fmt(self.x(x1) - px)}" '
                f'height="{_fmt(self.y(y0) - py)}" fill="{color}"{extra}/>')

    def polyline(self, xs, ys, color, dashed=False, label=None):
        pts = " ".join(f"{_fmt(self.x(a))},{_fmt(self.y(b))}" for a, b in zip(xs, ys))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        title = f"<title>{escape(label)}</title>" if label else ""
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"{dash}>'
                          f"{title}</polyline>")

    def text(self, x, y, s, anchor="middle", size=11, rotate=None):
        rot = f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate is not None else ""
        return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" text-anchor="{anchor}"{rot}>'
                f"{escape(s)}</text>")

    def legend(self, entries: list[tuple[str, str]]):
        x0 = self.width - self.margin[1] - 130
        for i, (name, color) in enumerate(entries):
            y = self.margin[0] + 6 + 16 * i
            self.items.append(f'<rect x="{x0}" y="{y}" width="10" height="10" fill="{color}"/>')
            self.items.append(self.text(x0 + 16, y + 9, name, anchor="start", size=10))

    def _axes(self, xticks=None) -> list[str]:
        top, right, bottom, left = self.margin
        out = [
            f'<line x1="{left}" y1="{self.height - bottom}" x2="{self.width - right}" '
            f'y2="{self.height - bottom}" stroke="black"/>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{self.height - bottom}" stroke="black"/>',
            self.text(self.width / 2, 22, self.title, size=14),
            self.text(self.width / 2, self.height - 12, self.xlabel),
            self.text(18, self.height / 2, self.ylabel, rotate=-90),
        ]
        for v in np.linspace(*self.ylim, 5):
            out.append(self.text(left - 6, self.y(v) + 4, f"{v:.3g}", anchor="end", size=10))
        if xticks is None:
            xticks = [(v, f"{v:.3g}") for v in np.linspace(*self.xlim, 5)]
        for v, s in xticks:
            out.append(self.text(self.x(v), self.height - bottom + 16, s, size=10))
        return out

    def render(self, xticks=None) -> str:
        body = "\n".join(self._axes(xticks) + self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    exp = 10 ** np.floor(np.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if m * exp >= v:
            return float(m * exp)
    return float(10 * exp)


# -- charts -----------------------------------------------------------------------------


def budget_svg(doc: dict) -> str:
    """Stacked budget bars; one group (before, after) per qubit pair, IRB EPG as a tick mark."""
    labels = sorted(doc["pairs"])
    tallest = 0.0
    for label in labels:
        for mode in ("naive", "suppressed"):
            b = _budget(doc["pairs"][label], mode)
            if b:
                tallest = max(tallest, sum(b["components"].values()), b["irb_epg"])
    c = Canvas("Error budget per pair (left: before, right: after)", (0, len(labels)), (0, _nice_max(tallest)),
               "qubit pair", "error per gate", width=max(720, 60 * len(labels) + 120))
    for i, label in enumerate(labels):
        group = [f'<g class="bar-pair" data-pair="{escape(label)}">']
        for j, mode in enumerate(("naive", "suppressed")):
            b = _budget(doc["pairs"][label], mode)
            if not b:
                continue
            x0 = i + 0.1 + 0.4 * j
            base = 0.0
            for comp in COMPONENTS:
                v = b["components"][comp]
                if v > 0:
                    group.append(c.rect(x0, x0 + 0.38, base, base + v, COLORS[comp],
                                        data_mode=mode, data_component=comp))
                    base += v
            y = c.y(b["irb_epg"])
            group.append(f'<line x1="{_fmt(c.x(x0))}" x2="{_fmt(c.x(x0 + 0.38))}" y1="{_fmt(y)}" '
                         f'y2="{_fmt(y)}" stroke="black" stroke-width="2"/>')
        group.append("</g>")
        c.items.append("".join(group))
    c.legend([(k, COLORS[k]) for k in COMPONENTS] + [("IRB EPG", "#000000")])
    return c.render([(i + 0.5, label) for i, label in enumerate(labels)])


def cumulative_svg(doc: dict) -> str:
    """Empirical cumulative distributions of IRB EPG before and after suppression."""
    series = {}
    for mode, name in (("naive", "before"), ("suppressed", "after")):
        vals = sorted(_budget(p, mode)["irb_epg"] for p in doc["pairs"].values() if mode in p)
        if vals:
            series[name] = vals
    top = _nice_max(max((v[-1] for v in series.values()), default=1.0))
    c = Canvas("Cumulative distribution of IRB error per gate", (0, top), (0, 1), "error per gate",
               "fraction of pairs")
    for name, vals in series.items():
        n = len(vals)
        xs, ys = [0.0], [0.0]
        for k, v in enumerate(vals):
            xs += [v, v]
            ys += [k / n, (k + 1) / n]
        xs.append(top)
        ys.append(1.0)
        c.polyline(xs, ys, COLORS[name], dashed=name == "before", label=name)
    c.legend([(k, COLORS[k]) for k in series])
    return c.render()


def leakage_svg(pair: dict, label: str = "") -> str:
    """Leakage signals versus CR phase for each control state; dashed before, solid after."""
    curves = []
    for mode, dashed in (("naive", True), ("suppressed", False)):
        for scan in pair.get(mode, {}).get("leakage_scans", []):
            for sig in ("p2", "p_flip"):
                curves.append((f"{mode} |{scan['control_init']}> {sig}", scan["phis_rad"], scan[sig], dashed))
    if not curves:
        raise ValueError("pair has no leakage scans")
    top = _nice_max(max(max(c[2]) for c in curves))
    c = Canvas(f"Leakage phase sweep {label}".strip(), (0, 2 * np.pi), (0, top), "CR phase (rad)",
               "population after repeated ZX(pi/4)")
    legend = []
    for k, (name, xs, ys, dashed) in enumerate(curves):
        color = SERIES_COLORS[k % 4]
        c.polyline(xs, ys, color, dashed, name)
        if not dashed:
            legend.append((name.replace("suppressed ", ""), color))
    c.legend(legend or [(curves[k][0], SERIES_COLORS[k % 4]) for k in range(min(4, len(curves)))])
    return c.render([(v, s) for v, s in ((0, "0"), (np.pi / 2, "pi/2"), (np.pi, "pi"),
                                          (1.5 * np.pi, "3pi/2"), (2 * np.pi, "2pi"))])


def survival_svg(irb: dict, label: str = "") -> str:
    lengths = irb["lengths"]
    c = Canvas(f"RB survival {label}".strip(), (0, max(lengths) * 1.05), (0, 1), "sequence length (Cliffords)",
               "ground-state survival")
    for key, name, color in (("ref", "reference", COLORS["after"]), ("int", "interleaved", COLORS["before"])):
        mean = irb[f"{key}_mean"]
        c.polyline(lengths, mean, color, label=name)
        for m, s, l in zip(mean, irb[f"{key}_std"], lengths):
            c.items.append(f'<line x1="{_fmt(c.x(l))}" x2="{_fmt(c.x(l))}" y1="{_fmt(c.y(m - s))}" '
                           f'y2="{_fmt(c.y(m + s))}" stroke="{color}"/>')
    c.legend([("reference", COLORS["after"]), ("interleaved", COLORS["before"])])
    return c.render()
