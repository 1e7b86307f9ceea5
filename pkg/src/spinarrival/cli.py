"""Command-line runner: point evaluations, velocity sweeps, validation, plot scripts.

Usage::

    spinarrival point --family symmetric --sigma0 0.01 --u 1 --at 1,1,1 --t 1
    spinarrival sweep --preset fig2 --out fig2.csv
    spinarrival validate --tier slow
    spinarrival plotscript fig2.csv --out plot_fig2.py

Sweep settings are resolved as built-in defaults < preset < ``--config``
file < explicit flags.  Without ``--out`` the CSV goes to the directory named
by ``SPINARRIVAL_OUTPUT_DIR`` (or the working directory).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .arrival import ComponentSelector, DegenerateDistribution, Detector, arrival_summary
from .currents import SpinVector, current_from_polar, current_source, closed_form_current
from .oracle import validation_reports
from .packets import AsymmetricPacket, SpaceTimePoint, SymmetricPacket
from .quadrature import QuadratureConfig, QuadratureError

OUTPUT_DIR_ENV = "SPINARRIVAL_OUTPUT_DIR"
CSV_HEADER = ["u", "tau", "tau_i", "tau_s", "norm", "norm_i", "norm_s", "t_max_used", "status"]
SELECTOR_NAMES = ("tau", "tau_i", "tau_s")
NORM_FOR = {"tau": "norm", "tau_i": "norm_i", "tau_s": "norm_s"}

PRESETS: Dict[str, dict] = {
    "fig1": {
        "family": "symmetric",
        "sigma0": 0.01,
        "detector": (1.0, 1.0, 1.0),
        "selectors": ("tau_s",),
    },
    "fig2": {
        "family": "asymmetric",
        "a": 0.001,
        "b": 0.4,
        "c": 0.01,
        "x1": 0.0,
        "detector": (1.0, 2.0, 1.0),
        "selectors": ("tau", "tau_i"),
    },
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    family: str = "symmetric"
    sigma0: float = 0.01
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    x1: float = 0.0
    detector: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    u_min: float = 0.5
    u_max: float = 10.0
    n_points: int = 40
    spacing: str = "linear"
    selectors: Tuple[str, ...] = SELECTOR_NAMES
    rel_tol: float = 1e-8
    abs_tol: float = 1e-30
    t_initial: float = 1.0
    max_doublings: int = 60
    tail_fraction: float = 1e-10

    def __post_init__(self):
        if self.family not in ("symmetric", "asymmetric"):
            raise UsageError(f"family must be symmetric or asymmetric, got {self.family!r}")
        if self.family == "symmetric" and not self.sigma0 > 0:
            raise UsageError("sigma0 must be positive")
        if self.family == "asymmetric" and not min(self.a, self.b, self.c) > 0:
            raise UsageError("a, b and c must be positive")
        if not self.u_min < self.u_max:
            raise UsageError("u_min must be smaller than u_max")
        if self.n_points < 2:
            raise UsageError("n_points must be at least 2")
        if self.spacing not in ("linear", "log"):
            raise UsageError("spacing must be linear or log")
        if self.spacing == "log" and not self.u_min > 0:
            raise UsageError("log spacing needs u_min > 0")
        if len(self.detector) != 3:
            raise UsageError("detector needs three coordinates")
        bad = [s for s in self.selectors if s not in SELECTOR_NAMES]
        if bad or not self.selectors:
            raise UsageError(f"selectors must be a non-empty subset of {SELECTOR_NAMES}")

    def velocities(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.u_min, self.u_max, self.n_points)
        return np.linspace(self.u_min, self.u_max, self.n_points)

    def packet(self, u: float):
        if self.family == "symmetric":
            return SymmetricPacket(self.sigma0, u)
        return AsymmetricPacket(self.a, self.b, self.c, self.x1, u)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            t_initial=self.t_initial,
            max_doublings=self.max_doublings,
            tail_fraction=self.tail_fraction,
        )


@dataclass(frozen=True)
class SweepRow:
    u: float
    status: str
    values: Dict[str, float]

    def csv_fields(self) -> List[str]:
        out = [_fmt(self.u)]
        for key in CSV_HEADER[1:-1]:
            v = self.values.get(key) if self.status == "OK" else None
            out.append("" if v is None else _fmt(v))
        out.append(self.status)
        return out


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.11e}"


def compute_row(spec: SweepSpec, u: float) -> SweepRow:
    sels = [ComponentSelector.from_name(s) for s in spec.selectors]
    try:
        summary = arrival_summary(
            current_source(spec.packet(float(u))), Detector(spec.detector), spec.quadrature(), sels
        )
    except DegenerateDistribution:
        return SweepRow(float(u), "DEGENERATE", {})
    except QuadratureError:
        return SweepRow(float(u), "NONCONVERGENT", {})
    if summary.degenerate:
        return SweepRow(float(u), "DEGENERATE", {})
    values = {}
    for name in spec.selectors:
        values[name] = getattr(summary, name)
        values[NORM_FOR[name]] = getattr(summary, NORM_FOR[name])
    values["t_max_used"] = summary.t_max_used
    return SweepRow(float(u), "OK", values)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[SweepRow]:
    us = [float(u) for u in spec.velocities()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(compute_row, [spec] * len(us), us))
    return [compute_row(spec, u) for u in us]


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


# ---- configuration -----------------------------------------------------------


def _parse_vector(text: str) -> Tuple[float, float, float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _coerce(key: str, value):
    if key == "detector":
        return _parse_vector(value) if isinstance(value, str) else tuple(float(v) for v in value)
    if key == "selectors":
        if isinstance(value, str):
            return tuple(s.strip() for s in value.split(",") if s.strip())
        return tuple(value)
    if key in ("family", "spacing"):
        return str(value).strip()
    if key in ("n_points", "max_doublings"):
        return int(value)
    return float(value)


SPEC_KEYS = tuple(f.name for f in fields(SweepSpec))


def read_config(path: Path) -> dict:
    """``key = value`` lines with ``#`` comments; keys are SweepSpec fields or ``preset``."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key != "preset" and key not in SPEC_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_spec(preset: Optional[str], config: dict, overrides: dict) -> SweepSpec:
    settings: dict = {}
    preset = overrides.get("preset") or preset or config.get("preset")
    if preset:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        settings.update(PRESETS[preset])
    for source in (config, overrides):
        for key, value in source.items():
            if key in SPEC_KEYS and value is not None:
                settings[key] = _coerce(key, value)
    return SweepSpec(**settings)


# ---- plot script -------------------------------------------------------------

_PLOT_TEMPLATE = '''\
"""Plot mean arrival times against group velocity from {csv_name}."""
import csv

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}
CURVES = {curves!r}

with open(CSV_PATH, newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if r["status"] == "OK"]

fig, ax = plt.subplots(figsize=(6, 4))
for column, label in CURVES:
    pairs = [(float(r["u"]), float(r[column])) for r in rows if r[column]]
    ax.plot([p[0] for p in pairs], [p[1] for p in pairs], marker="o", ms=3, label=label)
ax.set_xlabel("initial group velocity u")
ax.set_ylabel("mean arrival time")
ax.legend()
fig.tight_layout()
fig.savefig({png_path!r}, dpi=150)
'''


def plot_script(csv_path: Path) -> str:
    """Matplotlib script drawing every populated tau column of a sweep CSV."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise UsageError(f"{csv_path}: header is not {','.join(CSV_HEADER)}")
        rows = [dict(zip(header, r)) for r in reader]
    ok = [r for r in rows if r.get("status") == "OK"]
    columns = [c for c in SELECTOR_NAMES if any(r[c] for r in ok)]
    if not columns:
        raise UsageError(f"{csv_path}: no data rows to plot")
    labels = {c: c for c in columns}
    if "tau" in columns and "tau_i" in columns:
        both = [r for r in ok if r["tau"] and r["tau_i"]]
        if both and all(float(r["tau"]) > float(r["tau_i"]) for r in both):
            labels["tau"] = "tau (upper curve)"
            labels["tau_i"] = "tau_i (lower curve)"
    curves = [(c, labels[c]) for c in columns]
    csv_path = Path(csv_path)
    return _PLOT_TEMPLATE.format(
        csv_name=csv_path.name,
        csv_path=str(csv_path),
        curves=curves,
        png_path=str(csv_path.with_suffix(".png")),
    )


# ---- commands ----------------------------------------------------------------


def _point_packet(args):
    if args.family == "symmetric":
        return SymmetricPacket(args.sigma0, args.u)
    return AsymmetricPacket(args.a, args.b, args.c, args.x1, args.u)


def cmd_point(args, out=None) -> int:
    out = out or sys.stdout
    packet = _point_packet(args)
    x, y, z = _parse_vector(args.at)
    pt = SpaceTimePoint(x, y, z, args.t)
    if args.spin_dir:
        sample = current_from_polar(packet.polar_fields(pt), SpinVector.along(_parse_vector(args.spin_dir)))
    else:
        sample = closed_form_current(packet, pt)
    out.write(f"rho {_fmt(float(sample.rho))}\n")
    for name, vec in (("J_i", sample.j_i), ("J_s", sample.j_s), ("J", sample.j)):
        out.write(name + " " + " ".join(_fmt(float(v)) for v in vec) + "\n")
    return 0


def _sweep_overrides(args) -> dict:
    ov = {key: getattr(args, key, None) for key in SPEC_KEYS}
    ov["preset"] = args.preset
    return ov


def default_output(spec_name: str) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"sweep_{spec_name}.csv"


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    config = read_config(args.config) if args.config else {}
    spec = resolve_spec(None, config, _sweep_overrides(args))
    rows = run_sweep(spec, jobs=args.jobs)
    name = args.preset or config.get("preset") or spec.family
    path = Path(args.out) if args.out else default_output(name)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(sweep_csv(rows))
    n_ok = sum(r.status == "OK" for r in rows)
    out.write(f"wrote {len(rows)} rows ({n_ok} OK) to {path}\n")
    return 0


def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    reports = validation_reports(args.tier)
    for r in reports:
        out.write(r.line() + "\n")
    n_fail = sum(not r.passed for r in reports)
    out.write(f"{len(reports) - n_fail}/{len(reports)} checks passed\n")
    return 0 if n_fail == 0 else 1


def cmd_plotscript(args, out=None) -> int:
    out = out or sys.stdout
    text = plot_script(Path(args.csv))
    Path(args.out).write_text(text)
    out.write(f"wrote plot script to {args.out}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinarrival",
        description="Spin-dependent mean arrival times of free Gaussian wave packets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", help="print rho, J_i, J_s and J at one spacetime point")
    p.add_argument("--family", choices=("symmetric", "asymmetric"), default="symmetric")
    p.add_argument("--sigma0", type=float, default=0.01)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--x1", type=float, default=0.0)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--at", default="1,1,1", help="position x,y,z")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument(
        "--spin-dir",
        help="spin direction sx,sy,sz (generic formula); default is the +z closed form",
    )
    p.set_defaults(func=cmd_point)

    s = sub.add_parser("sweep", help="mean arrival times over a range of group velocities")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--config", help="file of 'key = value' lines")
    s.add_argument("--out", help="CSV path")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--family", choices=("symmetric", "asymmetric"))
    for name in ("sigma0", "a", "b", "c", "x1", "u_min", "u_max", "rel_tol", "abs_tol",
                 "t_initial", "tail_fraction"):
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    s.add_argument("--n-points", dest="n_points", type=int)
    s.add_argument("--max-doublings", dest="max_doublings", type=int)
    s.add_argument("--spacing", choices=("linear", "log"))
    s.add_argument("--detector", help="detector position x,y,z")
    s.add_argument("--selectors", help="comma-separated subset of tau,tau_i,tau_s")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="run the invariant and oracle suites")
    v.add_argument("--tier", choices=("fast", "slow"), default="fast")
    v.set_defaults(func=cmd_validate)

    ps = sub.add_parser("plotscript", help="emit a matplotlib script for a sweep CSV")
    ps.add_argument("csv")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_plotscript)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        parser.exit(2, f"spinarrival {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
