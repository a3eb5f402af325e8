"""Command-line front end: spectrum | simulate | scan | verify.

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import elementary as el
from .dynamics import DynamicsConfig, increment_rate, period_two_tail, simulate
from .errors import (
    FormatError,
    HorizonTooShort,
    InsufficientDecay,
    AtFixedPoint,
    PairSumViolation,
    SpecInvariantViolation,
    SpecParseError,
    ValidationError,
)
from .linear_model import default_horizon, detect_linearization
from .network import check_outcome, load_document
from .spectral import Classification, asymptotic_time, spectrum_for

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False)


def _finite(v):
    return v if v is not None and math.isfinite(v) else None


# --- spectrum ----------------------------------------------------------------


def cmd_spectrum(args) -> int:
    spec = el.parse_spec(args.spec)
    report = spectrum_for(spec, args.alpha)
    _write(_dump(report.to_dict()), args.out)
    return EXIT_OK


# --- simulate ----------------------------------------------------------------


def _load_vector(path: str) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read x0 from {path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("x")
    try:
        return np.array([float(v) for v in data], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"x0 in {path} is not a list of numbers") from exc


def _elementary_x0(inst, source: str, seed: int) -> np.ndarray:
    if source == "zeros":
        return el.from_reduced(inst, np.zeros(inst.dim))
    if source == "ones":
        return el.from_reduced(inst, np.ones(inst.dim))
    if source == "random":
        return el.from_reduced(inst, el.random_reduced(inst.dim, seed))
    return _load_vector(source)


def _network_x0(net, m, doc_x, source: str, seed: int) -> np.ndarray:
    if source == "zeros":
        x = np.zeros(net.node_count)
    elif source == "ones":
        x = np.ones(net.node_count)
    elif source == "random":
        # split every matched edge at a uniform fraction
        x = np.zeros(net.node_count)
        u = el.random_reduced(len(m.pairs), seed)
        for (i, j), f in zip(m.pairs, u):
            w = net.weight(i, j)
            x[i], x[j] = f * w, (1.0 - f) * w
    elif source == "document":
        if doc_x is None:
            raise InputError("network document has no 'x' to start from")
        x = doc_x.copy()
    else:
        x = _load_vector(source)
    for node, val in net.pinned.items():
        x[node] = val
    return x


def _rate_summary(traj) -> dict:
    try:
        est = increment_rate(traj)
    except (InsufficientDecay, AtFixedPoint) as exc:
        return {"R": None, "T": None, "note": str(exc)}
    return {"R": est.rate, "T": est.time, "window": list(est.window), "rms_residual": est.rms_residual}


def cmd_simulate(args) -> int:
    cfg = DynamicsConfig(args.alpha, args.epsilon, args.horizon)
    source = Path(args.source)
    summary: dict = {"source": args.source, "x0": args.x0, "seed": args.seed}
    inst = None
    if source.suffix == ".json" or source.is_file():
        net, m, doc_x = load_document(source)
        x0 = _network_x0(net, m, doc_x, args.x0, args.seed)
    else:
        spec = el.parse_spec(args.source)
        inst = el.build(spec)
        net, m = inst.network, inst.matching
        x0 = _elementary_x0(inst, args.x0, args.seed)
        summary["spec"] = el.format_spec(spec)
    if x0.shape != (net.node_count,):
        raise InputError(f"x0 has {x0.size} entries, expected {net.node_count}")

    traj = simulate(net, m, x0, cfg)
    summary.update(
        config={"alpha": cfg.alpha, "epsilon": cfg.epsilon, "horizon": cfg.horizon},
        converged=traj.converged,
        steps=traj.steps_taken,
        final=[float(v) for v in traj.final],
        empirical_rate=_rate_summary(traj),
        period_two_tail=period_two_tail(traj.states),
    )

    if inst is not None:
        try:
            el.to_reduced(inst, x0)
            summary["final_reduced"] = [float(v) for v in el.to_reduced(inst, traj.final)]
        except PairSumViolation as exc:
            warnings.warn(f"reduced-form export suppressed: {exc}", stacklevel=1)
            summary["final_reduced"] = None
        if inst.loops and summary["final_reduced"] is not None:
            lin_cfg = DynamicsConfig(cfg.alpha, cfg.epsilon, default_horizon(inst.spec))
            try:
                summary["linearization"] = detect_linearization(inst, x0, lin_cfg).to_dict()
            except HorizonTooShort as exc:
                summary["linearization"] = {"T0": None, "note": str(exc)}

    prefix = args.out or "run"
    if args.format == "json":
        Path(f"{prefix}.trajectory.json").write_text(traj.to_json() + "\n")
    else:
        Path(f"{prefix}.trajectory.csv").write_text(traj.to_csv())
    Path(f"{prefix}.summary.json").write_text(_dump(summary) + "\n")
    return EXIT_OK


# --- scan --------------------------------------------------------------------


@dataclass
class ScanPlan:
    base: str
    vary: str
    sizes: tuple[int, ...]
    alpha: float = 1.0
    epsilon: float = 1e-12
    horizon: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not self.sizes or any(s <= 0 for s in self.sizes):
            raise InputError("scan sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise InputError("scan sizes must be strictly increasing")

    def spec_for(self, size: int):
        spec = el.parse_spec(self.base) if ":" in self.base else None
        fields = dict(spec.sizes) if spec else {}
        fields[self.vary] = size
        kind = self.base.split(":")[0]
        text = f"{kind}:" + ",".join(f"{k}={v:g}" for k, v in fields.items())
        return el.parse_spec(text)


@dataclass
class ScanRow:
    family: str
    sizes: dict
    alpha: float
    T_exact: float | None
    T_asymptotic: float
    T_empirical: float | None
    steps_run: int
    wall_time: float = field(compare=False)
    flag: str = "OK"

    @property
    def ratio_empirical(self):
        return None if self.T_empirical is None else self.T_empirical / self.T_asymptotic

    @property
    def ratio_exact(self):
        return None if self.T_exact is None else self.T_exact / self.T_asymptotic


def scan_row(plan: ScanPlan, size: int) -> ScanRow:
    start = time.perf_counter()
    spec = plan.spec_for(size)
    inst = el.build(spec)
    report = spectrum_for(spec, plan.alpha)
    periodic = report.classification is Classification.PERIODIC_TAIL
    x0 = el.from_reduced(inst, el.random_reduced(inst.dim, plan.seed))
    traj = simulate(inst.network, inst.matching, x0, DynamicsConfig(plan.alpha, plan.epsilon, plan.horizon))
    t_emp = None
    if not periodic:
        try:
            t_emp = increment_rate(traj).time
        except (InsufficientDecay, AtFixedPoint):
            t_emp = None
    sizes = {k: v for k, v in spec.sizes.items() if k not in ("xp", "xm")}
    return ScanRow(
        family=spec.kind,
        sizes=sizes,
        alpha=plan.alpha,
        T_exact=None if periodic else _finite(report.T),
        T_asymptotic=asymptotic_time(spec.kind, spec.sizes, plan.alpha),
        T_empirical=t_emp,
        steps_run=traj.steps_taken,
        wall_time=time.perf_counter() - start,
        flag="OK" if t_emp is not None and t_emp > 0 else "NON_CONVERGENT",
    )


def fit_exponent(sizes, times) -> float | None:
    """Least-squares ``p`` in ``log T = log c + p log size``."""
    pts = [(s, t) for s, t in zip(sizes, times) if t is not None and t > 0]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def scan_csv(plan: ScanPlan, rows: list[ScanRow]) -> str:
    buf = io.StringIO()
    # wall times vary run to run, so they stay out of the data rows
    buf.write("# wall_time_s=" + ";".join(f"{r.wall_time:.3f}" for r in rows) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["family", "sizes", "alpha", "T_exact", "T_asymptotic", "T_empirical",
         "ratio_empirical", "ratio_exact", "steps_run", "flag"]
    )
    for r in rows:
        writer.writerow(
            [r.family, ";".join(f"{k}={v}" for k, v in r.sizes.items()), _fmt(r.alpha), _fmt(r.T_exact),
             _fmt(r.T_asymptotic), _fmt(r.T_empirical), _fmt(r.ratio_empirical), _fmt(r.ratio_exact),
             r.steps_run, r.flag]
        )
    return buf.getvalue()


def run_scan(plan: ScanPlan) -> tuple[list[ScanRow], dict]:
    rows = [scan_row(plan, s) for s in plan.sizes]
    fit = {
        "base": plan.base,
        "vary": plan.vary,
        "sizes": list(plan.sizes),
        "alpha": plan.alpha,
        "seed": plan.seed,
        "exponent_empirical": fit_exponent(plan.sizes, [r.T_empirical for r in rows]),
        "exponent_exact": fit_exponent(plan.sizes, [r.T_exact for r in rows]),
        "ratios_empirical": [_finite(r.ratio_empirical) for r in rows],
        "non_convergent": [r.flag == "NON_CONVERGENT" for r in rows],
    }
    return rows, fit


def cmd_scan(args) -> int:
    try:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    except ValueError as exc:
        raise InputError(f"bad size list {args.sizes!r}") from exc
    plan = ScanPlan(args.base, args.vary, sizes, args.alpha, args.epsilon, args.horizon, args.seed)
    rows, fit = run_scan(plan)
    prefix = args.out or "scan"
    Path(f"{prefix}.csv").write_text(scan_csv(plan, rows))
    Path(f"{prefix}.fit.json").write_text(_dump(fit) + "\n")
    sys.stdout.write(_dump(fit) + "\n")
    return EXIT_OK


# --- verify ------------------------------------------------------------------


def cmd_verify(args) -> int:
    net, m, x = load_document(args.document)
    if args.outcome:
        x = _load_vector(args.outcome)
    if x is None:
        raise InputError("no outcome given: add 'x' to the document or pass --outcome")
    if x.shape != (net.node_count,):
        raise InputError(f"outcome has {x.size} entries, expected {net.node_count}")
    report = check_outcome(net, m, x, args.tol)
    _write(_dump(report.to_dict()), args.out)
    return EXIT_OK if report.stable and report.balanced else EXIT_FAIL


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--alpha", type=float, default=1.0, help="smoothing in (0, 1]")
    shared.add_argument("--epsilon", type=float, default=1e-12, help="sup-norm stopping increment")
    shared.add_argument("--horizon", type=int, default=10_000, help="maximum number of steps")
    shared.add_argument("--seed", type=int, default=0, help="PCG64 seed for random x0")
    shared.add_argument("--out", default=None, help="output file or prefix")
    shared.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="netbargain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[shared], help="closed-form spectrum as JSON")
    p.add_argument("spec", help='e.g. "blossom:n=3,m=4"')
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", parents=[shared], help="run the dynamics, write trajectory and summary")
    p.add_argument("source", help="spec string or network JSON document")
    p.add_argument("--x0", default="zeros", help="zeros | ones | random | document | path to JSON list")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", parents=[shared], help="convergence time against size")
    p.add_argument("base", help='family with fixed sizes, e.g. "blossom:n=2,m=2" or "path"')
    p.add_argument("--vary", default="n", help="size key to vary")
    p.add_argument("--sizes", required=True, help="comma-separated increasing sizes")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", parents=[shared], help="check stability and balance of an outcome")
    p.add_argument("document", help="network JSON, optionally with an 'x' outcome")
    p.add_argument("--outcome", default=None, help="JSON list overriding the document's x")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (SpecInvariantViolation, ValidationError, PairSumViolation) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SpecParseError, FormatError, InputError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
