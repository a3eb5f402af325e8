"""Linear models ``v(t+1) = A v(t) + b`` of the elementary graphs.

Paths and cycles are linear from the start. Blossoms and bicycles are
piecewise linear: the gateway's outside option is ``max(1 - y_1, y_m)``, so
each odd loop selects one of two models, and the selection eventually stops
changing.

Loop cases: for a blossom loop (and the second bicycle loop) Case 1 means
``y_1 + y_m <= 1`` (the gateway takes ``1 - y_1``), Case 2 means
``y_1 + y_m > 1``. The first bicycle loop is read in mirrored orientation, so
there Case 1 means ``z_1 + z_l >= 1`` (the gateway takes ``z_l``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsConfig, EdgeBalancedUpdate, Trajectory, iterate
from .elementary import (
    BicycleSpec,
    BlossomSpec,
    CycleSpec,
    ElementaryInstance,
    ElementarySpec,
    PathSpec,
)
from .errors import DimensionMismatch, HorizonTooShort, SingularSystem
from .linalg import solve

SIGN_FLOOR = 64 * np.finfo(np.float64).eps

BICYCLE_ITEM = {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 4}


@dataclass(frozen=True)
class LinearModel:
    """``A = (1 - alpha) I + alpha A0`` and ``b = alpha b0``."""

    A: np.ndarray
    b: np.ndarray
    alpha: float
    family: str
    case: int | tuple[int, int] | None = None
    sizes: dict = field(default_factory=dict)
    A0: np.ndarray | None = None
    b0: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def to_dict(self) -> dict:
        doc = {
            "family": self.family,
            "alpha": self.alpha,
            "A": [[float(v) for v in row] for row in self.A],
            "b": [float(v) for v in self.b],
        }
        if self.case is not None:
            doc["case"] = list(self.case) if isinstance(self.case, tuple) else self.case
        if self.sizes:
            doc["sizes"] = dict(self.sizes)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return float(alpha)


def _shifted(A0, b0, alpha, family, case=None, sizes=None) -> LinearModel:
    alpha = _check_alpha(alpha)
    if alpha == 1.0:
        A, b = A0.copy(), b0.copy()
    else:
        A = (1.0 - alpha) * np.eye(len(b0)) + alpha * A0
        b = alpha * b0
    return LinearModel(A, b, alpha, family, case, dict(sizes or {}), A0, b0)


def tridiagonal(n: int) -> np.ndarray:
    """Path-of-``n`` update matrix: 1/2 on both off-diagonals."""
    T = np.zeros((n, n))
    idx = np.arange(n - 1)
    T[idx, idx + 1] = 0.5
    T[idx + 1, idx] = 0.5
    return T


def build_path(n: int, x_plus: float = 0.0, x_minus: float = 0.0, alpha: float = 1.0) -> LinearModel:
    if n < 1:
        raise ValueError("path needs n >= 1")
    b0 = np.zeros(n)
    b0[0] += (1.0 - x_plus) / 2.0
    b0[-1] += x_minus / 2.0
    return _shifted(tridiagonal(n), b0, alpha, "PathModel", sizes={"n": n, "xp": x_plus, "xm": x_minus})


def build_cycle(n: int, alpha: float = 1.0) -> LinearModel:
    if n < 2:
        raise ValueError("cycle needs n >= 2")
    if n == 2:
        A0 = np.array([[0.0, 1.0], [1.0, 0.0]])
    else:
        A0 = tridiagonal(n)
        A0[0, -1] = A0[-1, 0] = 0.5
    return _shifted(A0, np.zeros(n), alpha, "CycleModel", sizes={"n": n})


def _check_case(case) -> int:
    if case not in (1, 2):
        raise ValueError(f"loop case must be 1 or 2, got {case!r}")
    return case


def _stem_loop_coupling(n: int, m: int, case: int) -> tuple[np.ndarray, np.ndarray]:
    """Blocks ``P`` (stem rows, loop columns) and ``Q`` (loop rows, stem columns)."""
    P = np.zeros((n, m))
    if case == 1:
        P[n - 1, 0] = 0.5
    else:
        P[n - 1, m - 1] = -0.5
    Q = np.zeros((m, n))
    Q[0, n - 1] = 0.5
    Q[m - 1, n - 1] = -0.5
    return P, Q


def build_blossom(n: int, m: int, case: int = 1, alpha: float = 1.0) -> LinearModel:
    """State order ``(x_1..x_n, y_1..y_m)``."""
    if n < 1 or m < 2:
        raise ValueError("blossom needs n >= 1 and m >= 2")
    _check_case(case)
    P, Q = _stem_loop_coupling(n, m, case)
    A0 = np.block([[tridiagonal(n), P], [Q, tridiagonal(m)]])
    b0 = np.zeros(n + m)
    b0[-1] = 0.5
    if case == 2:
        b0[n - 1] = 0.5
    return _shifted(A0, b0, alpha, "BlossomModel", case, {"n": n, "m": m})


def build_bicycle(l: int, n: int, m: int, cases=(1, 1), alpha: float = 1.0) -> LinearModel:  # noqa: E741
    """State order ``(z_1..z_l, x_1..x_n, y_1..y_m)``; ``cases`` is (loop 1, loop 2)."""
    if l < 2 or m < 2 or n < 1:
        raise ValueError("bicycle needs l, m >= 2 and n >= 1")
    c1, c2 = (_check_case(c) for c in cases)
    # loop 1 with the cross-bar is a mirrored blossom
    Qp = np.zeros((l, n))
    Qp[0, 0] = -0.5
    Qp[l - 1, 0] = 0.5
    Pp = np.zeros((n, l))
    if c1 == 1:
        Pp[0, l - 1] = 0.5
    else:
        Pp[0, 0] = -0.5
    P, Q = _stem_loop_coupling(n, m, c2)
    A0 = np.block(
        [
            [tridiagonal(l), Qp, np.zeros((l, m))],
            [Pp, tridiagonal(n), P],
            [np.zeros((m, l)), Q, tridiagonal(m)],
        ]
    )
    b0 = np.zeros(l + n + m)
    b0[0] = 0.5
    b0[-1] += 0.5
    if c1 == 2:
        b0[l] += 0.5
    if c2 == 2:
        b0[l + n - 1] += 0.5
    return _shifted(A0, b0, alpha, "BicycleModel", (c1, c2), {"l": l, "n": n, "m": m})


def model_for(spec: ElementarySpec, cases=None, alpha: float = 1.0) -> LinearModel:
    """Linear model of an elementary spec; ``cases`` picks the loop branches."""
    if isinstance(spec, PathSpec):
        return build_path(spec.n, spec.x_plus, spec.x_minus, alpha)
    if isinstance(spec, CycleSpec):
        return build_cycle(spec.n, alpha)
    if isinstance(spec, BlossomSpec):
        case = 1 if cases is None else (cases[0] if isinstance(cases, tuple) else cases)
        return build_blossom(spec.n, spec.m, case, alpha)
    if isinstance(spec, BicycleSpec):
        return build_bicycle(spec.l, spec.n, spec.m, cases or (1, 1), alpha)
    raise TypeError(f"not an elementary spec: {spec!r}")


def linear_step(model: LinearModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.dim,):
        raise DimensionMismatch(f"state has shape {v.shape}, model dim is {model.dim}")
    return model.A @ v + model.b


def linear_simulate(model: LinearModel, v0, cfg: DynamicsConfig | None = None) -> Trajectory:
    cfg = cfg or DynamicsConfig(alpha=model.alpha)
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.shape != (model.dim,):
        raise DimensionMismatch(f"state has shape {v0.shape}, model dim is {model.dim}")
    return iterate(lambda v: model.A @ v + model.b, v0, cfg)


def fixed_point(model: LinearModel) -> np.ndarray:
    """Solve ``(I - A) x = b``; raises SingularSystem when no unique fixed point exists."""
    M = np.eye(model.dim) - model.A
    x = solve(M, model.b)
    resid = float(np.max(np.abs(M @ x - model.b)))
    if resid > 1e-12 * model.dim:
        raise SingularSystem(f"fixed-point residual {resid:.3e} too large")
    return x


def loop_sum_closed_form(m: int, y0, t):
    """``y_1(t) + y_m(t)`` of a blossom loop with ``m`` matched edges, from ``y(0)`` alone."""
    if m < 2:
        raise ValueError("loop needs m >= 2")
    y0 = np.asarray(y0, dtype=np.float64)
    if y0.shape != (m,):
        raise DimensionMismatch(f"y0 has shape {y0.shape}, expected ({m},)")
    t_arr = np.asarray(t)
    k = np.arange(1, m + 1, 2)  # odd modes only
    theta = np.pi * k / (m + 1)
    lam = np.cos(theta)
    i = np.arange(1, m + 1)
    V = math.sqrt(2.0 / (m + 1)) * np.sin(np.outer(theta, i))
    f = 1.0 + lam - 2.0 * np.sin(theta) * math.sqrt((m + 1) / 2.0) * (V @ y0)
    powers = lam[:, None] ** np.atleast_1d(t_arr)[None, :]
    out = 1.0 - (2.0 / (m + 1)) * (f @ powers)
    return float(out[0]) if t_arr.ndim == 0 else out


def loop_sums(inst: ElementaryInstance, v) -> np.ndarray:
    """First-plus-last reduced value of every odd loop (works on stacked states)."""
    v = np.asarray(v)
    return np.stack([v[..., a] + v[..., b] for a, b, _ in inst.loops], axis=-1)


def loop_cases(inst: ElementaryInstance, v) -> tuple[int, ...]:
    out = []
    for (a, b, mirrored), s in zip(inst.loops, loop_sums(inst, v)):
        case1 = s >= 1.0 if mirrored else s <= 1.0
        out.append(1 if case1 else 2)
    return tuple(out)


@dataclass(frozen=True)
class LinearizationReport:
    """``T0`` is the first time from which every loop stays in ``settled_case``."""

    T0: int | None
    settled_case: tuple[int, ...]
    horizon_used: int
    loop_sums: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "T0": self.T0,
            "settled_case": [f"Case{c}" for c in self.settled_case],
            "horizon_used": self.horizon_used,
        }


def default_horizon(spec: ElementarySpec) -> int:
    return 50 * spec.dim**2


def _settle(signs: np.ndarray, horizon: int) -> tuple[int, int]:
    """Return ``(T0, case)`` for one loop from its per-step case labels (0 = tie)."""
    decided = np.nonzero(signs)[0]
    if decided.size == 0:
        return 0, 1
    final = int(signs[decided[-1]])
    flips = decided[signs[decided] != final]
    if flips.size == 0:
        return 0, final
    last = int(flips[-1])
    if last >= horizon - max(1, horizon // 10):
        raise HorizonTooShort(f"loop case still changing at t={last} of horizon {horizon}")
    return last + 1, final


def detect_linearization(inst: ElementaryInstance, x0, cfg: DynamicsConfig | None = None) -> LinearizationReport:
    """Simulate the nonlinear dynamics and find when each loop's branch settles.

    Steps whose loop sum is within ``SIGN_FLOOR`` of 1 count as ties: both
    branches agree there up to rounding.
    """
    if not inst.loops:
        raise ValueError(f"{inst.spec.kind} has no odd loop to linearize")
    if cfg is None:
        cfg = DynamicsConfig(horizon=default_horizon(inst.spec))
    horizon = int(cfg.horizon)
    update = EdgeBalancedUpdate(inst.network, inst.matching)
    reps = np.array(inst.representatives)
    x = np.asarray(x0, dtype=np.float64).copy()
    reduced = np.empty((horizon + 1, reps.size))
    for t in range(horizon + 1):
        reduced[t] = x[reps]
        if t < horizon:
            x = update(x, cfg.alpha)
    sums = loop_sums(inst, reduced)

    T0 = 0
    settled = []
    for col, (_, _, mirrored) in enumerate(inst.loops):
        dev = sums[:, col] - 1.0
        case1 = dev > SIGN_FLOOR if mirrored else dev < -SIGN_FLOOR
        case2 = dev < -SIGN_FLOOR if mirrored else dev > SIGN_FLOOR
        signs = np.where(case1, 1, np.where(case2, 2, 0))
        t0, case = _settle(signs, horizon)
        T0 = max(T0, t0)
        settled.append(case)
    return LinearizationReport(T0, tuple(settled), horizon, sums)


def settled_model(inst: ElementaryInstance, report: LinearizationReport, alpha: float = 1.0) -> LinearModel:
    cases = report.settled_case
    return model_for(inst.spec, cases if len(cases) > 1 else cases[0], alpha)

