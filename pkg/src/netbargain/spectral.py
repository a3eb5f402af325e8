"""Closed-form spectra of the elementary update matrices, rates and times.

All closed forms are stated for ``alpha = 1``; smoothing maps every
eigenvalue through ``lam -> 1 - alpha + alpha * lam`` with unchanged
eigenvectors.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .elementary import BicycleSpec, BlossomSpec, CycleSpec, ElementarySpec, PathSpec
from .errors import NotSymmetric, PeriodicNoConvergence
from .linalg import normalized_det

UNIT_TOL = 1e-12


class Classification(str, enum.Enum):
    GLOBALLY_ASYMPTOTICALLY_STABLE = "GloballyAsymptoticallyStable"
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    PERIODIC_TAIL = "PeriodicTail"


@dataclass(frozen=True)
class Eigenvalue:
    value: float
    family_tag: str  # "lambda", "mu" or "minus-one"
    k: int
    base_value: float  # value at alpha = 1
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpectrumReport:
    family: str
    sizes: dict
    alpha: float
    eigenvalues: tuple[Eigenvalue, ...]
    rho: float
    lambda2: float
    R: float | None
    T: float | None
    classification: Classification
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues])

    def to_dict(self) -> dict:
        def finite(v):
            return v if v is not None and math.isfinite(v) else None

        return {
            "family": self.family,
            "sizes": dict(self.sizes),
            "alpha": self.alpha,
            "eigenvalues": [
                {"value": e.value, "family_tag": e.family_tag, "k": e.k, **e.args}
                for e in self.eigenvalues
            ],
            "rho": self.rho,
            "lambda2": self.lambda2,
            "R": finite(self.R),
            "T": finite(self.T),
            "classification": self.classification.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _report(family, sizes, alpha, eigs, eigenvectors=None) -> SpectrumReport:
    mods = np.abs([e.value for e in eigs])
    rho = float(mods.max())
    below = mods[mods < 1.0 - UNIT_TOL]
    lambda2 = float(below.max()) if below.size else 0.0
    on_circle = [e.value for e in eigs if abs(e.value) >= 1.0 - UNIT_TOL]
    if not on_circle:
        cls = Classification.GLOBALLY_ASYMPTOTICALLY_STABLE
        R = -math.log(rho) if rho > 0 else math.inf
    elif all(v > 0 for v in on_circle):
        cls = Classification.ASYMPTOTICALLY_STABLE
        R = -math.log(lambda2) if lambda2 > 0 else math.inf
    else:
        cls = Classification.PERIODIC_TAIL
        R = None
    T = None if R is None else (0.0 if math.isinf(R) else (math.inf if R == 0 else 1.0 / R))
    return SpectrumReport(family, dict(sizes), alpha, tuple(eigs), rho, lambda2, R, T, cls, eigenvectors)


def _eig(value, tag, k, **args) -> Eigenvalue:
    return Eigenvalue(float(value), tag, k, float(value), args)


def path_eigenvectors(n: int) -> np.ndarray:
    """Columns ``v_k = sqrt(2/(n+1)) * sin(pi k i / (n+1))``, ``k = 1..n``."""
    i = np.arange(1, n + 1)
    return math.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(i, i) / (n + 1))


def path_spectrum(n: int, alpha: float = 1.0) -> SpectrumReport:
    if n < 1:
        raise ValueError("path needs n >= 1")
    eigs = [_eig(math.cos(math.pi * k / (n + 1)), "lambda", k) for k in range(1, n + 1)]
    rep = _report("path", {"n": n}, 1.0, eigs, path_eigenvectors(n))
    return alpha_shift(rep, alpha)


def cycle_spectrum(n: int, alpha: float = 1.0) -> SpectrumReport:
    if n < 2:
        raise ValueError("cycle needs n >= 2")
    eigs = []
    for k in range(1, n + 1):
        if 2 * (k - 1) == n:
            eigs.append(_eig(-1.0, "minus-one", k))
        else:
            eigs.append(_eig(math.cos(2 * math.pi * (k - 1) / n), "lambda", k))
    return alpha_shift(_report("cycle", {"n": n}, 1.0, eigs), alpha)


def _loop_family(size: int, **args) -> list[Eigenvalue]:
    return [
        _eig(math.cos(math.pi * (2 * k - 1) / (size + 1)), "mu", k, **args)
        for k in range(1, (size + 1) // 2 + 1)
    ]


def blossom_spectrum(n: int, m: int, alpha: float = 1.0) -> SpectrumReport:
    if n < 1 or m < 2:
        raise ValueError("blossom needs n >= 1 and m >= 2")
    eigs = [
        _eig(math.cos(2 * math.pi * k / (2 * n + m + 1)), "lambda", k)
        for k in range(1, n + m // 2 + 1)
    ]
    eigs += _loop_family(m)
    return alpha_shift(_report("blossom", {"n": n, "m": m}, 1.0, eigs), alpha)


def bicycle_spectrum(l: int, n: int, m: int, alpha: float = 1.0) -> SpectrumReport:  # noqa: E741
    if l < 2 or m < 2 or n < 1:
        raise ValueError("bicycle needs l, m >= 2 and n >= 1")
    eigs = _loop_family(l, loop=1) + _loop_family(m, loop=2)
    denom = 2 * n + l + m
    for k in range(1, n + l // 2 + m // 2 + 1):
        if 2 * k == denom:
            eigs.append(_eig(-1.0, "minus-one", k))
        else:
            eigs.append(_eig(math.cos(2 * math.pi * k / denom), "lambda", k))
    return alpha_shift(_report("bicycle", {"l": l, "n": n, "m": m}, 1.0, eigs), alpha)


def spectrum_for(spec: ElementarySpec, alpha: float = 1.0) -> SpectrumReport:
    if isinstance(spec, PathSpec):
        rep = path_spectrum(spec.n, alpha)
        return replace(rep, sizes=spec.sizes)
    if isinstance(spec, CycleSpec):
        return cycle_spectrum(spec.n, alpha)
    if isinstance(spec, BlossomSpec):
        return blossom_spectrum(spec.n, spec.m, alpha)
    if isinstance(spec, BicycleSpec):
        return bicycle_spectrum(spec.l, spec.n, spec.m, alpha)
    raise TypeError(f"not an elementary spec: {spec!r}")


def alpha_shift(report: SpectrumReport, alpha: float) -> SpectrumReport:
    """Spectrum of ``(1 - alpha) I + alpha A0`` from that of ``A0``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    eigs = [
        replace(e, value=e.base_value if alpha == 1.0 else 1.0 - alpha + alpha * e.base_value)
        for e in report.eigenvalues
    ]
    return _report(report.family, report.sizes, float(alpha), eigs, report.eigenvectors)


def convergence_time(report: SpectrumReport) -> tuple[float, float]:
    """``(R, T)``; raises PeriodicNoConvergence when -1 survives (alpha = 1)."""
    if report.classification is Classification.PERIODIC_TAIL:
        raise PeriodicNoConvergence(
            f"{report.family} {report.sizes} at alpha={report.alpha} has eigenvalue -1"
        )
    return report.R, report.T


def asymptotic_time(family: str, sizes: dict, alpha: float = 1.0) -> float:
    """Leading-order convergence time of each elementary family."""
    c = 2.0 / (alpha * math.pi**2)
    if family == "path":
        return c * sizes["n"] ** 2
    if family == "cycle":
        return sizes["n"] ** 2 / (2.0 * alpha * math.pi**2)
    if family == "blossom":
        n, m = sizes["n"], sizes["m"]
        if m % 2 == 0:
            return c * (2 * n + m) ** 2
        return c * max(m**2, (2 * n + m) ** 2 / 4.0)
    if family == "bicycle":
        l, n, m = sizes["l"], sizes["n"], sizes["m"]  # noqa: E741
        if l % 2 == 0 or m % 2 == 0:
            return c * (2 * n + l + m) ** 2
        return c * max(m**2, l**2, (2 * n + l + m) ** 2 / 4.0)
    raise ValueError(f"unknown family {family!r}")


def verify_eigen_det(A, lam: float) -> float:
    """Normalized ``|det(A - lam I)|``; at most 1e-8 certifies ``lam`` at desk scale."""
    A = np.asarray(A, dtype=np.float64)
    return normalized_det(A - lam * np.eye(A.shape[0]))


def _round_robin(n: int) -> list[list[tuple[int, int]]]:
    """Rounds of disjoint index pairs covering every pair exactly once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        rounds.append([(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0])
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def symmetric_eigen_oracle(A, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.

    Sweeps use the round-robin ordering: each round rotates a set of disjoint
    pairs at once, so one round is a single orthogonal similarity.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    mask = ~np.eye(n, dtype=bool)
    rounds = [(np.array([p for p, _ in r], dtype=np.intp), np.array([q for _, q in r], dtype=np.intp))
              for r in _round_robin(n) if r]
    for _ in range(max_sweeps):
        if math.sqrt(float(np.sum(A[mask] ** 2))) <= tol:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A = 0.5 * (A + A.T)
    return np.sort(np.diag(A))[::-1]
