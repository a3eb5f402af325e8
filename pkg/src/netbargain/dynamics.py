"""Edge-balanced bargaining dynamics on a network with a fixed matching.

Every matched player moves toward the Nash split of the edge surplus over
the current outside options,

    x_i <- x_i + alpha * ([y_i + (w_ip - y_i - y_p) / 2]_0^w_ip - x_i),

with all players updated synchronously from the old state. Unmatched and
pinned players never move.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AtFixedPoint, InsufficientDecay
from .network import ExchangeNetwork, Matching, ensure_valid

FLOOR_FACTOR = 100.0


@dataclass(frozen=True)
class DynamicsConfig:
    alpha: float = 1.0
    epsilon: float = 1e-12
    horizon: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")


class EdgeBalancedUpdate:
    """Precomputed index arrays for repeated synchronous steps on one (network, matching)."""

    def __init__(self, net: ExchangeNetwork, m: Matching):
        ensure_valid(net, m)
        self.net = net
        self.matching = m
        nodes = sorted(m.partner)
        pos = {v: k for k, v in enumerate(nodes)}
        self.nodes = np.array(nodes, dtype=np.intp)
        self.partner_pos = np.array([pos[m.partner[v]] for v in nodes], dtype=np.intp)
        self.w = np.array([net.weight(v, m.partner[v]) for v in nodes], dtype=np.float64)

        alts = [
            [(k, w) for k, w in net.adjacency[v] if k != m.partner[v] and not m.contains(v, k)]
            for v in nodes
        ]
        width = max((len(a) for a in alts), default=0) or 1
        self.alt_idx = np.zeros((len(nodes), width), dtype=np.intp)
        # -inf padding never wins against the (.)_+ floor at zero
        self.alt_w = np.full((len(nodes), width), -np.inf)
        for r, a in enumerate(alts):
            for c, (k, w) in enumerate(a):
                self.alt_idx[r, c] = k
                self.alt_w[r, c] = w

    def alternates(self, x: np.ndarray) -> np.ndarray:
        """Best alternate value of every matched node, in ``self.nodes`` order."""
        if self.nodes.size == 0:
            return np.zeros(0)
        return np.maximum(0.0, (self.alt_w - x[self.alt_idx]).max(axis=1))

    def targets(self, x: np.ndarray) -> np.ndarray:
        y = self.alternates(x)
        raw = y + 0.5 * (self.w - y - y[self.partner_pos])
        return np.minimum(np.maximum(raw, 0.0), self.w)

    def __call__(self, x: np.ndarray, alpha: float = 1.0) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = x.copy()
        if self.nodes.size == 0:
            return out
        target = self.targets(x)
        if alpha == 1.0:
            out[self.nodes] = target
        else:
            old = x[self.nodes]
            out[self.nodes] = old + alpha * (target - old)
        return out


def step(net: ExchangeNetwork, m: Matching, x, alpha: float = 1.0) -> np.ndarray:
    """One synchronous edge-balanced update of the whole state."""
    return EdgeBalancedUpdate(net, m)(x, alpha)


@dataclass
class Trajectory:
    """Sampled orbit ``states[t]`` for ``t = 0..steps_taken``."""

    states: np.ndarray
    converged: bool
    steps_taken: int
    config: DynamicsConfig = field(default_factory=DynamicsConfig)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def increments(self) -> np.ndarray:
        """Sup-norm of successive differences, length ``steps_taken``."""
        return np.abs(np.diff(self.states, axis=0)).max(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        dim = self.states.shape[1]
        writer.writerow(["t"] + [f"x_{i}" for i in range(dim)])
        for t, row in enumerate(self.states):
            writer.writerow([t] + [format(float(v), ".17g") for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "converged": self.converged,
            "steps_taken": self.steps_taken,
            "states": [[float(v) for v in row] for row in self.states],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def iterate(update, x0, cfg: DynamicsConfig) -> Trajectory:
    """Run ``x <- update(x)`` until the sup-norm increment is at most ``epsilon``."""
    x = np.array(x0, dtype=np.float64)
    states = [x]
    converged = False
    for _ in range(int(cfg.horizon)):
        nxt = update(x)
        states.append(nxt)
        if np.max(np.abs(nxt - x), initial=0.0) <= cfg.epsilon:
            converged = True
            break
        x = nxt
    return Trajectory(np.array(states), converged, len(states) - 1, cfg)


def simulate(net: ExchangeNetwork, m: Matching, x0, cfg: DynamicsConfig | None = None) -> Trajectory:
    cfg = cfg or DynamicsConfig()
    update = EdgeBalancedUpdate(net, m)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (net.node_count,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({net.node_count},)")
    return iterate(lambda x: update(x, cfg.alpha), x0, cfg)


@dataclass(frozen=True)
class RateEstimate:
    """Least-squares fit ``log r(t) ~ intercept - rate * t`` over ``window``."""

    rate: float
    intercept: float
    window: tuple[int, int]
    rms_residual: float
    samples: int

    @property
    def time(self) -> float:
        return 1.0 / self.rate


def residual_floor(scale: float = 1.0) -> float:
    return FLOOR_FACTOR * np.finfo(np.float64).eps * max(scale, 1e-300)


def estimate_rate_from_residuals(residuals, scale: float = 1.0, min_samples: int = 10) -> RateEstimate:
    """Fit an exponential decay rate to a residual sequence.

    Samples from the first one at or below ``100 * eps * scale`` onward are
    discarded; the fit uses the last half of what remains.
    """
    r = np.asarray(residuals, dtype=np.float64)
    floor = residual_floor(scale)
    if r.size == 0 or r[0] <= floor:
        raise AtFixedPoint("residuals are at the rounding floor from t=0")
    below = np.nonzero(r <= floor)[0]
    stop = int(below[0]) if below.size else r.size
    start = stop // 2
    if stop - start < min_samples:
        raise InsufficientDecay(
            f"only {stop - start} tail samples above the floor (need {min_samples})"
        )
    t = np.arange(start, stop, dtype=np.float64)
    logs = np.log(r[start:stop])
    slope, intercept = np.polyfit(t, logs, 1)
    if not slope < 0:
        raise InsufficientDecay(f"residuals do not decay (slope {slope:.3g})")
    fitted = intercept + slope * t
    rms = float(np.sqrt(np.mean((logs - fitted) ** 2)))
    return RateEstimate(float(-slope), float(intercept), (start, stop), rms, stop - start)


def estimate_rate(traj: Trajectory | np.ndarray, x_star, scale: float = 1.0) -> RateEstimate:
    """Empirical convergence rate from the sup-norm distance to ``x_star``."""
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj)
    x_star = np.asarray(x_star, dtype=np.float64)
    if not np.all(np.isfinite(x_star)):
        raise ValueError("x_star must be finite")
    residuals = np.abs(states - x_star).max(axis=1)
    return estimate_rate_from_residuals(residuals, scale)


def period_two_tail(states, window: int = 10, still: float = 1e-10, moving: float = 1e-3) -> bool:
    """True when the last ``window`` steps repeat with period 2 but not period 1."""
    s = np.asarray(states, dtype=np.float64)
    if s.shape[0] < window + 2:
        return False
    tail = s[-(window + 2):]
    two = np.abs(tail[2:] - tail[:-2]).max(axis=1)
    one = np.abs(tail[1:] - tail[:-1]).max(axis=1)
    return bool(np.all(two <= still) and np.all(one > moving))


def increment_rate(traj: Trajectory, scale: float = 1.0) -> RateEstimate:
    """Rate from successive sup-norm increments; no fixed point needed.

    Increments decay with the same modulus as the distance to the limit, so
    this also covers singular cases such as the cycle's consensus average.
    """
    return estimate_rate_from_residuals(traj.increments(), scale)
