"""Unit-weight path, cycle, blossom and bicycle instances.

Every matched edge ``k`` has a representative node whose value is the reduced
coordinate ``v[k]``; its partner then holds ``1 - v[k]``. Reduced order is

    path, cycle:  x_1..x_n
    blossom:      x_1..x_n (stem, toward the gateway), y_1..y_m (loop)
    bicycle:      z_1..z_l (loop 1), x_1..x_n (cross-bar), y_1..y_m (loop 2)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import PairSumViolation, SpecInvariantViolation, SpecParseError
from .network import ExchangeNetwork, Matching

PAIR_SUM_TOL = 1e-9


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecInvariantViolation(msg)


def _size(v) -> int:
    if isinstance(v, bool) or int(v) != v:
        raise SpecInvariantViolation(f"size {v!r} is not an integer")
    return int(v)


@dataclass(frozen=True)
class PathSpec:
    n: int
    x_plus: float = 0.0
    x_minus: float = 0.0

    kind = "path"

    def __post_init__(self):
        object.__setattr__(self, "n", _size(self.n))
        _require(self.n >= 1, f"path needs n >= 1, got n={self.n}")
        for name in ("x_plus", "x_minus"):
            v = float(getattr(self, name))
            _require(0.0 <= v <= 1.0, f"path boundary {name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)

    @property
    def sizes(self) -> dict:
        return {"n": self.n, "xp": self.x_plus, "xm": self.x_minus}

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class CycleSpec:
    n: int

    kind = "cycle"

    def __post_init__(self):
        object.__setattr__(self, "n", _size(self.n))
        _require(self.n >= 2, f"cycle needs n >= 2, got n={self.n}")

    @property
    def sizes(self) -> dict:
        return {"n": self.n}

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class BlossomSpec:
    n: int
    m: int

    kind = "blossom"

    def __post_init__(self):
        object.__setattr__(self, "n", _size(self.n))
        object.__setattr__(self, "m", _size(self.m))
        _require(self.n >= 1, f"blossom needs a stem n >= 1, got n={self.n}")
        _require(self.m >= 2, f"blossom needs a loop m >= 2, got m={self.m}")

    @property
    def sizes(self) -> dict:
        return {"n": self.n, "m": self.m}

    @property
    def dim(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class BicycleSpec:
    l: int  # noqa: E741
    n: int
    m: int

    kind = "bicycle"

    def __post_init__(self):
        for name in ("l", "n", "m"):
            object.__setattr__(self, name, _size(getattr(self, name)))
        _require(self.l >= 2 and self.m >= 2, f"bicycle loops need l, m >= 2, got l={self.l}, m={self.m}")
        _require(self.n >= 1, f"bicycle cross-bar needs n >= 1, got n={self.n}")

    @property
    def sizes(self) -> dict:
        return {"l": self.l, "n": self.n, "m": self.m}

    @property
    def dim(self) -> int:
        return self.l + self.n + self.m


ElementarySpec = Union[PathSpec, CycleSpec, BlossomSpec, BicycleSpec]

_KINDS = {
    "path": (PathSpec, {"n": "n", "xp": "x_plus", "xm": "x_minus"}),
    "cycle": (CycleSpec, {"n": "n"}),
    "blossom": (BlossomSpec, {"n": "n", "m": "m"}),
    "bicycle": (BicycleSpec, {"l": "l", "n": "n", "m": "m"}),
}


def parse_spec(text: str) -> ElementarySpec:
    """Parse ``"kind:key=value,..."``, e.g. ``"blossom:n=3,m=4"``.

    Syntax problems raise SpecParseError; well-formed strings that break a
    size invariant raise SpecInvariantViolation.
    """
    match = re.fullmatch(r"\s*(\w+)\s*(?::(.*))?", text)
    if not match or match.group(1).lower() not in _KINDS:
        raise SpecParseError(f"unknown elementary graph spec {text!r}")
    cls, keys = _KINDS[match.group(1).lower()]
    kwargs = {}
    body = (match.group(2) or "").strip()
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip().lower()
        if not sep or key not in keys:
            raise SpecParseError(f"bad field {item!r} in {text!r}")
        try:
            num = float(value)
        except ValueError:
            raise SpecParseError(f"bad number {value!r} in {text!r}") from None
        kwargs[keys[key]] = int(num) if num.is_integer() and key not in ("xp", "xm") else num
    required = [f for f in keys.values() if f not in ("x_plus", "x_minus")]
    missing = [f for f in required if f not in kwargs]
    if missing:
        raise SpecParseError(f"{text!r} is missing {', '.join(missing)}")
    return cls(**kwargs)


def format_spec(spec: ElementarySpec) -> str:
    return f"{spec.kind}:" + ",".join(f"{k}={v:g}" for k, v in spec.sizes.items())


@dataclass(frozen=True)
class ElementaryInstance:
    """A built elementary graph with its reduced-coordinate bookkeeping.

    ``representatives[k]`` / ``partners[k]`` are the two ends of matched edge
    ``k`` in reduced order. ``loops`` holds, for each odd loop, the reduced
    ordinals of its first and last matched edges and whether the loop is read
    in mirrored orientation (first bicycle loop).
    """

    spec: ElementarySpec
    network: ExchangeNetwork
    matching: Matching
    representatives: tuple[int, ...]
    partners: tuple[int, ...]
    loops: tuple[tuple[int, int, bool], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.representatives)

    @property
    def reduced_index(self) -> dict[int, int]:
        return dict(enumerate(self.representatives))


class _Builder:
    def __init__(self):
        self.labels: list[str] = []
        self.edges: list[tuple[int, int, float]] = []
        self.pairs: list[tuple[int, int]] = []
        self.reps: list[int] = []
        self.partners: list[int] = []
        self.pinned: dict[int, float] = {}

    def node(self, label: str) -> int:
        self.labels.append(label)
        return len(self.labels) - 1

    def matched_edge(self, label: str) -> tuple[int, int]:
        a = self.node(f"{label}")
        c = self.node(f"{label}'")
        self.edges.append((a, c, 1.0))
        self.pairs.append((a, c))
        self.reps.append(a)
        self.partners.append(c)
        return a, c

    def link(self, i: int, j: int) -> None:
        self.edges.append((i, j, 1.0))

    def finish(self, spec, loops=()) -> ElementaryInstance:
        net = ExchangeNetwork(len(self.labels), tuple(self.edges), self.pinned, tuple(self.labels))
        return ElementaryInstance(
            spec, net, Matching(tuple(self.pairs)), tuple(self.reps), tuple(self.partners), tuple(loops)
        )


def _chain(b: _Builder, prefix: str, count: int) -> list[tuple[int, int]]:
    """``count`` matched edges joined end to start by unmatched edges."""
    ends = [b.matched_edge(f"{prefix}{k}") for k in range(1, count + 1)]
    for (_, c), (a, _) in zip(ends, ends[1:]):
        b.link(c, a)
    return ends


def build(spec: ElementarySpec) -> ElementaryInstance:
    b = _Builder()
    if isinstance(spec, PathSpec):
        ends = _chain(b, "path-", spec.n)
        plus = b.node("anchor+")
        minus = b.node("anchor-")
        b.pinned[plus] = spec.x_plus
        b.pinned[minus] = spec.x_minus
        b.link(plus, ends[0][0])
        b.link(ends[-1][1], minus)
        return b.finish(spec)

    if isinstance(spec, CycleSpec):
        ends = _chain(b, "cycle-", spec.n)
        b.link(ends[-1][1], ends[0][0])
        return b.finish(spec)

    if isinstance(spec, BlossomSpec):
        # stem runs from the free end to the gateway, which is the partner of x_n
        stem = _chain(b, "stem-", spec.n)
        gateway = stem[-1][1]
        b.labels[gateway] = "gateway"
        loop = _chain(b, "loop-", spec.m)
        b.link(gateway, loop[0][0])
        b.link(loop[-1][1], gateway)
        n = spec.n
        return b.finish(spec, loops=[(n, n + spec.m - 1, False)])

    if isinstance(spec, BicycleSpec):
        # loop 1 closes on the first cross-bar node, loop 2 on the last one's partner
        loop1 = _chain(b, "loop1-", spec.l)
        bar = _chain(b, "bar-", spec.n)
        loop2 = _chain(b, "loop2-", spec.m)
        gate1, gate2 = bar[0][0], bar[-1][1]
        b.labels[gate1] = "gateway1"
        b.labels[gate2] = "gateway2"
        b.link(gate1, loop1[0][0])
        b.link(loop1[-1][1], gate1)
        b.link(gate2, loop2[0][0])
        b.link(loop2[-1][1], gate2)
        l, n, m = spec.l, spec.n, spec.m
        return b.finish(spec, loops=[(0, l - 1, True), (l + n, l + n + m - 1, False)])

    raise TypeError(f"not an elementary spec: {spec!r}")


def to_reduced(inst: ElementaryInstance, x) -> np.ndarray:
    """Representative values; every matched pair must sum to 1 within 1e-9."""
    x = np.asarray(x, dtype=np.float64)
    reps = np.array(inst.representatives)
    sums = x[reps] + x[np.array(inst.partners)]
    bad = np.nonzero(np.abs(sums - 1.0) > PAIR_SUM_TOL)[0]
    if bad.size:
        k = int(bad[0])
        raise PairSumViolation(f"matched edge {k} sums to {sums[k]!r}, expected 1")
    return x[reps].copy()


def from_reduced(inst: ElementaryInstance, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (inst.dim,):
        raise ValueError(f"reduced vector has shape {v.shape}, expected ({inst.dim},)")
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError("reduced coordinates must lie in [0, 1]")
    x = np.zeros(inst.network.node_count)
    x[np.array(inst.representatives)] = v
    x[np.array(inst.partners)] = 1.0 - v
    for node, val in inst.network.pinned.items():
        x[node] = val
    return x


def random_reduced(dim: int, seed: int) -> np.ndarray:
    """Uniform [0, 1) draws from numpy's PCG64 generator seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed)).random(dim)
