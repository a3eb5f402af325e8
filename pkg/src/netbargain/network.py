"""Exchange networks, matchings, profit states and the outcome predicates.

A profit state is a plain float64 array indexed by node. Pinned nodes are
anchors: they hold a constant value, are never matched and never update, but
act as outside options for their neighbours.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EdgeNotFound, FormatError, UnmatchedNode, ValidationError

DEFAULT_TOL = 1e-9


def _key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ExchangeNetwork:
    """Weighted undirected graph of players.

    ``edges`` holds ``(i, j, w)`` triples; ``pinned`` maps anchor nodes to
    their fixed profit. ``labels`` is free-form metadata.
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    pinned: Mapping[int, float] = field(default_factory=dict)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_count", int(self.node_count))
        object.__setattr__(
            self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        )
        object.__setattr__(
            self, "pinned", {int(k): float(v) for k, v in dict(self.pinned).items()}
        )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @cached_property
    def weights(self) -> dict[tuple[int, int], float]:
        # first occurrence wins; duplicates are reported by validate()
        out: dict[tuple[int, int], float] = {}
        for i, j, w in self.edges:
            out.setdefault(_key(i, j), w)
        return out

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.node_count)]
        for (i, j), w in self.weights.items():
            if 0 <= i < self.node_count and 0 <= j < self.node_count and i != j:
                adj[i].append((j, w))
                adj[j].append((i, w))
        return adj

    @property
    def w_max(self) -> float:
        return max((w for _, _, w in self.edges), default=0.0)

    def weight(self, i: int, j: int) -> float:
        try:
            return self.weights[_key(i, j)]
        except KeyError:
            raise EdgeNotFound((i, j)) from None

    def has_edge(self, i: int, j: int) -> bool:
        return _key(i, j) in self.weights


@dataclass(frozen=True)
class Matching:
    """Node-disjoint set of network edges."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    @cached_property
    def partner(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, j in self.pairs:
            out.setdefault(i, j)
            out.setdefault(j, i)
        return out

    @cached_property
    def keys(self) -> frozenset[tuple[int, int]]:
        return frozenset(_key(i, j) for i, j in self.pairs)

    def is_matched(self, node: int) -> bool:
        return node in self.partner

    def contains(self, i: int, j: int) -> bool:
        return _key(i, j) in self.keys


class IssueCode(enum.Enum):
    NODE_OUT_OF_RANGE = "NodeOutOfRange"
    SELF_LOOP = "SelfLoop"
    DUPLICATE_EDGE = "DuplicateEdge"
    NEGATIVE_WEIGHT = "NegativeWeight"
    NEGATIVE_PINNED = "NegativePinnedValue"
    OVERLAPPING_MATCH = "OverlappingMatch"
    MATCH_NOT_AN_EDGE = "MatchNotAnEdge"
    PINNED_NODE_MATCHED = "PinnedNodeMatched"


@dataclass(frozen=True)
class Issue:
    code: IssueCode
    detail: str


class ZeroWeightMatchWarning(UserWarning):
    """A matched edge has zero weight; both ends are clamped to 0."""


def validate(net: ExchangeNetwork, m: Matching) -> list[Issue]:
    """Return every invariant violation of ``(net, m)``; empty means valid."""
    issues: list[Issue] = []
    n = net.node_count
    if n < 1:
        issues.append(Issue(IssueCode.NODE_OUT_OF_RANGE, f"node_count={n} must be positive"))

    seen: set[tuple[int, int]] = set()
    for i, j, w in net.edges:
        if not (0 <= i < n and 0 <= j < n):
            issues.append(Issue(IssueCode.NODE_OUT_OF_RANGE, f"edge ({i},{j})"))
        if i == j:
            issues.append(Issue(IssueCode.SELF_LOOP, f"edge ({i},{j})"))
        k = _key(i, j)
        if k in seen:
            issues.append(Issue(IssueCode.DUPLICATE_EDGE, f"edge {k}"))
        seen.add(k)
        if not w >= 0 or not math.isfinite(w):
            issues.append(Issue(IssueCode.NEGATIVE_WEIGHT, f"edge ({i},{j}) w={w}"))

    for node, v in net.pinned.items():
        if not 0 <= node < n:
            issues.append(Issue(IssueCode.NODE_OUT_OF_RANGE, f"pinned node {node}"))
        if not v >= 0 or not math.isfinite(v):
            issues.append(Issue(IssueCode.NEGATIVE_PINNED, f"pinned node {node} value={v}"))

    used: dict[int, tuple[int, int]] = {}
    for i, j in m.pairs:
        for node in (i, j):
            if node in used:
                issues.append(
                    Issue(IssueCode.OVERLAPPING_MATCH, f"node {node} in {used[node]} and {(i, j)}")
                )
            else:
                used[node] = (i, j)
            if node in net.pinned:
                issues.append(Issue(IssueCode.PINNED_NODE_MATCHED, f"node {node} in {(i, j)}"))
        if not net.has_edge(i, j) or i == j:
            issues.append(Issue(IssueCode.MATCH_NOT_AN_EDGE, f"pair ({i},{j})"))
        elif net.weight(i, j) == 0.0:
            warnings.warn(f"matched edge ({i},{j}) has zero weight", ZeroWeightMatchWarning)
    return issues


def ensure_valid(net: ExchangeNetwork, m: Matching) -> None:
    issues = validate(net, m)
    if issues:
        raise ValidationError(issues)


def make_state(net: ExchangeNetwork, values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Copy ``values`` into a float64 profit vector with pinned entries imposed."""
    x = np.array(values, dtype=np.float64)
    if x.shape != (net.node_count,):
        raise ValueError(f"state has shape {x.shape}, expected ({net.node_count},)")
    for node, v in net.pinned.items():
        x[node] = v
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite values")
    return x


def _alternates(net: ExchangeNetwork, m: Matching, node: int, exclude: int | None):
    for k, w in net.adjacency[node]:
        if k == exclude or m.contains(node, k):
            continue
        yield k, w


def best_alternate(net: ExchangeNetwork, m: Matching, x, node: int) -> float:
    """Best outside option of a matched player: max of ``(w - x_k)_+`` over unmatched edges."""
    if not m.is_matched(node):
        raise UnmatchedNode(node)
    best = 0.0
    for k, w in _alternates(net, m, node, m.partner[node]):
        best = max(best, w - x[k])
    return float(best)


def edge_slack(net: ExchangeNetwork, x, i: int, j: int) -> float:
    return x[i] + x[j] - net.weight(i, j)


def node_slack(net: ExchangeNetwork, m: Matching, x, i: int) -> float:
    s = float(x[i])
    for k, w in _alternates(net, m, i, m.partner.get(i)):
        s = min(s, x[i] + x[k] - w)
    return float(s)


@dataclass(frozen=True)
class EdgeCheck:
    i: int
    j: int
    weight: float
    matched: bool
    slack: float
    stability_violation: float
    balance_residual: float | None


@dataclass(frozen=True)
class OutcomeCheckReport:
    stable: bool
    balanced: bool
    worst_stability_violation: float
    worst_balance_residual: float
    tol: float
    edges: tuple[EdgeCheck, ...]

    def to_dict(self) -> dict:
        return {
            "stable": self.stable,
            "balanced": self.balanced,
            "worst_stability_violation": self.worst_stability_violation,
            "worst_balance_residual": self.worst_balance_residual,
            "tol": self.tol,
            "edges": [
                {
                    "i": e.i,
                    "j": e.j,
                    "w": e.weight,
                    "matched": e.matched,
                    "slack": e.slack,
                    "stability_violation": e.stability_violation,
                    "balance_residual": e.balance_residual,
                }
                for e in self.edges
            ],
        }


def check_outcome(net: ExchangeNetwork, m: Matching, x, tol: float = DEFAULT_TOL) -> OutcomeCheckReport:
    """Evaluate stability on every edge and balance on every matched edge."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    ensure_valid(net, m)
    x = np.asarray(x, dtype=np.float64)
    records = []
    worst_stab = 0.0
    worst_bal = 0.0
    for (i, j), w in sorted(net.weights.items()):
        slack = edge_slack(net, x, i, j)
        viol = max(0.0, -slack)
        worst_stab = max(worst_stab, viol)
        residual = None
        matched = m.contains(i, j)
        if matched:
            surplus_i = x[i] - best_alternate(net, m, x, i)
            surplus_j = x[j] - best_alternate(net, m, x, j)
            residual = float(abs(surplus_i - surplus_j))
            worst_bal = max(worst_bal, residual)
        records.append(EdgeCheck(i, j, w, matched, float(slack), float(viol), residual))
    return OutcomeCheckReport(
        stable=bool(worst_stab <= tol),
        balanced=bool(worst_bal <= tol),
        worst_stability_violation=float(worst_stab),
        worst_balance_residual=float(worst_bal),
        tol=tol,
        edges=tuple(records),
    )


# --- JSON document shared with the CLI -------------------------------------


def to_document(net: ExchangeNetwork, m: Matching, x=None) -> dict:
    doc = {
        "nodes": net.node_count,
        "edges": [[i, j, w] for i, j, w in net.edges],
        "matching": [[i, j] for i, j in m.pairs],
        "pinned": {str(k): v for k, v in sorted(net.pinned.items())},
    }
    if x is not None:
        doc["x"] = [float(v) for v in x]
    return doc


def from_document(doc: Mapping) -> tuple[ExchangeNetwork, Matching, np.ndarray | None]:
    """Parse ``{"nodes", "edges", "matching", "pinned", "x"}``; raises FormatError."""
    try:
        n = doc["nodes"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise FormatError("'nodes' must be an integer")
        edges = [(int(e[0]), int(e[1]), float(e[2])) for e in doc.get("edges", [])]
        for e in doc.get("edges", []):
            if len(e) != 3:
                raise FormatError(f"edge {e!r} must be [i, j, w]")
        pairs = []
        for p in doc.get("matching", []):
            if len(p) != 2:
                raise FormatError(f"matching pair {p!r} must be [i, j]")
            pairs.append((int(p[0]), int(p[1])))
        pinned = {int(k): float(v) for k, v in dict(doc.get("pinned", {})).items()}
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed network document: {exc}") from exc
    net = ExchangeNetwork(n, tuple(edges), pinned)
    x = None
    if doc.get("x") is not None:
        try:
            x = np.array([float(v) for v in doc["x"]], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"malformed state: {exc}") from exc
        if x.shape != (n,):
            raise FormatError(f"'x' has {x.size} entries, expected {n}")
    return net, Matching(tuple(pairs)), x


def load_document(path: str | Path) -> tuple[ExchangeNetwork, Matching, np.ndarray | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    return from_document(doc)

