"""Domain types shared by all solvers.

States live on the 3-state chain 1 <-> 3 <-> 2 (1 and 2 are the two
committed choices, 3 is uncommitted). Direct 1 <-> 2 transitions carry a
prohibitive cost, so their rates are forced to zero exactly rather than
approximated with a large penalty.

All types are immutable after construction and safe to share across
concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import NotASimplex

SIMPLEX_BUILD_TOL = 1e-9     # accepted |sum - 1| at construction
SIMPLEX_DRIFT_TOL = 1e-12    # maintained by solver arithmetic afterwards
LARGE_CROSS_COST = 1e6       # default R12, R21, Gamma12, Gamma21


@dataclass(frozen=True)
class SimplexState:
    """Population distribution x over the three states, x in S^3."""

    x1: float
    x2: float
    x3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    def component(self, i: int) -> float:
        """Mass of state i, i in {1, 2, 3}."""
        return (self.x1, self.x2, self.x3)[i - 1]


def make_simplex(x1: float, x2: float, x3: float) -> SimplexState:
    """Validate and normalize a probability triple.

    Components may undershoot zero by at most 1e-12 (integrator dust) and
    the sum may miss one by at most 1e-9; anything worse raises
    ``NotASimplex``. The result is clamped to [0, 1] and renormalized.
    """
    comps = (x1, x2, x3)
    if any(not math.isfinite(c) for c in comps):
        raise NotASimplex(f"non-finite components {comps}")
    if any(c < -1e-12 for c in comps):
        raise NotASimplex(f"negative component in {comps}")
    total = x1 + x2 + x3
    if abs(total - 1.0) > SIMPLEX_BUILD_TOL:
        raise NotASimplex(f"components sum to {total}, not 1")
    clamped = [float(min(max(c, 0.0), 1.0)) for c in comps]
    total = sum(clamped)
    # skip the renormalization when already exact so the map is idempotent
    if abs(total - 1.0) > 1e-15:
        clamped = [c / total for c in clamped]
    return SimplexState(*clamped)


@dataclass(frozen=True)
class ValueVector:
    """Value-function components (v1, v2, v3), in cost units."""

    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.v1, self.v2, self.v3))):
            raise ValueError(f"value vector must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3])

    def component(self, i: int) -> float:
        return (self.v1, self.v2, self.v3)[i - 1]


@dataclass(frozen=True)
class RateMatrix:
    """Transition rates of the chain; beta[i, j] is the rate i+1 -> j+1.

    Only the four arcs 1->3, 3->1, 2->3, 3->2 are live. The 1<->2 entries
    are forced to zero at construction and the diagonal is bookkeeping
    only (the forward dynamics read off-diagonal rates directly).
    """

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        if b.shape != (3, 3):
            raise ValueError(f"rate matrix must be 3x3, got {b.shape}")
        off = b[~np.eye(3, dtype=bool)]
        if np.any(off < -1e-12):
            raise ValueError(f"negative off-diagonal rate in {b}")
        b = np.where(b < 0.0, 0.0, b)
        b[0, 1] = b[1, 0] = 0.0
        b[np.diag_indices(3)] = 0.0
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    def rate(self, i: int, j: int) -> float:
        """Rate of the arc i -> j, 1-indexed."""
        return float(self.beta[i - 1, j - 1])


def make_rate_matrix(beta31: float = 0.0, beta32: float = 0.0,
                     beta13: float = 0.0, beta23: float = 0.0) -> RateMatrix:
    """Build the chain rate matrix from its four live arcs."""
    b = np.zeros((3, 3))
    b[2, 0], b[2, 1], b[0, 2], b[1, 2] = beta31, beta32, beta13, beta23
    return RateMatrix(b)


CongestionFn = Callable[[float], float]


@dataclass(frozen=True)
class CostWeights:
    """Running-cost weights: control costs R_i, disturbance costs Gamma_i,
    congestion terms f_i.

    ``r[i, j]`` (0-indexed) is the diagonal entry R_{i+1, j+1} of the
    diagonal matrix R_{i+1}; same layout for ``gamma``. All entries must
    be strictly positive; the 1<->2 entries default to ``LARGE_CROSS_COST``
    which together with the zero-rate convention of ``RateMatrix`` realizes
    the prohibitive cross cost in its exact limit.
    """

    r: np.ndarray
    gamma: np.ndarray
    f: tuple[CongestionFn, CongestionFn, CongestionFn]

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        for name, m in (("r", r), ("gamma", g)):
            if m.shape != (3, 3):
                raise ValueError(f"{name} must be 3x3 diagonal entries")
            if np.any(m <= 0.0):
                raise ValueError(f"{name} entries must be strictly positive")
        if len(self.f) != 3 or not all(callable(fi) for fi in self.f):
            raise ValueError("f must be three callables")
        r = r.copy()
        g = g.copy()
        r.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "gamma", g)

    def congestion(self, i: int, x_i: float) -> float:
        """f_i(x_i), 1-indexed state."""
        return float(self.f[i - 1](x_i))


def linear_congestion(q: Sequence[float]) -> tuple[CongestionFn, ...]:
    """Congestion family f_i(x) = q_i * x.

    q_i > 0 is crowd-averse, q_i < 0 crowd-seeking.
    """
    q1, q2, q3 = (float(v) for v in q)
    return (lambda x: q1 * x, lambda x: q2 * x, lambda x: q3 * x)


def default_weights(q: Sequence[float] = (1.0, 1.0, 2.0),
                    gamma13: float = 0.5, gamma23: float = 0.5,
                    r31: float = 1.0, r32: float = 1.0,
                    cross_cost: float = LARGE_CROSS_COST) -> CostWeights:
    """Crowd-averse defaults used throughout the examples and configs.

    Every weight not named here is 1. The defaults put the stationary
    equilibrium in the v1, v2 < v3 regime with mass favouring the two
    committed states.
    """
    r = np.ones((3, 3))
    g = np.ones((3, 3))
    r[0, 1] = r[1, 0] = cross_cost
    g[0, 1] = g[1, 0] = cross_cost
    r[2, 0], r[2, 1] = r31, r32
    g[0, 2], g[1, 2] = gamma13, gamma23
    return CostWeights(r=r, gamma=g, f=linear_congestion(q))


@dataclass(frozen=True)
class Graph:
    """Weighted interaction graph; adjacency[i, j] >= 0, zero diagonal.

    ``is_strongly_connected`` is computed at construction and stored, not
    asserted: callers that need connectivity check the flag.
    """

    n: int
    adjacency: np.ndarray
    is_strongly_connected: bool = field(default=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}")
        if np.any(a < 0.0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.diag(a) != 0.0):
            raise ValueError("self-loops are not supported")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "is_strongly_connected",
                           _strongly_connected(a))

    def degrees(self) -> np.ndarray:
        """Weighted degree vector A @ 1."""
        return self.adjacency @ np.ones(self.n)


def _reachable(a: np.ndarray, start: int) -> np.ndarray:
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [start]
    seen[start] = True
    while stack:
        u = stack.pop()
        for v in np.nonzero(a[u] > 0.0)[0]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return seen


def _strongly_connected(a: np.ndarray) -> bool:
    if a.shape[0] == 0:
        return False
    return bool(_reachable(a, 0).all() and _reachable(a.T, 0).all())


def strongly_connected(g: Graph) -> bool:
    """True iff every node reaches every other through positive-weight edges."""
    return _strongly_connected(g.adjacency)


def make_graph(adjacency: np.ndarray) -> Graph:
    a = np.asarray(adjacency, dtype=float)
    return Graph(n=a.shape[0], adjacency=a)


def _parse_edge_text(text: str, origin: str) -> Graph:
    edges = []
    max_id = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{origin}:{lineno}: expected 'i j w', got {line!r}")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        if i < 1 or j < 1 or i == j or w < 0.0:
            raise ValueError(f"{origin}:{lineno}: bad edge {line!r}")
        edges.append((i, j, w))
        max_id = max(max_id, i, j)
    a = np.zeros((max_id, max_id))
    for i, j, w in edges:
        a[i - 1, j - 1] = w
        a[j - 1, i - 1] = w
    return make_graph(a)


def read_graph(path: str | Path) -> Graph:
    """Read a graph from text: one edge per line, ``i j w``, 1-indexed ids.

    Lines starting with ``#`` are comments. Undirected edges are stored
    once in the file and mirrored here.
    """
    return _parse_edge_text(Path(path).read_text(encoding="utf-8"), str(path))


def walpole_graph() -> Graph:
    """The bundled 11-node Walpole GSP - Peterborough (EPN) graph."""
    from importlib.resources import files

    text = files("mfgnet.data").joinpath("walpole.edges").read_text(encoding="utf-8")
    return _parse_edge_text(text, "walpole.edges")
