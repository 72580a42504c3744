"""Chain generators, probability vectors, and moment functionals.

Everything downstream (hitting-time solver, transport formulas, Monte
Carlo) operates on plain row-stochastic matrices.  This module builds the
chain families with known closed-form transport behaviour:

* ``birth_death``: symmetric birth-death on ``0..n`` with birth = death
  probability ``p`` and the leftover mass held in place.  At the two
  boundary states only one move is available, so the holding probability
  there is ``1 - p`` (the unique stochastic completion compatible with
  the uphill identity ``E_k[tau_{k+1}] = (k+1)/p``).
* ``winning_streak``: states ``1..n``; climb one step or reset to 1 with
  probability 1/2 each, with a holding loop at ``n``.
* ``hypercube``: simple walk on ``{0,1}^d`` flipping one uniformly chosen
  coordinate per step (``n`` is the dimension ``d``).
* ``path``: nearest-neighbour walk on ``0..n`` with reflecting endpoints.
* ``complete``: uniform jump to any other state of ``0..n``.
* ``star``: hub-and-leaf walk on ``0..n`` with state 0 the centre.
* ``graph``: simple random walk on an arbitrary connected simple graph.

All constructors are pure and their outputs immutable, so values can be
shared freely across threads.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

ROW_SUM_HARD_TOL = 1e-9
DIST_SUM_TOL = 1e-12
WINNING_STREAK_MAX_N = 40  # 2**n exhausts the 53-bit mantissa beyond this

SIZE_CAP_ENV = "ACCESS_TIME_MAX_N"
DEFAULT_SIZE_CAP = 4096

FAMILIES = (
    "birth_death",
    "winning_streak",
    "hypercube",
    "path",
    "complete",
    "star",
    "graph",
)
#: families whose chain is a simple random walk on an undirected graph
GRAPH_WALK_FAMILIES = ("graph", "path", "complete", "star", "hypercube")

DIST_KINDS = ("dirac", "uniform", "binomial", "explicit", "stationary")


class ChainSpecError(ValueError):
    """A chain or distribution specification is invalid."""


class ReducibleChainError(ValueError):
    """The operation needs an irreducible chain and this one is not."""


def dense_size_cap() -> int:
    """Largest state count the dense solver path will accept.

    Defaults to 4096; override with the ``ACCESS_TIME_MAX_N`` environment
    variable.
    """
    raw = os.environ.get(SIZE_CAP_ENV)
    if raw is None:
        return DEFAULT_SIZE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ChainSpecError(f"{SIZE_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ChainSpecError(f"{SIZE_CAP_ENV} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class ChainSpec:
    """Family name plus the parameters needed to build the chain.

    ``n`` is the family size parameter: the top state for the integer
    families (state spaces ``0..n`` or ``1..n``), the dimension for the
    hypercube, and the vertex count for explicit graphs (derived from the
    edge list).  ``p`` is accepted by ``birth_death`` only and must lie in
    (0, 1/2].  ``edges`` is required by (and exclusive to) ``graph``.
    """

    family: str
    n: int | None = None
    p: float | None = None
    edges: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ChainSpecError(f"unknown family {self.family!r}")
        if self.family == "graph":
            self._init_graph()
        else:
            if self.edges is not None:
                raise ChainSpecError(f"{self.family} does not take an edge list")
            if self.n is None or int(self.n) < 1:
                raise ChainSpecError(f"{self.family} needs a positive size n")
            object.__setattr__(self, "n", int(self.n))
        if self.family == "birth_death":
            if self.p is None or not (0.0 < self.p <= 0.5):
                raise ChainSpecError("birth_death needs p in (0, 1/2]")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise ChainSpecError(f"{self.family} does not take a p parameter")
        if self.family == "winning_streak" and self.n > WINNING_STREAK_MAX_N:
            raise ChainSpecError(
                f"winning_streak is capped at n = {WINNING_STREAK_MAX_N}; "
                f"2**{self.n} is not exactly representable in double precision"
            )

    def _init_graph(self) -> None:
        if not self.edges:
            raise ChainSpecError("graph needs a non-empty edge list")
        seen: set[tuple[int, int]] = set()
        for pair in self.edges:
            u, v = (int(pair[0]), int(pair[1]))
            if u == v:
                raise ChainSpecError(f"self loop at vertex {u}; the graph must be simple")
            if u < 0 or v < 0:
                raise ChainSpecError("vertex indices must be non-negative")
            seen.add((min(u, v), max(u, v)))
        edges = tuple(sorted(seen))
        n_vertices = max(v for e in edges for v in e) + 1
        if self.n is not None and int(self.n) != n_vertices:
            raise ChainSpecError(
                f"n = {self.n} does not match the {n_vertices} vertices implied by the edges"
            )
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n", n_vertices)

    @property
    def num_states(self) -> int:
        if self.family == "winning_streak":
            return self.n
        if self.family == "hypercube":
            return 1 << self.n
        if self.family == "graph":
            return self.n
        return self.n + 1

    def to_json(self) -> dict:
        out: dict = {"family": self.family}
        if self.family == "graph":
            out["edges"] = [list(e) for e in self.edges]
        else:
            out["n"] = self.n
        if self.p is not None:
            out["p"] = self.p
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ChainSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise ChainSpecError("chain spec must be an object with a 'family' key")
        known = {"family", "n", "p", "edges"}
        extra = set(obj) - known
        if extra:
            raise ChainSpecError(f"unknown chain spec keys: {sorted(extra)}")
        edges = obj.get("edges")
        if edges is not None:
            edges = tuple((int(u), int(v)) for u, v in edges)
        return cls(family=obj["family"], n=obj.get("n"), p=obj.get("p"), edges=edges)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition matrix with state labels.

    ``labels`` carries the natural state names: integers for the integer
    families (``1..n`` for the winning streak) and d-bit strings for the
    hypercube.  Internal storage is always 0-based; ``labels[i]`` is the
    name of row/column ``i``.

    Rows must sum to 1 within ``ROW_SUM_HARD_TOL`` or construction fails;
    generator output is exact, so a violation means a broken input.
    Irreducibility is not enforced here (``validate_chain`` can diagnose a
    reducible matrix), but every generated family is irreducible and the
    solver operations refuse reducible chains.
    """

    rows: np.ndarray
    labels: tuple = None  # type: ignore[assignment]
    spec: ChainSpec | None = None

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ChainSpecError(f"transition matrix must be square, got shape {rows.shape}")
        if np.any(rows < 0):
            raise ChainSpecError("transition probabilities must be non-negative")
        residual = np.abs(rows.sum(axis=1) - 1.0).max()
        if residual > ROW_SUM_HARD_TOL:
            raise ChainSpecError(f"rows are not stochastic, worst residual {residual:.3e}")
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        labels = self.labels
        if labels is None:
            labels = tuple(range(rows.shape[0]))
        else:
            labels = tuple(labels)
            if len(labels) != rows.shape[0]:
                raise ChainSpecError("label count does not match the state count")
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def family(self) -> str | None:
        return self.spec.family if self.spec is not None else None

    def integer_labels(self) -> np.ndarray:
        """Labels as an integer array; rejects bit-string labelled chains."""
        if not all(isinstance(l, (int, np.integer)) for l in self.labels):
            raise ChainSpecError("states of this chain are not integer labelled")
        return np.asarray(self.labels, dtype=np.int64)

    def label_index(self, label) -> int:
        """Index of a state given its label (hypercube also accepts the raw index)."""
        try:
            return self.labels.index(label)
        except ValueError:
            pass
        if isinstance(label, (int, np.integer)) and 0 <= int(label) < self.size:
            if not all(isinstance(l, (int, np.integer)) for l in self.labels):
                return int(label)
        raise ChainSpecError(f"state {label!r} is not on this chain")


@dataclass(frozen=True)
class ProbabilityVector:
    """A distribution on the chain's states, renormalized on construction."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ChainSpecError(f"weights must be one-dimensional, got shape {w.shape}")
        if np.any(w < 0):
            raise ChainSpecError("weights must be non-negative")
        total = w.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ChainSpecError("weights must have a positive finite sum")
        w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class DistSpec:
    """Declarative description of a source or target distribution."""

    kind: str
    at: object = None
    p: float | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in DIST_KINDS:
            raise ChainSpecError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "dirac" and self.at is None:
            raise ChainSpecError("dirac needs an 'at' state")
        if self.kind == "binomial":
            if self.p is None or not (0.0 < self.p < 1.0):
                raise ChainSpecError("binomial needs p in (0, 1)")
            object.__setattr__(self, "p", float(self.p))
        if self.kind == "explicit":
            if self.weights is None:
                raise ChainSpecError("explicit needs a weights list")
            object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.at is not None:
            out["at"] = self.at
        if self.p is not None:
            out["p"] = self.p
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DistSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ChainSpecError("distribution spec must be an object with a 'kind' key")
        extra = set(obj) - {"kind", "at", "p", "weights"}
        if extra:
            raise ChainSpecError(f"unknown distribution spec keys: {sorted(extra)}")
        weights = obj.get("weights")
        return cls(
            kind=obj["kind"],
            at=obj.get("at"),
            p=obj.get("p"),
            weights=tuple(weights) if weights is not None else None,
        )


# ---------------------------------------------------------------------------
# generators


def _birth_death(spec: ChainSpec):
    n, p = spec.n, spec.p
    N = n + 1
    P = np.zeros((N, N))
    idx = np.arange(N)
    P[idx[:-1], idx[:-1] + 1] = p
    P[idx[1:], idx[1:] - 1] = p
    P[idx, idx] = 1.0 - P.sum(axis=1)  # 1-2p interior, 1-p at the two ends
    return P, tuple(range(N))


def _winning_streak(spec: ChainSpec):
    n = spec.n
    P = np.zeros((n, n))
    for k in range(n):  # row k holds state k+1
        P[k, 0] += 0.5  # reset to state 1
        if k + 1 < n:
            P[k, k + 1] += 0.5
        else:
            P[k, k] += 0.5  # holding loop at state n
    return P, tuple(range(1, n + 1))


def _hypercube(spec: ChainSpec):
    d = spec.n
    N = 1 << d
    P = np.zeros((N, N))
    states = np.arange(N)
    for b in range(d):
        P[states, states ^ (1 << b)] = 1.0 / d
    labels = tuple(format(s, f"0{d}b") for s in range(N))
    return P, labels


def _path(spec: ChainSpec):
    n = spec.n
    N = n + 1
    P = np.zeros((N, N))
    P[0, 1] = 1.0
    P[n, n - 1] = 1.0
    for i in range(1, n):
        P[i, i - 1] = P[i, i + 1] = 0.5
    return P, tuple(range(N))


def _complete(spec: ChainSpec):
    n = spec.n
    N = n + 1
    P = np.full((N, N), 1.0 / n)
    np.fill_diagonal(P, 0.0)
    return P, tuple(range(N))


def _star(spec: ChainSpec):
    n = spec.n
    N = n + 1
    P = np.zeros((N, N))
    P[0, 1:] = 1.0 / n
    P[1:, 0] = 1.0
    return P, tuple(range(N))


def _graph(spec: ChainSpec):
    N = spec.n
    adj = np.zeros((N, N))
    for u, v in spec.edges:
        adj[u, v] = adj[v, u] = 1.0
    n_comp, _ = connected_components(csr_matrix(adj), directed=False)
    if n_comp != 1:
        raise ChainSpecError(f"graph is disconnected ({n_comp} components)")
    deg = adj.sum(axis=1)
    return adj / deg[:, None], tuple(range(N))


_GENERATORS = {
    "birth_death": _birth_death,
    "winning_streak": _winning_streak,
    "hypercube": _hypercube,
    "path": _path,
    "complete": _complete,
    "star": _star,
    "graph": _graph,
}


def build_chain(spec: ChainSpec) -> TransitionMatrix:
    """Build the transition matrix of a chain family.

    Parameters
    ----------
    spec : ChainSpec
        Validated family description.

    Returns
    -------
    TransitionMatrix
        Row-stochastic, irreducible, with the family's natural labels.
    """
    N = spec.num_states
    cap = dense_size_cap()
    if N > cap:
        raise ChainSpecError(
            f"{spec.family} with {N} states exceeds the dense size cap {cap} "
            f"(override with {SIZE_CAP_ENV})"
        )
    rows, labels = _GENERATORS[spec.family](spec)
    return TransitionMatrix(rows, labels=labels, spec=spec)


# ---------------------------------------------------------------------------
# distributions


def build_distribution(dspec: DistSpec, chain: TransitionMatrix) -> ProbabilityVector:
    """Materialize a distribution spec on a chain's state space.

    ``dirac`` locates states by label (so ``at = 1`` is the bottom state of
    the winning streak); the hypercube accepts either a bit-string label or
    the raw state index.  ``binomial`` needs integer labels and spreads
    Binomial(range, p) across them.  ``stationary`` solves for the
    invariant law of the chain.
    """
    N = chain.size
    if dspec.kind == "dirac":
        w = np.zeros(N)
        w[chain.label_index(dspec.at)] = 1.0
        return ProbabilityVector(w)
    if dspec.kind == "uniform":
        return ProbabilityVector(np.full(N, 1.0 / N))
    if dspec.kind == "binomial":
        values = chain.integer_labels()
        m = int(values.max() - values.min())
        k = values - values.min()
        if m == 0:
            return ProbabilityVector(np.ones(1))
        p = dspec.p
        w = np.array([math.comb(m, int(kk)) * p**int(kk) * (1 - p) ** int(m - kk) for kk in k])
        return ProbabilityVector(w)
    if dspec.kind == "explicit":
        w = np.asarray(dspec.weights, dtype=float)
        if w.shape[0] != N:
            raise ChainSpecError(f"explicit weights have length {w.shape[0]}, chain has {N} states")
        return ProbabilityVector(w)
    if dspec.kind == "stationary":
        from .hitting import stationary_distribution

        return stationary_distribution(chain)
    raise ChainSpecError(f"unknown distribution kind {dspec.kind!r}")


@dataclass(frozen=True)
class MomentBundle:
    """Moment functionals of an integer-valued distribution.

    The transport closed forms consume exactly these: the mean, the second
    moment, the base-2 probability generating value ``E[2^Z]`` with its
    truncation ``E[2^Z 1{Z <= j}]``, the excess ``E[(Z - j)+]`` and the
    square spread ``E[max(Z, j)^2 - min(Z, j)^2]``.  Everything is a direct
    sum over the support.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if not np.issubdtype(values.dtype, np.integer):
            raise ChainSpecError("moment functionals need integer state labels")
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape:
            raise ChainSpecError("labels and weights must align")
        values = values.copy()
        weights = weights.copy()
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @property
    def mean(self) -> float:
        return float(self.weights @ self.values)

    @property
    def second_moment(self) -> float:
        return float(self.weights @ (self.values.astype(float) ** 2))

    @property
    def pgf2(self) -> float:
        """E[2^Z]."""
        return float(self.weights @ np.exp2(self.values.astype(float)))

    def truncated_pgf2(self, j: int) -> float:
        """E[2^Z 1{Z <= j}]."""
        mask = self.values <= j
        return float(self.weights[mask] @ np.exp2(self.values[mask].astype(float)))

    def excess(self, j: int) -> float:
        """E[(Z - j)+]."""
        return float(self.weights @ np.maximum(self.values - j, 0).astype(float))

    def minmax_sq(self, j: int) -> float:
        """E[max(Z, j)^2 - min(Z, j)^2], which equals E[|Z^2 - j^2|]."""
        v = self.values.astype(float)
        return float(self.weights @ (np.maximum(v, j) ** 2 - np.minimum(v, j) ** 2))


def truncated_moments(dist: ProbabilityVector, labels) -> MomentBundle:
    """Bundle the moment functionals of ``dist`` over integer state labels."""
    values = np.asarray(labels)
    if values.dtype == object or not np.issubdtype(values.dtype, np.integer):
        raise ChainSpecError("moment functionals need integer state labels")
    if values.shape[0] != dist.dim:
        raise ChainSpecError("labels and distribution must have the same length")
    return MomentBundle(values=values, weights=dist.weights)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ChainDiagnostics:
    """Structural report on a transition matrix; purely informational."""

    row_sum_residual: float
    irreducible: bool
    strong_components: int
    reversible: bool | None
    detailed_balance_residual: float | None
    period: int | None
    aperiodic: bool | None

    def to_json(self) -> dict:
        return {
            "row_sum_residual": self.row_sum_residual,
            "irreducible": self.irreducible,
            "strong_components": self.strong_components,
            "reversible": self.reversible,
            "detailed_balance_residual": self.detailed_balance_residual,
            "period": self.period,
            "aperiodic": self.aperiodic,
        }


def _chain_period(rows: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of (level[u] + 1 - level[v]) over edges."""
    N = rows.shape[0]
    level = np.full(N, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(rows[u] > 0):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    us, vs = np.nonzero(rows > 0)
    for u, v in zip(us, vs):
        g = math.gcd(g, int(level[u]) + 1 - int(level[v]))
    return abs(g)


def validate_chain(P: TransitionMatrix) -> ChainDiagnostics:
    """Diagnose a transition matrix: stochasticity, irreducibility,
    reversibility, periodicity.

    Never raises; hitting times are well defined for periodic chains, so
    the period is informational only.  Reversibility is reported against
    the stationary law and left undefined for reducible chains.
    """
    rows = P.rows
    residual = float(np.abs(rows.sum(axis=1) - 1.0).max())
    n_comp, _ = connected_components(csr_matrix(rows > 0), connection="strong")
    irreducible = n_comp == 1
    reversible = None
    db_residual = None
    period = None
    aperiodic = None
    if irreducible:
        from .hitting import detailed_balance_residual, stationary_distribution

        pi = stationary_distribution(P)
        db_residual = detailed_balance_residual(P, pi)
        reversible = db_residual <= 1e-10
        period = _chain_period(rows)
        aperiodic = period == 1
    return ChainDiagnostics(
        row_sum_residual=residual,
        irreducible=irreducible,
        strong_components=int(n_comp),
        reversible=reversible,
        detailed_balance_residual=db_residual,
        period=period,
        aperiodic=aperiodic,
    )


def random_connected_graph(
    n_vertices: int, rng: np.random.Generator, extra_edges: int = 0
) -> tuple[tuple[int, int], ...]:
    """Random connected simple graph: a random attachment tree plus extras.

    Vertex v >= 1 attaches to a uniformly chosen earlier vertex, which
    guarantees connectivity; ``extra_edges`` distinct non-tree edges are
    then added (fewer if the graph saturates).
    """
    if n_vertices < 2:
        raise ChainSpecError("need at least 2 vertices for a connected graph walk")
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n_vertices)}
    max_edges = n_vertices * (n_vertices - 1) // 2
    budget = min(extra_edges, max_edges - len(edges))
    while budget > 0:
        u, v = sorted(int(x) for x in rng.choice(n_vertices, size=2, replace=False))
        if (u, v) not in edges:
            edges.add((u, v))
            budget -= 1
    return tuple(sorted(edges))
