"""Filtrations and stratum transition matrices.

Edges are grouped into strata by the strongly connected components of the
crossing digraph (edge j points at edge i when the image of j crosses i).
Each stratum's transition matrix is zero, a permutation (polynomial piece)
or irreducible with growth rate > 1 (exponential piece).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graphs import MarkedGraph
from .words import Word

PF_TOL = 1e-9
PF_MAX_ITER = 200_000


def crossing_counts(e_map: tuple[Word, ...]) -> np.ndarray:
    """Full crossing matrix: entry (i, j) counts how often edge j's image
    crosses edge i, in either direction."""
    n = len(e_map)
    m = np.zeros((n, n), dtype=np.int64)
    for j, w in enumerate(e_map):
        for e in w:
            m[abs(e) - 1, j] += 1
    return m


def crossing_matrix(f, S: frozenset[int]) -> np.ndarray:
    idx = sorted(S)
    pos = {e: k for k, e in enumerate(idx)}
    m = np.zeros((len(idx), len(idx)), dtype=np.int64)
    for j in idx:
        for e in f.e_map[j]:
            i = abs(e) - 1
            if i in pos:
                m[pos[i], pos[j]] += 1
    return m


def is_irreducible(m: np.ndarray) -> bool:
    n = m.shape[0]
    if n == 0:
        return False
    if n == 1:
        return m[0, 0] > 0
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    r, c = np.nonzero(m)
    g.add_edges_from(zip(c.tolist(), r.tolist()))
    return nx.is_strongly_connected(g)


def cyclic_period(m: np.ndarray) -> int:
    """For an irreducible matrix: gcd of cycle lengths.

    Computed from BFS levels: every arc u->v contributes level(u)+1-level(v)
    to the gcd.
    """
    n = m.shape[0]
    adj = [np.nonzero(m[:, j])[0].tolist() for j in range(n)]
    level = {0: 0}
    order = [0]
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for v in adj[u]:
            if v not in level:
                level[v] = level[u] + 1
                order.append(v)
    g = 0
    for u in range(n):
        for v in adj[u]:
            g = math.gcd(g, level[u] + 1 - level[v])
    return g


def is_aperiodic(m: np.ndarray) -> bool:
    return cyclic_period(m) == 1


def is_permutation(m: np.ndarray) -> bool:
    return bool(
        np.all((m == 0) | (m == 1))
        and np.all(m.sum(axis=0) == 1)
        and np.all(m.sum(axis=1) == 1)
    )


def perron_eigenvalue(m: np.ndarray, tol: float = PF_TOL) -> tuple[float, np.ndarray]:
    """Growth rate and positive right eigenvector of an irreducible
    nonnegative integer matrix.

    Power iteration on m + I, which is primitive; the min/max ratio bounds
    sandwich the eigenvalue, and iteration stops when their gap is < tol.
    """
    n = m.shape[0]
    a = m.astype(np.float64) + np.eye(n)
    x = np.ones(n) / n
    lo, hi = 0.0, math.inf
    for _ in range(PF_MAX_ITER):
        y = a @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / y.sum()
        if hi - lo < tol:
            return (lo + hi) / 2 - 1.0, x
    raise ArithmeticError(f"eigenvalue iteration did not settle below {tol}")


@dataclass(frozen=True)
class Stratum:
    index: int
    edges: tuple[int, ...]
    matrix: np.ndarray
    kind: str  # "zero" | "NEG" | "EG" | "reducible"
    lam: float | None = None
    right: np.ndarray | None = None
    left: np.ndarray | None = None
    perm: tuple[int, ...] | None = None  # NEG: edges[j] image crosses edges[perm[j]]

    @property
    def is_exponential(self) -> bool:
        return self.kind == "EG"


def classify_stratum(index: int, edges: tuple[int, ...], m: np.ndarray) -> Stratum:
    if not m.any():
        return Stratum(index, edges, m, "zero")
    if not is_irreducible(m):
        return Stratum(index, edges, m, "reducible")
    if is_permutation(m):
        perm = tuple(int(np.nonzero(m[:, j])[0][0]) for j in range(m.shape[0]))
        return Stratum(index, edges, m, "NEG", lam=1.0, perm=perm)
    lam, right = perron_eigenvalue(m)
    _, left = perron_eigenvalue(m.T)
    return Stratum(index, edges, m, "EG", lam=lam, right=right, left=left)


def classify_matrix(m: np.ndarray) -> Stratum:
    return classify_stratum(-1, tuple(range(m.shape[0])), m)


def strata_of(f) -> list[Stratum]:
    out = []
    for r in range(f.n_strata):
        edges = tuple(sorted(f.stratum(r)))
        out.append(classify_stratum(r, edges, crossing_matrix(f, f.stratum(r))))
    return out


def build_layers(
    e_map: tuple[Word, ...], respect: dict[int, int] | None = None
) -> tuple[frozenset[int], ...]:
    """Maximal filtration: one layer step per strongly connected component
    of the crossing digraph, lowest components first.

    Ties between simultaneously placeable components are broken by the
    prior level of their edges (if given) and then by least edge index, so
    rebuilds are stable.
    """
    n = len(e_map)
    dg = nx.DiGraph()
    dg.add_nodes_from(range(n))
    for j, w in enumerate(e_map):
        for e in w:
            if abs(e) - 1 != j:
                dg.add_edge(j, abs(e) - 1)
    comp = list(nx.strongly_connected_components(dg))
    where = {}
    for k, cset in enumerate(comp):
        for e in cset:
            where[e] = k
    # dependency: component must come after everything its images cross
    deps = [set() for _ in comp]
    rdeps = [set() for _ in comp]
    for j, i in dg.edges():
        a, b = where[j], where[i]
        if a != b:
            deps[a].add(b)
            rdeps[b].add(a)
    respect = respect or {}

    def key(k: int):
        return (
            min(respect.get(e, 0) for e in comp[k]),
            min(comp[k]),
        )

    missing = [len(deps[k]) for k in range(len(comp))]
    ready = [(key(k), k) for k in range(len(comp)) if not missing[k]]
    heapq.heapify(ready)
    layers: list[frozenset[int]] = []
    acc: set[int] = set()
    while ready:
        _, k = heapq.heappop(ready)
        acc |= comp[k]
        layers.append(frozenset(acc))
        for up in rdeps[k]:
            missing[up] -= 1
            if missing[up] == 0:
                heapq.heappush(ready, (key(up), up))
    if len(acc) != n:
        raise AssertionError("crossing digraph ordering failed")
    return tuple(layers)


def refiltered(f) -> "TopRep":
    """Same map, maximal filtration (stable with respect to the old one)."""
    from .mapping import TopRep

    respect = {e: f.stratum_of(e + 1) for e in range(f.g.ne)}
    return TopRep(f.g, f.v_map, f.e_map, build_layers(f.e_map, respect))


def from_rose_automorphism(images: tuple[Word, ...]) -> "TopRep":
    """Topological representative of the automorphism on the standard rose."""
    from .graphs import rose
    from .mapping import TopRep
    from .words import is_tight

    g = rose(len(images))
    for w in images:
        if not w or not is_tight(w):
            raise ValueError("generator images must be tight and nontrivial")
    return TopRep(g, (0,), images, build_layers(images))


def frequency_vector(f, r: int) -> dict[int, float]:
    """Asymptotic edge frequencies in long images of an exponential
    stratum's edges: the normalized positive eigenvector."""
    s = strata_of(f)[r]
    if s.kind != "EG":
        raise ValueError("frequencies only defined for exponential strata")
    v = s.right / s.right.sum()
    return {e: float(v[k]) for k, e in enumerate(s.edges)}


def top_growth(f) -> float:
    """Largest stratum growth rate (1.0 when no stratum is exponential)."""
    best = 1.0
    for s in strata_of(f):
        if s.kind == "EG":
            best = max(best, s.lam)
    return best


def make_eg_aperiodic(f, budget=None) -> tuple["TopRep", int]:
    """Smallest power of the map whose exponential strata are all aperiodic,
    with the filtration refined to split cyclic classes into their own
    strata.  Returns the power and its exponent."""
    from .mapping import iterate_rep

    s = 1
    for st in strata_of(f):
        if st.kind == "EG":
            s = math.lcm(s, cyclic_period(st.matrix))
    if s == 1:
        return refiltered(f), 1
    return refiltered(iterate_rep(f, s, budget)), s
