"""Growth classification through the homology action.

The induced map on the abelianization separates polynomially from
exponentially growing classes only one way (exponential growth forces
spectral radius > 1 in homology or in a stratum), so the polynomial side
is read off the filtration: no exponential stratum means polynomial
growth, and unipotent homology action on top of that means unipotent
polynomial growth.  Everything here is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mapping import TopRep
from .strata import strata_of
from .words import Word, inverse, tighten

IntMatrix = tuple[tuple[int, ...], ...]


def _det_int(m: IntMatrix) -> int:
    """Bareiss fraction-free elimination; exact for integer entries."""
    n = len(m)
    a = [list(row) for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class AbelianMatrix:
    """Integer matrix of the action on first homology of the rose.
    Columns are signed generator counts of generator images."""

    mat: IntMatrix

    def __post_init__(self):
        n = len(self.mat)
        if any(len(row) != n for row in self.mat):
            raise ValueError("matrix must be square")

    @property
    def n(self) -> int:
        return len(self.mat)

    def det(self) -> int:
        return _det_int(self.mat)

    def __mul__(self, other: "AbelianMatrix") -> "AbelianMatrix":
        return AbelianMatrix(_mat_mul(self.mat, other.mat))


def _signed_counts(w: Word, n: int) -> tuple[int, ...]:
    col = [0] * n
    for c in w:
        col[abs(c) - 1] += 1 if c > 0 else -1
    return tuple(col)


def abelianize(spec) -> AbelianMatrix:
    """Homology action of an automorphism, given either as a tuple of
    generator-image words or as a topological representative."""
    images = spec.to_automorphism() if isinstance(spec, TopRep) else tuple(spec)
    n = len(images)
    cols = [_signed_counts(w, n) for w in images]
    m = AbelianMatrix(tuple(tuple(cols[j][i] for j in range(n)) for i in range(n)))
    if abs(m.det()) != 1:
        raise ValueError(
            "homology action has determinant %d; the images do not define an automorphism"
            % m.det()
        )
    return m


def is_unipotent(m: AbelianMatrix | IntMatrix) -> bool:
    """(M - I)^n == 0, checked over the integers."""
    mat = m.mat if isinstance(m, AbelianMatrix) else tuple(tuple(r) for r in m)
    n = len(mat)
    d = tuple(
        tuple(mat[i][j] - int(i == j) for j in range(n)) for i in range(n)
    )
    p = _identity(n)
    for _ in range(n):
        p = _mat_mul(p, d)
    return all(x == 0 for row in p for x in row)


def _mod3_trivial(m: AbelianMatrix) -> bool:
    n = m.n
    return all(
        (m.mat[i][j] - int(i == j)) % 3 == 0 for i in range(n) for j in range(n)
    )


@dataclass(frozen=True)
class GrowthReport:
    pg: bool
    upg: bool
    lambda_max: float
    witness: str
    abelian: AbelianMatrix
    mod3_trivial: bool
    mod3_agrees: bool


def classify_growth(f: TopRep) -> GrowthReport:
    """Polynomial vs exponential growth of the outer class of a train
    track representative, with the unipotence refinement.

    Polynomial growth is equivalent to the absence of exponential strata
    in any (hence this) representative.  A trivial action mod 3 is a
    sufficient criterion for unipotence among polynomially growing
    classes; the report records whether the exact test agrees with it.
    """
    strata = strata_of(f)
    eg = [s for s in strata if s.kind == "EG"]
    pg = not eg
    lam = max((s.lam for s in eg), default=1.0)
    m = abelianize(f)
    uni = is_unipotent(m)
    upg = pg and uni
    mod3 = _mod3_trivial(m)
    # sufficient direction: polynomial growth with trivial mod-3 action
    # forces unipotence, so disagreement there would be a bug
    agrees = upg if (pg and mod3) else True
    if pg:
        witness = "no exponential stratum in the filtration"
    else:
        tops = ", ".join(
            "stratum %d (lam %.6f)" % (s.index, s.lam) for s in eg
        )
        witness = "exponential strata present: " + tops
    return GrowthReport(pg, upg, lam, witness, m, mod3, agrees)


@dataclass(frozen=True)
class PgBasisReport:
    tree_edges: tuple[int, ...]
    basis_edges: tuple[int, ...]
    circuits: tuple[Word, ...]
    matrix: IntMatrix
    diagonals: tuple[int, ...]
    upg: bool
    normalizer_log: tuple[dict, ...]


def _strip_valence_one(f: TopRep) -> tuple[TopRep, tuple[dict, ...]]:
    from .moves import valence_one_homotopy

    log: list[dict] = []
    changed = True
    while changed:
        changed = False
        for v in range(f.g.nv):
            if len(f.g.star[v]) == 1:
                f = valence_one_homotopy(f, v)
                log.append({"op": "valence_one", "vertex": v})
                changed = True
                break
    return f, tuple(log)


def pg_basis(f: TopRep) -> PgBasisReport:
    """Filtration-compatible homology basis for a polynomially growing
    representative, and the matrix of the induced action on it.

    The maximal tree is grown greedily stratum by stratum (then by edge
    index), so its intersection with every filtration element is maximal
    there and the matrix is deterministic.  Basis elements are the
    embedded circuits closed up through the tree, one per leftover edge,
    ordered by filtration level.  Diagonal entries land in {-1, 0, 1};
    all equal to 1 characterizes unipotent polynomial growth.
    """
    f, norm_log = _strip_valence_one(f)
    strata = strata_of(f)
    bad = [s for s in strata if s.kind == "EG"]
    if bad:
        raise ValueError(
            "exponential stratum %d present; a polynomial-growth basis needs "
            "a representative with none" % bad[0].index
        )
    dead = [s for s in strata if s.kind == "zero"]
    if dead:
        raise ValueError(
            "stratum %d maps into lower strata; collapse or improve the "
            "representative before extracting a basis" % dead[0].index
        )
    g = f.g
    level = {}
    for li, layer in enumerate(f.layers):
        for e in layer:
            level.setdefault(e, li)
    order = sorted(range(g.ne), key=lambda e: (level.get(e, 0), e))

    parent = list(range(g.nv))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree: list[int] = []
    for e in order:
        a, b = g.ends[e]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append(e)
    tree_set = frozenset(tree)
    basis = [e for e in order if e not in tree_set]

    # tree paths inside the chosen tree only
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(g.nv)}
    for e in tree_set:
        a, b = g.ends[e]
        adj[a].append((b, e + 1))
        adj[b].append((a, -(e + 1)))
    root = 0
    path_to: dict[int, Word] = {root: ()}
    stack = [root]
    while stack:
        u = stack.pop()
        for w, lab in adj[u]:
            if w not in path_to:
                path_to[w] = path_to[u] + (lab,)
                stack.append(w)

    def tpath(u: int, w: int) -> Word:
        return tighten(inverse(path_to[u]) + path_to[w])

    circuits = []
    for e in basis:
        a, b = g.ends[e]
        circuits.append(tighten((e + 1,) + tpath(b, a)))

    pos = {e: i for i, e in enumerate(basis)}
    k = len(basis)
    cols = []
    for c in circuits:
        img = f.apply_path(c)
        col = [0] * k
        for x in img:
            j = pos.get(abs(x) - 1)
            if j is not None:
                col[j] += 1 if x > 0 else -1
        cols.append(tuple(col))
    mat = tuple(tuple(cols[j][i] for j in range(k)) for i in range(k))
    diag = tuple(mat[i][i] for i in range(k))
    if any(d not in (-1, 0, 1) for d in diag):
        raise AssertionError(
            "diagonal outside {-1,0,1} on a polynomially growing representative: %r"
            % (diag,)
        )
    return PgBasisReport(
        tuple(tree), tuple(basis), tuple(circuits), mat, diag,
        all(d == 1 for d in diag), norm_log,
    )
