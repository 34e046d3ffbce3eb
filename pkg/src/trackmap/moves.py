"""Elementary moves on topological representatives.

Each move returns a fresh representative on a fresh marked graph together
with a :class:`MoveWitness`: a pair of graph maps p (old to new) and q (new
to old) plus, per old vertex, the path it travels under q after p.  The
witness certifies combinatorially that q after p is the identity up to those
vertex paths, edge by edge; markings are transported through q so the new
graph presents the same outer automorphism.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import MarkedGraph, maximal_forest
from .mapping import GraphMap, TopRep, compose
from .strata import build_layers
from .words import Word, common_prefix_len, inverse, tighten


def _apply_table(table, w) -> Word:
    out: list[int] = []
    for e in w:
        img = table[e - 1] if e > 0 else inverse(table[-e - 1])
        out.extend(img)
    return tighten(out)


@dataclass(frozen=True)
class MoveWitness:
    fwd: GraphMap
    inv: GraphMap
    tracks: tuple[Word, ...]  # per old vertex: path from v to inv(fwd(v))

    def check(self) -> bool:
        g = self.fwd.src
        for v in range(g.nv):
            want = self.inv.v_map[self.fwd.v_map[v]]
            t = self.tracks[v]
            if t:
                a, b = g.path_ends(t)
                if a != v or b != want:
                    return False
            elif v != want:
                return False
        for i in range(g.ne):
            mid = self.inv.apply_path(self.fwd.apply_path((i + 1,)))
            u, w = g.ends[i]
            got = tighten(self.tracks[u] + mid + inverse(self.tracks[w]))
            if got != (i + 1,):
                return False
        return True

    def then(self, nxt: "MoveWitness") -> "MoveWitness":
        fwd = compose(nxt.fwd, self.fwd)
        inv = compose(self.inv, nxt.inv)
        tracks = tuple(
            tighten(
                self.tracks[v] + self.inv.apply_path(nxt.tracks[self.fwd.v_map[v]])
            )
            for v in range(self.fwd.src.nv)
        )
        return MoveWitness(fwd, inv, tracks)


def identity_witness(g: MarkedGraph) -> MoveWitness:
    ident_v = tuple(range(g.nv))
    ident_e = tuple((i + 1,) for i in range(g.ne))
    m = GraphMap(g, g, ident_v, ident_e)
    return MoveWitness(m, m, ((),) * g.nv)


def _transport(
    old: MarkedGraph,
    nv: int,
    ends: tuple[tuple[int, int], ...],
    p_v: tuple[int, ...],
    p_e: tuple[Word, ...],
    q_v: tuple[int, ...],
    q_e: tuple[Word, ...],
    tracks: tuple[Word, ...],
    tree_pref: list[int] | None = None,
) -> tuple[MarkedGraph, MoveWitness]:
    """Build the new marked graph and witness from raw move combinatorics.
    The marking rides through q; the marked graph's own round-trip law then
    re-proves the transport coherent."""
    pref = list(tree_pref or [])
    order = pref + [i for i in range(len(ends)) if i not in set(pref)]
    tree = maximal_forest(nv, ends, order)
    base = p_v[old.base]
    gen_loops = tuple(_apply_table(p_e, w) for w in old.gen_loops)

    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for i in tree:
        u, w = ends[i]
        adj[u].append((w, i + 1))
        adj[w].append((u, -(i + 1)))
    from_base: list[Word | None] = [None] * nv
    from_base[base] = ()
    queue = [base]
    while queue:
        v = queue.pop()
        for nxt, lab in adj[v]:
            if from_base[nxt] is None:
                from_base[nxt] = from_base[v] + (lab,)
                queue.append(nxt)
    if any(x is None for x in from_base):
        raise ValueError("move disconnected the graph")

    def initv(e: int) -> int:
        return ends[e - 1][0] if e > 0 else ends[-e - 1][1]

    def termv(e: int) -> int:
        return ends[e - 1][1] if e > 0 else ends[-e - 1][0]

    t0 = tracks[old.base]
    coords = []
    for j in range(len(ends)):
        if j in tree:
            continue
        loop = tuple(from_base[initv(j + 1)]) + (j + 1,) + inverse(from_base[termv(j + 1)])
        back = _apply_table(q_e, loop)
        coords.append(old.express(tighten(t0 + back + inverse(t0))))
    g2 = MarkedGraph(nv, ends, tree, base, gen_loops, tuple(coords))
    p = GraphMap(old, g2, p_v, p_e)
    q = GraphMap(g2, old, q_v, q_e)
    wit = MoveWitness(p, q, tracks)
    if not wit.check():
        raise AssertionError("move witness failed its own round trip")
    return g2, wit


def _rebuild(
    f: TopRep,
    g2: MarkedGraph,
    wit: MoveWitness,
    respect: dict[int, int] | None = None,
    keep_layers: bool = False,
) -> TopRep:
    """New representative as p . f . q with rebuilt (or carried) layers.

    A trivial composite image would mean the input was not a homotopy
    equivalence; that is an error, not a case to paper over.
    """
    p, q = wit.fwd, wit.inv
    e_map = tuple(
        p.apply_path(f.apply_path(q.apply_path((j + 1,)))) for j in range(g2.ne)
    )
    for j, w in enumerate(e_map):
        if not w:
            raise ValueError(f"edge {j} of the new graph has trivial image; collapse more")
    v_map = tuple(p.v_map[f.v_map[q.v_map[v]]] for v in range(g2.nv))
    layers = f.layers if keep_layers else build_layers(e_map, respect or {})
    return TopRep(g2, v_map, e_map, layers)


# -- subdivision ---------------------------------------------------------------


def subdivide(f: TopRep, edge: int, pos: int) -> tuple[TopRep, MoveWitness]:
    """Split an edge (positive label) at image position pos: the leading new
    edge keeps the index and maps to the image prefix, the appended edge
    takes the suffix.  Cut points are preimages of vertices, that is,
    boundaries between image letters."""
    g = f.g
    i = edge - 1
    w = f.e_map[i]
    if not (1 <= pos <= len(w) - 1):
        raise ValueError("subdivision position must be interior to the image")
    u, t = g.ends[i]
    m = g.nv
    ends = tuple((u, m) if j == i else g.ends[j] for j in range(g.ne)) + ((m, t),)
    new_lab = g.ne + 1
    p_v = tuple(range(g.nv))
    p_e = tuple((edge, new_lab) if j == i else (j + 1,) for j in range(g.ne))
    q_v = tuple(range(g.nv)) + (t,)
    q_e = tuple((j + 1,) for j in range(g.ne)) + ((),)
    tracks = ((),) * g.nv
    tree_pref = sorted(g.tree) + [i, g.ne]
    g2, wit = _transport(g, g.nv + 1, ends, p_v, p_e, q_v, q_e, tracks, tree_pref)

    # the translated image splits at the cut; letters map to chains, so
    # nothing cancels and positions just stretch
    cut = sum(len(p_e[abs(x) - 1]) for x in w[:pos])
    pw = _apply_table(p_e, w)
    first, second = pw[:cut], pw[cut:]
    e_map = [_apply_table(p_e, f.e_map[j]) for j in range(g.ne)]
    e_map[i] = first
    e_map.append(second)
    respect = {j: f.stratum_of(j + 1) for j in range(g.ne)}
    respect[g.ne] = f.stratum_of(edge)
    v_map = tuple(wit.fwd.v_map[f.v_map[v]] for v in range(g.nv)) + (
        g2.path_ends(first)[1],
    )
    rep = TopRep(g2, v_map, tuple(e_map), build_layers(tuple(e_map), respect))
    return rep, wit


def _subdivide_directed(f: TopRep, e: int, k: int) -> tuple[TopRep, MoveWitness]:
    """Split so the first k image letters of the directed edge e land on its
    leading piece."""
    n = len(f.image_of(e))
    if e > 0:
        return subdivide(f, e, k)
    return subdivide(f, -e, n - k)


# -- collapse -------------------------------------------------------------------


def _collapse_graph(
    g: MarkedGraph, forest: frozenset[int]
) -> tuple[MarkedGraph, MoveWitness, tuple[int, ...]]:
    """Quotient a forest of edges to points.  Returns the new graph, the
    witness, and for each new edge index the old index it came from."""
    if maximal_forest(g.nv, g.ends, sorted(forest)) != forest:
        raise ValueError("collapse set contains a cycle")
    parent = list(range(g.nv))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in forest:
        u, w = g.ends[i]
        parent[find(u)] = find(w)
    cls: dict[int, list[int]] = {}
    for v in range(g.nv):
        cls.setdefault(find(v), []).append(v)
    reps = sorted(min(vs) for vs in cls.values())
    new_v_of = {}
    for vs in cls.values():
        k = reps.index(min(vs))
        for v in vs:
            new_v_of[v] = k

    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.nv)]
    for i in forest:
        u, w = g.ends[i]
        adj[u].append((w, i + 1))
        adj[w].append((u, -(i + 1)))
    tracks_l: list[Word | None] = [None] * g.nv
    for r in reps:
        tracks_l[r] = ()
        queue = [r]
        while queue:
            v = queue.pop()
            for nxt, lab in adj[v]:
                if tracks_l[nxt] is None:
                    tracks_l[nxt] = (-lab,) + tracks_l[v]
                    queue.append(nxt)
    tracks = tuple(t if t is not None else () for t in tracks_l)

    survivors = [j for j in range(g.ne) if j not in forest]
    new_e = {j: k for k, j in enumerate(survivors)}
    ends = tuple((new_v_of[g.ends[j][0]], new_v_of[g.ends[j][1]]) for j in survivors)
    p_v = tuple(new_v_of[v] for v in range(g.nv))
    p_e = tuple(() if j in forest else (new_e[j] + 1,) for j in range(g.ne))
    q_v = tuple(reps)
    q_e = tuple(
        tighten(inverse(tracks[g.ends[j][0]]) + (j + 1,) + tracks[g.ends[j][1]])
        for j in survivors
    )
    tree_pref = [new_e[j] for j in survivors if j in g.tree]
    g2, wit = _transport(g, len(reps), ends, p_v, p_e, q_v, q_e, tracks, tree_pref)
    return g2, wit, tuple(survivors)


def collapse(f: TopRep, forest: frozenset[int]) -> tuple[TopRep, MoveWitness]:
    """Collapse a forest of edges.  The outer class is preserved for any
    forest; images are rebuilt through the witness maps."""
    forest = frozenset(forest)
    if not forest:
        return f, identity_witness(f.g)
    g2, wit, survivors = _collapse_graph(f.g, forest)
    respect = {k: f.stratum_of(j + 1) for k, j in enumerate(survivors)}
    return _rebuild(f, g2, wit, respect=respect), wit


def eventually_trivial(e_map: tuple[Word, ...]) -> frozenset[int]:
    """Edges whose iterated image tightens away entirely: trivial-image
    edges plus anything whose image is supported on such edges."""
    dead = {i for i, w in enumerate(e_map) if not w}
    changed = True
    while changed:
        changed = False
        for i, w in enumerate(e_map):
            if i not in dead and w and all(abs(e) - 1 in dead for e in w):
                dead.add(i)
                changed = True
    return frozenset(dead)


def collapse_pretrivial_forest(
    f_or_graph, v_map=None, e_map=None
) -> tuple[TopRep, MoveWitness]:
    """Collapse every edge whose iterated image is eventually a point.

    Accepts either a valid representative (whose images are nontrivial, so
    this is the identity) or raw tables (graph, vertex images, edge images
    possibly trivial) as they arise mid-construction.  A cyclic pretrivial
    set means the map kills a loop and is rejected.
    """
    if isinstance(f_or_graph, TopRep):
        f = f_or_graph
        dead = eventually_trivial(f.e_map)
        if not dead:
            return f, identity_witness(f.g)
        raise AssertionError("valid representative cannot have pretrivial edges")
    g: MarkedGraph = f_or_graph
    vm = tuple(v_map)
    em = [tighten(w) for w in e_map]
    wit = identity_witness(g)
    cur_g = g
    while True:
        dead = eventually_trivial(tuple(em))
        if not dead:
            break
        if maximal_forest(cur_g.nv, cur_g.ends, sorted(dead)) != dead:
            raise ValueError("pretrivial set contains a loop; not a homotopy equivalence")
        g2, w2, survivors = _collapse_graph(cur_g, dead)
        p_e, q_e = w2.fwd.e_map, w2.inv.e_map
        em2 = []
        for j in range(g2.ne):
            pre = q_e[j]
            img: list[int] = []
            for x in pre:
                img.extend(em[x - 1] if x > 0 else inverse(em[-x - 1]))
            em2.append(_apply_table(p_e, tighten(img)))
        vm = tuple(w2.fwd.v_map[vm[w2.inv.v_map[v]]] for v in range(g2.nv))
        em = em2
        cur_g = g2
        wit = wit.then(w2)
    rep = TopRep(cur_g, vm, tuple(em), build_layers(tuple(em)))
    return rep, wit


# -- folds ----------------------------------------------------------------------


def full_fold(f: TopRep, e1: int, e2: int) -> tuple[TopRep, MoveWitness]:
    """Identify two directed edges with the same initial vertex and equal
    images.  The second edge's index disappears."""
    g = f.g
    if abs(e1) == abs(e2):
        raise ValueError("cannot fold an edge with itself")
    if g.init_of(e1) != g.init_of(e2):
        raise ValueError("fold needs a common initial vertex")
    if f.image_of(e1) != f.image_of(e2):
        raise ValueError("full fold needs equal images")
    x1, x2 = g.term_of(e1), g.term_of(e2)
    if x1 == x2:
        raise ValueError("parallel fold would kill a loop; map not injective")
    i1, i2 = abs(e1) - 1, abs(e2) - 1

    keep, drop = min(x1, x2), max(x1, x2)
    new_vs = [v for v in range(g.nv) if v != drop]
    new_v = {v: k for k, v in enumerate(new_vs)}
    new_v[drop] = new_v[keep]
    survivors = [j for j in range(g.ne) if j != i2]
    new_e = {j: k for k, j in enumerate(survivors)}
    ends = tuple((new_v[g.ends[j][0]], new_v[g.ends[j][1]]) for j in survivors)

    tracks_l: list[Word] = [()] * g.nv
    if keep == x1:
        tracks_l[x2] = tighten((-e2, e1))
    else:
        tracks_l[x1] = tighten((-e1, e2))
    tracks = tuple(tracks_l)

    lab1 = new_e[i1] + 1
    target = lab1 if (e1 > 0) == (e2 > 0) else -lab1
    p_v = tuple(new_v[v] for v in range(g.nv))
    p_e = tuple((target,) if j == i2 else (new_e[j] + 1,) for j in range(g.ne))
    q_v = tuple(new_vs)
    q_e = tuple(
        tighten(inverse(tracks[g.ends[j][0]]) + (j + 1,) + tracks[g.ends[j][1]])
        for j in survivors
    )
    tree_pref = [new_e[j] for j in survivors if j in g.tree]
    g2, wit = _transport(g, len(new_vs), ends, p_v, p_e, q_v, q_e, tracks, tree_pref)
    respect = {new_e[j]: f.stratum_of(j + 1) for j in survivors}
    return _rebuild(f, g2, wit, respect=respect), wit


def stallings_fold(f: TopRep, e1: int, e2: int) -> tuple[TopRep, MoveWitness]:
    """Fold two directed edges at a common vertex along their longest shared
    image prefix, subdividing first when the fold would be partial."""
    if e1 == e2:
        raise ValueError("need two distinct directed edges")
    if f.g.init_of(e1) != f.g.init_of(e2):
        raise ValueError("fold needs a common initial vertex")
    if common_prefix_len(f.image_of(e1), f.image_of(e2)) < 1:
        raise ValueError("images share no prefix; nothing to fold")
    cur, wit = f, identity_witness(f.g)
    # at most two subdivisions before the images agree outright
    while cur.image_of(e1) != cur.image_of(e2):
        c = common_prefix_len(cur.image_of(e1), cur.image_of(e2))
        tgt = e1 if len(cur.image_of(e1)) > c else e2
        cur, w = _subdivide_directed(cur, tgt, c)
        e1, e2 = w.fwd.apply_path((e1,))[0], w.fwd.apply_path((e2,))[0]
        wit = wit.then(w)
    cur, w = full_fold(cur, e1, e2)
    return cur, wit.then(w)


fold = stallings_fold


def generalized_fold(
    f: TopRep, e2: int, sigma: Word, split: tuple[int, int] | None = None
) -> tuple[TopRep, MoveWitness]:
    """Fold an initial segment of the directed edge e2 across the path
    sigma, without subdividing.  Needs f_#(sigma) to be an initial segment
    of image(e2); when it is the whole image the edge folds away entirely
    and its terminal vertex merges with sigma's end.  The optional split
    states the image lengths of the two segments of e2 and is cross-checked.
    """
    g = f.g
    if not sigma:
        raise ValueError("fold path must be nontrivial")
    if g.init_of(e2) != g.path_ends(sigma)[0]:
        raise ValueError("fold path must start at the edge's initial vertex")
    i2 = abs(e2) - 1
    if any(abs(x) - 1 == i2 for x in sigma):
        raise ValueError("fold path may not cross the folded edge")
    w2 = f.image_of(e2)
    ws = f.apply_path(sigma)
    if not ws or len(ws) > len(w2) or w2[: len(ws)] != ws:
        raise ValueError("image of the path must be an initial segment of the edge image")
    if split is not None and (split[0] != len(ws) or split[0] + split[1] != len(w2)):
        raise ValueError("declared split does not match the image decomposition")
    y = g.path_ends(sigma)[1]
    x2 = g.term_of(e2)

    if len(ws) == len(w2):
        # complete identification: e2 folds onto sigma, endpoints merge
        if x2 == y:
            raise ValueError("parallel fold would kill a loop; map not injective")
        keep, drop = min(x2, y), max(x2, y)
        new_vs = [v for v in range(g.nv) if v != drop]
        new_v = {v: k for k, v in enumerate(new_vs)}
        new_v[drop] = new_v[keep]
        survivors = [j for j in range(g.ne) if j != i2]
        new_e = {j: k for k, j in enumerate(survivors)}
        ends = tuple((new_v[g.ends[j][0]], new_v[g.ends[j][1]]) for j in survivors)
        tracks_l: list[Word] = [()] * g.nv
        hop = tighten((-e2,) + tuple(sigma))  # term(e2) -> y
        if keep == y:
            tracks_l[x2] = hop
        else:
            tracks_l[y] = inverse(hop)
        tracks = tuple(tracks_l)
        p_v = tuple(new_v[v] for v in range(g.nv))
        sig_new = _apply_table(
            tuple((new_e[j] + 1,) if j != i2 else () for j in range(g.ne)), sigma
        )
        p_e_l = []
        for j in range(g.ne):
            if j != i2:
                p_e_l.append((new_e[j] + 1,))
            else:
                p_e_l.append(sig_new if e2 > 0 else inverse(sig_new))
        q_v = tuple(new_vs)
        q_e = tuple(
            tighten(inverse(tracks[g.ends[j][0]]) + (j + 1,) + tracks[g.ends[j][1]])
            for j in survivors
        )
        tree_pref = [new_e[j] for j in survivors if j in g.tree]
        g2, wit = _transport(
            g, len(new_vs), ends, p_v, tuple(p_e_l), q_v, q_e, tracks, tree_pref
        )
        respect = {new_e[j]: f.stratum_of(j + 1) for j in survivors}
        return _rebuild(f, g2, wit, respect=respect), wit

    # proper segment: reroute e2 to start where sigma ends
    ends = tuple((y, x2) if j == i2 else g.ends[j] for j in range(g.ne))
    p_e = [(j + 1,) for j in range(g.ne)]
    if e2 > 0:
        p_e[i2] = tuple(sigma) + (i2 + 1,)
    else:
        p_e[i2] = (-(i2 + 1),) + inverse(sigma)
    q_e = [(j + 1,) for j in range(g.ne)]
    q_e[i2] = tighten(inverse(sigma) + ((e2,) if e2 > 0 else ()))
    if e2 > 0:
        q_e[i2] = tighten(inverse(sigma) + (e2,))
    else:
        q_e[i2] = tighten((-e2,) + tuple(sigma))
    ident_v = tuple(range(g.nv))
    tracks = ((),) * g.nv
    tree_pref = sorted(g.tree - {i2}) + [i2]
    g2, wit = _transport(
        g, g.nv, ends, ident_v, tuple(p_e), ident_v, tuple(q_e), tracks, tree_pref
    )
    respect = {j: f.stratum_of(j + 1) for j in range(g.ne)}
    return _rebuild(f, g2, wit, respect=respect), wit


# -- slide ------------------------------------------------------------------------


def slide(f: TopRep, edge: int, alpha: Word) -> tuple[TopRep, MoveWitness]:
    """Drag the terminal end of an edge along a path through strictly lower
    strata.  Strata and their matrices are preserved."""
    g = f.g
    i = edge - 1
    if not alpha:
        return f, identity_witness(g)
    a, b = g.path_ends(alpha)
    if a != g.ends[i][1]:
        raise ValueError("slide path must start at the edge's terminal vertex")
    r = f.stratum_of(edge)
    for e in alpha:
        if f.stratum_of(e) >= r:
            raise ValueError("slide path must stay in strictly lower strata")
    ends = tuple((g.ends[i][0], b) if j == i else g.ends[j] for j in range(g.ne))
    p_e = [(j + 1,) for j in range(g.ne)]
    p_e[i] = tighten((edge,) + inverse(alpha))
    q_e = [(j + 1,) for j in range(g.ne)]
    q_e[i] = tighten((edge,) + tuple(alpha))
    ident_v = tuple(range(g.nv))
    tracks = ((),) * g.nv
    tree_pref = sorted(g.tree - {i}) + [i]
    g2, wit = _transport(
        g, g.nv, ends, ident_v, tuple(p_e), ident_v, tuple(q_e), tracks, tree_pref
    )
    return _rebuild(f, g2, wit, keep_layers=True), wit


# -- vertex homotopy ----------------------------------------------------------------


def homotope_vertex(f: TopRep, v: int, tau: Word) -> tuple[TopRep, MoveWitness]:
    """Move the image of one vertex along tau, dragging incident edge
    images.  Graph and outer class are unchanged."""
    g = f.g
    if not tau:
        return f, identity_witness(g)
    a, b = g.path_ends(tau)
    if a != f.v_map[v]:
        raise ValueError("homotopy path must start at the vertex's current image")
    e_map = []
    for j in range(g.ne):
        w = f.e_map[j]
        u, t = g.ends[j]
        if u == v:
            w = tighten(inverse(tau) + w)
        if t == v:
            w = tighten(w + tuple(tau))
        if not w:
            raise ValueError(f"homotopy makes edge {j} trivial")
        e_map.append(w)
    v_map = tuple(b if x == v else f.v_map[x] for x in range(g.nv))
    respect = {j: f.stratum_of(j + 1) for j in range(g.ne)}
    rep = TopRep(g, v_map, tuple(e_map), build_layers(tuple(e_map), respect))
    return rep, identity_witness(g)


# -- fold factorization of a plain graph map ------------------------------------------


@dataclass(frozen=True)
class FoldStep:
    kind: str  # "subdivide" | "fold" | "finish"
    data: tuple
    v_map: tuple[int, ...]
    e_map: tuple[Word, ...]  # graph before this step -> graph after (or target)


@dataclass(frozen=True)
class FoldFactorization:
    """h = finish . fold_k . ... . fold_1 . subdivisions, step by step."""

    src_ends: tuple[tuple[int, int], ...]
    dst_ends: tuple[tuple[int, int], ...]
    steps: tuple[FoldStep, ...]
    final_injective: bool

    @property
    def n_folds(self) -> int:
        return sum(1 for s in self.steps if s.kind == "fold")

    def recompose(self) -> tuple[tuple[int, ...], tuple[Word, ...]]:
        nv = 1 + max((max(u, w) for u, w in self.src_ends), default=0)
        v_map = tuple(range(nv))
        e_map = tuple((i + 1,) for i in range(len(self.src_ends)))
        for st in self.steps:
            v_map = tuple(st.v_map[v] for v in v_map)
            e_map = tuple(_apply_table(st.e_map, w) for w in e_map)
        return v_map, e_map


def factor_into_folds(h: GraphMap) -> FoldFactorization:
    """Stallings decomposition of a graph map: subdivide until every edge
    image is a single letter, fold equal-image directed edges at shared
    corners until locally injective, then read off the finishing map."""
    for w in h.e_map:
        if not w:
            raise ValueError("factorization needs nontrivial edge images")
    nv = h.src.nv
    ends: list[tuple[int, int]] = list(h.src.ends)
    em: list[Word] = [tuple(w) for w in h.e_map]
    steps: list[FoldStep] = []

    j = 0
    while j < len(em):
        w = em[j]
        if len(w) == 1:
            j += 1
            continue
        u, t = ends[j]
        step_e = [(k + 1,) for k in range(len(em))]
        step_e[j] = (j + 1, len(em) + 1)
        steps.append(FoldStep("subdivide", (j + 1,), tuple(range(nv)), tuple(step_e)))
        ends[j] = (u, nv)
        ends.append((nv, t))
        em.append(w[1:])
        em[j] = w[:1]
        nv += 1

    while True:
        corner: dict[tuple[int, int], int] = {}
        pair = None
        for k, (u, t) in enumerate(ends):
            lab = em[k][0]
            for v, d in ((u, k + 1), (t, -(k + 1))):
                img = lab if d > 0 else -lab
                key = (v, img)
                if key in corner and abs(corner[key]) != k + 1:
                    pair = (corner[key], d)
                    break
                corner.setdefault(key, d)
            if pair:
                break
        if pair is None:
            break
        ea, eb = pair
        ia, ib = abs(ea) - 1, abs(eb) - 1
        ta = ends[ia][1] if ea > 0 else ends[ia][0]
        tb = ends[ib][1] if eb > 0 else ends[ib][0]
        keep, drop = min(ta, tb), max(ta, tb)
        vmap_step = []
        k = 0
        for v in range(nv):
            if v == drop and drop != keep:
                vmap_step.append(-1)
            else:
                vmap_step.append(k)
                k += 1
        if drop != keep:
            vmap_step[drop] = vmap_step[keep]
        lab_of = {}
        k = 0
        for j2 in range(len(em)):
            if j2 != ib:
                k += 1
                lab_of[j2] = k
        sign = 1 if (ea > 0) == (eb > 0) else -1
        step_e = tuple(
            (sign * lab_of[ia],) if j2 == ib else (lab_of[j2],)
            for j2 in range(len(em))
        )
        steps.append(FoldStep("fold", (ea, eb), tuple(vmap_step), step_e))
        new_ends, new_em = [], []
        for j2 in range(len(em)):
            if j2 == ib:
                continue
            u, t = ends[j2]
            new_ends.append((vmap_step[u], vmap_step[t]))
            new_em.append(em[j2])
        ends, em = new_ends, new_em
        nv = max(vmap_step) + 1

    seen: dict[tuple[int, int], int] = {}
    injective = True
    for k, (u, t) in enumerate(ends):
        lab = em[k][0]
        for key in ((u, lab), (t, -lab)):
            if key in seen and seen[key] != k:
                injective = False
            seen[key] = k
    vm: list[int | None] = [None] * nv
    for k in range(len(em)):
        a, b = h.dst.path_ends(em[k])
        u, t = ends[k]
        vm[u], vm[t] = a, b
    if any(x is None for x in vm):
        raise AssertionError("isolated vertex after folding")
    steps.append(FoldStep("finish", (), tuple(vm), tuple(em)))
    return FoldFactorization(
        src_ends=tuple(h.src.ends),
        dst_ends=tuple(h.dst.ends),
        steps=tuple(steps),
        final_injective=injective,
    )


# -- valence homotopies ---------------------------------------------------------------


def valence_one_homotopy(f: TopRep, v: int) -> tuple[TopRep, MoveWitness]:
    """Remove a valence-one vertex by collapsing its only edge."""
    g = f.g
    star = g.star[v]
    if len(star) != 1:
        raise ValueError(f"vertex {v} has valence {len(star)}, not one")
    return collapse(f, frozenset({abs(star[0]) - 1}))


def valence_two_homotopy(f: TopRep, v: int) -> tuple[TopRep, MoveWitness]:
    """Remove a valence-two vertex by sliding it across one incident edge.

    The edge in the lower stratum is absorbed, so higher filtration layers
    keep their realization.
    """
    g = f.g
    star = g.star[v]
    if len(star) != 2:
        raise ValueError(f"vertex {v} has valence {len(star)}, not two")
    d1, d2 = star
    if abs(d1) == abs(d2):
        raise ValueError("vertex carries a loop; nothing to absorb")
    i1, i2 = abs(d1) - 1, abs(d2) - 1
    pick = i1 if f.stratum_of(i1 + 1) <= f.stratum_of(i2 + 1) else i2
    return collapse(f, frozenset({pick}))


# -- move log -------------------------------------------------------------------------


def apply_move(f: TopRep, entry: dict) -> tuple[TopRep, MoveWitness]:
    """Replay one serialized move."""
    op = entry["op"]
    if op == "subdivide":
        return subdivide(f, entry["edge"], entry["pos"])
    if op == "subdivide_directed":
        return _subdivide_directed(f, entry["edge"], entry["pos"])
    if op == "stallings_fold":
        return stallings_fold(f, entry["e1"], entry["e2"])
    if op == "full_fold":
        return full_fold(f, entry["e1"], entry["e2"])
    if op == "generalized_fold":
        return generalized_fold(f, entry["e2"], tuple(entry["sigma"]))
    if op == "collapse":
        return collapse(f, frozenset(entry["forest"]))
    if op == "collapse_pretrivial":
        return collapse_pretrivial_forest(f)
    if op == "slide":
        return slide(f, entry["edge"], tuple(entry["alpha"]))
    if op == "homotope_vertex":
        return homotope_vertex(f, entry["vertex"], tuple(entry["tau"]))
    if op == "valence_one":
        return valence_one_homotopy(f, entry["vertex"])
    if op == "valence_two":
        return valence_two_homotopy(f, entry["vertex"])
    if op == "tighten":
        return retighten(f)
    if op == "iterate":
        from .mapping import iterate_rep

        return iterate_rep(f, entry["power"]), identity_witness(f.g)
    if op == "refilter":
        from .strata import refiltered

        return refiltered(f), identity_witness(f.g)
    raise ValueError(f"unknown move {op!r}")


def replay_log(f0: TopRep, log: list[dict]) -> TopRep:
    cur = f0
    for entry in log:
        cur, _ = apply_move(cur, entry)
    return cur


def retighten(f: TopRep) -> tuple[TopRep, MoveWitness]:
    """Tighten all edge images in place (no graph change)."""
    e_map = tuple(tighten(w) for w in f.e_map)
    if any(not w for w in e_map):
        raise ValueError("tightening kills an edge image; collapse first")
    respect = {j: f.stratum_of(j + 1) for j in range(f.g.ne)}
    rep = TopRep(f.g, f.v_map, e_map, build_layers(e_map, respect))
    return rep, identity_witness(f.g)
