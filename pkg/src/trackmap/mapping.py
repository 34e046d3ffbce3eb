"""Graph maps and topological representatives.

A :class:`GraphMap` sends vertices to vertices and edges to tight nontrivial
edge paths.  A :class:`TopRep` is a self-map carrying an increasing filtration
of edge sets that its images respect; the filtration may be the trivial
one-layer chain.  Turns, legality, the bounded-cancellation constant and the
train track conditions live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import words
from .budget import Budget, BudgetExceeded
from .graphs import MarkedGraph
from .words import Word, inverse, tighten

Turn = tuple[int, int]


def _norm_turn(a: int, b: int) -> Turn:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class GraphMap:
    src: MarkedGraph
    dst: MarkedGraph
    v_map: tuple[int, ...]
    e_map: tuple[Word, ...]

    def __post_init__(self):
        if len(self.v_map) != self.src.nv or len(self.e_map) != self.src.ne:
            raise ValueError("map tables do not match the source graph")
        for v in self.v_map:
            if not (0 <= v < self.dst.nv):
                raise ValueError("vertex image out of range")
        for i, w in enumerate(self.e_map):
            u, t = self.src.ends[i]
            if not w:
                # collapsed edge: both ends must land on the same vertex
                if self.v_map[u] != self.v_map[t]:
                    raise ValueError(f"edge {i} collapses but its ends map apart")
                continue
            if not words.is_tight(w):
                raise ValueError(f"edge {i} image is not tight")
            a, b = self.dst.path_ends(w)
            if a != self.v_map[u] or b != self.v_map[t]:
                raise ValueError(f"edge {i} image endpoints disagree with vertex map")

    def image_of(self, e: int) -> Word:
        return self.e_map[e - 1] if e > 0 else inverse(self.e_map[-e - 1])

    def apply_path(self, w: Sequence[int]) -> Word:
        out: list[int] = []
        for e in w:
            out.extend(self.image_of(e))
        return tighten(out)

    def apply_circuit(self, w: Sequence[int]) -> Word:
        return words.cyclic_tighten(self.apply_path(w))


def compose(outer: GraphMap, inner: GraphMap) -> GraphMap:
    """outer after inner."""
    if inner.dst is not outer.src and inner.dst != outer.src:
        raise ValueError("maps do not compose")
    return GraphMap(
        src=inner.src,
        dst=outer.dst,
        v_map=tuple(outer.v_map[v] for v in inner.v_map),
        e_map=tuple(outer.apply_path(w) for w in inner.e_map),
    )


@dataclass(frozen=True, eq=False)
class TopRep:
    g: MarkedGraph
    v_map: tuple[int, ...]
    e_map: tuple[Word, ...]
    layers: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        GraphMap(self.g, self.g, self.v_map, self.e_map)  # endpoint/tightness checks
        for i, w in enumerate(self.e_map):
            if not w:
                raise ValueError(f"edge {i} has trivial image; collapse it instead")
        if not self.layers:
            object.__setattr__(self, "layers", (frozenset(range(self.g.ne)),))
        if self.layers[-1] != frozenset(range(self.g.ne)):
            raise ValueError("last filtration layer must contain every edge")
        prev: frozenset[int] = frozenset()
        for lay in self.layers:
            if not prev < lay:
                raise ValueError("filtration must be strictly increasing")
            prev = lay
        for k, lay in enumerate(self.layers):
            for i in lay:
                for e in self.e_map[i]:
                    if abs(e) - 1 not in lay:
                        raise ValueError(f"layer {k} is not invariant (edge {i})")
        object.__setattr__(self, "_cache", {})

    # -- structure -----------------------------------------------------------

    @property
    def n_strata(self) -> int:
        return len(self.layers)

    def stratum(self, r: int) -> frozenset[int]:
        lo = self.layers[r - 1] if r > 0 else frozenset()
        return self.layers[r] - lo

    def stratum_of(self, e: int) -> int:
        c = self._cache
        if "stratum_of" not in c:
            lut = {}
            for r in range(self.n_strata):
                for i in self.stratum(r):
                    lut[i] = r
            c["stratum_of"] = lut
        return c["stratum_of"][abs(e) - 1]

    def height(self, w: Sequence[int]) -> int:
        """Largest stratum index met by the word; -1 for the trivial word."""
        return max((self.stratum_of(e) for e in w), default=-1)

    def as_graph_map(self) -> GraphMap:
        return GraphMap(self.g, self.g, self.v_map, self.e_map)

    def with_layers(self, layers: tuple[frozenset[int], ...]) -> "TopRep":
        return TopRep(self.g, self.v_map, self.e_map, layers)

    # -- applying the map ------------------------------------------------------

    def image_of(self, e: int) -> Word:
        return self.e_map[e - 1] if e > 0 else inverse(self.e_map[-e - 1])

    def apply_path(self, w: Sequence[int]) -> Word:
        out: list[int] = []
        for e in w:
            out.extend(self.image_of(e))
        return tighten(out)

    def apply_circuit(self, w: Sequence[int]) -> Word:
        return words.cyclic_tighten(self.apply_path(w))

    def iterate_path(self, w: Sequence[int], k: int, max_length: int | None = None) -> Word:
        """f_#^k(w), reapplying to the tightened result each step.

        Raises BudgetExceeded (partial = (steps_done, word)) if an
        intermediate word exceeds max_length.
        """
        cur = tighten(w)
        for step in range(k):
            cur = self.apply_path(cur)
            if max_length is not None and len(cur) > max_length:
                raise BudgetExceeded(
                    f"iterate length {len(cur)} > {max_length} at step {step + 1}",
                    partial=(step + 1, cur),
                )
        return cur

    def iterate_circuit(self, w: Sequence[int], k: int, max_length: int | None = None) -> Word:
        cur = words.cyclic_tighten(w)
        for step in range(k):
            cur = self.apply_circuit(cur)
            if max_length is not None and len(cur) > max_length:
                raise BudgetExceeded(
                    f"iterate length {len(cur)} > {max_length} at step {step + 1}",
                    partial=(step + 1, cur),
                )
        return cur

    # -- turns and legality ------------------------------------------------------

    def derivative(self, e: int) -> int:
        return self.image_of(e)[0]

    def turns(self) -> list[Turn]:
        out = []
        for st in self.g.star:
            for i in range(len(st)):
                for j in range(i + 1, len(st)):
                    out.append(_norm_turn(st[i], st[j]))
        return out

    def tf(self, t: Turn) -> Turn:
        return _norm_turn(self.derivative(t[0]), self.derivative(t[1]))

    def classify_turn(self, t: Turn) -> tuple[bool, list[Turn]]:
        """(legal?, witness orbit).  Illegal iff the Tf-orbit reaches a
        degenerate turn; legal iff it closes up degenerate-free."""
        t = _norm_turn(*t)
        orbit = [t]
        seen = {t}
        cur = t
        while True:
            if cur[0] == cur[1]:
                return False, orbit
            cur = self.tf(cur)
            orbit.append(cur)
            if cur[0] == cur[1]:
                return False, orbit
            if cur in seen:
                return True, orbit
            seen.add(cur)

    def is_legal_turn(self, t: Turn) -> bool:
        c = self._cache.setdefault("legal", {})
        t = _norm_turn(*t)
        if t not in c:
            c[t] = self.classify_turn(t)[0]
        return c[t]

    def turns_of_path(self, w: Sequence[int]) -> list[Turn]:
        return [_norm_turn(-w[i], w[i + 1]) for i in range(len(w) - 1)]

    def illegal_turns(self) -> list[Turn]:
        return [t for t in self.turns() if not self.is_legal_turn(t)]

    def turn_in(self, t: Turn, stratum: frozenset[int]) -> bool:
        return abs(t[0]) - 1 in stratum and abs(t[1]) - 1 in stratum

    def is_r_legal(self, w: Sequence[int], stratum: frozenset[int]) -> bool:
        """No illegal turn of w lies in the given stratum (both directions)."""
        for t in self.turns_of_path(w):
            if self.turn_in(t, stratum) and not self.is_legal_turn(t):
                return False
        return True

    def first_illegal_turn_in(self, w: Sequence[int], stratum: frozenset[int]):
        for i in range(len(w) - 1):
            t = _norm_turn(-w[i], w[i + 1])
            if self.turn_in(t, stratum) and not self.is_legal_turn(t):
                return i, t
        return None

    def count_illegal_in(self, w: Sequence[int], stratum: frozenset[int]) -> int:
        n = 0
        for t in self.turns_of_path(w):
            if self.turn_in(t, stratum) and not self.is_legal_turn(t):
                n += 1
        return n

    # -- constants -------------------------------------------------------------

    def bcc_bound(self) -> int:
        """Crude bounded-cancellation constant: total image length.

        Tightening u.v after applying the map cancels at most this many
        letters at the juncture, for tight u, v with tight concatenation.
        """
        return sum(len(w) for w in self.e_map)

    # -- outer automorphism ------------------------------------------------------

    def to_automorphism(self) -> tuple[Word, ...]:
        """Standard-generator images of the induced outer automorphism,
        basepoint carried back along the tree path."""
        g = self.g
        p = g.tree_path(g.base, self.v_map[g.base])
        out = []
        for loop in g.gen_loops:
            out.append(g.express(tighten(p + self.apply_path(loop) + inverse(p))))
        return tuple(out)

    # -- train track conditions ---------------------------------------------------

    def check_rtt(self, deep: bool = True) -> "RttReport":
        from . import strata as _strata

        issues: list[RttIssue] = []
        eg = []
        for r in range(self.n_strata):
            S = self.stratum(r)
            M = _strata.crossing_matrix(self, S)
            cls = _strata.classify_matrix(M)
            if cls.kind != "EG":
                continue
            eg.append(r)
            # condition 1: derivatives of stratum edges stay in the stratum
            for i in sorted(S):
                for e in (i + 1, -(i + 1)):
                    d = self.derivative(e)
                    if abs(d) - 1 not in S:
                        issues.append(RttIssue(r, 1, ("derivative", e, d)))
            # condition 3: images of stratum edges are r-legal
            for i in sorted(S):
                img = self.e_map[i]
                bad = self.first_illegal_turn_in(img, S)
                if bad is not None:
                    issues.append(RttIssue(r, 3, ("image", i + 1, bad[0], bad[1])))
            for t in self.turns():
                if self.turn_in(t, S) and self.is_legal_turn(t):
                    tt = self.tf(t)
                    if not self.is_legal_turn(tt) or not self.turn_in(tt, S):
                        issues.append(RttIssue(r, 3, ("turn", t, tt)))
            # condition 2: restriction to lower components meeting the stratum
            if deep and r > 0:
                issues.extend(self._check_rtt2(r, S))
        return RttReport(ok=not issues, issues=issues, eg_strata=tuple(eg))

    def _check_rtt2(self, r: int, S: frozenset[int]) -> list["RttIssue"]:
        from . import factors as _factors

        g = self.g
        lower = self.layers[r - 1]
        attach = set()
        for i in S:
            attach.update(g.ends[i])
        out: list[RttIssue] = []
        for vs, es in g.sub_components(lower):
            av = sorted(vs & attach)
            if not av:
                continue
            # image component and its local basis
            sup = set()
            for i in es:
                sup.update(abs(e) - 1 for e in self.e_map[i])
            target = None
            for vs2, es2 in g.sub_components(lower):
                if self.v_map[min(vs)] in vs2 and sup <= es2:
                    target = (vs2, es2)
                    break
            if target is None:
                out.append(RttIssue(r, 2, ("image-not-in-one-component", min(vs))))
                continue
            vs2, es2 = target
            tre2 = _forest_of(g, es2)
            ybasis = sorted(es2 - tre2)
            ylut = {e: k + 1 for k, e in enumerate(ybasis)}

            def express_local(path: Word) -> Word:
                return tighten(
                    tuple(
                        (ylut[abs(e) - 1] if e > 0 else -ylut[abs(e) - 1])
                        for e in path
                        if abs(e) - 1 in ylut
                    )
                )

            v0 = min(vs)
            tre = _forest_of(g, es)
            tpath = _tree_paths(g, vs, tre, v0)
            gens = []
            for i in sorted(es - tre):
                u, w = g.ends[i]
                loop = tighten(inverse(tpath[u]) + (i + 1,) + tpath[w])
                gens.append(express_local(self.apply_path(loop)))
            want = len(es) - len(vs) + 1
            sg = _factors.SubgroupGraph.from_words(gens, max(len(ybasis), 1))
            if sg.rank() != want:
                out.append(RttIssue(r, 2, ("rank-drop", v0, want, sg.rank())))
                continue
            for a in range(len(av)):
                for b in range(a + 1, len(av)):
                    u, w = av[a], av[b]
                    if self.v_map[u] != self.v_map[w]:
                        continue
                    conn = tighten(inverse(tpath[u]) + tpath[w])
                    c = express_local(self.apply_path(conn)) if conn else ()
                    if sg.contains(c):
                        out.append(RttIssue(r, 2, ("collapsed-path", u, w, conn)))
        return out


def _forest_of(g: MarkedGraph, es: Iterable[int]) -> frozenset[int]:
    from .graphs import maximal_forest

    return frozenset(maximal_forest(g.nv, g.ends, sorted(es)))


def _tree_paths(g: MarkedGraph, vs: frozenset[int], tre: frozenset[int], v0: int) -> dict[int, Word]:
    """Words from each vertex of the component to v0 through the forest."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in vs}
    for i in tre:
        u, w = g.ends[i]
        adj[u].append((w, i + 1))
        adj[w].append((u, -(i + 1)))
    paths = {v0: ()}
    queue = [v0]
    while queue:
        v = queue.pop()
        for nxt, lab in adj[v]:
            if nxt not in paths:
                # path nxt -> v0: step into v then v's path
                paths[nxt] = (-lab,) + paths[v]
                queue.append(nxt)
    return paths


@dataclass(frozen=True)
class RttIssue:
    stratum: int
    condition: int
    witness: tuple


@dataclass(frozen=True)
class RttReport:
    ok: bool
    issues: tuple | list
    eg_strata: tuple[int, ...]

    def for_condition(self, c: int) -> list[RttIssue]:
        return [i for i in self.issues if i.condition == c]


def iterate_rep(f: TopRep, k: int, budget: Budget | None = None) -> TopRep:
    """The k-th power as a topological representative on the same graph."""
    if k < 1:
        raise ValueError("power must be >= 1")
    budget = budget or Budget()
    vm = list(range(f.g.nv))
    for _ in range(k):
        vm = [f.v_map[v] for v in vm]
    em = []
    for i in range(f.g.ne):
        em.append(f.iterate_path((i + 1,), k, max_length=budget.max_length))
    return TopRep(f.g, tuple(vm), tuple(em), f.layers)
