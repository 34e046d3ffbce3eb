"""Subgroups of a free group as folded labeled graphs, and systems of
conjugacy classes of free factors.

A :class:`SubgroupGraph` is a deterministic graph labeled by basis letters,
folded in the usual way; with a basepoint it answers membership queries, and
its basepoint-free core is a conjugacy-class invariant.  Systems of factors
support complexity comparison, meet (via fiber products) and carrying.
Automorphism utilities (inversion, composition, inner detection) also live
here since they lean on the same word machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import count

from .words import Word, inverse, tighten


class SubgroupGraph:
    """Folded graph over the rank-n basis.  State 0 is the basepoint when
    `base` is not None; transitions map signed labels to states."""

    __slots__ = ("n", "trans", "base")

    def __init__(self, n: int, trans: list[dict[int, int]], base: int | None = 0):
        self.n = n
        self.trans = trans
        self.base = base

    # -- construction ----------------------------------------------------------

    @staticmethod
    def from_words(ws, n: int) -> "SubgroupGraph":
        adj: list[list[tuple[int, int]]] = [[]]
        for w in ws:
            w = tighten(w)
            if not w:
                continue
            cur = 0
            for k, lab in enumerate(w):
                nxt = 0 if k == len(w) - 1 else len(adj)
                if nxt == len(adj):
                    adj.append([])
                adj[cur].append((lab, nxt))
                adj[nxt].append((-lab, cur))
                cur = nxt
        return _fold(adj, n, base=0)

    def copy_core(self, keep_base: bool) -> "SubgroupGraph":
        """Iteratively prune valence-1 states (basepoint spared if kept)."""
        alive = set(range(len(self.trans)))
        changed = True
        while changed:
            changed = False
            for s in list(alive):
                if keep_base and s == self.base:
                    continue
                deg = sum(1 for _, t in self.trans[s].items() if t in alive)
                if deg <= 1:
                    alive.discard(s)
                    changed = True
        order = sorted(alive)
        num = {s: k for k, s in enumerate(order)}
        trans = [
            {lab: num[t] for lab, t in self.trans[s].items() if t in alive}
            for s in order
        ]
        base = num[self.base] if (keep_base and self.base is not None) else None
        return SubgroupGraph(self.n, trans, base)

    # -- basic facts --------------------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.trans)

    @property
    def n_edges(self) -> int:
        return sum(len(d) for d in self.trans) // 2

    def rank(self) -> int:
        if not self.trans:
            return 0
        return self.n_edges - self.n_states + 1

    def contains(self, w: Word) -> bool:
        if self.base is None:
            raise ValueError("membership needs a basepoint")
        s = self.base
        for lab in tighten(w):
            s = self.trans[s].get(lab)
            if s is None:
                return False
        return s == self.base

    def components(self) -> list["SubgroupGraph"]:
        seen: set[int] = set()
        out = []
        for s0 in range(len(self.trans)):
            if s0 in seen:
                continue
            comp = [s0]
            seen.add(s0)
            qi = 0
            while qi < len(comp):
                s = comp[qi]
                qi += 1
                for t in self.trans[s].values():
                    if t not in seen:
                        seen.add(t)
                        comp.append(t)
            num = {s: k for k, s in enumerate(comp)}
            trans = [{lab: num[t] for lab, t in self.trans[s].items()} for s in comp]
            out.append(SubgroupGraph(self.n, trans, None))
        return out

    # -- canonical form -------------------------------------------------------------

    def _signature_from(self, s0: int) -> tuple:
        num = {s0: 0}
        order = [s0]
        qi = 0
        rows = []
        while qi < len(order):
            s = order[qi]
            qi += 1
            row = []
            for lab in sorted(self.trans[s]):
                t = self.trans[s][lab]
                if t not in num:
                    num[t] = len(order)
                    order.append(t)
                row.append((lab, num[t]))
            rows.append(tuple(row))
        return tuple(rows)

    def canonical_key(self) -> tuple:
        """Isomorphism invariant of the basepoint-free labeled graph:
        least traversal signature over all start states.  Deterministic
        labels make the signature faithful."""
        if not self.trans:
            return ()
        return min(self._signature_from(s) for s in range(len(self.trans)))

    def immerses_into(self, other: "SubgroupGraph") -> bool:
        """Label-preserving map into `other` from some placement.  Folded
        targets make any such map locally injective, so existence means
        this component's class is carried by other's."""
        if not self.trans:
            return True
        for a0 in range(len(other.trans)):
            amap = {0: a0}
            queue = [0]
            ok = True
            while queue and ok:
                s = queue.pop()
                for lab, t in self.trans[s].items():
                    u = other.trans[amap[s]].get(lab)
                    if u is None:
                        ok = False
                        break
                    if t in amap:
                        if amap[t] != u:
                            ok = False
                            break
                    else:
                        amap[t] = u
                        queue.append(t)
            if ok:
                return True
        return False

    def loops_at(self, s0: int) -> list[Word]:
        """Free basis of the subgroup read at state s0 (spanning tree there)."""
        paths = {s0: ()}
        order = [s0]
        qi = 0
        tree: set[tuple[int, int, int]] = set()
        while qi < len(order):
            s = order[qi]
            qi += 1
            for lab in sorted(self.trans[s]):
                t = self.trans[s][lab]
                if t not in paths:
                    paths[t] = paths[s] + (lab,)
                    order.append(t)
                    tree.add((s, lab, t))
                    tree.add((t, -lab, s))
        out = []
        for s in order:
            for lab in sorted(self.trans[s]):
                t = self.trans[s][lab]
                if (s, lab, t) in tree:
                    continue
                if lab < 0 and (t, -lab, s) not in tree:
                    continue  # count undirected non-tree edges once
                out.append(tighten(paths[s] + (lab,) + tuple(-x for x in reversed(paths[t]))))
        return [w for w in out if w]


def _fold(adj: list[list[tuple[int, int]]], n: int, base: int | None) -> SubgroupGraph:
    parent = list(range(len(adj)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pending = list(range(len(adj)))
    while pending:
        s = find(pending.pop())
        byl: dict[int, int] = {}
        merged = False
        for lab, t in adj[s]:
            t = find(t)
            if lab in byl and byl[lab] != t:
                a, b = byl[lab], t
                parent[b] = a
                adj[a] = adj[a] + adj[b]
                adj[b] = []
                pending.append(a)
                pending.append(s)
                merged = True
                break
            byl[lab] = t
        if merged:
            continue
    reps = sorted({find(s) for s in range(len(adj))})
    live = {r for r in reps if adj[r] or (base is not None and find(base) == r)}
    order = sorted(live)
    num = {r: k for k, r in enumerate(order)}
    trans: list[dict[int, int]] = [dict() for _ in order]
    for r in order:
        for lab, t in adj[r]:
            trans[num[r]][lab] = num[find(t)]
    b = num[find(base)] if base is not None else None
    g = SubgroupGraph(n, trans, b)
    if b is not None:
        # keep only the basepoint component
        comp = {b}
        queue = [b]
        while queue:
            s = queue.pop()
            for t in trans[s].values():
                if t not in comp:
                    comp.add(t)
                    queue.append(t)
        if len(comp) != len(trans):
            order2 = sorted(comp)
            num2 = {s: k for k, s in enumerate(order2)}
            g = SubgroupGraph(
                n, [{lab: num2[t] for lab, t in trans[s].items()} for s in order2], num2[b]
            )
    return g


def fiber_product(a: SubgroupGraph, b: SubgroupGraph) -> SubgroupGraph:
    """Product over common labels.  Components correspond to intersections
    of conjugates of the two subgroups."""
    pairs: dict[tuple[int, int], int] = {}
    trans: list[dict[int, int]] = []
    for p in range(len(a.trans)):
        for q in range(len(b.trans)):
            pairs[(p, q)] = len(trans)
            trans.append({})
    for (p, q), s in pairs.items():
        for lab, t in a.trans[p].items():
            u = b.trans[q].get(lab)
            if u is not None:
                trans[s][lab] = pairs[(t, u)]
    return SubgroupGraph(a.n, trans, None)


@dataclass(frozen=True, eq=False)
class FactorSystem:
    """Finite set of conjugacy classes of finitely generated subgroups,
    each held as a basepoint-free core graph."""

    n: int
    components: tuple[SubgroupGraph, ...]

    @staticmethod
    def from_generators(gen_lists, n: int) -> "FactorSystem":
        comps = []
        for ws in gen_lists:
            g = SubgroupGraph.from_words(ws, n).copy_core(keep_base=False)
            if g.rank() >= 1:
                comps.append(g)
        return FactorSystem(n, _dedup(comps))

    @staticmethod
    def from_basis_partition(parts, n: int) -> "FactorSystem":
        return FactorSystem.from_generators(
            [[(x,) for x in part] for part in parts], n
        )

    @property
    def complexity(self) -> tuple[int, ...]:
        """Ranks in non-increasing order; compare lexicographically
        (a longer chain with the same prefix is larger)."""
        return tuple(sorted((c.rank() for c in self.components), reverse=True))

    def canonical(self) -> tuple:
        return tuple(sorted(c.canonical_key() for c in self.components))

    def __eq__(self, other) -> bool:
        return isinstance(other, FactorSystem) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def meet(self, other: "FactorSystem") -> "FactorSystem":
        comps = []
        for a in self.components:
            for b in other.components:
                prod = fiber_product(a, b)
                for comp in prod.components():
                    core = comp.copy_core(keep_base=False)
                    if core.rank() >= 1:
                        comps.append(core)
        return FactorSystem(self.n, _dedup(comps))

    def carries(self, other: "FactorSystem") -> bool:
        """Every class of `other` is conjugate into some class of self."""
        return all(
            any(b.immerses_into(a) for a in self.components) for b in other.components
        )


def _dedup(comps) -> tuple[SubgroupGraph, ...]:
    seen = {}
    for c in comps:
        seen.setdefault(c.canonical_key(), c)
    return tuple(seen[k] for k in sorted(seen))


def whole_group(n: int) -> FactorSystem:
    return FactorSystem.from_generators([[(i + 1,) for i in range(n)]], n)


def cx_compare(a: FactorSystem | tuple, b: FactorSystem | tuple) -> int:
    """Order on complexity: -1, 0 or 1.  Rank sequences sorted non-increasing
    compare lexicographically, so a longer chain with a dominated head loses."""
    ca = a.complexity if isinstance(a, FactorSystem) else tuple(sorted(a, reverse=True))
    cb = b.complexity if isinstance(b, FactorSystem) else tuple(sorted(b, reverse=True))
    return (ca > cb) - (ca < cb)


def _circle_graph(w: Word, n: int) -> SubgroupGraph:
    L = len(w)
    trans: list[dict[int, int]] = [dict() for _ in range(L)]
    for i, lab in enumerate(w):
        trans[i][lab] = (i + 1) % L
        trans[(i + 1) % L][-lab] = i
    return SubgroupGraph(n, trans, None)


def carries(F: FactorSystem, gamma: Word) -> bool:
    """Whether the conjugacy class of the circuit lies in some component.

    The cyclic word's circle graph is folded (cyclic reduction kills both
    backtracking and label collisions at a state), so a label-preserving
    placement into a component is exactly a carried conjugate."""
    from .words import cyclic_tighten

    w = cyclic_tighten(gamma)
    if not w:
        return True
    circle = _circle_graph(w, F.n)
    return any(circle.immerses_into(c) for c in F.components)


def ffs_from_subgraph(g, edges) -> FactorSystem:
    """Free factor system realized by a subgraph of a marked graph: one
    class per noncontractible component, read through the marking."""
    comps: list[SubgroupGraph] = []
    for vs, es in g.noncontractible(edges):
        v0 = min(vs)
        # spanning tree of the component, then one loop per leftover edge
        reach: dict[int, Word] = {v0: ()}
        queue = [v0]
        tree: set[int] = set()
        while queue:
            u = queue.pop()
            for i in sorted(es):
                a, b = g.ends[i]
                for (x, y, lab) in ((a, b, i + 1), (b, a, -(i + 1))):
                    if x == u and y not in reach:
                        reach[y] = reach[x] + (lab,)
                        tree.add(i)
                        queue.append(y)
        words = []
        anchor = g.tree_path(g.base, v0)
        for i in sorted(es - tree):
            a, b = g.ends[i]
            loop = reach[a] + (i + 1,) + inverse(reach[b])
            words.append(g.express(tighten(anchor + loop + inverse(anchor))))
        core = SubgroupGraph.from_words(words, g.rank).copy_core(keep_base=False)
        if core.rank() >= 1:
            comps.append(core)
    return FactorSystem(g.rank, _dedup(comps))


# -- automorphisms as generator-image tuples ---------------------------------------


def apply_automorphism(images: tuple[Word, ...], w: Word) -> Word:
    out: list[int] = []
    for x in w:
        out.extend(images[x - 1] if x > 0 else inverse(images[-x - 1]))
    return tighten(out)


def compose_automorphisms(a: tuple[Word, ...], b: tuple[Word, ...]) -> tuple[Word, ...]:
    """a after b."""
    return tuple(apply_automorphism(a, w) for w in b)


def identity_automorphism(n: int) -> tuple[Word, ...]:
    return tuple((i + 1,) for i in range(n))


def invert_automorphism(images: tuple[Word, ...]) -> tuple[Word, ...]:
    """Invert by length-reducing pair replacements on the image tuple,
    with a bounded breadth search through equal-length rewrites when the
    greedy walk stalls.  The result is verified exactly."""
    n = len(images)
    start = tuple(tighten(w) for w in images)
    exprs = tuple((i + 1,) for i in range(n))
    state = _nielsen_reduce(start, exprs)
    if state is None:
        raise ValueError("not an automorphism: image tuple does not reduce to a basis")
    us, vs = state
    inv: list[Word | None] = [None] * n
    for u, v in zip(us, vs):
        lab = u[0]
        inv[abs(lab) - 1] = v if lab > 0 else inverse(v)
    out = tuple(inv)  # type: ignore[arg-type]
    if any(w is None for w in inv):
        raise ValueError("not an automorphism: basis letters missing")
    comp = compose_automorphisms(images, out)
    if comp != identity_automorphism(n):
        raise ValueError("not an automorphism: inverse verification failed")
    return out


def _nielsen_reduce(us, vs):
    us = list(us)
    vs = list(vs)
    n = len(us)
    if any(not u for u in us):
        return None
    for _round in count():
        if all(len(u) == 1 for u in us):
            if sorted(abs(u[0]) for u in us) == list(range(1, n + 1)):
                return tuple(us), tuple(vs)
            return None
        best = None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for si in (1, -1):
                    for sj in (1, -1):
                        a = us[i] if si > 0 else inverse(us[i])
                        b = us[j] if sj > 0 else inverse(us[j])
                        w = tighten(a + b)
                        if not w:
                            return None
                        if len(w) < len(us[i]):
                            cand = (len(w) - len(us[i]), i, j, si, sj, w)
                            if best is None or cand < best:
                                best = cand
        if best is None:
            got = _equal_length_escape(us, vs)
            if got is None:
                return None
            us, vs = got
            continue
        _, i, j, si, sj, w = best
        ev = vs[i] if si > 0 else inverse(vs[i])
        ew = vs[j] if sj > 0 else inverse(vs[j])
        nv = tighten(ev + ew)
        if si > 0:
            us[i], vs[i] = w, nv
        else:
            us[i], vs[i] = inverse(w), inverse(nv)
    return None


def _equal_length_escape(us, vs, cap: int = 20000):
    """Breadth-first walk through same-total-length replacement moves,
    looking for a position where a strict reduction exists."""
    n = len(us)
    start = (tuple(us), tuple(vs))
    seen = {tuple(start[0])}
    queue = [start]
    qi = 0
    while qi < len(queue) and qi < cap:
        cus, cvs = queue[qi]
        qi += 1
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for si in (1, -1):
                    for sj in (1, -1):
                        a = cus[i] if si > 0 else inverse(cus[i])
                        b = cus[j] if sj > 0 else inverse(cus[j])
                        w = tighten(a + b)
                        if not w:
                            return None
                        ev = cvs[i] if si > 0 else inverse(cvs[i])
                        ew = cvs[j] if sj > 0 else inverse(cvs[j])
                        nv = tighten(ev + ew)
                        nu = w if si > 0 else inverse(w)
                        nvv = nv if si > 0 else inverse(nv)
                        nus = cus[:i] + (nu,) + cus[i + 1 :]
                        nvs = cvs[:i] + (nvv,) + cvs[i + 1 :]
                        if len(w) < len(cus[i]):
                            return list(nus), list(nvs)
                        if len(w) == len(cus[i]) and nus not in seen:
                            seen.add(nus)
                            queue.append((nus, nvs))
    return None


def conjugator_of_inner(images: tuple[Word, ...]) -> Word | None:
    """The word c with every generator image equal to c g c^-1, if one exists."""
    n = len(images)
    w1 = images[0]
    cands: list[Word] = []
    limit = max(len(w) for w in images) + 2
    if w1 == (1,):
        cands = [()]
        cands += [tuple([1] * k) for k in range(1, limit)]
        cands += [tuple([-1] * k) for k in range(1, limit)]
    else:
        if len(w1) % 2 == 0:
            return None
        h = len(w1) // 2
        if w1[h] not in (1, -1):
            return None
        d = w1[:h]
        for k in range(-limit, limit + 1):
            cands.append(tighten(d + tuple([1] * k if k >= 0 else [-1] * (-k))))
    for c in cands:
        ci = inverse(c)
        if all(tighten(c + (m + 1,) + ci) == images[m] for m in range(n)):
            return c
    return None
