"""Marked graphs and edge paths.

A graph is combinatorial: ``nv`` vertices ``0..nv-1`` and edges given by
endpoint pairs.  Edge ``i`` (0-based) appears in paths as the directed label
``+(i+1)`` (init to term) or ``-(i+1)`` (reversed), so path words are plain
tuples handled by :mod:`trackmap.words`.

A marking identifies the fundamental group at ``base`` with the standard free
group of the graph's rank.  It is stored in both directions and kept
consistent by a round-trip law:

* ``gen_loops[i]``: closed tight path at ``base`` realizing the i-th standard
  generator;
* ``coords[j]``: the word in standard generators represented by the
  fundamental loop (through ``tree``) of the j-th non-tree edge.

``express`` of a closed path is the product of ``coords`` over its non-tree
crossings; the law ``express(gen_loops[i]) == (i+1,)`` pins the two maps as
mutually inverse on the fundamental group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from . import words
from .words import Word, inverse, tighten


def maximal_forest(nv: int, ends: Sequence[tuple[int, int]], order: Iterable[int]) -> frozenset[int]:
    """Greedy forest over the edges in the given order (union-find)."""
    parent = list(range(nv))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out = set()
    for i in order:
        u, w = ends[i]
        ru, rw = find(u), find(w)
        if ru != rw:
            parent[ru] = rw
            out.add(i)
    return frozenset(out)


@dataclass(frozen=True)
class MarkedGraph:
    nv: int
    ends: tuple[tuple[int, int], ...]
    tree: frozenset[int]
    base: int
    gen_loops: tuple[Word, ...]
    coords: tuple[Word, ...]

    def __post_init__(self):
        ne = len(self.ends)
        if not (0 <= self.base < self.nv):
            raise ValueError("base out of range")
        for u, w in self.ends:
            if not (0 <= u < self.nv and 0 <= w < self.nv):
                raise ValueError("edge endpoint out of range")
        if not self.tree <= set(range(ne)):
            raise ValueError("tree contains unknown edges")
        # spanning + acyclic
        got = maximal_forest(self.nv, self.ends, sorted(self.tree))
        if got != self.tree or len(self.tree) != self.nv - 1:
            raise ValueError("tree is not a spanning tree")
        if self.rank != len(self.gen_loops) or self.rank != len(self.coords):
            raise ValueError("marking size does not match graph rank")
        object.__setattr__(self, "_cache", {})
        for w in self.gen_loops:
            a, b = self.path_ends(w)
            if a != self.base or b != self.base or not words.is_tight(w):
                raise ValueError("gen_loop is not a tight loop at base")
        for i, w in enumerate(self.gen_loops):
            if self.express(w) != (i + 1,):
                raise ValueError("marking round-trip law fails")

    # -- basic structure ----------------------------------------------------

    @property
    def ne(self) -> int:
        return len(self.ends)

    @property
    def rank(self) -> int:
        return self.ne - self.nv + 1

    @property
    def nontree(self) -> tuple[int, ...]:
        c = self._cache
        if "nontree" not in c:
            c["nontree"] = tuple(i for i in range(self.ne) if i not in self.tree)
        return c["nontree"]

    def init_of(self, e: int) -> int:
        return self.ends[e - 1][0] if e > 0 else self.ends[-e - 1][1]

    def term_of(self, e: int) -> int:
        return self.ends[e - 1][1] if e > 0 else self.ends[-e - 1][0]

    @property
    def star(self) -> tuple[tuple[int, ...], ...]:
        """Directed edges leaving each vertex, sorted by label."""
        c = self._cache
        if "star" not in c:
            st: list[list[int]] = [[] for _ in range(self.nv)]
            for i, (u, w) in enumerate(self.ends):
                st[u].append(i + 1)
                st[w].append(-(i + 1))
            c["star"] = tuple(tuple(sorted(s)) for s in st)
        return c["star"]

    def valence(self, v: int) -> int:
        return len(self.star[v])

    def path_ends(self, w: Sequence[int]) -> tuple[int, int]:
        """(init, term) of a path word; raises on discontinuity or bad labels."""
        if not w:
            raise ValueError("trivial word carries no endpoints; pass a vertex")
        prev = self.init_of(w[0])
        cur = prev
        for e in w:
            if not (1 <= abs(e) <= self.ne):
                raise ValueError(f"label {e} outside edge range")
            if self.init_of(e) != cur:
                raise ValueError("path is not continuous")
            cur = self.term_of(e)
        return prev, cur

    def is_path(self, w: Sequence[int]) -> bool:
        try:
            if w:
                self.path_ends(w)
            return True
        except ValueError:
            return False

    # -- tree navigation and marking ----------------------------------------

    @property
    def _from_base(self) -> tuple[Word, ...]:
        """Tree path word from base to each vertex."""
        c = self._cache
        if "from_base" not in c:
            paths: list[Word | None] = [None] * self.nv
            paths[self.base] = ()
            queue = [self.base]
            adj: list[list[tuple[int, int]]] = [[] for _ in range(self.nv)]
            for i in self.tree:
                u, w = self.ends[i]
                adj[u].append((w, i + 1))
                adj[w].append((u, -(i + 1)))
            while queue:
                v = queue.pop()
                for nxt, lab in adj[v]:
                    if paths[nxt] is None:
                        paths[nxt] = paths[v] + (lab,)
                        queue.append(nxt)
            if any(p is None for p in paths):
                raise ValueError("graph is not connected")
            c["from_base"] = tuple(paths)
        return c["from_base"]

    def tree_path(self, u: int, w: int) -> Word:
        return tighten(inverse(self._from_base[u]) + self._from_base[w])

    def express(self, w: Sequence[int]) -> Word:
        """Standard-generator word of a closed tight-or-not path at base."""
        if w:
            a, b = self.path_ends(w)
            if a != self.base or b != self.base:
                raise ValueError("express needs a loop at base")
        lut = {e: k for k, e in enumerate(self.nontree)}
        out: list[int] = []
        for e in w:
            j = lut.get(abs(e) - 1)
            if j is None:
                continue
            out.extend(self.coords[j] if e > 0 else inverse(self.coords[j]))
        return tighten(out)

    def express_circuit(self, w: Sequence[int]) -> Word:
        """Standard-generator conjugacy representative of a circuit."""
        w = words.cyclic_tighten(w)
        if not w:
            return ()
        p = self._from_base[self.init_of(w[0])]
        return words.circuit_key(self.express(tighten(p + tuple(w) + inverse(p))))

    def realize(self, gen_word: Sequence[int]) -> Word:
        """Closed path at base realizing a standard-generator word."""
        out: list[int] = []
        for x in gen_word:
            if not (1 <= abs(x) <= self.rank):
                raise ValueError("generator index out of range")
            loop = self.gen_loops[abs(x) - 1]
            out.extend(loop if x > 0 else inverse(loop))
        return tighten(out)

    def fundamental_loop(self, e: int) -> Word:
        """Loop at base through non-tree edge e (1-based directed label)."""
        i = abs(e) - 1
        if i in self.tree:
            raise ValueError("fundamental loops exist for non-tree edges only")
        u, w = self.init_of(e), self.term_of(e)
        return tighten(self._from_base[u] + (e,) + inverse(self._from_base[w]))

    # -- subgraphs -----------------------------------------------------------

    def sub_components(self, edges: Iterable[int]) -> list[tuple[frozenset[int], frozenset[int]]]:
        """Connected components of the subgraph spanned by an edge set.

        Vertices of the subgraph are the endpoints of its edges (isolated
        vertices of the ambient graph do not count).  Returns (vertices,
        edges) pairs sorted by least vertex.
        """
        edges = sorted(set(edges))
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in edges:
            u, w = self.ends[i]
            parent.setdefault(u, u)
            parent.setdefault(w, w)
            parent[find(u)] = find(w)
        groups: dict[int, tuple[set[int], set[int]]] = {}
        for i in edges:
            u, w = self.ends[i]
            r = find(u)
            vs, es = groups.setdefault(r, (set(), set()))
            vs.update((u, w))
            es.add(i)
        return [
            (frozenset(vs), frozenset(es))
            for vs, es in sorted(groups.values(), key=lambda g: min(g[0]))
        ]

    def sub_rank(self, edges: Iterable[int]) -> int:
        """Sum of first Betti numbers over the components of the edge set."""
        return sum(
            len(es) - len(vs) + 1 for vs, es in self.sub_components(edges)
        )

    def noncontractible(self, edges: Iterable[int]) -> list[tuple[frozenset[int], frozenset[int]]]:
        return [
            (vs, es)
            for vs, es in self.sub_components(edges)
            if len(es) - len(vs) + 1 >= 1
        ]

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": self.nv,
            "edges": [list(p) for p in self.ends],
            "tree": sorted(self.tree),
            "base": self.base,
            "gen_loops": [words.format_word(w) for w in self.gen_loops],
            "coords": [words.format_word(w) for w in self.coords],
        }

    @classmethod
    def from_json(cls, d: dict) -> "MarkedGraph":
        return cls(
            nv=int(d["vertices"]),
            ends=tuple((int(u), int(w)) for u, w in d["edges"]),
            tree=frozenset(int(i) for i in d["tree"]),
            base=int(d["base"]),
            gen_loops=tuple(words.parse_word(s) for s in d["gen_loops"]),
            coords=tuple(words.parse_word(s) for s in d["coords"]),
        )


def rose(n: int) -> MarkedGraph:
    """Rose with n petals, identity marking."""
    if n < 1:
        raise ValueError("rose needs at least one petal")
    gens = tuple((i + 1,) for i in range(n))
    return MarkedGraph(
        nv=1,
        ends=tuple((0, 0) for _ in range(n)),
        tree=frozenset(),
        base=0,
        gen_loops=gens,
        coords=gens,
    )
