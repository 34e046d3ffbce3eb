"""Attracting laminations handled through finite windows.

A lamination here is never a set of leaves: it is a handle (representative
plus an aperiodic exponential stratum) and every question about it is asked
of finite edge paths.  Tiles are iterated edge images; leaf windows are
nested tile iterates with a containment certificate; attraction is a
three-valued semi-decision whose positive answers carry a replayable
iteration witness and whose negative answers carry either a path-groupoid
decomposition or an invariant-subgraph witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .budget import BudgetExceeded, Unsupported
from .mapping import TopRep
from .strata import crossing_matrix, is_aperiodic, perron_eigenvalue, strata_of
from .words import Word, inverse, tighten
from . import words

MAX_PATH_LEN = 2_000_000


# -- handles and tiles ----------------------------------------------------------


@dataclass(frozen=True)
class Tile:
    """Iterated image of a single stratum edge.  First and last letters
    stay in the stratum and the path has no illegal stratum turns."""

    stratum: int
    base: int  # signed edge label
    depth: int
    path: Word


@dataclass(frozen=True)
class LamHandle:
    rep: TopRep
    stratum: int


def lamination_of(f: TopRep, r: int) -> LamHandle:
    """Handle for the expanding lamination of an aperiodic exponential
    stratum; anything else is a usage error."""
    s = strata_of(f)[r]
    if s.kind != "EG":
        raise ValueError(f"stratum {r} is {s.kind}, not exponential")
    if not is_aperiodic(s.matrix):
        raise ValueError(
            f"stratum {r} transition matrix is periodic; pass to the "
            "aperiodic power first"
        )
    return LamHandle(f, r)


def laminations_of(f: TopRep) -> tuple[LamHandle, ...]:
    out = []
    for s in strata_of(f):
        if s.kind == "EG" and is_aperiodic(s.matrix):
            out.append(LamHandle(f, s.index))
    return tuple(out)


def tile(f: TopRep, e: int, k: int, max_length: int | None = MAX_PATH_LEN) -> Tile:
    r = f.stratum_of(e)
    hr = f.stratum(r)
    w = f.iterate_path((e,), k, max_length)
    if abs(w[0]) - 1 not in hr or abs(w[-1]) - 1 not in hr:
        raise ValueError("tile boundary left the stratum; not a train track map")
    if not f.is_r_legal(w, hr):
        raise ValueError("tile has an illegal stratum turn; not a train track map")
    return Tile(r, e, k, w)


def tile_matrix_check(f: TopRep, r: int, k: int, max_length: int | None = MAX_PATH_LEN) -> bool:
    """Entry (i, j) of the k-th power of the stratum transition matrix
    against the orientation-blind edge counts of depth-k tiles, exactly."""
    idx = sorted(f.stratum(r))
    pos = {e: i for i, e in enumerate(idx)}
    m = [[int(x) for x in row] for row in crossing_matrix(f, f.stratum(r))]
    n = len(idx)
    p = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(k):
        p = [
            [sum(p[i][l] * m[l][j] for l in range(n)) for j in range(n)]
            for i in range(n)
        ]
    for j, e in enumerate(idx):
        t = tile(f, e + 1, k, max_length)
        counts = [0] * n
        for c in t.path:
            i = pos.get(abs(c) - 1)
            if i is not None:
                counts[i] += 1
        if any(counts[i] != p[i][j] for i in range(n)):
            return False
    return True


def frequency_vector(f: TopRep, r: int) -> dict[int, float]:
    """Asymptotic stratum-edge frequencies: the positive eigenvector of the
    transition matrix normalized to sum 1."""
    lam = lamination_of(f, r)  # validates aperiodic EG
    m = crossing_matrix(f, f.stratum(lam.stratum))
    _, v = perron_eigenvalue(m, tol=1e-13)
    v = v / v.sum()
    return {e: float(v[i]) for i, e in enumerate(sorted(f.stratum(r)))}


# -- windows --------------------------------------------------------------------


def contains_subword(big: Word, small: Word) -> bool:
    """Orientation-blind contiguous containment."""
    if not small:
        return True
    n, m = len(big), len(small)
    if m > n:
        return False
    rev = inverse(small)
    for s in range(n - m + 1):
        seg = big[s : s + m]
        if seg == small or seg == rev:
            return True
    return False


@dataclass(frozen=True)
class LeafWindow:
    stratum: int
    base: int
    power: int  # base edge recurs interiorly in its image under this power
    depth: int  # how many power-steps the window was grown
    window: Word


def generic_leaf_window(
    f: TopRep,
    r: int,
    target_length: int,
    max_power: int = 8,
    max_length: int | None = MAX_PATH_LEN,
) -> LeafWindow:
    """Window of a generic leaf: a stratum edge that recurs strictly inside
    its own iterated image, grown by nested iteration until the requested
    length.  Each growth step is checked to contain the previous window."""
    lam = lamination_of(f, r)
    hr = f.stratum(lam.stratum)
    seed = None
    for m in range(1, max_power + 1):
        for i in sorted(hr):
            for e in (i + 1, -(i + 1)):
                w = f.iterate_path((e,), m, max_length)
                if any(w[p] == e for p in range(1, len(w) - 1)):
                    seed = (e, m)
                    break
            if seed:
                break
        if seed:
            break
    if seed is None:
        raise ValueError(
            f"no stratum edge recurs interiorly within {max_power} iterates"
        )
    e, m = seed
    cur: Word = (e,)
    depth = 0
    while len(cur) < target_length:
        nxt = f.iterate_path(cur, m, max_length)
        if not contains_subword(nxt, cur):
            raise ArithmeticError("window iterate lost its predecessor")
        cur = nxt
        depth += 1
        if depth > 64:
            raise BudgetExceeded("window growth stalled", partial=cur)
    return LeafWindow(r, e, m, depth, cur)


def window_contains_all_tiles(f: TopRep, r: int, window: Word, k: int) -> bool:
    """Every depth-k tile of the stratum occurs in the window."""
    for i in sorted(f.stratum(r)):
        if not contains_subword(window, tile(f, i + 1, k).path):
            return False
    return True


# -- attraction -----------------------------------------------------------------


@dataclass(frozen=True)
class AttractionVerdict:
    """One of attracted / not_attracted / in_groupoid / generic_negative /
    unknown, with the payload that makes the verdict replayable."""

    kind: str
    witness_k: int | None = None
    tile: Tile | None = None
    decomposition: tuple | None = None
    reason: str | None = None

    @property
    def attracted(self) -> bool:
        return self.kind == "attracted"


def _edge_closure(f: TopRep, edges: set[int]) -> frozenset[int]:
    out = set(edges)
    queue = list(edges)
    while queue:
        e = queue.pop()
        for c in f.e_map[e]:
            i = abs(c) - 1
            if i not in out:
                out.add(i)
                queue.append(i)
    return frozenset(out)


def _fixed_path_orbits(f: TopRep, r: int) -> tuple[Word, ...]:
    """Words of the stratum's periodic-path inventory together with their
    forward orbits; cached on the representative.  Empty when the
    inventory is incomplete or the paths end inside edges."""
    key = ("fixed-orbit", r)
    if key not in f._cache:
        from .nielsen import compute_Pr

        out: list[Word] = []
        pr = compute_Pr(f, r)
        if pr.complete:
            hr = f.stratum(r)
            for c in pr.candidates:
                if c.symbolic:
                    continue
                cur = c.path
                for _ in range(c.preperiod + c.period):
                    if (
                        cur not in out
                        and abs(cur[0]) - 1 in hr
                        and abs(cur[-1]) - 1 in hr
                        and len(_illegal_positions(f, cur, hr, False)) == 1
                    ):
                        out.append(cur)
                    cur = f.apply_path(cur)
        f._cache[key] = tuple(out)
    return f._cache[key]


def _anchored_copies(
    f: TopRep, w: Word, hr: frozenset[int], inps: tuple[Word, ...], circuit: bool
) -> list[tuple[int, int]] | None:
    """Non-overlapping exact fixed-path copies covering every illegal
    stratum turn, each aligned by its own illegal turn; None if any turn
    cannot be covered.  Returns (start, length) pairs."""
    n = len(w)
    hits = _illegal_positions(f, w, hr, circuit)
    if not hits:
        return []
    options: list[list[tuple[int, int]]] = []
    for p in hits:
        cand: list[tuple[int, int]] = []
        prev = w[(p - 1) % n] if circuit else w[p - 1]
        for rho in inps:
            L = len(rho)
            if L > n:
                continue
            q = _illegal_positions(f, rho, hr, False)[0]
            for pat, off in ((rho, q), (inverse(rho), L - q)):
                if prev != pat[off - 1]:
                    continue
                s = (p - off) % n if circuit else p - off
                if circuit:
                    if tuple(w[(s + i) % n] for i in range(L)) == pat:
                        cand.append((s, L))
                elif 0 <= s and s + L <= n and w[s : s + L] == pat:
                    cand.append((s, L))
        if not cand:
            return None
        options.append(cand)

    # choose one copy per turn without overlaps; few turns, few options
    def feasible(i: int, used: list[tuple[int, int]]):
        if i == len(options):
            return used
        for s, L in options[i]:
            cells = {(s + j) % n if circuit else s + j for j in range(L)}
            if all(
                cells.isdisjoint(
                    {(s2 + j) % n if circuit else s2 + j for j in range(L2)}
                )
                for s2, L2 in used
            ):
                got = feasible(i + 1, used + [(s, L)])
                if got is not None:
                    return got
        return None

    return feasible(0, [])


def _split_off_hr_edge(f: TopRep, w: Word, hr: frozenset[int], r: int, circuit: bool):
    """Position of a stratum edge certified to split off: every illegal
    stratum turn sits inside an exact fixed-path copy and the edge lies
    outside all copies.  The train track conditions then keep the edge's
    iterated images intact, so its tiles grow inside the iterates."""
    if not w:
        return None
    copies = _anchored_copies(f, w, hr, _fixed_path_orbits(f, r), circuit)
    if copies is None:
        return None
    n = len(w)
    covered = set()
    for s, L in copies:
        covered.update((s + j) % n if circuit else s + j for j in range(L))
    for p, c in enumerate(w):
        if p not in covered and abs(c) - 1 in hr:
            return p
    return None


def weakly_attracted(
    sigma: Word,
    lam: LamHandle,
    budget_iterates: int = 20,
    *,
    circuit: bool = False,
    groupoid: tuple[frozenset[int], Word] | None = None,
    max_length: int | None = MAX_PATH_LEN,
) -> AttractionVerdict:
    """Semi-decision for weak attraction of a path or circuit.

    Attracted: some iterate within budget crosses a stratum edge outside
    exact fixed-path copies that absorb all its illegal stratum turns; the
    train track conditions then keep that edge's iterated images verbatim
    inside later iterates, so its growing tiles certify attraction.  Not
    attracted: the edge closure of the input misses the stratum entirely,
    or the input lies in the path groupoid generated by a supplied
    subgraph and fixed path.  Anything else within budget: unknown.
    """
    f, r = lam.rep, lam.stratum
    hr = f.stratum(r)
    w = words.cyclic_tighten(sigma) if circuit else tighten(sigma)
    if not w:
        return AttractionVerdict("not_attracted", reason="trivial input")

    closure = _edge_closure(f, {abs(c) - 1 for c in w})
    if not (closure & hr):
        return AttractionVerdict(
            "not_attracted",
            reason="smallest invariant subgraph containing the input misses "
            "the stratum: edges %s" % sorted(closure),
        )

    if groupoid is not None:
        X, rho = groupoid
        dec = in_groupoid(f, w, X, rho, circuit=circuit)
        if dec is not None:
            return AttractionVerdict(
                "not_attracted", decomposition=dec, reason="groupoid member"
            )

    cur = w
    for k in range(budget_iterates + 1):
        p = _split_off_hr_edge(f, cur, hr, r, circuit)
        if p is not None:
            e = cur[p]
            return AttractionVerdict(
                "attracted", witness_k=k, tile=Tile(r, e, 0, (e,))
            )
        try:
            cur = f.iterate_circuit(cur, 1, max_length) if circuit else \
                f.iterate_path(cur, 1, max_length)
        except BudgetExceeded:
            return AttractionVerdict(
                "unknown", reason=f"length budget exceeded at iterate {k + 1}"
            )
    return AttractionVerdict(
        "unknown",
        reason=f"illegal stratum turns persisted through {budget_iterates} iterates",
    )


# -- the path groupoid ----------------------------------------------------------


def _illegal_positions(f: TopRep, w: Word, hr: frozenset[int], circuit: bool) -> list[int]:
    n = len(w)
    out = []
    rng = range(n) if circuit else range(1, n)
    for p in rng:
        t = (-w[p - 1], w[p])
        if f.turn_in(t, hr) and not f.is_legal_turn(t):
            out.append(p)
    return out


def in_groupoid(
    f: TopRep,
    sigma: Word,
    X: frozenset[int],
    rho: Word,
    *,
    circuit: bool = False,
) -> tuple | None:
    """Canonical decomposition of a path into subgraph edges and copies of
    a fixed path, or None when the path is not in that groupoid.

    With a trivial fixed path, membership is containment in the subgraph.
    Otherwise every illegal stratum turn of the input must anchor a full
    copy of the fixed path, aligned by the copy's own unique illegal turn
    with the orientation decided by the letter before the anchor; copies
    must not overlap, and everything outside them must be subgraph edges.
    """
    w = words.cyclic_tighten(sigma) if circuit else tighten(sigma)
    if not w:
        return ()
    if not rho:
        if all(abs(c) - 1 in X for c in w):
            return (("path", w),)
        return None

    r = f.stratum_of(rho[0])
    hr = f.stratum(r)
    if abs(rho[-1]) - 1 not in hr:
        raise Unsupported("fixed path must start and end in one stratum")
    if rho[0] == -rho[-1]:
        raise Unsupported("fixed path and its reverse share an initial direction")
    anchors = _illegal_positions(f, rho, hr, circuit=False)
    if len(anchors) != 1:
        raise Unsupported(
            f"fixed path has {len(anchors)} interior illegal stratum turns, need 1"
        )
    q = anchors[0]
    L = len(rho)
    rbar = inverse(rho)
    n = len(w)

    hit = _illegal_positions(f, w, hr, circuit)
    if not hit:
        if all(abs(c) - 1 in X for c in w):
            return (("path", w),)
        return None
    if L > n:
        return None

    def seg(s: int) -> Word:
        if circuit:
            return tuple(w[(s + i) % n] for i in range(L))
        if s < 0 or s + L > n:
            return ()
        return w[s : s + L]

    copies: list[tuple[int, int]] = []  # (start, +1 forward / -1 backward)
    for p in hit:
        prev = w[(p - 1) % n] if circuit else w[p - 1]
        if prev == rho[q - 1]:
            s = (p - q) % n if circuit else p - q
            if seg(s) == rho:
                copies.append((s, 1))
                continue
            return None
        if prev == rbar[L - q - 1]:
            s = (p - (L - q)) % n if circuit else p - (L - q)
            if seg(s) == rbar:
                copies.append((s, -1))
                continue
            return None
        return None

    covered = [False] * n
    for s, _ in copies:
        for i in range(L):
            j = (s + i) % n if circuit else s + i
            if covered[j]:
                return None  # overlapping copies
            covered[j] = True
    for i in range(n):
        if not covered[i] and abs(w[i]) - 1 not in X:
            return None

    # assemble pieces in order; circuits are read from the first copy
    copies.sort()
    starts = {s: d for s, d in copies}
    start = copies[0][0] if circuit else 0
    pieces: list[tuple] = []
    run: list[int] = []
    i = 0
    while i < n:
        j = (start + i) % n if circuit else i
        if j in starts:
            if run:
                pieces.append(("path", tuple(run)))
                run = []
            pieces.append(("rho", starts[j]))
            i += L
        else:
            run.append(w[j])
            i += 1
    if run:
        pieces.append(("path", tuple(run)))
    return tuple(pieces)


# -- the nonattracting subgraph -------------------------------------------------


@dataclass(frozen=True)
class ZData:
    """Subgraph whose groupoid (together with the fixed path) captures the
    paths not pulled toward the lamination."""

    stratum: int
    edges: frozenset[int]
    rho_hat: Word
    provisional: bool
    closure_ok: bool
    notes: tuple[str, ...] = ()


def _topmost_check(f: TopRep, r: int, depth: int = 5) -> None:
    """A deeper exponential stratum must not reproduce this stratum's
    tiles; budgeted containment probe."""
    probe = tile(f, sorted(f.stratum(r))[0] + 1, depth).path
    for s in strata_of(f):
        if s.kind != "EG" or s.index <= r:
            continue
        for i in s.edges:
            if contains_subword(tile(f, i + 1, depth).path, probe):
                raise ValueError(
                    f"stratum {s.index} tiles contain stratum {r} tiles; "
                    "the lamination is not topmost"
                )


def build_Z(
    f: TopRep,
    r: int | None = None,
    attraction_budget: int = 20,
    pr_budgets: dict | None = None,
) -> ZData:
    """Nonattracting subgraph for the topmost lamination, plus its fixed
    path when the periodic-path inventory provides one.

    Everything strictly below the stratum goes in; higher polynomial edges
    go in when none of their lower image segments is attracted; higher
    exponential and dead strata go in wholesale.  The closure property
    (images of subgraph edges stay in the groupoid) is verified and
    reported.
    """
    from .nielsen import compute_Pr

    sts = strata_of(f)
    eg = [s for s in sts if s.kind == "EG" and is_aperiodic(s.matrix)]
    if not eg:
        raise ValueError("no aperiodic exponential stratum; no lamination")
    if r is None:
        r = eg[-1].index
    lam = lamination_of(f, r)
    _topmost_check(f, r)

    notes: list[str] = []
    provisional = False

    prb = pr_budgets or {}
    pr = compute_Pr(f, r, **prb)
    rho_hat: Word = ()
    if not pr.complete:
        provisional = True
        notes.append("periodic path inventory incomplete; fixed path omitted")
    else:
        plain = [c for c in pr.candidates if not c.symbolic]
        if plain:
            rho_hat = plain[0].path
            if len(plain) > 1:
                notes.append(f"{len(plain)} fixed paths; using the first")
        elif pr.candidates:
            notes.append("fixed paths end inside edges; groupoid tests disabled")

    z: set[int] = set()
    for s in sts:
        if s.index < r:
            z.update(s.edges)
        elif s.index == r:
            continue
        elif s.kind in ("zero", "EG"):
            z.update(s.edges)
        else:  # higher polynomial stratum: decide edge by edge
            for e in s.edges:
                segs: list[list[int]] = [[]]
                for c in f.e_map[e]:
                    if f.stratum_of(c) == s.index:
                        segs.append([])
                    else:
                        segs[-1].append(c)
                verdicts = [
                    weakly_attracted(tuple(seg), lam, attraction_budget)
                    for seg in segs
                    if seg
                ]
                if any(v.kind == "attracted" for v in verdicts):
                    continue
                if all(v.kind == "not_attracted" for v in verdicts):
                    z.add(e)
                else:
                    provisional = True
                    notes.append(
                        f"edge {e}: attraction of an image segment unknown; left out"
                    )

    closure_ok = True
    zf = frozenset(z)
    for e in sorted(zf):
        try:
            dec = in_groupoid(f, f.e_map[e], zf, rho_hat)
        except Unsupported:
            dec = None
        if dec is None:
            closure_ok = False
            notes.append(f"closure fails at edge {e}")
    return ZData(r, zf, rho_hat, provisional, closure_ok, tuple(notes))


# -- trichotomy for circuits ----------------------------------------------------


def classify_trichotomy(
    f: TopRep,
    gamma: Word,
    zdata: ZData,
    budget_iterates: int = 20,
) -> AttractionVerdict:
    """A circuit is either pulled toward the lamination or lies in the
    nonattracting groupoid; the generic-negative alternative never applies
    to circuits.  Unknown only on budget exhaustion."""
    lam = lamination_of(f, zdata.stratum)
    w = words.cyclic_tighten(gamma)
    if not w:
        return AttractionVerdict(
            "in_groupoid", decomposition=(), reason="trivial circuit"
        )
    try:
        dec = in_groupoid(f, w, zdata.edges, zdata.rho_hat, circuit=True)
    except Unsupported as u:
        return AttractionVerdict("unknown", reason=str(u))
    if dec is not None:
        return AttractionVerdict(
            "in_groupoid",
            decomposition=dec,
            reason="nonattracting subgraph is provisional" if zdata.provisional else None,
        )
    got = weakly_attracted(w, lam, budget_iterates, circuit=True)
    if got.kind == "attracted":
        return got
    if got.kind == "not_attracted":
        return AttractionVerdict(
            "unknown",
            reason="not attracted (%s) yet outside the groupoid; "
            "the subgraph may be incomplete" % got.reason,
        )
    return got


# -- expansion factors ----------------------------------------------------------


@dataclass(frozen=True)
class ExpansionReport:
    mu: float | None
    log_mu: float | None
    side: str  # "forward" | "inverse" | "neither" | "unknown"
    carrier_stratum: int | None = None
    notes: tuple[str, ...] = ()


def _leaf_probe(
    f: TopRep, r: int, depth: int = 24, min_len: int = 200, cap: int = 4000
) -> Word:
    """Conjugacy class (in standard generators) of a circuit pushed toward
    the lamination: a marking loop that meets the stratum, iterated."""
    hr = f.stratum(r)
    g = f.g
    for loop in g.gen_loops:
        cur = words.cyclic_tighten(loop)
        for _ in range(depth):
            nxt = f.apply_circuit(cur)
            if len(nxt) > cap:
                break
            cur = nxt
            if min_len and len(cur) >= min_len:
                break
        if any(abs(c) - 1 in hr for c in cur):
            return g.express_circuit(cur)
    raise ValueError("no marking loop reaches the stratum under iteration")


def _realized(g, gen_word: Word) -> Word:
    return words.cyclic_tighten(g.realize(gen_word))


def _looks_like_leaf(lam: LamHandle, circuit_class: Word, min_tile_len: int = 12) -> bool:
    """Whether the realized circuit already contains every tile of the
    deepest affordable depth, i.e. reads like a window of the lamination
    without any iteration.  Depth is chosen so the longest tile fits a
    third of the circuit; tiles shorter than the floor prove nothing."""
    f, r = lam.rep, lam.stratum
    w = _realized(f.g, circuit_class)
    budget = max(len(w) // 3, 1)
    depth = 0
    longest_at = 1
    while depth < 12:
        nxt = max(
            len(f.iterate_path((i + 1,), depth + 1, MAX_PATH_LEN))
            for i in sorted(f.stratum(r))
        )
        if nxt > budget:
            break
        depth += 1
        longest_at = nxt
    if depth == 0 or longest_at < min_tile_len:
        return False
    return window_contains_all_tiles(f, r, w, depth)


def expansion_factor(
    psi_images: tuple[Word, ...],
    lam: LamHandle,
    budget_iterates: int = 24,
    probe_len: int = 200,
) -> ExpansionReport:
    """Growth rate contributed by an automorphism along a fixed lamination.

    Carrier detection is by tile content in shared marking coordinates:
    a stratum of the automorphism's train track carries the lamination
    when each side's deep probe circuit reads as a leaf window of the
    other.  The inverse direction reports the reciprocal so logs add
    along composition.  Inner automorphisms report exactly 1."""
    from .factors import conjugator_of_inner, invert_automorphism
    from .traintrack import find_rtt

    notes: list[str] = []
    if conjugator_of_inner(psi_images) is not None:
        return ExpansionReport(1.0, 0.0, "neither", None, ("inner automorphism",))

    probe = _leaf_probe(lam.rep, lam.stratum, min_len=probe_len)

    def try_side(images: tuple[Word, ...], side: str) -> ExpansionReport | None:
        got = find_rtt(images)
        if not got.ok:
            notes.append(f"{side}: no train track representative within budget")
            return None
        rep = got.rep
        for s in strata_of(rep):
            if s.kind != "EG" or not is_aperiodic(s.matrix):
                continue
            cand = LamHandle(rep, s.index)
            if not _looks_like_leaf(cand, probe):
                continue
            back_probe = _leaf_probe(rep, s.index, min_len=probe_len)
            if not _looks_like_leaf(lam, back_probe):
                continue
            if side == "forward":
                return ExpansionReport(
                    s.lam, math.log(s.lam), side, s.index, tuple(notes)
                )
            return ExpansionReport(
                1.0 / s.lam, -math.log(s.lam), side, s.index, tuple(notes)
            )
        return None

    got = try_side(psi_images, "forward")
    if got is not None:
        return got
    try:
        inv = invert_automorphism(psi_images)
    except ValueError:
        return ExpansionReport(None, None, "unknown", None, ("not invertible",))
    got = try_side(inv, "inverse")
    if got is not None:
        return got

    fwd = find_rtt(psi_images)
    bwd = find_rtt(inv)
    if (
        fwd.ok
        and bwd.ok
        and all(s.kind != "EG" for s in strata_of(fwd.rep))
        and all(s.kind != "EG" for s in strata_of(bwd.rep))
    ):
        return ExpansionReport(
            1.0, 0.0, "neither", None,
            tuple(notes) + ("polynomial growth both ways",),
        )
    return ExpansionReport(
        None, None, "unknown", None,
        tuple(notes) + ("carrier detection inconclusive",),
    )


# -- ping-pong certificate ------------------------------------------------------


@dataclass(frozen=True)
class PingPongBudgets:
    window: int = 64
    iterations: int = 40
    probe_len: int = 200
    guard_tile_len: int = 10


@dataclass(frozen=True)
class LegRecord:
    image_class: Word
    to_plus_k: int
    to_minus_k: int


@dataclass(frozen=True)
class PingPongCertificate:
    o_images: tuple[Word, ...]
    psi_images: tuple[Word, ...]
    plus_stratum: int
    minus_stratum: int
    probe_plus: Word
    probe_minus: Word
    legs: tuple[LegRecord, ...]
    budgets: PingPongBudgets


def _leafish(gamma: Word, lam: LamHandle, tile_len: int) -> bool:
    """Does the realized circuit already read as a leaf window of the
    lamination, before any iteration?"""
    return _looks_like_leaf(lam, gamma, min_tile_len=tile_len)


def _apply_auto_to_class(images: tuple[Word, ...], circuit_class: Word) -> Word:
    out: list[int] = []
    for c in circuit_class:
        w = images[c - 1] if c > 0 else inverse(images[-c - 1])
        out.extend(w)
    return words.circuit_key(words.cyclic_tighten(out))


def free_rank2_certificate(
    o_images: tuple[Word, ...],
    psi_images: tuple[Word, ...],
    budgets: PingPongBudgets | None = None,
) -> PingPongCertificate | None:
    """Ping-pong evidence that two outer classes generate a rank-2 free
    group: the second class must move the first's lamination pair off
    itself, and the moved probes must be attracted to both poles.  Emits
    a replayable certificate on success, None otherwise; absence of a
    free subgroup is never claimed.
    """
    from .factors import invert_automorphism
    from .traintrack import find_rtt

    b = budgets or PingPongBudgets()

    fwd = find_rtt(o_images)
    if not fwd.ok:
        return None
    try:
        o_inv = invert_automorphism(o_images)
        psi_inv = invert_automorphism(psi_images)
    except ValueError:
        return None
    bwd = find_rtt(o_inv)
    if not bwd.ok:
        return None

    hp = laminations_of(fwd.rep)
    hm = laminations_of(bwd.rep)
    if not hp or not hm:
        return None
    lam_p, lam_m = hp[-1], hm[-1]

    probe_p = _leaf_probe(lam_p.rep, lam_p.stratum, min_len=max(b.probe_len, b.window))
    probe_m = _leaf_probe(lam_m.rep, lam_m.stratum, min_len=max(b.probe_len, b.window))

    moved = [
        _apply_auto_to_class(auto, probe)
        for auto in (psi_images, psi_inv)
        for probe in (probe_p, probe_m)
    ]

    # pairing guard: a moved probe that still looks like a leaf of either
    # pole means the lamination pair was not moved off itself
    for cls in moved:
        if _leafish(cls, lam_p, b.guard_tile_len) or _leafish(cls, lam_m, b.guard_tile_len):
            return None

    legs = []
    for cls in moved:
        vp = weakly_attracted(
            _realized(lam_p.rep.g, cls), lam_p, b.iterations, circuit=True
        )
        vm = weakly_attracted(
            _realized(lam_m.rep.g, cls), lam_m, b.iterations, circuit=True
        )
        if vp.kind != "attracted" or vm.kind != "attracted":
            return None
        legs.append(LegRecord(cls, vp.witness_k, vm.witness_k))

    return PingPongCertificate(
        tuple(o_images), tuple(psi_images),
        lam_p.stratum, lam_m.stratum,
        probe_p, probe_m, tuple(legs), b,
    )
