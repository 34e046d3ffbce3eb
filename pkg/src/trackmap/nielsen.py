"""Splittings of paths and circuits, periodic Nielsen path search,
exceptional paths, and the polynomial normal-form splitting.

A splitting of a tight path is a set of cut points such that iterating the
map never produces cancellation across any cut.  The computation tracks cut
points through repeated application of the map: a cut dies the moment a
tightening cancellation swallows it.  Cuts that survive to the requested
depth constitute a verified splitting; a few recognizable shapes carry
structural certificates valid at every depth.
"""

from __future__ import annotations

from dataclasses import dataclass

from .budget import BudgetExceeded
from .mapping import TopRep
from .words import Word, inverse, is_tight, power, primitive_root, tighten

# interior-endpoint certificates are searched through this period; beyond it
# the flank tables grow with the expansion factor while genuine fixed paths
# keep period one after improvement
_SYMBOLIC_PERIOD_CAP = 4


# -- cut tracking ----------------------------------------------------------------


def _tracked_step(
    f: TopRep, w: Word, posmap: dict[int, int], cyclic: bool
) -> tuple[Word, dict[int, int]]:
    """Apply the map once, carrying cut boundaries along.

    Cut positions are boundaries: p means between w[p-1] and w[p] (for
    circuits, 0 is the wrap boundary).  A cut is dropped when cancellation
    happens across it.
    """
    raw: list[int] = []
    raw_of: dict[int, int] = {}
    starts = []
    pos = 0
    for e in w:
        starts.append(pos)
        pos += len(f.image_of(e))
    starts.append(pos)
    for cid, p in posmap.items():
        raw_of[cid] = starts[p]
    for e in w:
        raw.extend(f.image_of(e))

    out: list[int] = []
    assigned: dict[int, int] = {}
    by_raw: dict[int, list[int]] = {}
    for cid, rp in raw_of.items():
        by_raw.setdefault(rp, []).append(cid)
    for k, letter in enumerate(raw):
        for cid in by_raw.get(k, ()):
            assigned[cid] = len(out)
        if out and letter == -out[-1]:
            top = len(out)
            for cid in [c for c, q in assigned.items() if q == top]:
                del assigned[cid]
            out.pop()
        else:
            out.append(letter)
    for cid in by_raw.get(len(raw), ()):
        assigned[cid] = len(out)

    if cyclic:
        while len(out) >= 2 and out[0] == -out[-1]:
            n = len(out)
            for cid in [c for c, q in assigned.items() if q == 0 or q == n]:
                del assigned[cid]
            out = out[1:-1]
            assigned = {
                c: (0 if q == n - 1 else q - 1) for c, q in assigned.items()
            }
        # the end boundary is the wrap boundary
        assigned = {c: (0 if q == len(out) else q) for c, q in assigned.items()}
    else:
        # interior cuts never migrate to the ends for a homotopy equivalence;
        # drop them anyway rather than emit a vacuous cut
        for cid in [c for c, q in assigned.items() if q == 0 or q == len(out)]:
            del assigned[cid]
    return tuple(out), assigned


@dataclass(frozen=True)
class Splitting:
    """Cut decomposition with a verified iteration depth.

    For circuits the pieces are read cyclically from the first cut; an
    uncut circuit is reported as its own single piece.
    """

    pieces: tuple[Word, ...]
    cuts: tuple[int, ...]
    cyclic: bool
    depth_verified: int
    structural_certificate: str | None = None

    @property
    def is_split(self) -> bool:
        if self.cyclic:
            return len(self.cuts) >= 1
        return len(self.pieces) > 1


def _pieces_from_cuts(w: Word, cuts: tuple[int, ...], cyclic: bool) -> tuple[Word, ...]:
    if not cyclic:
        marks = (0,) + cuts + (len(w),)
        return tuple(w[a:b] for a, b in zip(marks, marks[1:]))
    if not cuts:
        return (w,)
    rolled = w[cuts[0]:] + w[: cuts[0]]
    rel = tuple(c - cuts[0] for c in cuts) + (len(w),)
    return tuple(rolled[a:b] for a, b in zip(rel, rel[1:]))


def _protection(f: TopRep, w: Word, p: int, r: int) -> int:
    """H_r edges of unbroken r-legal run on the weaker side of boundary p."""
    st = f.stratum(r)

    def run(idxs) -> int:
        count = 0
        prev = None
        for i in idxs:
            if prev is not None:
                t = (-w[prev], w[i]) if i > prev else (-w[i], w[prev])
                if f.turn_in(t, st) and not f.is_legal_turn(t):
                    break
            if f.stratum_of(w[i]) == r:
                count += 1
            prev = i
        return count

    left = run(range(p - 1, -1, -1))
    right = run(range(p, len(w)))
    return min(left, right)


def protection_constant(f: TopRep, r: int) -> int:
    """2 l C: l the first power whose images of stratum edges each carry at
    least two stratum edges, C the bounded cancellation constant."""
    import numpy as np

    from .strata import crossing_matrix

    m = crossing_matrix(f, f.stratum(r))
    acc = m.copy()
    l = 1
    while not bool(np.all(acc.sum(axis=0) >= 2)):
        acc = acc @ m
        l += 1
        if l > 64:
            raise ArithmeticError("stratum matrix never doubles; not exponential?")
    return 2 * l * f.bcc_bound()


def split_path(
    f: TopRep, w: Word, verify_depth: int = 10, *, cyclic: bool = False
) -> Splitting:
    """Maximal splitting of a tight path or cyclically reduced circuit,
    verified by tracking every candidate cut through verify_depth
    applications of the map."""
    if not w:
        raise ValueError("cannot split a trivial path")
    if not is_tight(w):
        raise ValueError("path must be tight")
    if cyclic and len(w) > 1 and w[0] == -w[-1]:
        raise ValueError("circuit must be cyclically reduced")
    if cyclic:
        posmap = {p: p for p in range(len(w))}
    else:
        posmap = {p: p for p in range(1, len(w))}
    cur = w
    pm = dict(posmap)
    for _ in range(verify_depth):
        if not pm:
            break
        cur, pm = _tracked_step(f, cur, pm, cyclic)
    cuts = tuple(sorted(pm.keys()))
    pieces = _pieces_from_cuts(w, cuts, cyclic)
    cert = _certificate(f, w, cuts, pieces, cyclic)
    return Splitting(pieces, cuts, cyclic, verify_depth, cert)


def _certificate(
    f: TopRep,
    w: Word,
    cuts: tuple[int, ...],
    pieces: tuple[Word, ...],
    cyclic: bool,
) -> str | None:
    if not cuts:
        return None
    junctures = []
    for p in cuts:
        a = w[p - 1] if p > 0 else w[-1]
        junctures.append((-a, w[p % len(w)]))
    all_pieces_legal = all(
        all(f.is_legal_turn(t) for t in f.turns_of_path(pc)) for pc in pieces
    )
    if all_pieces_legal and all(f.is_legal_turn(t) for t in junctures):
        return "legal-concatenation"
    r = f.height(w)
    st = f.stratum(r)
    from .strata import strata_of

    s = strata_of(f)[r]
    if s.kind == "NEG" and len(st) == 1:
        lab = next(iter(st)) + 1
        boundary = all(
            w[p % len(w)] == lab or w[p - 1] == -lab for p in cuts
        )
        basic = all(_is_basic_or_lower(f, pc, r, lab) for pc in pieces)
        if boundary and basic:
            return "neg-edge-boundary"
    if s.kind == "EG":
        K = protection_constant(f, r)
        if all(_protection(f, w, p, r) >= K for p in cuts):
            return "eg-protected"
    return None


def _is_basic_or_lower(f: TopRep, pc: Word, r: int, lab: int) -> bool:
    if f.height(pc) < r:
        return True
    inner = pc[1:-1] if len(pc) > 1 else ()
    if any(abs(x) == lab for x in inner):
        return False
    head, tail = pc[0] == lab, pc[-1] == -lab
    return head or tail


def verify_splitting(
    f: TopRep, whole: Word, pieces: tuple[Word, ...], depth: int, *, cyclic: bool = False
) -> bool:
    """Direct check that iterating the pieces never cancels at junctures,
    recomputed from scratch at every depth."""
    from .words import circuit_key

    for k in range(1, depth + 1):
        imgs = []
        for pc in pieces:
            v = pc
            for _ in range(k):
                v = f.apply_path(v)
            imgs.append(v)
        cat: list[int] = []
        for v in imgs:
            cat.extend(v)
        if len(tighten(cat)) != sum(len(v) for v in imgs):
            return False
        if cyclic:
            if len(cat) > 1 and cat[0] == -cat[-1]:
                return False
            if circuit_key(tuple(cat)) != circuit_key(f.iterate_circuit(whole, k)):
                return False
        else:
            if tuple(cat) != f.iterate_path(whole, k):
                return False
    return True


# -- the set P_r -------------------------------------------------------------------


@dataclass(frozen=True)
class NielsenCandidate:
    """Path with one marked illegal turn in its stratum, tracked to
    eventual periodicity.  An interior endpoint is symbolic: the full-cell
    core extends into a partial cell, recorded as (edge label, (directed
    cell, occurrence index, image length)); the endpoint is the affine
    fixed point at parameter occurrence/(length-1) of that cell."""

    path: Word
    stratum: int
    turn_index: int
    preperiod: int
    period: int
    hr_edges: int
    front_partial: tuple[int, tuple[int, int, int]] | None = None
    back_partial: tuple[int, tuple[int, int, int]] | None = None

    @property
    def symbolic(self) -> bool:
        return self.front_partial is not None or self.back_partial is not None


@dataclass(frozen=True)
class PrSet:
    stratum: int
    candidates: tuple[NielsenCandidate, ...]
    complete: bool
    notes: tuple[str, ...] = ()

    @property
    def unknown(self) -> bool:
        return not self.complete


def _illegal_hr_positions(f: TopRep, w: Word, r: int) -> list[int]:
    st = f.stratum(r)
    out = []
    for p in range(1, len(w)):
        t = (-w[p - 1], w[p])
        if f.turn_in(t, st) and not f.is_legal_turn(t):
            out.append(p)
    return out


def _hr_count(f: TopRep, w: Word, r: int) -> int:
    return sum(1 for e in w if f.stratum_of(e) == r)


def _shape_ok(f: TopRep, w: Word, r: int, max_hr: int) -> tuple[bool, str]:
    if len(w) < 2:
        return False, "too short"
    if f.stratum_of(w[0]) != r or f.stratum_of(w[-1]) != r:
        return False, "end edge outside stratum"
    if len(_illegal_hr_positions(f, w, r)) != 1:
        return False, "illegal turn count"
    if _hr_count(f, w, r) > max_hr:
        return False, "stratum edge budget"
    return True, ""


def _legal_legs(
    f: TopRep, r: int, d0: int, max_hr: int, max_lower: int
) -> list[Word]:
    """r-legal paths from a fixed first direction, ending on a stratum
    edge, with bounded stratum-edge count and bounded runs through lower
    strata."""
    legs: list[Word] = []
    g = f.g
    st = f.stratum(r)

    def grow(path: list[int], hr: int, lower_run: int) -> None:
        if f.stratum_of(path[-1]) == r:
            legs.append(tuple(path))
        for e in g.star[g.term_of(path[-1])]:
            if e == -path[-1]:
                continue
            t = (-path[-1], e)
            if f.turn_in(t, st) and not f.is_legal_turn(t):
                continue
            in_hr = f.stratum_of(e) == r
            nhr = hr + (1 if in_hr else 0)
            nlow = 0 if in_hr else lower_run + 1
            if nhr > max_hr or nlow > max_lower:
                continue
            path.append(e)
            grow(path, nhr, nlow)
            path.pop()

    if f.stratum_of(d0) != r:
        return []
    grow([d0], 1, 0)
    return legs


def _canonical(w: Word) -> Word:
    return min(w, inverse(w))


def compute_Pr(
    f: TopRep,
    r: int,
    max_hr_edges: int = 6,
    max_iterates: int = 30,
    refine_depth: int = 8,
    max_lower: int = 4,
) -> PrSet:
    """Paths around one illegal stratum turn whose iterates keep exactly
    one illegal turn, keep stratum first and last edges, stay within the
    stratum-edge budget, and are eventually periodic.

    Enumerates both r-legal sides of every nondegenerate illegal turn in
    the stratum, then runs each candidate's orbit with hashing; iterates
    are recomputed words, so a detected cycle certifies the conditions at
    every depth.
    """
    from .strata import strata_of

    if strata_of(f)[r].kind != "EG":
        raise ValueError("periodic path search needs an exponential stratum")
    notes: list[str] = []
    complete = True
    st = f.stratum(r)
    turns = [
        t
        for t in f.illegal_turns()
        if f.turn_in(t, st) and t[0] != t[1]
    ]
    seen_cands: dict[Word, NielsenCandidate] = {}
    undecided: set[Word] = set()
    max_len = 64 * max(1, max_hr_edges) * (1 + max_lower) * max(
        1, max(len(x) for x in f.e_map)
    )
    cache: dict = {}  # cell images and flank tables, shared across candidates

    for d1, d2 in turns:
        legs1 = _legal_legs(f, r, d1, max_hr_edges - 1, max_lower)
        legs2 = _legal_legs(f, r, d2, max_hr_edges - 1, max_lower)
        for a in legs1:
            ha = _hr_count(f, a, r)
            for b in legs2:
                if ha + _hr_count(f, b, r) > max_hr_edges:
                    continue
                rho = tighten(inverse(a) + b)
                if len(rho) != len(a) + len(b):
                    continue  # degenerate pairing
                key = _canonical(rho)
                if key in seen_cands or key in undecided:
                    continue
                cand, status = _run_orbit(
                    f, rho, r, max_hr_edges, max_iterates, refine_depth, max_len, cache
                )
                if cand is not None:
                    seen_cands[key] = cand
                elif status == "budget":
                    undecided.add(key)
                    complete = False
                    notes.append("orbit budget exhausted")

    cands = tuple(
        sorted(seen_cands.values(), key=lambda c: (c.preperiod, len(c.path), c.path))
    )
    return PrSet(r, cands, complete, tuple(dict.fromkeys(notes)))


def _run_orbit(
    f: TopRep,
    rho: Word,
    r: int,
    max_hr: int,
    max_iter: int,
    refine_depth: int,
    max_len: int,
    cache: dict | None = None,
) -> tuple[NielsenCandidate | None, str]:
    if cache is None:
        cache = {}
    ok, _ = _shape_ok(f, rho, r, max_hr)
    if not ok:
        return None, "nonmember"
    orbit: dict[Word, int] = {rho: 0}
    cur = rho
    dead_at: int | None = None
    sym_window = min(refine_depth, _SYMBOLIC_PERIOD_CAP)
    for k in range(1, max_iter + 1):
        try:
            cur = f.iterate_path(cur, 1, max_length=max_len)
        except BudgetExceeded:
            # past the shape window only interior-endpoint certificates are
            # still in play, and those stay near core length; blowup decides
            return (None, "nonmember") if dead_at is not None else (None, "budget")
        if k <= sym_window:
            sym = _symbolic_exact(f, rho, cur, r, k, cache)
            if sym is not None:
                return sym, "member"
        if dead_at is None:
            ok, _ = _shape_ok(f, cur, r, max_hr)
            if not ok:
                dead_at = k
        if dead_at is None:
            if cur in orbit:
                start = orbit[cur]
                return (
                    NielsenCandidate(
                        path=rho,
                        stratum=r,
                        turn_index=_illegal_hr_positions(f, rho, r)[0],
                        preperiod=start,
                        period=k - start,
                        hr_edges=_hr_count(f, rho, r),
                    ),
                    "member",
                )
            orbit[cur] = k
        elif k >= min(refine_depth, dead_at + 3):
            return None, "nonmember"
    return None, "budget"


def _cell_word(f: TopRep, c: int, k: int, cache: dict) -> Word:
    key = ("img", c, k)
    if key not in cache:
        cache[key] = f.iterate_path((c,), k)
    return cache[key]


def _interior_occ(f: TopRep, c: int, k: int, cache: dict) -> tuple[int, ...]:
    """Positions p with image(c)[p] == c, strictly inside the image word."""
    key = ("occ", c, k)
    if key not in cache:
        w = _cell_word(f, c, k, cache)
        lw = len(w)
        cache[key] = tuple(p for p in range(1, lw - 1) if w[p] == c)
    return cache[key]


def _flanks(
    f: TopRep, r: int, k: int, v: int, avoid: int, side: str, cache: dict
) -> tuple:
    """Flank table for one endpoint: ((cell, position, image length), word)
    pairs, where word is the partial-cell contribution to the fixedness
    identity.  Keyed by endpoint data only, so candidates share tables."""
    key = ("fl", side, r, k, v, avoid)
    if key not in cache:
        g = f.g
        out = []
        for i in sorted(f.stratum(r)):
            for c in (i + 1, -(i + 1)):
                end = g.term_of(c) if side == "f" else g.init_of(c)
                if end != v or c == avoid:
                    continue
                w = _cell_word(f, c, k, cache)
                for p in _interior_occ(f, c, k, cache):
                    piece = w[p + 1 :] if side == "f" else w[:p]
                    out.append(((c, p, len(w)), piece))
        cache[key] = tuple(out)
    return cache[key]


def _junction_cancel(u: Word, w: Word) -> int:
    m = 0
    lim = min(len(u), len(w))
    while m < lim and u[-1 - m] == -w[m]:
        m += 1
    return m


def _reduced_concat(fw: Word, cur: Word, bw: Word) -> Word:
    """tighten(fw + cur + bw) for already-tight inputs, without building the
    raw concatenation; junctions usually cancel little or nothing."""
    x = _junction_cancel(fw, cur)
    fw2 = fw[: len(fw) - x] if x else fw
    cur2 = cur[x:] if x else cur
    y = _junction_cancel(cur2, bw)
    if y < len(cur2) or y == len(bw):
        return fw2 + cur2[: len(cur2) - y] + bw[y:]
    bw2 = bw[y:]
    z = _junction_cancel(fw2, bw2)
    return fw2[: len(fw2) - z] + bw2[z:]


def _symbolic_exact(
    f: TopRep, rho: Word, cur: Word, r: int, k: int, cache: dict
) -> NielsenCandidate | None:
    """Interior-endpoint candidate with exact certificate.

    A fixed path with interior endpoints is a full-cell core flanked by
    partial cells c (entering the core) and c' (leaving it), each with an
    orientation-preserving self-occurrence of strictly interior affine
    fixed point in its own k-th image.  Fixedness of the whole path is
    then exactly the word identity

        tighten(image(c)[p+1:] + cur + image(c')[:q]) == core

    where cur is the tightened k-th image of the core and p, q are the
    occurrence positions.  Either flank may be absent (that endpoint is
    then a fixed vertex); both absent is the plain orbit case."""
    g = f.g
    none_flank = ((None, ()),)
    fronts = none_flank + _flanks(f, r, k, g.init_of(rho[0]), -rho[0], "f", cache)
    backs = none_flank + _flanks(f, r, k, g.term_of(rho[-1]), -rho[-1], "b", cache)
    R = len(rho)
    C = len(cur)
    for fr, fw in fronts:
        F = len(fw)
        for bk, bw in backs:
            if fr is None and bk is None:
                continue
            B = len(bw)
            if (F + C + B - R) % 2 or F + C + B < R:
                continue
            if _reduced_concat(fw, cur, bw) != rho:
                continue
            return NielsenCandidate(
                path=rho,
                stratum=r,
                turn_index=_illegal_hr_positions(f, rho, r)[0],
                preperiod=0,
                period=k,
                hr_edges=_hr_count(f, rho, r),
                front_partial=(abs(fr[0]), fr) if fr else None,
                back_partial=(abs(bk[0]), bk) if bk else None,
            )
    return None


def indivisible_nielsen_paths(f: TopRep, r: int, pr: PrSet | None = None, **budgets):
    """The periodic-orbit members of the candidate set, with periods and a
    period-one flag."""
    if pr is None:
        pr = compute_Pr(f, r, **budgets)
    out = []
    for c in pr.candidates:
        if c.preperiod == 0 and c.period >= 1:
            out.append(c)
    return tuple(out), pr


# -- exceptional paths -------------------------------------------------------------


@dataclass(frozen=True)
class ExceptionalMatch:
    top_edge: int  # positive label of the leading edge
    count: int  # exponent k of the middle power
    tail_edge: int  # positive label of the trailing edge
    axis: Word  # the closed invariant path the middle is a power of
    mirrored: bool  # middle uses the reversed axis
    via_inverse: bool  # matched against the reversed input


def _neg_suffix(f: TopRep, lab: int) -> Word | None:
    """For a single-edge stratum of the form edge * suffix, the suffix."""
    from .strata import strata_of

    r = f.stratum_of(lab)
    s = strata_of(f)[r]
    if s.kind != "NEG" or len(s.edges) != 1:
        return None
    w = f.e_map[lab - 1]
    if not w or w[0] != lab:
        return None
    u = w[1:]
    if f.height(u) >= r:
        return None
    return u


def _axis_of(f: TopRep, lab: int, split_depth: int = 6) -> tuple[Word, int] | None:
    """Primitive invariant closed path whose power is the edge's suffix,
    when the suffix is a genuinely unsplittable invariant loop."""
    u = _neg_suffix(f, lab)
    if not u:
        return None
    a, b = f.g.path_ends(u)
    if a != b:
        return None
    tau, l = primitive_root(u)
    if f.apply_path(tau) != tau:
        return None
    if len(tau) > 1 and split_path(f, tau, split_depth).is_split:
        return None
    return tau, l


def is_exceptional(f: TopRep, w: Word, split_depth: int = 6) -> ExceptionalMatch | None:
    """Matches leading-edge . axis-power . reversed-trailing-edge, where
    both edges are single-edge strata whose suffixes are positive powers of
    the same invariant axis."""
    for via_inverse, v in ((False, w), (True, inverse(w))):
        if len(v) < 2 or v[0] < 0 or v[-1] > 0:
            continue
        i_lab, j_lab = v[0], -v[-1]
        got = _axis_of(f, i_lab, split_depth)
        if got is None:
            continue
        tau, _ = got
        uj = _neg_suffix(f, j_lab)
        if uj is None:
            continue
        pr_j = primitive_root(uj) if uj else None
        if not uj or pr_j is None or pr_j[0] != tau:
            continue
        if f.stratum_of(j_lab) > f.stratum_of(i_lab):
            continue
        mid = v[1:-1]
        for mirrored, axis in ((False, tau), (True, inverse(tau))):
            if not mid:
                return ExceptionalMatch(i_lab, 0, j_lab, tau, False, via_inverse)
            if len(mid) % len(axis) == 0:
                k = len(mid) // len(axis)
                if mid == power(axis, k):
                    return ExceptionalMatch(i_lab, k, j_lab, tau, mirrored, via_inverse)
    return None


# -- polynomial normal form ----------------------------------------------------------


@dataclass(frozen=True)
class NormalFormSplitting:
    settle_time: int  # least iterate count achieving the form
    word: Word  # the iterate that splits
    splitting: Splitting
    piece_tags: tuple[str, ...]  # "edge" | "exceptional"


def _boundary_tables(f: TopRep, depth: int):
    """first/last letters of f^k(e) for every directed edge, k = 0..depth."""
    key = ("upg-bound", depth)
    if key not in f._cache:
        first: dict[int, tuple[int, ...]] = {}
        last: dict[int, tuple[int, ...]] = {}
        for e in range(1, f.g.ne + 1):
            ws = [(e,)]
            for _ in range(depth):
                ws.append(f.apply_path(ws[-1]))
            first[e] = tuple(v[0] for v in ws)
            last[e] = tuple(v[-1] for v in ws)
            first[-e] = tuple(-x for x in last[e])
            last[-e] = tuple(-x for x in first[e])
        f._cache[key] = (first, last)
    return f._cache[key]


def _exceptional_memo(f: TopRep, span: Word, split_depth: int) -> bool:
    key = ("exc", span)
    if key not in f._cache:
        f._cache[key] = is_exceptional(f, span, split_depth) is not None
    return f._cache[key]


def _exceptional_spans(f: TopRep, w: Word, split_depth: int) -> list[tuple[int, int]]:
    """Candidate (i, j) with w[i:j] an exceptional path.  Shape scan first:
    a positive leading letter whose edge owns an axis (or the mirror image
    of that), a run of the axis either way, a negative trailing letter."""
    axes: dict[int, Word] = {}
    for lab in range(1, f.g.ne + 1):
        akey = ("axis", lab)
        if akey not in f._cache:
            f._cache[akey] = _axis_of(f, lab, split_depth)
        got = f._cache[akey]
        if got is not None:
            axes[lab] = got[0]
    if not axes:
        return []
    out = []
    n = len(w)
    for i in range(n - 1):
        if w[i] <= 0 or w[i] not in axes:
            continue
        tau = axes[w[i]]
        p = len(tau)
        for pat in (tau, inverse(tau)):
            run = 0
            while True:
                a = i + 1 + run * p
                if a + p <= n and w[a : a + p] == pat:
                    run += 1
                else:
                    break
            for m in range(run + 1):
                j = i + 1 + m * p + 1
                if j <= n and w[j - 1] < 0 and _exceptional_memo(f, w[i:j], split_depth):
                    out.append((i, j))
    # mirror orientation: trailing reversed edge owns the axis
    for j in range(2, n + 1):
        if w[j - 1] >= 0 or -w[j - 1] not in axes:
            continue
        tau = axes[-w[j - 1]]
        p = len(tau)
        for pat in (tau, inverse(tau)):
            run = 0
            while True:
                a = j - 1 - (run + 1) * p
                if a >= 0 and w[a : a + p] == pat:
                    run += 1
                else:
                    break
            for m in range(run + 1):
                i = j - 1 - m * p - 1
                if i >= 0 and w[i] > 0 and _exceptional_memo(f, w[i:j], split_depth):
                    out.append((i, j))
    return sorted(set(out))


def _edge_exceptional_decomposition(
    f: TopRep, w: Word, depth: int, split_depth: int
) -> tuple[tuple[Word, ...], tuple[str, ...]] | None:
    """Decomposition of w into single edges and exceptional paths whose
    piece images concatenate with zero juncture cancellation for every
    k <= depth.  Piece images are tight, so tight concatenation is exactly
    a boundary-letter condition per juncture per k; exceptional pieces are
    f_#-fixed, so their boundary letters are constant in k."""
    first, last = _boundary_tables(f, depth)
    n = len(w)
    const = lambda x: (x,) * (depth + 1)
    options: list[list[tuple[int, str, tuple, tuple]]] = [[] for _ in range(n)]
    for i in range(n):
        options[i].append((i + 1, "edge", first[w[i]], last[w[i]]))
    for i, j in _exceptional_spans(f, w, split_depth):
        options[i].append((j, "exceptional", const(w[i]), const(w[j - 1])))

    def joins(prev_last: tuple, nxt_first: tuple) -> bool:
        return all(prev_last[k] != -nxt_first[k] for k in range(depth + 1))

    # DP over (position, last-letter vector of the piece just ended)
    start = object()
    layers: list[dict] = [dict() for _ in range(n + 1)]
    layers[0][start] = None
    for i in range(n):
        if not layers[i]:
            continue
        for j, kind, fv, lv in options[i]:
            for pv in layers[i]:
                if pv is not start and not joins(pv, fv):
                    continue
                if lv not in layers[j]:
                    layers[j][lv] = (i, pv, kind)
                break  # any one feasible predecessor suffices
            else:
                continue
    if not layers[n]:
        return None
    lv = next(iter(layers[n]))
    pieces: list[Word] = []
    tags: list[str] = []
    pos = n
    while pos > 0:
        i, pv, kind = layers[pos][lv]
        pieces.append(w[i:pos])
        tags.append(kind)
        pos, lv = i, pv
    return tuple(reversed(pieces)), tuple(reversed(tags))


def upg_split(
    f: TopRep, w: Word, max_settle: int | None = None, verify_depth: int = 10
) -> NormalFormSplitting | None:
    """Least iterate decomposing into single edges and exceptional paths,
    junctures verified cancellation-free to verify_depth.  None when the
    budget runs out (which would contradict the linear settle-time
    prediction and is worth reporting)."""
    if not w or not is_tight(w):
        raise ValueError("need a tight nontrivial path")
    cap = max_settle if max_settle is not None else 10 * len(w)
    cur = w
    for m in range(cap + 1):
        got = _edge_exceptional_decomposition(f, cur, verify_depth, min(verify_depth, 6))
        if got is not None:
            pieces, tags = got
            cuts = []
            acc = 0
            for pc in pieces[:-1]:
                acc += len(pc)
                cuts.append(acc)
            sp = Splitting(
                pieces, tuple(cuts), False, verify_depth, "edges and exceptional paths"
            )
            return NormalFormSplitting(m, cur, sp, tags)
        cur = f.apply_path(cur)
    return None
