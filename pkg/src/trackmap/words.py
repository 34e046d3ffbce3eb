"""Words over signed labels.

A directed label is a nonzero int: ``+k`` is the k-th letter (1-based) with
its given orientation, ``-k`` the same letter reversed.  A word is a tuple of
directed labels.  The same machinery serves words in the standard free group
basis and edge paths in a graph; everything graph-aware lives in graphs.py.

Text forms: single letters ``a``..``z`` (inverses ``A``..``Z``) for ranks up
to 26, or whitespace-separated tokens ``x3`` / ``x3'`` beyond that.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Word = tuple[int, ...]

EMPTY: Word = ()


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def tighten(w: Iterable[int]) -> Word:
    """Free reduction: cancel adjacent inverse pairs until none remain."""
    out: list[int] = []
    for x in w:
        if x == 0:
            raise ValueError("zero is not a directed label")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_tight(w: Sequence[int]) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def cyclic_tighten(w: Sequence[int]) -> Word:
    """Reduce, then cancel matching first/last letters until cyclically tight."""
    v = list(tighten(w))
    while len(v) > 1 and v[0] == -v[-1]:
        v = v[1:-1]
    return tuple(v)


def split_conjugate(w: Sequence[int]) -> tuple[Word, Word]:
    """Write tighten(w) as c . core . c^-1 with core cyclically tight."""
    v = tighten(w)
    i, j = 0, len(v)
    while j - i > 1 and v[i] == -v[j - 1]:
        i += 1
        j -= 1
    return v[:i], v[i:j]


def min_rotation(w: Sequence[int]) -> Word:
    """Lexicographically least rotation (ints compared by value)."""
    w = tuple(w)
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def circuit_key(w: Sequence[int]) -> Word:
    """Canonical form of the circuit carrying w: least rotation of the
    cyclic reduction.  Equal keys == freely conjugate words."""
    return min_rotation(cyclic_tighten(w))


def primitive_root(w: Sequence[int]) -> tuple[Word, int]:
    """Letter-exact primitive root: least tau with w == tau^k; returns (tau, k).

    Only meaningful for cyclically tight w (letter repetition equals group
    power there); for the empty word returns ((), 0).
    """
    w = tuple(w)
    n = len(w)
    if n == 0:
        return EMPTY, 0
    for d in range(1, n + 1):
        if n % d == 0 and w == w[:d] * (n // d):
            return w[:d], n // d
    raise AssertionError("unreachable")


def power(w: Sequence[int], k: int) -> Word:
    w = tuple(w)
    if k < 0:
        return inverse(w) * (-k)
    return w * k


def cancellation(u: Sequence[int], v: Sequence[int]) -> int:
    """Number of letters cancelled at the juncture of tighten-concat u.v
    (both inputs assumed tight)."""
    c = 0
    i, j = len(u) - 1, 0
    while i >= 0 and j < len(v) and u[i] == -v[j]:
        c += 1
        i -= 1
        j += 1
    return c


def common_prefix_len(u: Sequence[int], v: Sequence[int]) -> int:
    c = 0
    for x, y in zip(u, v):
        if x != y:
            break
        c += 1
    return c


# ---------------------------------------------------------------------------
# text form

_ORD_A, _ORD_LA = ord("A"), ord("a")


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse a word.  Empty/whitespace/"1" -> the trivial word."""
    text = text.strip()
    if text in ("", "1"):
        return EMPTY
    out: list[int] = []
    if any(ch.isdigit() for ch in text):
        for tok in text.replace(",", " ").split():
            neg = tok.endswith("'")
            if neg:
                tok = tok[:-1]
            if not tok.startswith("x") or not tok[1:].isdigit():
                raise ValueError(f"bad token {tok!r}")
            k = int(tok[1:])
            if k < 1:
                raise ValueError(f"bad index in {tok!r}")
            out.append(-k if neg else k)
    else:
        for ch in text:
            if ch.isspace():
                continue
            if "a" <= ch <= "z":
                out.append(ch.encode()[0] - _ORD_LA + 1)
            elif "A" <= ch <= "Z":
                out.append(-(ch.encode()[0] - _ORD_A + 1))
            else:
                raise ValueError(f"bad letter {ch!r}")
    if rank is not None:
        for x in out:
            if abs(x) > rank:
                raise ValueError(f"letter {format_word((x,))} outside rank {rank}")
    return tuple(out)


def format_word(w: Sequence[int]) -> str:
    if not w:
        return "1"
    if max(abs(x) for x in w) <= 26:
        return "".join(
            chr(_ORD_LA + x - 1) if x > 0 else chr(_ORD_A - x - 1) for x in w
        )
    return " ".join(f"x{x}" if x > 0 else f"x{-x}'" for x in w)
