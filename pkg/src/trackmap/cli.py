"""Command line front end.

An outer automorphism arrives as text, from a file argument or stdin:

    gens: a b
    a -> b
    b -> a b

Generator names are lowercase identifiers.  Inside image words a name is
inverted with an apostrophe (``b'``) or, when every name is a single
letter, with the uppercase form (``B``); single-letter names may also be
concatenated without spaces (``ab`` = ``a b``).  ``#`` starts a comment.

Every subcommand prints one self-describing JSON document (pretty by
default, one line under ``--json``) whose ``certificates`` member holds
replayable witnesses.  Exit codes: 0 success, 2 a budget ran out and some
fields say "unknown", 1 bad input or internal failure.
"""

from __future__ import annotations

import json
import math
import random
import re
import sys
from dataclasses import dataclass

import click

from .budget import Budget, BudgetExceeded, Unsupported
from .graphs import MarkedGraph
from .growth import abelianize, classify_growth, pg_basis
from .lamination import (
    build_Z,
    classify_trichotomy,
    free_rank2_certificate,
    lamination_of,
    tile,
    tile_matrix_check,
)
from .mapping import TopRep
from .moves import factor_into_folds
from .nielsen import compute_Pr
from .strata import frequency_vector, from_rose_automorphism, is_aperiodic, strata_of
from .traintrack import find_rtt, improve_rtt
from .words import Word, cyclic_tighten, format_word, tighten

# -- input grammar ---------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


class NotAnAutomorphism(ValueError):
    def __init__(self, msg: str, witness):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class AutoSpec:
    names: tuple[str, ...]
    images: tuple[Word, ...]

    @property
    def rank(self) -> int:
        return len(self.names)


_NAME = re.compile(r"[a-z][a-z0-9_]*")


def _tokens(s: str):
    """(token, 1-based column) pairs of a whitespace-split line."""
    i = 0
    while i < len(s):
        if s[i].isspace():
            i += 1
            continue
        j = i
        while j < len(s) and not s[j].isspace():
            j += 1
        yield s[i:j], i + 1
        i = j


def _parse_image(body: str, ln: int, col0: int, names: tuple[str, ...]) -> Word:
    index = {n: k + 1 for k, n in enumerate(names)}
    compact = all(len(n) == 1 for n in names)
    out: list[int] = []
    for tok, col in _tokens(body):
        col += col0
        if tok == "1" and not out:
            continue
        inv = tok.endswith("'")
        stem = tok[:-1] if inv else tok
        if stem in index:
            out.append(-index[stem] if inv else index[stem])
            continue
        if not compact:
            raise ParseError(f"unknown generator {tok!r}", ln, col)
        # single-letter corpus: read the token character by character
        k = 0
        while k < len(tok):
            ch = tok[k]
            neg = False
            if ch.isupper():
                ch = ch.lower()
                neg = True
            if ch not in index:
                raise ParseError(f"unknown generator {ch!r}", ln, col + k)
            k += 1
            if k < len(tok) and tok[k] == "'":
                neg = not neg
                k += 1
            out.append(-index[ch] if neg else index[ch])
    return tuple(out)


def parse_automorphism(text: str) -> AutoSpec:
    """Parse and validate the ``gens:`` / ``x -> word`` grammar.

    Raises ParseError (with line and column) on bad syntax and
    NotAnAutomorphism (with a witness) when the images do not define an
    automorphism of the free group on the declared generators.
    """
    names: list[str] = []
    images: dict[str, Word] = {}
    saw_gens = False
    last_ln = 1
    for ln, raw in enumerate(text.splitlines(), 1):
        last_ln = ln
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if not saw_gens:
            stripped = line.lstrip()
            indent = len(line) - len(stripped)
            if not stripped.startswith("gens:"):
                raise ParseError("expected a 'gens:' line first", ln, indent + 1)
            body = stripped[len("gens:"):]
            for tok, col in _tokens(body):
                col += indent + len("gens:")
                if not _NAME.fullmatch(tok):
                    raise ParseError(f"bad generator name {tok!r}", ln, col)
                if tok in names:
                    raise ParseError(f"duplicate generator {tok!r}", ln, col)
                names.append(tok)
            if not names:
                raise ParseError("no generators declared", ln, indent + 1)
            saw_gens = True
            continue
        if "->" not in line:
            raise ParseError("expected 'name -> word'", ln, 1)
        lhs, rhs = line.split("->", 1)
        name = lhs.strip()
        col = line.index(name) + 1 if name else 1
        if not name:
            raise ParseError("missing generator before '->'", ln, 1)
        if name not in names:
            raise ParseError(f"undeclared generator {name!r}", ln, col)
        if name in images:
            raise ParseError(f"second image for {name!r}", ln, col)
        images[name] = _parse_image(rhs, ln, line.index("->") + 2, tuple(names))
    if not saw_gens:
        raise ParseError("empty input", last_ln, 1)
    for n in names:
        if n not in images:
            raise ParseError(f"missing image for {n!r}", last_ln, 1)

    imgs = tuple(tighten(images[n]) for n in names)
    for n, w in zip(names, imgs):
        if not w:
            raise NotAnAutomorphism(
                f"image of {n!r} reduces to the trivial word", {"generator": n}
            )
    try:
        abelianize(imgs)
    except ValueError as e:
        raise NotAnAutomorphism(str(e), {"images": [format_word(w) for w in imgs]})
    from .factors import invert_automorphism

    try:
        invert_automorphism(imgs)
    except ValueError as e:
        raise NotAnAutomorphism(
            f"images do not generate the free group: {e}",
            {"images": [format_word(w) for w in imgs]},
        )
    return AutoSpec(tuple(names), imgs)


# -- serialization ---------------------------------------------------------------


def _plain(x):
    """JSON-safe copy: tuples and frozensets become lists, dataclasses stay
    whatever the caller already flattened them to."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_plain(v) for v in x)
    return x


def _w(word: Word | None) -> str | None:
    return None if word is None else format_word(word)


def _edge_name(i: int) -> str:
    return format_word((i + 1,))


def _strata_section(f: TopRep) -> list[dict]:
    out = []
    for s in strata_of(f):
        d = {
            "index": s.index,
            "edges": [_edge_name(e) for e in sorted(s.edges)],
            "kind": s.kind,
        }
        if s.kind == "EG":
            d["lambda"] = s.lam
            d["aperiodic"] = is_aperiodic(s.matrix)
        out.append(d)
    return out


def _rep_section(f: TopRep) -> dict:
    return {
        "graph": f.g.to_json(),
        "vertex_images": list(f.v_map),
        "edge_images": [_w(w) for w in f.e_map],
        "strata": _strata_section(f),
    }


def _dot(g: MarkedGraph, highlight=frozenset()) -> str:
    lines = ["digraph marked {"]
    for v in range(g.nv):
        shape = "doublecircle" if v == g.base else "circle"
        lines.append(f'  v{v} [shape={shape}, label="{v}"];')
    for i, (u, w) in enumerate(g.ends):
        extra = ", color=red, penwidth=2.0" if i in highlight else ""
        lines.append(f'  v{u} -> v{w} [label="{_edge_name(i)}"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _emit(doc: dict, compact: bool, dot_path: str | None, dot_text: str | None) -> None:
    if dot_path and dot_text is not None:
        with open(dot_path, "w") as fh:
            fh.write(dot_text)
    if compact:
        click.echo(json.dumps(_plain(doc), sort_keys=True))
    else:
        click.echo(json.dumps(_plain(doc), indent=2, sort_keys=True))


def _finish(doc: dict, compact: bool, dot_path=None, dot_text=None) -> None:
    partial = doc.get("status") == "partial"
    _emit(doc, compact, dot_path, dot_text)
    sys.exit(2 if partial else 0)


# -- shared pipeline pieces -------------------------------------------------------


def _budget(budget: int | None, max_length: int | None) -> Budget:
    kw = {}
    if budget is not None:
        kw["max_iterates"] = budget
    if max_length is not None:
        kw["max_length"] = max_length
    return Budget(**kw)


def _search(spec: AutoSpec, bud: Budget):
    got = find_rtt(spec.images, budget=bud)
    sec = {
        "ok": got.ok,
        "moves": len(got.log),
        "diagnostics": list(got.diagnostics),
        "issues": [
            {"stratum": i.stratum, "condition": i.condition, "witness": _plain(i.witness)}
            for i in got.report.issues
        ],
    }
    return got, sec


def _top_eg(f: TopRep) -> int | None:
    r = None
    for s in strata_of(f):
        if s.kind == "EG" and is_aperiodic(s.matrix):
            r = s.index
    return r


def _pr_section(f: TopRep, r: int) -> dict:
    pr = compute_Pr(f, r)
    return {
        "stratum": r,
        "complete": pr.complete,
        "notes": list(pr.notes),
        "paths": [
            {
                "word": _w(c.path),
                "preperiod": c.preperiod,
                "period": c.period,
                "stratum_edges": c.hr_edges,
                "symbolic_endpoints": c.symbolic,
            }
            for c in pr.candidates
        ],
    }


def _growth_section(f: TopRep, spec: AutoSpec) -> dict:
    rep = classify_growth(f)
    sec = {
        "pg": rep.pg,
        "upg": rep.upg,
        "lambda": rep.lambda_max,
        "abelian_matrix": _plain(rep.abelian.mat),
        "abelian_det": rep.abelian.det(),
        "mod3_trivial": rep.mod3_trivial,
        "homology_agrees": rep.mod3_agrees,
    }
    if rep.upg:
        try:
            basis = pg_basis(f)
            sec["pg_basis"] = {
                "circuits": [_w(c) for c in basis.circuits],
                "diagonals": list(basis.diagonals),
                "unit_diagonal": basis.upg,
            }
        except (ValueError, AssertionError) as e:
            sec["pg_basis"] = {"error": str(e)}
    return sec


def _lamination_section(f: TopRep, k: int = 3) -> tuple[list[dict], dict | None, bool]:
    """Per-aperiodic-EG-stratum tiling data, Z data for the topmost one,
    and a flag for budget trouble."""
    out = []
    partial = False
    zsec = None
    for s in strata_of(f):
        if s.kind != "EG" or not is_aperiodic(s.matrix):
            continue
        freqs = frequency_vector(f, s.index)
        out.append(
            {
                "stratum": s.index,
                "lambda": s.lam,
                "tiles": {
                    _edge_name(e): _w(tile(f, e + 1, k).path) for e in sorted(s.edges)
                },
                "tile_depth": k,
                "frequencies": {_edge_name(e): v for e, v in sorted(freqs.items())},
                "tile_matrix_check": tile_matrix_check(f, s.index, max(k, 6)),
            }
        )
    r = _top_eg(f)
    if r is not None:
        z = build_Z(f)
        partial = partial or z.provisional
        zsec = {
            "stratum": z.stratum,
            "edges": [_edge_name(e) for e in sorted(z.edges)],
            "rho_hat": _w(z.rho_hat),
            "provisional": z.provisional,
            "closure_ok": z.closure_ok,
            "notes": list(z.notes),
        }
    return out, zsec, partial


def _improve(search, bud: Budget, max_iterate: int):
    imp = improve_rtt(search.rep, budget=bud, max_iterate=max_iterate)
    sec = {
        "ok": imp.ok,
        "exponent": imp.exponent,
        "clauses": {k: v.status for k, v in imp.checklist.clauses.items()},
        "diagnostics": list(imp.diagnostics),
    }
    return imp, sec


def _read_spec(source) -> AutoSpec:
    text = source.read()
    try:
        return parse_automorphism(text)
    except ParseError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    except NotAnAutomorphism as e:
        click.echo(f"error: not an automorphism: {e}", err=True)
        click.echo(f"witness: {json.dumps(_plain(e.witness))}", err=True)
        sys.exit(1)


def _common(fn):
    for opt in reversed(
        [
            click.argument("source", type=click.File("r"), default="-"),
            click.option("--budget", type=int, default=None, help="global iterate cap"),
            click.option("--max-length", type=int, default=None, help="word length budget"),
            click.option("--max-iterate", type=int, default=12, help="improvement power cap"),
            click.option("--json", "compact", is_flag=True, help="one-line JSON output"),
            click.option("--dot", "dot_path", type=click.Path(dir_okay=False), default=None),
            click.option("--seed", type=int, default=None, help="seed for randomized checks"),
        ]
    ):
        fn = opt(fn)
    return fn


def _seed(seed: int | None) -> None:
    if seed is not None:
        random.seed(seed)


# -- commands --------------------------------------------------------------------


@click.group()
@click.version_option(package_name="trackmap", prog_name="trackmap")
def main() -> None:
    """Train track computations for outer automorphisms of free groups."""


@main.command()
@_common
def analyze(source, budget, max_length, max_iterate, compact, dot_path, seed) -> None:
    """Full pipeline: train track, improvement, strata, Nielsen paths,
    growth class, laminations and the non-attracted subgraph."""
    _seed(seed)
    spec = _read_spec(source)
    bud = _budget(budget, max_length)
    doc: dict = {
        "command": "analyze",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
    }
    search, rtt_sec = _search(spec, bud)
    doc["rtt"] = rtt_sec
    partial = not search.ok
    certs: dict = {"search_moves": list(search.log)}
    if search.ok:
        # growth class and stretch factor describe the input automorphism,
        # so they read off the exponent-1 representative
        doc["growth"] = _growth_section(search.rep, spec)
        doc["lambda"] = max(
            (s.lam for s in strata_of(search.rep) if s.kind == "EG"), default=1.0
        )
        imp, imp_sec = _improve(search, bud, max_iterate)
        f = imp.rep
        doc["improved"] = imp_sec
        certs["improve_moves"] = list(imp.log)
        doc["representative"] = _rep_section(f) | {"power": imp.exponent}
        r = _top_eg(f)
        if r is not None:
            doc["nielsen"] = _pr_section(f, r) | {"power": imp.exponent}
            partial = partial or not doc["nielsen"]["complete"]
        else:
            doc["nielsen"] = {"stratum": None, "paths": [], "complete": True, "notes": []}
        lams, zsec, lam_partial = _lamination_section(f)
        doc["laminations"] = [d | {"power": imp.exponent} for d in lams]
        doc["z"] = (zsec | {"power": imp.exponent}) if zsec is not None else None
        partial = partial or lam_partial
        dot_text = _dot(f.g, f.stratum(r) if r is not None else frozenset())
    else:
        for key in ("improved", "representative", "growth", "nielsen", "laminations", "z", "lambda"):
            doc[key] = "unknown"
        dot_text = _dot(search.rep.g)
    doc["certificates"] = certs
    doc["status"] = "partial" if partial else "ok"
    _finish(doc, compact, dot_path, dot_text)


@main.command()
@_common
def rtt(source, budget, max_length, max_iterate, compact, dot_path, seed) -> None:
    """Find a relative train track representative and report its strata."""
    _seed(seed)
    spec = _read_spec(source)
    search, sec = _search(spec, _budget(budget, max_length))
    f = search.rep
    doc = {
        "command": "rtt",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
        "rtt": sec,
        "representative": _rep_section(f) if search.ok else "unknown",
        "certificates": {"search_moves": list(search.log)},
        "status": "ok" if search.ok else "partial",
    }
    top = _top_eg(f) if search.ok else None
    if search.ok:
        doc["lambda"] = max(
            (s.lam for s in strata_of(f) if s.kind == "EG"), default=1.0
        )
    else:
        doc["lambda"] = "unknown"
    _finish(doc, compact, dot_path, _dot(f.g, f.stratum(top) if top is not None else frozenset()))


@main.command()
@_common
@click.option("--stratum", type=int, default=None, help="stratum index (default: topmost EG)")
def nielsen(source, budget, max_length, max_iterate, compact, dot_path, seed, stratum) -> None:
    """Indivisible Nielsen path candidates for one exponential stratum."""
    _seed(seed)
    spec = _read_spec(source)
    search, rtt_sec = _search(spec, _budget(budget, max_length))
    doc = {
        "command": "nielsen",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
        "rtt": rtt_sec,
    }
    if not search.ok:
        doc.update(nielsen="unknown", status="partial", certificates={})
        _finish(doc, compact, dot_path, None)
    f = search.rep
    r = stratum if stratum is not None else _top_eg(f)
    if r is None:
        click.echo("error: no exponential stratum to search", err=True)
        sys.exit(1)
    sec = _pr_section(f, r)
    doc["nielsen"] = sec
    doc["certificates"] = {"search_moves": list(search.log)}
    doc["status"] = "ok" if sec["complete"] else "partial"
    _finish(doc, compact, dot_path, _dot(f.g, f.stratum(r)))


@main.command()
@_common
@click.option("--stratum", type=int, default=None, help="stratum index (default: topmost EG)")
@click.option("-k", "--depth", type=int, default=4, help="tile depth")
def tiles(source, budget, max_length, max_iterate, compact, dot_path, seed, stratum, depth) -> None:
    """Lamination tiles, frequencies and the tiling consistency check."""
    _seed(seed)
    spec = _read_spec(source)
    search, rtt_sec = _search(spec, _budget(budget, max_length))
    doc = {
        "command": "tiles",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
        "rtt": rtt_sec,
    }
    if not search.ok:
        doc.update(tiles="unknown", status="partial", certificates={})
        _finish(doc, compact, dot_path, None)
    f = search.rep
    r = stratum if stratum is not None else _top_eg(f)
    if r is None:
        click.echo("error: no exponential stratum, no tiles", err=True)
        sys.exit(1)
    lamination_of(f, r)  # validates the stratum carries one
    hr = f.stratum(r)
    freqs = frequency_vector(f, r)
    doc["tiles"] = {
        "stratum": r,
        "depth": depth,
        "per_edge": {_edge_name(e): _w(tile(f, e + 1, depth).path) for e in sorted(hr)},
        "frequencies": {_edge_name(e): v for e, v in sorted(freqs.items())},
        "tile_matrix_check": tile_matrix_check(f, r, max(depth, 6)),
    }
    doc["certificates"] = {"search_moves": list(search.log)}
    doc["status"] = "ok"
    _finish(doc, compact, dot_path, _dot(f.g, hr))


@main.command()
@_common
@click.option("--circuit", required=True, help="circuit in the declared generators")
def attract(source, budget, max_length, max_iterate, compact, dot_path, seed, circuit) -> None:
    """Weak attraction trichotomy for one conjugacy class."""
    _seed(seed)
    spec = _read_spec(source)
    try:
        gen_word = _parse_image(circuit, 1, 0, spec.names)
    except ParseError as e:
        click.echo(f"error: bad --circuit: {e}", err=True)
        sys.exit(1)
    search, rtt_sec = _search(spec, _budget(budget, max_length))
    doc = {
        "command": "attract",
        "input": {
            "gens": list(spec.names),
            "images": [_w(w) for w in spec.images],
            "circuit": format_word(gen_word),
        },
        "rtt": rtt_sec,
    }
    if not search.ok:
        doc.update(verdict="unknown", status="partial", certificates={})
        _finish(doc, compact, dot_path, None)
    f = search.rep
    gamma = cyclic_tighten(f.g.realize(gen_word))
    z = build_Z(f)
    iterates = budget if budget is not None else 20
    try:
        v = classify_trichotomy(f, gamma, z, budget_iterates=iterates)
    except Unsupported as e:
        doc.update(verdict="unknown", reason=str(e), status="partial", certificates={})
        _finish(doc, compact, dot_path, None)
    doc["verdict"] = {
        "kind": v.kind,
        "witness_iterate": v.witness_k,
        "decomposition": _plain(
            [
                [p[0], _w(p[1]) if p[0] == "path" else p[1]]
                for p in (v.decomposition or ())
            ]
        )
        if v.decomposition is not None
        else None,
        "reason": list(v.reason or ()),
    }
    doc["z"] = {
        "edges": [_edge_name(e) for e in sorted(z.edges)],
        "rho_hat": _w(z.rho_hat),
        "provisional": z.provisional,
        "closure_ok": z.closure_ok,
    }
    doc["certificates"] = {"search_moves": list(search.log), "realized_circuit": _w(gamma)}
    doc["status"] = "partial" if v.kind == "unknown" else "ok"
    _finish(doc, compact, dot_path, None)


@main.command()
@_common
@click.option("--psi", "psi_path", type=click.File("r"), required=True,
              help="second automorphism (the candidate ping-pong partner)")
def pingpong(source, budget, max_length, max_iterate, compact, dot_path, seed, psi_path) -> None:
    """Search for a two-generator free-group certificate for <o, psi>."""
    _seed(seed)
    spec = _read_spec(source)
    psi = _read_spec(psi_path)
    if psi.rank != spec.rank:
        click.echo("error: the two automorphisms act on different ranks", err=True)
        sys.exit(1)
    cert = free_rank2_certificate(spec.images, psi.images)
    doc = {
        "command": "pingpong",
        "input": {
            "gens": list(spec.names),
            "images": [_w(w) for w in spec.images],
            "psi_images": [_w(w) for w in psi.images],
        },
    }
    if cert is None:
        doc["certificate"] = "unknown"
        doc["status"] = "partial"
        _finish(doc, compact, dot_path, None)
    doc["certificate"] = {
        "plus_stratum": cert.plus_stratum,
        "minus_stratum": cert.minus_stratum,
        "probe_plus": format_word(cert.probe_plus),
        "probe_minus": format_word(cert.probe_minus),
        "legs": [
            {
                "image_class": format_word(leg.image_class),
                "to_plus_iterate": leg.to_plus_k,
                "to_minus_iterate": leg.to_minus_k,
            }
            for leg in cert.legs
        ],
    }
    doc["status"] = "ok"
    _finish(doc, compact, dot_path, None)


@main.command()
@_common
def growth(source, budget, max_length, max_iterate, compact, dot_path, seed) -> None:
    """Polynomial / exponential growth classification."""
    _seed(seed)
    spec = _read_spec(source)
    search, rtt_sec = _search(spec, _budget(budget, max_length))
    doc = {
        "command": "growth",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
        "rtt": rtt_sec,
    }
    if not search.ok:
        ab = abelianize(spec.images)
        doc["growth"] = {
            "pg": "unknown",
            "upg": "unknown",
            "lambda": "unknown",
            "abelian_matrix": _plain(ab.mat),
            "abelian_det": ab.det(),
        }
        doc["status"] = "partial"
        doc["certificates"] = {}
        _finish(doc, compact, dot_path, None)
    doc["growth"] = _growth_section(search.rep, spec)
    doc["certificates"] = {"search_moves": list(search.log)}
    doc["status"] = "ok"
    _finish(doc, compact, dot_path, _dot(search.rep.g))


@main.command()
@_common
def factor(source, budget, max_length, max_iterate, compact, dot_path, seed) -> None:
    """Stallings fold factorization of the rose representative."""
    _seed(seed)
    spec = _read_spec(source)
    h = from_rose_automorphism(spec.images).as_graph_map()
    fac = factor_into_folds(h)
    vm, em = fac.recompose()
    ok = vm == tuple(h.v_map) and all(
        tighten(a) == tighten(b) for a, b in zip(em, h.e_map)
    )
    doc = {
        "command": "factor",
        "input": {"gens": list(spec.names), "images": [_w(w) for w in spec.images]},
        "factorization": {
            "folds": fac.n_folds,
            "steps": [
                {"kind": st.kind, "data": _plain(st.data)} for st in fac.steps
            ],
            "finish_injective_on_edges": fac.final_injective,
            "recomposes_exactly": ok,
        },
        "certificates": {
            "steps": [
                {
                    "kind": st.kind,
                    "data": _plain(st.data),
                    "vertex_map": list(st.v_map),
                    "edge_map": [_w(w) for w in st.e_map],
                }
                for st in fac.steps
            ]
        },
        "status": "ok" if ok else "partial",
    }
    _finish(doc, compact, dot_path, None)


if __name__ == "__main__":
    main()
