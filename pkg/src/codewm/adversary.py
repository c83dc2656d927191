"""Third-party-style code modifications used to stress watermark survival.

Every perturbation is a semantic-preserving normalisation that a linter or
formatter might apply.  :func:`attack` loops the preset's rules until the
code stops changing, so attacks are idempotent.  Several maximum-preset
rules deliberately overlap watermark rules; the overlap list lives in the
preset manifest (``data/presets.json``).
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import token as tokmod
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from .cst import CLOSERS, OPENERS, SourceDocument, SpanEdit, apply_edits, drop_overlapping, parse
from .errors import ParseError
from .keyed import SecretKey
from .rules import RuleContext, get_rule
from .rules import analysis as an

log = logging.getLogger(__name__)

MAX_ROUNDS = 10

# Perturbations that reuse a catalog rule need a context; none of the reused
# rules is keyed, so any fixed key gives identical results.
_NEUTRAL_CTX = RuleContext(SecretKey(bytes(32)))


@dataclass(frozen=True)
class AttackPreset:
    name: str
    rules: tuple[str, ...]
    seed: int = 0
    overlaps: tuple[str, ...] = ()


Perturbation = Callable[[SourceDocument, int], list[SpanEdit]]
PERTURBATIONS: dict[str, Perturbation] = {}


def perturbation(name: str):
    def register(fn: Perturbation) -> Perturbation:
        PERTURBATIONS[name] = fn
        return fn
    return register


def _lines_ending_in_string(doc: SourceDocument) -> set[int]:
    rows = set()
    for t in doc.tokens:
        if t.type == tokmod.STRING and t.erow > t.srow:
            rows.update(range(t.srow, t.erow))
    return rows


def _prev_token(doc, tok):
    i = doc.index_of(tok)
    return doc.tokens[i - 1] if i > 0 else None


def _next_token(doc, tok):
    i = doc.index_of(tok)
    return doc.tokens[i + 1] if i + 1 < len(doc.tokens) else None


# -- default preset -----------------------------------------------------------


@perturbation("strip-trailing-whitespace")
def _strip_trailing_ws(doc, seed):
    skip = _lines_ending_in_string(doc)
    edits = []
    for row, line in enumerate(doc.lines, 1):
        if row in skip:
            continue
        body = line.rstrip("\r\n")
        stripped = body.rstrip(" \t\x0c")
        if stripped != body:
            s = doc.line_starts[row - 1] + len(stripped.encode())
            edits.append(SpanEdit(s, s + len(body[len(stripped):].encode()), ""))
    return edits


@perturbation("strip-comments")
def _strip_comments(doc, seed):
    edits = []
    for t in doc.tokens:
        if t.type != tokmod.COMMENT:
            continue
        prev = _prev_token(doc, t)
        if prev is None or prev.erow != t.srow or prev.type in (tokmod.NL, tokmod.NEWLINE, tokmod.DEDENT, tokmod.INDENT):
            if doc.indent_of(t.srow) + t.string == doc.lines[t.srow - 1].rstrip("\r\n"):
                edits.append(SpanEdit(*doc.line_span(t.srow), ""))
                continue
        start = prev.end if prev is not None and prev.erow == t.srow and prev.type not in (tokmod.INDENT, tokmod.DEDENT) else t.start
        edits.append(SpanEdit(start, t.end, ""))
    return edits


def _string_body(text: str):
    i = 0
    while i < len(text) and text[i] not in "'\"":
        i += 1
    return text[:i], text[i:]


@perturbation("normalize-quotes")
def _normalize_quotes(doc, seed):
    edits = []
    for t in doc.tokens:
        if t.type != tokmod.STRING:
            continue
        prefix, rest = _string_body(t.string)
        if rest.startswith("'''") or not rest.startswith("'"):
            continue
        body = rest[1:-1]
        if '"' in body or "\\" in body or "{" in body and "f" in prefix.lower():
            continue
        edits.append(SpanEdit(t.start, t.end, f'{prefix}"{body}"'))
    return edits


@perturbation("sort-imports")
def _sort_imports(doc, seed):
    edits = []
    body = doc.tree.body
    i = 0
    while i < len(body):
        j = i
        while j < len(body) and isinstance(body[j], (ast.Import, ast.ImportFrom)):
            j += 1
        block = body[i:j]
        if len(block) > 1 and _plain_block(doc, block):
            texts = [doc.segment(s) for s in block]
            keyed = sorted(texts, key=lambda s: (s.startswith("from "), s))
            if keyed != texts and not any(
                isinstance(s, ast.ImportFrom) and s.module == "__future__" for s in block
            ):
                start = doc.span(block[0])[0]
                end = doc.span(block[-1])[1]
                sep = doc.newline_style + doc.indent_of(block[0].lineno)
                edits.append(SpanEdit(start, end, sep.join(keyed)))
        i = max(j, i + 1)
    return edits


def _plain_block(doc, block) -> bool:
    rows = [s.lineno for s in block]
    if any(s.lineno != s.end_lineno for s in block):
        return False
    if rows != list(range(rows[0], rows[0] + len(rows))):
        return False
    lo, hi = doc.span(block[0])[0], doc.span(block[-1])[1]
    return not doc.comments_between(lo, hi) and ";" not in doc.slice(lo, hi)


@perturbation("remove-trailing-commas")
def _remove_trailing_commas(doc, seed):
    keep = set()
    for node in doc.walk(ast.Tuple):
        if len(node.elts) == 1:
            end = doc.span(node.elts[0])[1]
            for t in doc.tokens_between(end, doc.span(node)[1] + 1):
                if t.string == ",":
                    keep.add(t.start)
                    break
    edits = []
    for t in doc.tokens:
        if t.type == tokmod.OP and t.string == "," and t.start not in keep:
            nxt = _next_token(doc, t)
            if nxt is not None and nxt.string in CLOSERS and nxt.srow == t.erow:
                edits.append(SpanEdit(t.start, t.end, ""))
    return edits


@perturbation("expand-tabs")
def _expand_tabs(doc, seed):
    skip = doc.string_continuation_lines
    indents = [
        doc.indent_of(row) for row in range(1, len(doc.lines) + 1)
        if row not in skip and doc.lines[row - 1].strip()
    ]
    if any("\t" in ws and " " in ws for ws in indents):
        return []
    edits = []
    for row in range(1, len(doc.lines) + 1):
        ws = doc.indent_of(row)
        if row in skip or "\t" not in ws or not doc.lines[row - 1].strip():
            continue
        s = doc.line_starts[row - 1]
        edits.append(SpanEdit(s, s + len(ws), ws.replace("\t", "    ")))
    return edits


@perturbation("collapse-blank-lines")
def _collapse_blank_lines(doc, seed):
    skip = doc.string_continuation_lines
    edits = []
    run = []
    for row in range(1, len(doc.lines) + 2):
        blank = row <= len(doc.lines) and row not in skip and not doc.lines[row - 1].strip()
        if blank:
            run.append(row)
            continue
        if len(run) > 2:
            edits.append(SpanEdit(doc.line_starts[run[2] - 1], doc.line_starts[run[-1]], ""))
        run = []
    return edits


@perturbation("remove-semicolons")
def _remove_semicolons(doc, seed):
    """Drop trailing semicolons and split ``a; b`` onto separate lines."""
    ends = {}
    for node in doc.walk(ast.stmt):
        ends[doc.span(node)[1]] = node
    edits = []
    for t in doc.tokens:
        if t.type != tokmod.OP or t.string != ";":
            continue
        prev, nxt = _prev_token(doc, t), _next_token(doc, t)
        if nxt is not None and nxt.type in (tokmod.NEWLINE, tokmod.COMMENT, tokmod.ENDMARKER):
            edits.append(SpanEdit(prev.end if prev and prev.erow == t.srow else t.start, t.end, ""))
            continue
        before = ends.get(prev.end) if prev is not None else None
        indent = doc.indent_of(t.srow)
        # only split a statement that starts its line; `if x: a; b` stays put
        if before is None or before.lineno != t.srow or before.col_offset != len(indent):
            continue
        edits.append(SpanEdit(prev.end, nxt.start, doc.newline_style + indent))
    return edits


@perturbation("no-space-before-call-paren")
def _no_space_before_paren(doc, seed):
    edits = []
    for node in doc.walk((ast.Call, ast.Subscript)):
        if id(node) in doc.fstring_inner:
            continue
        inner = node.func if isinstance(node, ast.Call) else node.value
        end = doc.span(inner)[1]
        for t in doc.tokens_between(end, doc.span(node)[1]):
            if t.type == tokmod.OP and t.string in "([":
                if t.start > end and t.srow == doc.line_of(end) and not doc.slice(end, t.start).strip():
                    edits.append(SpanEdit(end, t.start, ""))
                break
            if t.type not in (tokmod.NL, tokmod.COMMENT) and t.string != ")":
                break
    return edits


@perturbation("strip-bracket-padding")
def _strip_bracket_padding(doc, seed):
    layout = (tokmod.NL, tokmod.NEWLINE, tokmod.INDENT, tokmod.DEDENT, tokmod.COMMENT)
    edits = []
    for a, b in zip(doc.tokens, doc.tokens[1:]):
        if a.erow != b.srow or b.start <= a.end:
            continue
        opens = a.type == tokmod.OP and a.string in OPENERS and b.type not in layout
        closes = b.type == tokmod.OP and b.string in CLOSERS and a.type not in layout
        if opens or closes:
            edits.append(SpanEdit(a.end, b.start, ""))
    return edits


@perturbation("no-space-before-colon")
def _no_space_before_colon(doc, seed):
    edits = []
    depth = 0
    for t in doc.tokens:
        if t.type == tokmod.OP and t.string in OPENERS:
            depth += 1
        elif t.type == tokmod.OP and t.string in CLOSERS:
            depth -= 1
        elif t.type == tokmod.OP and t.string == ":" and depth == 0:
            nxt = _next_token(doc, t)
            prev = _prev_token(doc, t)
            if (
                nxt is not None and nxt.type in (tokmod.NEWLINE, tokmod.COMMENT)
                and prev is not None and prev.erow == t.srow and prev.end < t.start
            ):
                edits.append(SpanEdit(prev.end, t.start, ""))
    return edits


@perturbation("final-newline")
def _final_newline(doc, seed):
    text = doc.text
    nl = doc.newline_style
    if not text.strip():
        return []
    stripped = text.rstrip("\r\n \t")
    tail = text[len(stripped):]
    if tail == nl:
        return []
    # keep trailing whitespace that belongs to the last line for the dedicated rule
    start = len(stripped.encode())
    return [SpanEdit(start, len(doc.data), nl)]


# -- maximum preset -----------------------------------------------------------

def _black_simple(node) -> bool:
    if isinstance(node, ast.UnaryOp):
        return _black_simple(node.operand)
    if isinstance(node, ast.Attribute):
        return _black_simple(node.value)
    return isinstance(node, (ast.Name, ast.Constant))


@perturbation("black-operator-spacing")
def _black_operator_spacing(doc, seed):
    """Like the watermark's operator spacing, except `**` hugs simple operands."""
    edits = []
    for g in get_rule("F1-operator-whitespace").rewrite(doc, _NEUTRAL_CTX):
        edits.extend(g)
    pow_gaps = set()
    for node in doc.walk(ast.BinOp):
        if isinstance(node.op, ast.Pow) and _black_simple(node.left) and _black_simple(node.right):
            if id(node) in doc.fstring_inner:
                continue
            for t in doc.tokens_between(doc.span(node.left)[1], doc.span(node.right)[0]):
                if t.string == "**":
                    prev, nxt = _prev_token(doc, t), _next_token(doc, t)
                    if prev.erow == t.srow:
                        pow_gaps.add((prev.end, t.start))
                    if nxt.srow == t.erow:
                        pow_gaps.add((t.end, nxt.start))
    edits = [e for e in edits if (e.start, e.end) not in pow_gaps]
    edits.extend(SpanEdit(s, e, "") for s, e in sorted(pow_gaps))
    return edits


_UNWRAP_OK = (
    ast.Name, ast.Attribute, ast.Call, ast.Subscript, ast.Constant, ast.Compare,
    ast.BoolOp, ast.BinOp, ast.UnaryOp, ast.List, ast.Dict, ast.ListComp, ast.DictComp, ast.SetComp,
)


@perturbation("remove-redundant-parens")
def _remove_redundant_parens(doc, seed):
    edits = []
    for node in doc.walk((ast.If, ast.While, ast.Return, ast.Assign)):
        expr = node.test if isinstance(node, (ast.If, ast.While)) else node.value
        if expr is None or not isinstance(expr, _UNWRAP_OK):
            continue
        if expr.lineno != expr.end_lineno:
            continue
        es, ee = doc.span(expr)
        before = [t for t in doc.tokens_between(doc.span(node)[0], es) if t.type == tokmod.OP]
        after = [t for t in doc.tokens_between(ee, doc.span(node)[1] + 2) if t.type == tokmod.OP]
        if not before or not after or before[-1].string != "(" or after[0].string != ")":
            continue
        opener, closer = before[-1], after[0]
        if opener.srow != closer.srow or not _matched(doc, opener, closer):
            continue
        if isinstance(node, ast.Assign) and doc.span(node.targets[-1])[1] > opener.start:
            continue
        kw_end = opener.start
        prev = _prev_token(doc, opener)
        space = "" if prev is not None and prev.end < opener.start else " "
        edits.append(SpanEdit(kw_end, opener.end, space))
        edits.append(SpanEdit(closer.start, closer.end, ""))
    return edits


def _matched(doc, opener, closer) -> bool:
    """True when ``closer`` closes ``opener`` (depth never returns to zero before it)."""
    depth = 0
    for t in doc.tokens_between(opener.start, closer.end):
        if t.type != tokmod.OP:
            continue
        if t.string in OPENERS:
            depth += 1
        elif t.string in CLOSERS:
            depth -= 1
            if depth == 0:
                return t is closer
    return False


def _reuse(rule_id: str) -> Perturbation:
    rule = get_rule(rule_id)

    def run(doc, seed):
        edits = []
        for g in rule.rewrite(doc, _NEUTRAL_CTX):
            edits.extend(g)
        return edits

    return run


PERTURBATIONS["loop-to-comprehension"] = _reuse("R2-loop-to-comprehension")
PERTURBATIONS["no-else-after-return"] = _reuse("R1-unnecessary-else")
PERTURBATIONS["not-in-is-not"] = _reuse("R9-not-in-is-not")
PERTURBATIONS["range-start-zero"] = _reuse("R8-range-default-start")
PERTURBATIONS["literal-constructors"] = _reuse("R5-empty-literal")
PERTURBATIONS["comma-whitespace"] = _reuse("F4-comma-whitespace")
PERTURBATIONS["keyword-equals"] = _reuse("F6-keyword-equals-spacing")


@perturbation("compare-to-none")
def _compare_to_none(doc, seed):
    edits = []
    for node in doc.walk(ast.Compare):
        if id(node) in doc.fstring_inner:
            continue
        operands = [node.left] + node.comparators
        for (a, b), op in zip(zip(operands, operands[1:]), node.ops):
            if isinstance(op, (ast.Eq, ast.NotEq)) and isinstance(b, ast.Constant) and b.value is None:
                toks = [t for t in doc.tokens_between(doc.span(a)[1], doc.span(b)[0]) if t.type == tokmod.OP and t.string in ("==", "!=")]
                if len(toks) == 1:
                    edits.append(SpanEdit(toks[0].start, toks[0].end, "is" if toks[0].string == "==" else "is not"))
    return edits


@perturbation("simplify-negated-eq")
def _simplify_negated_eq(doc, seed):
    edits = []
    flip = {ast.Eq: "!=", ast.NotEq: "=="}
    for node in doc.walk(ast.UnaryOp):
        c = node.operand
        if (
            isinstance(node.op, ast.Not)
            and isinstance(c, ast.Compare)
            and len(c.ops) == 1
            and type(c.ops[0]) in flip
            and id(node) not in doc.fstring_inner
            and an.plain_operator_gap(doc, c, c.left, c.comparators[0])
        ):
            edits.append(SpanEdit(*doc.span(node), f"{doc.segment(c.left)} {flip[type(c.ops[0])]} {doc.segment(c.comparators[0])}"))
    return edits


_DEFS = (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)


@perturbation("pep8-blank-lines")
def _pep8_blank_lines(doc, seed):
    """Blank lines go above a def's leading comment block, not between it and the def."""
    edits = []
    nl = doc.newline_style
    pairs = [(p, n, 2) for p, n in zip(doc.tree.body, doc.tree.body[1:])]
    for cls in doc.walk(ast.ClassDef):
        pairs += [(p, n, 1) for p, n in zip(cls.body, cls.body[1:])]
    for prev, nxt, want in pairs:
        if not isinstance(nxt, _DEFS) and not isinstance(prev, _DEFS):
            continue
        first = prev.end_lineno + 1
        last = an.header_start_line(nxt) - 1
        if first - 1 >= an.header_start_line(nxt):
            continue
        lines = doc.lines[first - 1:last]
        if any(s.strip() and not s.strip().startswith("#") for s in lines):
            continue
        comments = [s for s in lines if s.strip()]
        text = nl * want + "".join(comments)
        edits.append(SpanEdit(doc.line_starts[first - 1], doc.line_starts[last], text))
    return edits


@perturbation("seeded-blank-lines")
def _seeded_blank_lines(doc, seed):
    """Insert a blank line after seed-selected statements inside function bodies."""
    edits = []
    nl = doc.newline_style
    for fn in doc.walk((ast.FunctionDef, ast.AsyncFunctionDef)):
        for a, b in zip(fn.body, fn.body[1:]):
            if isinstance(a, _DEFS) or isinstance(b, _DEFS) or b.lineno <= a.end_lineno:
                continue
            h = hashlib.sha256(f"{seed}:{ast.dump(a)}".encode()).digest()
            if h[0] % 4:
                continue
            row = a.end_lineno + 1
            if row <= len(doc.lines) and not doc.lines[row - 1].strip():
                continue
            at = doc.line_starts[a.end_lineno]
            edits.append(SpanEdit(at, at, nl))
    return edits


# -- presets ------------------------------------------------------------------


def load_presets() -> dict[str, AttackPreset]:
    raw = json.loads(resources.files("codewm").joinpath("data/presets.json").read_text(encoding="utf-8"))
    presets = {}
    for name, spec in raw["presets"].items():
        rules = tuple(spec["rules"])
        for rid in rules:
            if rid not in PERTURBATIONS:
                raise ValueError(f"preset {name}: unknown perturbation {rid!r}")
        presets[name] = AttackPreset(name, rules, int(spec.get("seed", 0)), tuple(spec.get("overlaps", ())))
    return presets


def get_preset(name: str) -> AttackPreset:
    presets = load_presets()
    if name not in presets:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return presets[name]


def _apply_perturbation(rule_id: str, text: str, seed: int) -> str:
    doc = parse(text)
    edits = drop_overlapping(PERTURBATIONS[rule_id](doc, seed))
    if not edits:
        return text
    new = apply_edits(doc, edits)
    if not parse(new).parse_ok:
        log.warning("attack rule %s produced invalid code; skipped", rule_id)
        return text
    return new


def attack(code: str, preset: AttackPreset | str) -> str:
    if isinstance(preset, str):
        preset = get_preset(preset)
    doc = parse(code)
    if not doc.parse_ok:
        raise ParseError(f"attack input does not parse: {doc.error}", doc.error_lineno)
    text = code
    for _ in range(MAX_ROUNDS):
        before = text
        for rid in preset.rules:
            # each perturbation runs to its own fixed point
            for _ in range(MAX_ROUNDS):
                new = _apply_perturbation(rid, text, preset.seed)
                if new == text:
                    break
                text = new
        if text == before:
            return text
    log.warning("attack preset %s did not settle in %d rounds", preset.name, MAX_ROUNDS)
    return text
