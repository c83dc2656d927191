"""Formatting rules: whitespace and layout only, token stream unchanged."""

from __future__ import annotations

import ast
import token as tokmod

from ..cst import CLOSERS, OPENERS, SourceDocument, SpanEdit
from . import analysis as an
from .base import FORMATTING, TransformRule

_LAYOUT = (tokmod.NL, tokmod.NEWLINE, tokmod.INDENT, tokmod.DEDENT, tokmod.ENDMARKER)


def _neighbours(doc: SourceDocument, tok):
    i = doc.index_of(tok)
    prev = doc.tokens[i - 1] if i > 0 else None
    nxt = doc.tokens[i + 1] if i + 1 < len(doc.tokens) else None
    return prev, nxt


def _gap_before(doc, tok, want):
    """Edit setting the same-line gap before ``tok`` to ``want``."""
    prev, _ = _neighbours(doc, tok)
    if prev is None or prev.type in _LAYOUT or prev.erow != tok.srow:
        return None
    return SpanEdit(prev.end, tok.start, want)


def _gap_after(doc, tok, want):
    _, nxt = _neighbours(doc, tok)
    if nxt is None or nxt.type in _LAYOUT or nxt.type == tokmod.COMMENT or nxt.srow != tok.erow:
        return None
    return SpanEdit(tok.end, nxt.start, want)


def _ops_between(doc, a_end, b_start):
    return [
        t for t in doc.tokens_between(a_end, b_start)
        if t.type in (tokmod.OP, tokmod.NAME) and t.string not in "()"
    ]


def _find(doc, a_end, b_start, text):
    for t in doc.tokens_between(a_end, b_start):
        if t.type == tokmod.OP and t.string == text:
            return t
    return None


class _GapRule(TransformRule):
    """Rules made of independent per-token gap edits."""

    category = FORMATTING

    def _sites(self, doc):
        """Yield (site_span, [(token, want_before, want_after), ...])."""
        raise NotImplementedError

    def trigger_sites(self, doc, ctx):
        return [span for span, _ in self._sites(doc)]

    residual_sites = trigger_sites

    def rewrite(self, doc, ctx):
        groups = []
        for _span, plan in self._sites(doc):
            for toks, before, after in plan:
                first, last = toks[0], toks[-1]
                if before is not None:
                    e = _gap_before(doc, first, before)
                    if e:
                        groups.append([e])
                if after is not None:
                    e = _gap_after(doc, last, after)
                    if e:
                        groups.append([e])
                for a, b in zip(toks, toks[1:]):
                    if a.erow == b.srow:
                        groups.append([SpanEdit(a.end, b.start, " ")])
        return groups


_SPACED_KEYWORDS = {
    "and", "or", "not", "in", "is", "if", "elif", "while", "return", "assert",
    "del", "yield", "for", "else", "import", "from", "as", "with", "raise",
    "await", "except",
}
_NO_SPACE_AFTER = {":", ",", ")", "]", "}", ".", ";"}


class OperatorWhitespace(_GapRule):
    rule_id = "F1-operator-whitespace"
    description = (
        "Exactly one space around binary, comparison, assignment, walrus and "
        "return-annotation operators; keywords never touch brackets."
    )

    def _sites(self, doc):
        fin = doc.fstring_inner
        for node in doc.walk():
            if id(node) in fin:
                continue
            pairs = []
            if isinstance(node, ast.BinOp):
                pairs = [(node.left, node.right)]
            elif isinstance(node, ast.Compare):
                operands = [node.left] + node.comparators
                pairs = list(zip(operands, operands[1:]))
            elif isinstance(node, ast.Assign):
                chain = node.targets + [node.value]
                pairs = list(zip(chain, chain[1:]))
            elif isinstance(node, (ast.AugAssign, ast.NamedExpr)):
                pairs = [(node.target, node.value)]
            elif isinstance(node, ast.AnnAssign) and node.value is not None:
                pairs = [(node.annotation, node.value)]
            elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.returns is not None:
                rs = doc.span(node.returns)[0]
                i = doc.token_index(rs) - 1
                while i >= 0 and doc.tokens[i].string != "->":
                    i -= 1
                if i >= 0:
                    t = doc.tokens[i]
                    yield (t.start, t.end), [([t], " ", " ")]
                continue
            for a, b in pairs:
                toks = _ops_between(doc, doc.span(a)[1], doc.span(b)[0])
                if toks:
                    yield (toks[0].start, toks[-1].end), [(toks, " ", " ")]

    def rewrite(self, doc, ctx):
        groups = super().rewrite(doc, ctx)
        for t in doc.tokens:
            if t.type != tokmod.NAME or t.string not in _SPACED_KEYWORDS:
                continue
            prev, nxt = _neighbours(doc, t)
            if (
                nxt is not None
                and nxt.start == t.end
                and nxt.type not in _LAYOUT
                and nxt.type != tokmod.COMMENT
                and nxt.string not in _NO_SPACE_AFTER
            ):
                groups.append([SpanEdit(t.end, t.end, " ")])
            if (
                prev is not None
                and prev.end == t.start
                and (prev.string in CLOSERS or prev.type in (tokmod.STRING, tokmod.NUMBER))
            ):
                groups.append([SpanEdit(t.start, t.start, " ")])
        return groups


class CommaWhitespace(_GapRule):
    rule_id = "F4-comma-whitespace"
    description = "No space before a comma; one space after it unless a closing bracket follows."

    def _sites(self, doc):
        for t in doc.tokens:
            if t.type == tokmod.OP and t.string == ",":
                _, nxt = _neighbours(doc, t)
                after = "" if nxt is not None and nxt.string in CLOSERS else " "
                yield (t.start, t.end), [([t], "", after)]


class KeywordEqualsSpacing(_GapRule):
    rule_id = "F6-keyword-equals-spacing"
    description = (
        "No spaces around `=` in keyword arguments and unannotated defaults; "
        "one space for annotated defaults."
    )

    def _sites(self, doc):
        fin = doc.fstring_inner
        for node in doc.walk():
            if id(node) in fin:
                continue
            if isinstance(node, ast.keyword) and node.arg is not None:
                s = doc.span(node)[0]
                eq = _find(doc, s, doc.span(node.value)[0], "=")
                if eq:
                    yield (eq.start, eq.end), [([eq], "", "")]
            elif isinstance(node, ast.arguments):
                positional = node.posonlyargs + node.args
                pairs = list(zip(positional[len(positional) - len(node.defaults):], node.defaults))
                pairs += [(a, d) for a, d in zip(node.kwonlyargs, node.kw_defaults) if d is not None]
                for arg, default in pairs:
                    eq = _find(doc, doc.span(arg)[1], doc.span(default)[0], "=")
                    if eq:
                        want = " " if arg.annotation is not None else ""
                        yield (eq.start, eq.end), [([eq], want, want)]


class InlineCommentSpacing(_GapRule):
    rule_id = "F7-inline-comment-spacing"
    description = "Exactly two spaces between code and a trailing comment."

    def _sites(self, doc):
        for t in doc.tokens:
            if t.type == tokmod.COMMENT:
                prev, _ = _neighbours(doc, t)
                if prev is not None and prev.type not in _LAYOUT and prev.erow == t.srow:
                    yield (t.start, t.end), [([t], "  ", None)]


class DictColonSpacing(_GapRule):
    rule_id = "F8-dict-colon-spacing"
    description = "No space before a dict-display colon, one space after it."

    def _sites(self, doc):
        fin = doc.fstring_inner
        for node in doc.walk((ast.Dict, ast.DictComp)):
            if id(node) in fin:
                continue
            if isinstance(node, ast.Dict):
                pairs = [(k, v) for k, v in zip(node.keys, node.values) if k is not None]
            else:
                pairs = [(node.key, node.value)]
            for k, v in pairs:
                colon = _find(doc, doc.span(k)[1], doc.span(v)[0], ":")
                if colon:
                    yield (colon.start, colon.end), [([colon], "", " ")]


class BracketAlignment(TransformRule):
    rule_id = "F2-bracket-alignment"
    category = FORMATTING
    description = (
        "Align continuation lines with the column after an opening bracket "
        "that has content on its own line; hanging indents follow their opener."
    )

    def _plan(self, doc):
        if "align" in doc.cache:
            return doc.cache["align"]
        sites, edits = [], []
        toks = doc.tokens
        i = 0
        while i < len(toks):
            j = i
            while j < len(toks) and toks[j].type not in (tokmod.NEWLINE, tokmod.ENDMARKER):
                j += 1
            self._logical(doc, toks[i : j + 1], sites, edits)
            i = j + 1
        doc.cache["align"] = (sites, edits)
        return sites, edits

    def _logical(self, doc, toks, sites, edits):
        real = [t for t in toks if t.type not in (tokmod.NL, tokmod.INDENT, tokmod.DEDENT, tokmod.NEWLINE, tokmod.ENDMARKER)]
        if not real:
            return
        code = [t for t in real if t.type != tokmod.COMMENT]
        if not code:
            return
        first_row = code[0].srow
        strlines = doc.string_continuation_lines
        delta: dict[int, int] = {first_row: 0}
        stack = []
        local_sites, local_edits = [], []
        seen_row = first_row
        for k, t in enumerate(real):
            if t.srow < first_row:
                continue
            if t.srow > seen_row:
                seen_row = t.srow
                row = t.srow
                ws = doc.indent_of(row)
                if row not in strlines and t.scol == len(ws):
                    if "\t" in ws:
                        return
                    if stack:
                        top = stack[-1]
                        if top["visual"] and t.string not in CLOSERS:
                            target = top["col"] + delta.get(top["row"], 0) + 1
                            d = target - t.scol
                            if top["span"] not in local_sites:
                                local_sites.append(top["span"])
                        else:
                            d = delta.get(top["row"], 0)
                    else:
                        d = 0
                    d = max(d, -t.scol)
                    delta[row] = d
                    if d:
                        s = doc.line_starts[row - 1]
                        local_edits.append(SpanEdit(s, s + len(ws), " " * (t.scol + d)))
            if t.type == tokmod.OP and t.string in OPENERS:
                nxt = real[k + 1] if k + 1 < len(real) else None
                visual = nxt is not None and nxt.srow == t.srow and nxt.type != tokmod.COMMENT
                stack.append({"row": t.srow, "col": t.scol, "visual": visual, "span": (t.start, t.end)})
            elif t.type == tokmod.OP and t.string in CLOSERS and stack:
                stack.pop()
        sites.extend(local_sites)
        edits.extend(local_edits)

    def trigger_sites(self, doc, ctx):
        return list(self._plan(doc)[0])

    residual_sites = trigger_sites

    def rewrite(self, doc, ctx):
        return [[e] for e in self._plan(doc)[1]]


class _BlankLineRule(TransformRule):
    """Normalise the blank lines between two statements around a def/class."""

    category = FORMATTING
    blank_lines = 0

    def _pairs(self, doc):
        raise NotImplementedError

    def _gaps(self, doc):
        for prev, nxt in self._pairs(doc):
            if not (isinstance(prev, _DEFS) or isinstance(nxt, _DEFS)):
                continue
            first = prev.end_lineno + 1
            last = an.header_start_line(nxt) - 1
            if first - 1 >= an.header_start_line(nxt):
                continue
            nxt_indent = len(doc.indent_of(nxt.lineno))
            attached, leading = [], []
            ok = True
            for ln in range(first, last + 1):
                line = doc.lines[ln - 1]
                body = line.strip()
                if not body:
                    continue
                if not body.startswith("#"):
                    ok = False
                    break
                ind = len(line) - len(line.lstrip(" \t"))
                (attached if ind > nxt_indent and not leading else leading).append(line)
            if ok:
                yield prev, nxt, first, last, attached, leading

    def trigger_sites(self, doc, ctx):
        return [(doc.line_starts[g[2] - 1], doc.line_starts[g[3]]) for g in self._gaps(doc)]

    residual_sites = trigger_sites

    def rewrite(self, doc, ctx):
        nl = doc.newline_style
        groups = []
        for _prev, _nxt, first, last, attached, leading in self._gaps(doc):
            text = "".join(attached) + nl * self.blank_lines + "".join(leading)
            groups.append([SpanEdit(doc.line_starts[first - 1], doc.line_starts[last], text)])
        return groups


_DEFS = (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)


class TopLevelBlankLines(_BlankLineRule):
    rule_id = "F3-top-level-blank-lines"
    description = (
        "Exactly two blank lines between a top-level def/class and its "
        "neighbouring statements; comment lines keep their order after the gap."
    )
    blank_lines = 2

    def _pairs(self, doc):
        body = doc.tree.body
        return list(zip(body, body[1:]))


class MethodBlankLines(_BlankLineRule):
    rule_id = "F5-method-blank-lines"
    description = "Exactly one blank line around defs inside a class body."
    blank_lines = 1

    def _pairs(self, doc):
        out = []
        for cls in doc.walk(ast.ClassDef):
            out.extend(zip(cls.body, cls.body[1:]))
        return out
