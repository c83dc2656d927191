"""Refactoring rules: same semantics, different syntax."""

from __future__ import annotations

import ast
import token as tokmod

from ..cst import SourceDocument, SpanEdit
from ..keyed import digest_int, parity
from . import analysis as an
from .base import REFACTORING, RuleContext, TransformRule

EXITS = (ast.Return, ast.Raise, ast.Continue, ast.Break)


def _starts_with_keyword(doc: SourceDocument, node: ast.AST, word: bytes) -> bool:
    start = doc.span(node)[0]
    return doc.data[start : start + len(word)] == word and not doc.data[
        start + len(word) : start + len(word) + 1
    ].isalnum()


def else_token(doc: SourceDocument, node: ast.If):
    """The ``else`` keyword of a plain ``if`` (None for ``elif`` chains)."""
    if not node.orelse:
        return None
    lo = doc.span(node.body[-1])[1]
    hi = doc.span(node.orelse[0])[0]
    for t in doc.tokens_between(lo, hi):
        if t.type == tokmod.NAME and t.string == "else":
            return t
    return None


def line_tokens(doc: SourceDocument, row: int):
    """Tokens on one physical line, ignoring INDENT/DEDENT markers."""
    lo, hi = doc.line_span(row)
    return [t for t in doc.tokens_between(lo, hi) if t.type not in (tokmod.INDENT, tokmod.DEDENT)]


def dedent_lines(doc: SourceDocument, first: int, last: int, old: str, new: str) -> str:
    """Text of lines ``first..last`` with indentation prefix ``old`` -> ``new``.

    ``new`` must be a prefix of ``old``.  Lines that start inside a multi-line
    string and blank lines are copied unchanged; lines indented less than
    ``old`` lose at most the difference.
    """
    cut = len(old) - len(new)
    out = []
    strlines = doc.string_continuation_lines
    for ln in range(first, last + 1):
        line = doc.lines[ln - 1]
        if ln in strlines or not line.strip():
            out.append(line)
            continue
        ws = len(line) - len(line.lstrip(" \t"))
        out.append(line[min(cut, max(0, ws - len(new))):])
    return "".join(out)


class RemoveUnnecessaryElse(TransformRule):
    rule_id = "R1-unnecessary-else"
    category = REFACTORING
    description = (
        "Remove an else clause whose if-branch always leaves the block "
        "(return/raise/continue/break) and dedent its body."
    )

    def _sites(self, doc):
        for node in doc.walk(ast.If):
            if not isinstance(node.body[-1], EXITS) or not _starts_with_keyword(doc, node, b"if"):
                continue
            tok = else_token(doc, node)
            if tok is None:
                continue
            row = tok.srow
            kinds = [t for t in line_tokens(doc, row) if t.type not in (tokmod.NEWLINE, tokmod.NL)]
            if [t.string for t in kinds] != ["else", ":"]:
                continue
            if node.orelse[0].lineno <= row:
                continue
            if_indent = doc.indent_of(row)
            body_indent = doc.indent_of(node.orelse[0].lineno)
            if not body_indent.startswith(if_indent) or body_indent == if_indent:
                continue
            yield node, row, if_indent, body_indent

    def trigger_sites(self, doc, ctx):
        return [doc.span(node) for node, *_ in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        spans = []
        for _owner, stmts in an.statement_lists(doc.tree):
            for node in stmts[:-1]:
                if (
                    isinstance(node, ast.If)
                    and not node.orelse
                    and isinstance(node.body[-1], EXITS)
                    and _starts_with_keyword(doc, node, b"if")
                ):
                    spans.append(doc.span(node))
        return spans

    def rewrite(self, doc, ctx):
        groups = []
        for node, row, if_indent, body_indent in self._sites(doc):
            last = node.orelse[-1].end_lineno
            body = dedent_lines(doc, row + 1, last, body_indent, if_indent)
            start = doc.line_starts[row - 1]
            end = doc.line_starts[last]
            groups.append([SpanEdit(start, end, body)])
        return groups


class LoopToComprehension(TransformRule):
    rule_id = "R2-loop-to-comprehension"
    category = REFACTORING
    description = (
        "Fold `x = []` followed by a for-loop whose only effect is "
        "`x.append(e)` (optionally under one if) into a list comprehension."
    )

    _BANNED = (ast.Yield, ast.YieldFrom, ast.Await, ast.NamedExpr, ast.Lambda)

    def _sites(self, doc):
        for owner, stmts in an.statement_lists(doc.tree):
            if isinstance(owner, ast.ClassDef):
                continue
            for s1, s2 in zip(stmts, stmts[1:]):
                m = self._match(doc, s1, s2)
                if m is not None:
                    yield m

    def _match(self, doc, s1, s2):
        if not (
            isinstance(s1, ast.Assign)
            and len(s1.targets) == 1
            and isinstance(s1.targets[0], ast.Name)
            and isinstance(s1.value, ast.List)
            and not s1.value.elts
            and isinstance(s2, ast.For)
            and not s2.orelse
            and len(s2.body) == 1
            and s2.lineno > s1.end_lineno
        ):
            return None
        if doc.span(s1)[0] != doc.line_starts[s1.lineno - 1] + len(doc.indent_of(s1.lineno).encode()):
            return None
        name = s1.targets[0].id
        inner = s2.body[0]
        cond = None
        if isinstance(inner, ast.If) and not inner.orelse and len(inner.body) == 1:
            cond = inner.test
            inner = inner.body[0]
        if not (
            isinstance(inner, ast.Expr)
            and isinstance(inner.value, ast.Call)
            and isinstance(inner.value.func, ast.Attribute)
            and inner.value.func.attr == "append"
            and isinstance(inner.value.func.value, ast.Name)
            and inner.value.func.value.id == name
            and len(inner.value.args) == 1
            and not inner.value.keywords
        ):
            return None
        elt = inner.value.args[0]
        if isinstance(elt, (ast.Starred, ast.GeneratorExp)):
            return None
        parts = [elt, s2.iter, s2.target] + ([cond] if cond is not None else [])
        for part in parts:
            for sub in ast.walk(part):
                if isinstance(sub, self._BANNED):
                    return None
                if isinstance(sub, ast.Name) and sub.id == name:
                    return None
        if not all(isinstance(n, (ast.Name, ast.Tuple, ast.List)) for n in ast.walk(s2.target) if not isinstance(n, ast.expr_context)):
            return None
        targets = {n.id for n in ast.walk(s2.target) if isinstance(n, ast.Name)}
        scope, _ = an.enclosing_scope(doc, s2)
        if not isinstance(scope, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Module)):
            return None
        inside = {id(n) for n in ast.walk(s2)}
        for n in ast.walk(scope):
            if isinstance(n, ast.Name) and n.id in targets and id(n) not in inside:
                return None
            if isinstance(n, (ast.Global, ast.Nonlocal)) and targets & set(n.names):
                return None
            if isinstance(n, ast.Call) and isinstance(n.func, ast.Name) and n.func.id in ("locals", "vars", "exec", "eval"):
                return None
        # comments inside the folded expressions cannot be moved out
        region = (doc.span(s1)[0], doc.span(s2)[1])
        comments = doc.comments_between(*region)
        part_spans = [doc.span(p) for p in parts]
        for c in comments:
            if any(s <= c.start < e for s, e in part_spans):
                return None
        return s1, s2, name, elt, cond, comments

    def trigger_sites(self, doc, ctx):
        return [(doc.span(m[0])[0], doc.span(m[1])[1]) for m in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        return [
            doc.span(n)
            for n in doc.walk(ast.Assign)
            if len(n.targets) == 1
            and isinstance(n.targets[0], ast.Name)
            and isinstance(n.value, ast.ListComp)
        ]

    @staticmethod
    def _wrapped(doc, node, needs_parens):
        text = doc.segment(node)
        if needs_parens:
            return f"({text})"
        return text

    def rewrite(self, doc, ctx):
        groups = []
        for s1, s2, name, elt, cond, comments in self._sites(doc):
            it = s2.iter
            it_text = self._wrapped(
                doc, it,
                isinstance(it, (ast.IfExp, ast.Lambda, ast.NamedExpr, ast.Yield))
                or (isinstance(it, ast.Tuple) and not doc.segment(it).startswith("(")),
            )
            tgt_text = doc.segment(s2.target)
            elt_text = doc.segment(elt)
            comp = f"[{elt_text} for {tgt_text} in {it_text}"
            if cond is not None:
                comp += " if " + self._wrapped(doc, cond, isinstance(cond, (ast.IfExp, ast.Lambda, ast.NamedExpr)))
            comp += "]"
            indent = doc.indent_of(s1.lineno)
            lead = "".join(c.string + doc.newline_style + indent for c in comments)
            start = doc.span(s1)[0]
            end = doc.span(s2)[1]
            groups.append([SpanEdit(start, end, f"{lead}{name} = {comp}")])
        return groups


class DecoyConstructor(TransformRule):
    rule_id = "R3-decoy-constructor"
    category = REFACTORING
    uses_keyed_hash = True
    description = (
        "For a class whose __init__ takes two or more parameters besides self, "
        "when the keyed digest of the class name is odd, define a shadowed "
        "decoy __init__ immediately before the real one."
    )
    grammar_notes = (
        "Decoy goes before the real constructor: a later def of the same name "
        "wins, so the original stays effective."
    )

    @staticmethod
    def _params(fn: ast.FunctionDef):
        a = fn.args
        positional = a.posonlyargs + a.args
        if not positional:
            return None, []
        rest = [x.arg for x in positional[1:]] + [x.arg for x in a.kwonlyargs]
        return positional[0].arg, rest

    def _classes(self, doc):
        for cls in doc.walk(ast.ClassDef):
            inits = [
                (i, s) for i, s in enumerate(cls.body)
                if isinstance(s, ast.FunctionDef) and s.name == "__init__"
            ]
            if not inits:
                continue
            idx, real = inits[-1]
            first, rest = self._params(real)
            if first is None or len(rest) < 2:
                continue
            yield cls, idx, real, first, rest

    def trigger_sites(self, doc, ctx):
        return [doc.span(c[0]) for c in self._classes(doc)]

    residual_sites = trigger_sites

    @staticmethod
    def decoy_params(ctx: RuleContext, class_name: str, first: str, rest: list[str]) -> list[str]:
        count = 1 + digest_int(ctx.key, f"{class_name}:decoy-arity") % (len(rest) - 1)
        return [first] + rest[:count]

    def rewrite(self, doc, ctx):
        groups = []
        nl = doc.newline_style
        for cls, idx, real, first, rest in self._classes(doc):
            if parity(ctx.key, cls.name) == 0:
                continue
            params = self.decoy_params(ctx, cls.name, first, rest)
            if idx > 0:
                prev = cls.body[idx - 1]
                if (
                    isinstance(prev, ast.FunctionDef)
                    and prev.name == "__init__"
                    and len(prev.body) == 1
                    and isinstance(prev.body[0], ast.Pass)
                    and [x.arg for x in prev.args.args] == params
                ):
                    continue
            row = an.header_start_line(real)
            indent = doc.indent_of(row)
            if real.body[0].lineno > real.lineno:
                inner = doc.indent_of(real.body[0].lineno)
                if not inner.startswith(indent) or inner == indent:
                    inner = indent + "    "
            else:
                inner = indent + "    "
            gap = nl if row > 1 and not doc.lines[row - 2].strip() and idx > 0 else ""
            text = f"{indent}def __init__({', '.join(params)}):{nl}{inner}pass{nl}{gap}"
            at = doc.line_starts[row - 1]
            groups.append([SpanEdit(at, at, text)])
        return groups


_AUG_OPS = {
    ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.FloorDiv: "//",
    ast.Mod: "%", ast.Pow: "**", ast.LShift: "<<", ast.RShift: ">>",
    ast.BitOr: "|", ast.BitAnd: "&", ast.BitXor: "^",
}


def operator_token(doc: SourceDocument, left: ast.AST, right: ast.AST):
    """First operator token between two operands, skipping parentheses."""
    for t in doc.tokens_between(doc.span(left)[1], doc.span(right)[0]):
        if t.type == tokmod.OP and t.string not in "()":
            return t
    return None


class AugmentedAssignment(TransformRule):
    rule_id = "R4-augmented-assignment"
    category = REFACTORING
    description = "Rewrite `x = x <op> y` as `x <op>= y` when x is provably numeric."

    def _sites(self, doc):
        for node in doc.walk(ast.Assign):
            if len(node.targets) != 1 or not isinstance(node.targets[0], ast.Name):
                continue
            v = node.value
            if not (isinstance(v, ast.BinOp) and type(v.op) in _AUG_OPS):
                continue
            if not (isinstance(v.left, ast.Name) and v.left.id == node.targets[0].id):
                continue
            if id(node) in doc.fstring_inner or not an.is_numeric_operand(doc, v.left):
                continue
            op = operator_token(doc, v.left, v.right)
            if op is None:
                continue
            rhs = doc.slice(op.end, doc.span(node)[1]).strip()
            if "\n" in rhs and doc.span(v)[1] != doc.span(node)[1]:
                continue
            yield node, v, rhs

    def trigger_sites(self, doc, ctx):
        return [doc.span(s[0]) for s in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        return [
            doc.span(n) for n in doc.walk(ast.AugAssign)
            if isinstance(n.target, ast.Name) and type(n.op) in _AUG_OPS
        ]

    def rewrite(self, doc, ctx):
        return [
            [SpanEdit(*doc.span(node), f"{node.targets[0].id} {_AUG_OPS[type(v.op)]}= {rhs}")]
            for node, v, rhs in self._sites(doc)
        ]


class EmptyCollectionLiteral(TransformRule):
    rule_id = "R5-empty-literal"
    category = REFACTORING
    description = "Replace `list()`, `dict()`, `tuple()` with `[]`, `{}`, `()` when the builtin is not rebound."

    _LIT = {"list": "[]", "dict": "{}", "tuple": "()"}

    def _sites(self, doc):
        for n in doc.walk(ast.Call):
            if (
                isinstance(n.func, ast.Name)
                and n.func.id in self._LIT
                and not n.args
                and not n.keywords
                and id(n) not in doc.fstring_inner
                and an.builtin_available(doc, n.func.id)
            ):
                yield n

    def trigger_sites(self, doc, ctx):
        return [doc.span(n) for n in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        out = []
        for n in doc.walk((ast.List, ast.Tuple, ast.Dict)):
            if id(n) in doc.fstring_inner:
                continue
            if isinstance(n, ast.Dict):
                if not n.keys:
                    out.append(doc.span(n))
            elif not n.elts and isinstance(n.ctx, ast.Load):
                out.append(doc.span(n))
        return out

    def rewrite(self, doc, ctx):
        return [[SpanEdit(*doc.span(n), self._LIT[n.func.id])] for n in self._sites(doc)]


def _paren_wrapped_tuple(doc: SourceDocument, node: ast.Tuple) -> bool:
    text = doc.segment(node)
    return bool(node.elts) and text.startswith("(") and doc.span(node.elts[0])[0] > doc.span(node)[0]


class ReturnTupleParens(TransformRule):
    rule_id = "R6-return-tuple-parens"
    category = REFACTORING
    description = "Drop redundant parentheses around a returned tuple: `return (a, b)` -> `return a, b`."

    def _sites(self, doc):
        for n in doc.walk(ast.Return):
            v = n.value
            if isinstance(v, ast.Tuple) and _paren_wrapped_tuple(doc, v) and v.lineno == v.end_lineno:
                yield n, v

    def trigger_sites(self, doc, ctx):
        return [doc.span(n) for n, _ in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        return [
            doc.span(n) for n in doc.walk(ast.Return)
            if isinstance(n.value, ast.Tuple) and n.value.elts and not doc.segment(n.value).startswith("(")
        ]

    def rewrite(self, doc, ctx):
        return [[SpanEdit(*doc.span(v), doc.segment(v)[1:-1].strip())] for _, v in self._sites(doc)]


class MembershipTuple(TransformRule):
    rule_id = "R7-membership-tuple"
    category = REFACTORING
    description = "Test membership against a tuple literal instead of a list literal: `x in [a, b]` -> `x in (a, b)`."

    def _sites(self, doc):
        for n in doc.walk(ast.Compare):
            if id(n) in doc.fstring_inner:
                continue
            for op, comp in zip(n.ops, n.comparators):
                if (
                    isinstance(op, (ast.In, ast.NotIn))
                    and isinstance(comp, ast.List)
                    and not any(isinstance(e, ast.Starred) for e in comp.elts)
                ):
                    yield comp

    def trigger_sites(self, doc, ctx):
        return [doc.span(c) for c in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        out = []
        for n in doc.walk(ast.Compare):
            for op, comp in zip(n.ops, n.comparators):
                if isinstance(op, (ast.In, ast.NotIn)) and isinstance(comp, ast.Tuple):
                    if doc.segment(comp).startswith("("):
                        out.append(doc.span(comp))
        return out

    def rewrite(self, doc, ctx):
        groups = []
        for comp in self._sites(doc):
            s, e = doc.span(comp)
            edits = [SpanEdit(s, s + 1, "("), SpanEdit(e - 1, e, ")")]
            if len(comp.elts) == 1:
                last = doc.span(comp.elts[0])[1]
                if not any(t.string == "," for t in doc.tokens_between(last, e)):
                    edits.insert(1, SpanEdit(last, last, ","))
            groups.append(edits)
        return groups


class RangeDefaultStart(TransformRule):
    rule_id = "R8-range-default-start"
    category = REFACTORING
    description = "Drop an explicit zero start: `range(0, n)` -> `range(n)`."

    def _ranges(self, doc, nargs):
        if not an.builtin_available(doc, "range"):
            return
        for n in doc.walk(ast.Call):
            if (
                isinstance(n.func, ast.Name)
                and n.func.id == "range"
                and len(n.args) == nargs
                and not n.keywords
                and not any(isinstance(a, ast.Starred) for a in n.args)
                and id(n) not in doc.fstring_inner
            ):
                yield n

    def _sites(self, doc):
        for n in self._ranges(doc, 2):
            a0 = n.args[0]
            if isinstance(a0, ast.Constant) and type(a0.value) is int and a0.value == 0:
                if not doc.comments_between(doc.span(a0)[0], doc.span(n.args[1])[0]):
                    yield n

    def trigger_sites(self, doc, ctx):
        return [doc.span(n) for n in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        return [doc.span(n) for n in self._ranges(doc, 1)]

    def rewrite(self, doc, ctx):
        return [
            [SpanEdit(doc.span(n.args[0])[0], doc.span(n.args[1])[0], "")]
            for n in self._sites(doc)
        ]


class NegatedMembership(TransformRule):
    rule_id = "R9-not-in-is-not"
    category = REFACTORING
    description = "Rewrite `not a in b` / `not a is b` as `a not in b` / `a is not b`."

    _NEG = {ast.In: "not in", ast.Is: "is not"}

    def _sites(self, doc):
        for n in doc.walk(ast.UnaryOp):
            c = n.operand
            if (
                isinstance(n.op, ast.Not)
                and isinstance(c, ast.Compare)
                and len(c.ops) == 1
                and type(c.ops[0]) in self._NEG
                and id(n) not in doc.fstring_inner
                and an.plain_operator_gap(doc, c, c.left, c.comparators[0])
            ):
                yield n, c

    def trigger_sites(self, doc, ctx):
        return [doc.span(n) for n, _ in self._sites(doc)]

    def residual_sites(self, doc, ctx):
        return [
            doc.span(n) for n in doc.walk(ast.Compare)
            if any(isinstance(op, (ast.NotIn, ast.IsNot)) for op in n.ops)
        ]

    def rewrite(self, doc, ctx):
        return [
            [SpanEdit(*doc.span(n), f"{doc.segment(c.left)} {self._NEG[type(c.ops[0])]} {doc.segment(c.comparators[0])}")]
            for n, c in self._sites(doc)
        ]
