"""Reordering rules: swap commutative operands or branch blocks by keyed digest."""

from __future__ import annotations

import ast
import token as tokmod

from ..cst import SourceDocument, SpanEdit
from ..keyed import Order, canonical_text, operand_order
from . import analysis as an
from .base import REORDERING, TransformRule
from .refactor import else_token, line_tokens, _starts_with_keyword


def canon(node: ast.AST) -> str:
    """Whitespace-free normal form used as the digest payload."""
    return canonical_text(ast.unparse(node))


def _op_tokens(doc: SourceDocument, left: ast.AST, right: ast.AST):
    return [
        t for t in doc.tokens_between(doc.span(left)[1], doc.span(right)[0])
        if t.type in (tokmod.OP, tokmod.NAME) and t.string not in "()"
    ]


class _OperandSwap(TransformRule):
    """Shared logic: binary site ``left OP right`` reordered by keyed digest."""

    category = REORDERING
    uses_keyed_hash = True
    flip: dict = {}

    def _pairs(self, doc, ctx):
        raise NotImplementedError

    def _sites(self, doc, ctx):
        for node, left, right in self._pairs(doc, ctx):
            if id(node) in doc.fstring_inner:
                continue
            if not an.plain_operator_gap(doc, node, left, right):
                continue
            ops = _op_tokens(doc, left, right)
            if len(ops) != 1:
                continue
            yield node, left, right, ops[0]

    def trigger_sites(self, doc, ctx):
        return [doc.span(s[0]) for s in self._sites(doc, ctx)]

    residual_sites = trigger_sites

    def rewrite(self, doc, ctx):
        groups = []
        for node, left, right, op in self._sites(doc, ctx):
            if operand_order(ctx.key, canon(left), canon(right)) is Order.KEEP:
                continue
            ls, le = doc.span(left)
            rs, re_ = doc.span(right)
            text = (
                doc.slice(rs, re_) + doc.slice(le, op.start)
                + self.flip.get(op.string, op.string)
                + doc.slice(op.end, rs) + doc.slice(ls, le)
            )
            groups.append([SpanEdit(ls, re_, text)])
        return groups


def _numeric_pair(doc, node, ctx) -> bool:
    if ctx.options.aggressive_reorder:
        return all(
            isinstance(x, ast.Name) or an.is_numeric_literal(x)
            for x in (node.left, node.right)
        )
    return an.is_numeric_operand(doc, node.left) and an.is_numeric_operand(doc, node.right)


class AddOperandOrder(_OperandSwap):
    rule_id = "D1-add-operand-order"
    description = (
        "Order the operands of `a + b` by keyed digest when both are names or "
        "numeric literals proven numeric (any names under aggressive reorder)."
    )

    def _pairs(self, doc, ctx):
        for n in doc.walk(ast.BinOp):
            if isinstance(n.op, ast.Add) and _numeric_pair(doc, n, ctx):
                yield n, n.left, n.right


class MultiplyOperandOrder(_OperandSwap):
    rule_id = "D5-multiply-operand-order"
    description = "Order the operands of numeric `a * b` by keyed digest."

    def _pairs(self, doc, ctx):
        for n in doc.walk(ast.BinOp):
            if isinstance(n.op, ast.Mult) and _numeric_pair(doc, n, ctx):
                yield n, n.left, n.right


class _CompareSwap(_OperandSwap):
    ops: tuple = ()

    def _pairs(self, doc, ctx):
        for n in doc.walk(ast.Compare):
            if (
                len(n.ops) == 1
                and isinstance(n.ops[0], self.ops)
                and an.is_simple_operand(n.left)
                and an.is_simple_operand(n.comparators[0])
            ):
                yield n, n.left, n.comparators[0]


class ComparisonOperandOrder(_CompareSwap):
    rule_id = "D2-comparison-operand-order"
    description = "Order the operands of `<=` / `>=` by keyed digest, mirroring the operator."
    ops = (ast.LtE, ast.GtE)
    flip = {"<=": ">=", ">=": "<="}


class EqualityOperandOrder(_CompareSwap):
    rule_id = "D4-equality-operand-order"
    description = "Order the operands of `==` / `!=` by keyed digest."
    ops = (ast.Eq, ast.NotEq)


class StrictComparisonOrder(_CompareSwap):
    rule_id = "D6-strict-comparison-order"
    description = "Order the operands of `<` / `>` by keyed digest, mirroring the operator."
    ops = (ast.Lt, ast.Gt)
    flip = {"<": ">", ">": "<"}


_NEGATED = {
    ast.Eq: "!=", ast.NotEq: "==", ast.Is: "is not", ast.IsNot: "is",
    ast.In: "not in", ast.NotIn: "in",
}
_ATOMS = (
    ast.Name, ast.Attribute, ast.Call, ast.Subscript, ast.Constant, ast.List,
    ast.Dict, ast.Set, ast.ListComp, ast.SetComp, ast.DictComp, ast.JoinedStr, ast.Await,
)


def negate(doc: SourceDocument, cond: ast.expr) -> str:
    """Source text of the logical negation of ``cond``."""
    text = doc.segment(cond)
    multiline = "\n" in text
    if isinstance(cond, ast.UnaryOp) and isinstance(cond.op, ast.Not):
        inner = doc.segment(cond.operand)
        if "\n" in inner or isinstance(cond.operand, (ast.Lambda, ast.NamedExpr)):
            return f"({inner})"
        return inner
    if (
        isinstance(cond, ast.Compare)
        and len(cond.ops) == 1
        and type(cond.ops[0]) in _NEGATED
        and an.plain_operator_gap(doc, cond, cond.left, cond.comparators[0])
    ):
        left, right = cond.left, cond.comparators[0]
        ops = _op_tokens(doc, left, right)
        return (
            doc.segment(left) + doc.slice(doc.span(left)[1], ops[0].start)
            + _NEGATED[type(cond.ops[0])]
            + doc.slice(ops[-1].end, doc.span(right)[0]) + doc.segment(right)
        )
    if isinstance(cond, _ATOMS) and not multiline:
        return f"not {text}"
    return f"not ({text})"


class IfElseBlockOrder(TransformRule):
    rule_id = "D3-if-else-block-order"
    category = REORDERING
    uses_keyed_hash = True
    description = (
        "Order the two blocks of an if/else by keyed digest of their normalised "
        "text, negating the condition when they are swapped."
    )
    grammar_notes = (
        "Plain `if`/`else` only (no elif chains); ordering comparisons are "
        "negated as `not (...)` so NaN and set semantics are kept."
    )

    def _sites(self, doc):
        for node in doc.walk(ast.If):
            if not _starts_with_keyword(doc, node, b"if"):
                continue
            tok = else_token(doc, node)
            if tok is None:
                continue
            row = tok.srow
            words = [t.string for t in line_tokens(doc, row) if t.type not in (tokmod.NEWLINE, tokmod.NL, tokmod.COMMENT)]
            if words != ["else", ":"]:
                continue
            body_first = node.body[0].lineno
            head_end = doc.line_of(doc.span(node.test)[1])
            colon_rows = [
                t.srow for t in doc.tokens_between(doc.span(node.test)[1], doc.span(node.body[0])[0])
                if t.string == ":"
            ]
            if not colon_rows or body_first <= colon_rows[0] or node.orelse[0].lineno <= row:
                continue
            if doc.indent_of(body_first) != doc.indent_of(node.orelse[0].lineno):
                continue
            if head_end > colon_rows[0]:
                continue
            yield node, colon_rows[0], row

    def trigger_sites(self, doc, ctx):
        return [doc.span(s[0]) for s in self._sites(doc)]

    residual_sites = trigger_sites

    def rewrite(self, doc, ctx):
        groups = []
        nl = doc.newline_style
        for node, colon_row, else_row in self._sites(doc):
            then_key = "".join(canon(s) for s in node.body)
            else_key = "".join(canon(s) for s in node.orelse)
            if operand_order(ctx.key, then_key, else_key) is Order.KEEP:
                continue
            last = node.orelse[-1].end_lineno
            then_text = "".join(doc.lines[colon_row:else_row - 1])
            else_line = doc.lines[else_row - 1]
            else_text = "".join(doc.lines[else_row:last])
            eof_open = not else_text.endswith("\n")
            if eof_open:
                else_text += nl
            block = else_text + else_line + then_text
            if eof_open:
                block = block[: -len(nl)]
            start = doc.line_starts[colon_row]
            end = doc.line_starts[last]
            groups.append([
                SpanEdit(*doc.span(node.test), negate(doc, node.test)),
                SpanEdit(start, end, block),
            ])
        return groups
