"""Rule catalog.

Rule ids are stable: they feed the keyed ordering, so renaming one changes
every watermark.  Ids starting ``R`` are refactorings, ``D`` reorderings
and ``F`` formatting rules.
"""

from __future__ import annotations

from typing import Iterable

from ..cst import SourceDocument
from .base import (
    CATEGORIES,
    FORMATTING,
    REFACTORING,
    REORDERING,
    ApplicabilityReport,
    RuleContext,
    RuleOptions,
    TransformRule,
)
from .formatting import (
    BracketAlignment,
    CommaWhitespace,
    DictColonSpacing,
    InlineCommentSpacing,
    KeywordEqualsSpacing,
    MethodBlankLines,
    OperatorWhitespace,
    TopLevelBlankLines,
)
from .refactor import (
    AugmentedAssignment,
    DecoyConstructor,
    EmptyCollectionLiteral,
    LoopToComprehension,
    MembershipTuple,
    NegatedMembership,
    RangeDefaultStart,
    RemoveUnnecessaryElse,
    ReturnTupleParens,
)
from .reorder import (
    AddOperandOrder,
    ComparisonOperandOrder,
    EqualityOperandOrder,
    IfElseBlockOrder,
    MultiplyOperandOrder,
    StrictComparisonOrder,
)

__all__ = [
    "CATEGORIES", "FORMATTING", "REFACTORING", "REORDERING", "RULES", "CORE_RULE_IDS",
    "ApplicabilityReport", "RuleContext", "RuleOptions", "TransformRule",
    "applicable_rules", "get_rule", "list_catalog", "resolve_rules",
]

_CLASSES = (
    RemoveUnnecessaryElse, LoopToComprehension, DecoyConstructor, AugmentedAssignment,
    EmptyCollectionLiteral, ReturnTupleParens, MembershipTuple, RangeDefaultStart,
    NegatedMembership, AddOperandOrder, ComparisonOperandOrder, IfElseBlockOrder,
    EqualityOperandOrder, MultiplyOperandOrder, StrictComparisonOrder,
    OperatorWhitespace, BracketAlignment, TopLevelBlankLines, CommaWhitespace,
    MethodBlankLines, KeywordEqualsSpacing, InlineCommentSpacing, DictColonSpacing,
)

RULES: tuple[TransformRule, ...] = tuple(sorted((c() for c in _CLASSES), key=lambda r: r.rule_id))
REGISTRY: dict[str, TransformRule] = {r.rule_id: r for r in RULES}

# The nine rules of the original published catalog.
CORE_RULE_IDS = (
    "R1-unnecessary-else", "R2-loop-to-comprehension", "R3-decoy-constructor",
    "D1-add-operand-order", "D2-comparison-operand-order", "D3-if-else-block-order",
    "F1-operator-whitespace", "F2-bracket-alignment", "F3-top-level-blank-lines",
)


def get_rule(rule_id: str) -> TransformRule:
    try:
        return REGISTRY[rule_id]
    except KeyError:
        raise ValueError(f"unknown rule id {rule_id!r}") from None


def resolve_rules(include: Iterable[str] | None = None, exclude: Iterable[str] | None = None) -> tuple[TransformRule, ...]:
    """The active catalog after include/exclude filtering (unknown ids raise)."""
    if include is not None and exclude is not None:
        raise ValueError("include and exclude lists are mutually exclusive")
    if include is not None:
        ids = set(include)
        for rid in ids:
            get_rule(rid)
        return tuple(r for r in RULES if r.rule_id in ids)
    if exclude is not None:
        ids = set(exclude)
        for rid in ids:
            get_rule(rid)
        return tuple(r for r in RULES if r.rule_id not in ids)
    return RULES


def applicable_rules(doc: SourceDocument, ctx: RuleContext, rules: Iterable[TransformRule] = RULES) -> list[str]:
    return [r.rule_id for r in rules if r.applicable(doc, ctx).applicable]


def list_catalog(rules: Iterable[TransformRule] = RULES) -> list[dict]:
    return [r.describe() for r in rules]
