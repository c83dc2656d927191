"""Transformation rule contract and the generic apply loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import ClassVar

from ..cst import SourceDocument, SpanEdit, apply_edits, parse
from ..errors import ParseError, TransformFailed
from ..keyed import SecretKey

log = logging.getLogger(__name__)

REFACTORING = "Refactoring"
REORDERING = "Reordering"
FORMATTING = "Formatting"
CATEGORIES = (REFACTORING, REORDERING, FORMATTING)

Span = tuple[int, int]
# One match site's rewrite: the edits must be applied together or not at all.
SiteEdits = list[SpanEdit]


@dataclass(frozen=True)
class RuleOptions:
    aggressive_reorder: bool = False


@dataclass(frozen=True)
class RuleContext:
    key: SecretKey
    options: RuleOptions = field(default_factory=RuleOptions)


@dataclass(frozen=True)
class ApplicabilityReport:
    rule_id: str
    applicable: bool
    match_count: int
    matched_spans: tuple[Span, ...]


class TransformRule:
    """Base class for catalog entries.

    Subclasses provide ``trigger_sites`` (pre-form matches),
    ``residual_sites`` (post-form matches) and ``rewrite`` (one batch of
    per-site edits).  :meth:`apply` repeats ``rewrite`` until the text stops
    changing, which makes every rule idempotent by construction as long as the
    batches converge.
    """

    rule_id: ClassVar[str]
    category: ClassVar[str]
    uses_keyed_hash: ClassVar[bool] = False
    description: ClassVar[str] = ""
    grammar_notes: ClassVar[str] = "Python 3.8+"
    max_rounds: ClassVar[int] = 25

    def trigger_sites(self, doc: SourceDocument, ctx: RuleContext) -> list[Span]:
        raise NotImplementedError

    def residual_sites(self, doc: SourceDocument, ctx: RuleContext) -> list[Span]:
        raise NotImplementedError

    def rewrite(self, doc: SourceDocument, ctx: RuleContext) -> list[SiteEdits]:
        raise NotImplementedError

    # -- public surface ---------------------------------------------------

    def applicable(self, doc: SourceDocument, ctx: RuleContext) -> ApplicabilityReport:
        spans = sorted(set(self.trigger_sites(doc, ctx)) | set(self.residual_sites(doc, ctx)))
        return ApplicabilityReport(self.rule_id, bool(spans), len(spans), tuple(spans))

    def apply(self, code: str, ctx: RuleContext) -> str:
        doc = parse(code)
        if not doc.parse_ok:
            raise ParseError(f"{self.rule_id}: input does not parse: {doc.error}", doc.error_lineno)
        text = code
        for _ in range(self.max_rounds):
            new = self._one_round(doc, ctx)
            if new == text:
                return text
            text = new
            doc = parse(text)
        raise TransformFailed(f"{self.rule_id}: rewrite did not converge in {self.max_rounds} rounds")

    def _one_round(self, doc: SourceDocument, ctx: RuleContext) -> str:
        groups = [g for g in self.rewrite(doc, ctx) if g and _changes(doc, g)]
        if not groups:
            return doc.text
        kept = _non_overlapping(groups)
        new = apply_edits(doc, [e for g in kept for e in g])
        if parse(new).parse_ok:
            return new
        # Some site produced invalid code: keep only the sites that are valid
        # on their own and log the rest.
        good = []
        for g in kept:
            candidate = apply_edits(doc, g)
            if parse(candidate).parse_ok:
                good.append(g)
            else:
                log.warning("%s: TRANSFORM_FAILED at bytes %d-%d, site skipped", self.rule_id, g[0].start, g[-1].end)
        new = apply_edits(doc, [e for g in good for e in g])
        if not parse(new).parse_ok:
            log.warning("%s: TRANSFORM_FAILED, combined rewrite invalid; snippet left unchanged", self.rule_id)
            return doc.text
        return new

    def describe(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "category": self.category,
            "uses_keyed_hash": self.uses_keyed_hash,
            "description": self.description,
            "grammar_notes": self.grammar_notes,
        }

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.rule_id}>"


def _changes(doc: SourceDocument, group: SiteEdits) -> bool:
    return any(doc.slice(e.start, e.end) != e.replacement for e in group)


def _non_overlapping(groups: list[SiteEdits]) -> list[SiteEdits]:
    """Left-to-right; a site overlapping an earlier kept site waits a round."""
    kept: list[SiteEdits] = []
    taken: list[Span] = []
    for g in sorted(groups, key=lambda g: min(e.start for e in g)):
        spans = [(e.start, e.end) for e in g]
        clash = any(
            s < te and ts < e or (s == e == ts == te)
            for s, e in spans
            for ts, te in taken
        )
        if clash:
            continue
        kept.append(g)
        taken.extend(spans)
    return kept
