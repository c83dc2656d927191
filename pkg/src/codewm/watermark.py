"""Embedding and identification.

``embed`` applies the first ``n`` applicable rules in keyed order and
repeats until a pass changes nothing.  ``identify`` recomputes the same
ordering and checks that each selected rule is already a no-op.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .cst import SourceDocument, parse
from .errors import BadProbability, FixedPointNotReached, ParseError
from .keyed import RuleOrdering, SecretKey, sort_rules
from .rules import RULES, RuleContext, RuleOptions, TransformRule, applicable_rules, get_rule

log = logging.getLogger(__name__)

ALL = "all"
MIN_RULES = 4
MAX_PASSES = 5
DEFAULT_RULE_PROBABILITY = 0.5

WATERMARKED = "Watermarked"
UNWATERMARKED = "Unwatermarked"

N = Union[int, str]


@dataclass(frozen=True)
class EmbedResult:
    watermarked_code: str
    applied_rule_ids: tuple[str, ...]
    applicable_count: int
    n_used: int
    fixed_point_passes: int
    elapsed: float
    ordering: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class Verdict:
    label: str
    per_rule: tuple[tuple[str, bool], ...]
    applicable_count: int
    n_checked: int
    fp_estimate: float
    elapsed: float
    ordering: tuple[str, ...] = ()
    note: str | None = None

    @property
    def watermarked(self) -> bool:
        return self.label == WATERMARKED


def check_n(n: N) -> N:
    if n == ALL:
        return ALL
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer or {ALL!r}, got {n!r}")
    return n


def n_selected(n: N, applicable_count: int) -> int:
    return applicable_count if n == ALL else min(n, applicable_count)


def applicable_ordering(
    code: str | SourceDocument,
    key: SecretKey,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
) -> RuleOrdering:
    """Applicable set of ``code`` in keyed order.

    Shared verbatim by :func:`embed` and :func:`identify`, which is what makes
    the detector mirror the embedder.
    """
    doc = parse(code) if isinstance(code, str) else code
    if not doc.parse_ok:
        raise ParseError(f"input does not parse: {doc.error}", doc.error_lineno)
    return sort_rules(key, applicable_rules(doc, RuleContext(key, options), rules))


def embed(
    code: str,
    key: SecretKey,
    n: N = ALL,
    *,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
    max_passes: int = MAX_PASSES,
) -> EmbedResult:
    n = check_n(n)
    t0 = time.perf_counter()
    ctx = RuleContext(key, options)
    ordering = applicable_ordering(code, key, rules, options)
    if not len(ordering):
        log.warning("NO_APPLICABLE: no catalog rule applies; code returned unchanged")
        return EmbedResult(code, (), 0, 0, 0, time.perf_counter() - t0, (), ("NO_APPLICABLE",))
    text = code
    for passes in range(1, max_passes + 1):
        ordering = applicable_ordering(text, key, rules, options)
        selected = ordering[: n_selected(n, len(ordering))]
        new = text
        for rid in selected:
            new = get_rule(rid).apply(new, ctx)
        if new == text:
            return EmbedResult(
                text, tuple(selected), len(ordering), len(selected), passes,
                time.perf_counter() - t0, tuple(ordering),
            )
        text = new
    raise FixedPointNotReached(f"embedding did not reach a fixed point in {max_passes} passes")


def identify(
    code: str,
    key: SecretKey,
    n: N = ALL,
    *,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
    min_rules: int = MIN_RULES,
    rule_probabilities: Mapping[str, float] | None = None,
) -> Verdict:
    """Verdict for ``code``; never raises on bad input.

    The floor on checked rules is ``min(min_rules, n)`` so that asking for
    fewer rules can never turn a positive verdict negative.
    """
    n = check_n(n)
    t0 = time.perf_counter()
    doc = parse(code)
    if not doc.parse_ok:
        return Verdict(UNWATERMARKED, (), 0, 0, 1.0, time.perf_counter() - t0, (), f"parse failure: {doc.error}")
    ctx = RuleContext(key, options)
    ordering = applicable_ordering(doc, key, rules, options)
    selected = ordering[: n_selected(n, len(ordering))]
    per_rule = []
    current = code
    for rid in selected:
        try:
            new = get_rule(rid).apply(current, ctx)
        except Exception as exc:  # a crashing rule is evidence of absence, not a detector failure
            log.warning("%s raised during identification: %s", rid, exc)
            per_rule.append((rid, False))
            break
        same = new.rstrip("\r\n") == current.rstrip("\r\n")
        per_rule.append((rid, same))
        if not same:
            break
        current = new
    floor = min_rules if n == ALL else min(min_rules, n)
    ok = len(per_rule) == len(selected) and all(a for _, a in per_rule) and len(per_rule) >= floor
    probs = rule_probabilities or {}
    fp = estimate_fp([probs.get(rid, DEFAULT_RULE_PROBABILITY) for rid, _ in per_rule], len(per_rule))
    note = None
    if not ordering:
        note = "no applicable rules"
    elif len(selected) < floor:
        note = f"only {len(selected)} applicable rule(s); {floor} required"
    return Verdict(
        WATERMARKED if ok else UNWATERMARKED, tuple(per_rule), len(ordering), len(per_rule),
        fp, time.perf_counter() - t0, tuple(ordering), note,
    )


def estimate_fp(per_rule_probs: Iterable[float], n: int) -> float:
    """Product of the first ``n`` natural-occurrence probabilities."""
    probs = list(per_rule_probs)
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise BadProbability(f"n must be a non-negative integer, got {n!r}")
    if n > len(probs):
        raise BadProbability(f"need {n} probabilities, got {len(probs)}")
    for p in probs[:n]:
        if not isinstance(p, (int, float)) or math.isnan(p) or not 0.0 <= p <= 1.0:
            raise BadProbability(f"probability out of range: {p!r}")
    return float(math.prod(probs[:n]))
