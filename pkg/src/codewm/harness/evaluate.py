"""Corpus-level detection, utility and length-ablation runs.

Reports serialize with a fixed key order.  Timing lives in its own
``timing`` section so two runs can be diffed with it stripped.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..adversary import AttackPreset, attack
from ..cst import parse
from ..errors import ParseError, WatermarkError
from ..keyed import SecretKey
from ..rules import RULES, RuleContext, RuleOptions, TransformRule, applicable_rules, get_rule
from ..watermark import ALL, MIN_RULES, N, applicable_ordering, check_n, embed, identify, n_selected
from .corpus import CorpusRecord
from .sandbox import SandboxRunner

log = logging.getLogger(__name__)

DEFAULT_EDGES = (0, 10, 25, 50, math.inf)

TP, TN, FP, FN = "TP", "TN", "FP", "FN"


def ratio(num: int | float, den: int | float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class RecordOutcome:
    """Per-record evidence; one line of the optional evidence file."""

    id: str
    label: str
    loc: int
    outcome: str
    verdict: str
    applicable_count: int
    n_checked: int
    per_rule: tuple[tuple[str, bool], ...]
    note: str | None
    embed_time: float | None
    identify_time: float

    def to_dict(self) -> dict:
        return {
            "id": self.id, "label": self.label, "loc": self.loc, "outcome": self.outcome,
            "verdict": self.verdict, "applicable_count": self.applicable_count,
            "n_checked": self.n_checked, "per_rule": [[r, a] for r, a in self.per_rule],
            "note": self.note,
        }


@dataclass(frozen=True)
class LengthBucket:
    lo: float
    hi: float
    members: int
    tpr: float

    @property
    def label(self) -> str:
        return f"[{self.lo:g}, {'inf' if math.isinf(self.hi) else format(self.hi, 'g')})"

    def to_dict(self) -> dict:
        return {
            "lo": self.lo, "hi": None if math.isinf(self.hi) else self.hi,
            "members": self.members, "tpr": self.tpr,
        }


@dataclass(frozen=True)
class UtilityReport:
    pass_rate_original: float
    pass_rate_watermarked: float
    degradation: float
    tests_total: int
    regressions: tuple[tuple[str, int, str, str], ...] = ()
    notes: tuple[str, ...] = ()

    def as_tuple(self) -> tuple[float, float, float]:
        return self.pass_rate_original, self.pass_rate_watermarked, self.degradation


@dataclass
class EvalReport:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    key_id: str = ""
    n: N = ALL
    preset: str | None = None
    min_rules: int = MIN_RULES
    records: int = 0
    parse_errors: int = 0
    pass_rate_original: float | None = None
    pass_rate_watermarked: float | None = None
    degradation: float | None = None
    length_buckets: list[LengthBucket] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    time_embed_mean: float = 0.0
    time_identify_mean: float = 0.0
    time_embed_median: float = 0.0
    time_identify_median: float = 0.0

    @property
    def acc(self) -> float:
        return ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn)

    @property
    def tpr(self) -> float:
        return ratio(self.tp, self.tp + self.fn)

    @property
    def fpr(self) -> float:
        return ratio(self.fp, self.fp + self.tn)

    def add_utility(self, util: UtilityReport) -> None:
        self.pass_rate_original = util.pass_rate_original
        self.pass_rate_watermarked = util.pass_rate_watermarked
        self.degradation = util.degradation
        self.notes.extend(util.notes)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "counts": {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn},
            "acc": self.acc,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "pass_rate_original": self.pass_rate_original,
            "pass_rate_watermarked": self.pass_rate_watermarked,
            "degradation": self.degradation,
            "length_buckets": [b.to_dict() for b in self.length_buckets],
            "config": {
                "key_id": self.key_id, "n": self.n, "preset": self.preset,
                "min_rules": self.min_rules,
            },
            "records": self.records,
            "parse_errors": self.parse_errors,
            "notes": list(self.notes),
        }
        if include_timing:
            out["timing"] = {
                "time_embed_mean": self.time_embed_mean,
                "time_identify_mean": self.time_identify_mean,
                "time_embed_median": self.time_embed_median,
                "time_identify_median": self.time_identify_median,
            }
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"


# -- detection -------------------------------------------------------------------


@dataclass(frozen=True)
class _Job:
    record: CorpusRecord
    key: SecretKey
    n: N
    preset: AttackPreset | None
    rule_ids: tuple[str, ...]
    options: RuleOptions
    min_rules: int


def _detect_one(job: _Job) -> RecordOutcome:
    rec = job.record
    rules = tuple(get_rule(r) for r in job.rule_ids)
    code, embed_time, note = rec.code, None, None
    if rec.label == "ai":
        try:
            res = embed(rec.code, job.key, job.n, rules=rules, options=job.options)
        except ParseError as exc:
            # not embeddable, hence not detectable
            return RecordOutcome(rec.id, rec.label, rec.length_loc, FN, "Unwatermarked", 0, 0, (),
                                 f"parse error: {exc}", None, 0.0)
        except WatermarkError as exc:
            return RecordOutcome(rec.id, rec.label, rec.length_loc, FN, "Unwatermarked", 0, 0, (),
                                 f"embed failed: {exc}", None, 0.0)
        code, embed_time = res.watermarked_code, res.elapsed
        if res.warnings:
            note = ",".join(res.warnings)
    if job.preset is not None:
        try:
            code = attack(code, job.preset)
        except ParseError:
            note = "attack skipped: input does not parse"
    verdict = identify(code, job.key, job.n, rules=rules, options=job.options, min_rules=job.min_rules)
    if rec.label == "ai":
        outcome = TP if verdict.watermarked else FN
    else:
        outcome = FP if verdict.watermarked else TN
    return RecordOutcome(
        rec.id, rec.label, rec.length_loc, outcome, verdict.label, verdict.applicable_count,
        verdict.n_checked, verdict.per_rule, verdict.note or note, embed_time, verdict.elapsed,
    )


def detect_records(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    n: N = ALL,
    attack_preset: AttackPreset | None = None,
    *,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
    min_rules: int = MIN_RULES,
    jobs: int = 1,
) -> list[RecordOutcome]:
    """Per-record outcomes in corpus order."""
    n = check_n(n)
    ids = tuple(r.rule_id for r in rules)
    work = [_Job(rec, key, n, attack_preset, ids, options, min_rules) for rec in corpus]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_detect_one, work, chunksize=4))
    return [_detect_one(j) for j in work]


def bucket_tpr(outcomes: Iterable[RecordOutcome], edges: Sequence[float] = DEFAULT_EDGES) -> tuple[list[LengthBucket], list[str]]:
    """TPR of ai-labeled outcomes per ``[lo, hi)`` LOC bucket; empty buckets are omitted."""
    edges = list(edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bucket edges must be strictly increasing with at least two entries")
    ai = [o for o in outcomes if o.label == "ai"]
    buckets, notes = [], []
    for lo, hi in zip(edges, edges[1:]):
        members = [o for o in ai if lo <= o.loc < hi]
        if not members:
            notes.append(f"length bucket [{lo:g}, {hi:g}) has no members; omitted")
            continue
        hits = sum(o.outcome == TP for o in members)
        buckets.append(LengthBucket(lo, hi, len(members), ratio(hits, len(members))))
    return buckets, notes


def build_report(
    outcomes: Sequence[RecordOutcome],
    key: SecretKey,
    n: N = ALL,
    preset: str | None = None,
    min_rules: int = MIN_RULES,
    edges: Sequence[float] = DEFAULT_EDGES,
) -> EvalReport:
    rep = EvalReport(key_id=key.key_id, n=n, preset=preset, min_rules=min_rules, records=len(outcomes))
    for o in outcomes:
        setattr(rep, o.outcome.lower(), getattr(rep, o.outcome.lower()) + 1)
        if o.note and o.note.startswith("parse error"):
            rep.parse_errors += 1
    rep.length_buckets, notes = bucket_tpr(outcomes, edges)
    rep.notes.extend(notes)
    embeds = [o.embed_time for o in outcomes if o.embed_time is not None]
    idents = [o.identify_time for o in outcomes]
    if embeds:
        rep.time_embed_mean, rep.time_embed_median = statistics.fmean(embeds), statistics.median(embeds)
    if idents:
        rep.time_identify_mean, rep.time_identify_median = statistics.fmean(idents), statistics.median(idents)
    return rep


def run_detection_eval(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    n: N = ALL,
    attack_preset: AttackPreset | None = None,
    *,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
    min_rules: int = MIN_RULES,
    edges: Sequence[float] = DEFAULT_EDGES,
    jobs: int = 1,
) -> tuple[EvalReport, list[RecordOutcome]]:
    """Embed ai records, optionally attack every record, identify all of them.

    With a preset, both attack scenarios run at once: ai records are attacked
    after watermarking, human records are attacked as they are.
    """
    outcomes = detect_records(corpus, key, n, attack_preset, rules=rules, options=options,
                              min_rules=min_rules, jobs=jobs)
    report = build_report(outcomes, key, n, attack_preset.name if attack_preset else None, min_rules, edges)
    return report, outcomes


def length_ablation(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    bucket_edges: Sequence[float] = DEFAULT_EDGES,
    n: N = ALL,
    **kwargs,
) -> tuple[list[LengthBucket], list[str]]:
    ai = [r for r in corpus if r.label == "ai"]
    return bucket_tpr(detect_records(ai, key, n, **kwargs), bucket_edges)


def write_evidence(outcomes: Iterable[RecordOutcome], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_dict()) + "\n")


# -- utility ---------------------------------------------------------------------


def run_utility_eval(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    n: N = ALL,
    *,
    watermark: bool = True,
    runner: SandboxRunner | None = None,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
) -> UtilityReport:
    """Pass rate over test cases before and after embedding.

    ``watermark=False`` runs the original code on both sides, which must give
    zero degradation.
    """
    runner = runner or SandboxRunner()
    pairs: list[tuple[CorpusRecord, str]] = []
    notes = []
    for rec in corpus:
        if not rec.tests:
            continue
        marked = rec.code
        if watermark:
            try:
                marked = embed(rec.code, key, n, rules=rules, options=options).watermarked_code
            except WatermarkError as exc:
                notes.append(f"{rec.id}: not embedded ({exc})")
        pairs.append((rec, marked))
    jobs = [(rec.code, t) for rec, _ in pairs for t in rec.tests]
    jobs += [(marked, t) for rec, marked in pairs for t in rec.tests]
    results = runner.run_many(jobs)
    half = len(results) // 2
    before, after = results[:half], results[half:]
    labels = [(rec.id, i) for rec, _ in pairs for i in range(len(rec.tests))]
    regressions = tuple(
        (rid, i, b.status, a.status)
        for (rid, i), b, a in zip(labels, before, after) if b.passed and not a.passed
    )
    p0 = ratio(sum(o.passed for o in before), half)
    p1 = ratio(sum(o.passed for o in after), half)
    return UtilityReport(p0, p1, p0 - p1, half, regressions, tuple(notes))


# -- natural-occurrence probabilities --------------------------------------------


def measure_rule_probabilities(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
) -> dict[str, float]:
    """Per rule, the share of human snippets it applies to that already satisfy it.

    Rules that apply to no human snippet are left out, so callers fall back
    to the default probability for them.
    """
    ctx = RuleContext(key, options)
    hits: dict[str, int] = {}
    seen: dict[str, int] = {}
    for rec in corpus:
        if rec.label != "human":
            continue
        doc = parse(rec.code)
        if not doc.parse_ok:
            continue
        for rid in applicable_rules(doc, ctx, rules):
            seen[rid] = seen.get(rid, 0) + 1
            out = get_rule(rid).apply(rec.code, ctx)
            if out.rstrip("\r\n") == rec.code.rstrip("\r\n"):
                hits[rid] = hits.get(rid, 0) + 1
    return {rid: hits.get(rid, 0) / seen[rid] for rid in sorted(seen)}


def expected_fpr(
    corpus: Sequence[CorpusRecord],
    key: SecretKey,
    probs: Mapping[str, float],
    n: N = ALL,
    *,
    rules: Sequence[TransformRule] = RULES,
    options: RuleOptions = RuleOptions(),
    min_rules: int = MIN_RULES,
    default: float = 0.5,
) -> float:
    """Mean over human snippets of the product bound for their selected rules."""
    n = check_n(n)
    floor = min_rules if n == ALL else min(min_rules, n)
    vals = []
    for rec in corpus:
        if rec.label != "human":
            continue
        try:
            ordering = applicable_ordering(rec.code, key, rules, options)
        except ParseError:
            vals.append(0.0)
            continue
        selected = ordering[: n_selected(n, len(ordering))]
        if len(selected) < floor:
            vals.append(0.0)
        else:
            vals.append(math.prod(probs.get(r, default) for r in selected))
    return statistics.fmean(vals) if vals else 0.0
