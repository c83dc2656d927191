"""``codewm`` command line.

Subcommands share key loading, catalog filtering and the exit-code
contract: 0 on success, otherwise the ``exit_code`` of the error family
(2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .adversary import attack, get_preset, load_presets
from .errors import CorpusIOError, KeyFileError, WatermarkError
from .keyed import KEY_ENV, SecretKey, load_key, write_key_file
from .rules import RuleOptions, TransformRule, get_rule, resolve_rules
from .watermark import ALL, MIN_RULES, N, embed, identify

log = logging.getLogger("codewm")

USAGE_EXIT = 2
KEY_HINT = f"hint: create a key with `codewm keygen KEYFILE`, then pass --key KEYFILE or set {KEY_ENV}"


@dataclass(frozen=True)
class CliConfig:
    key_path: str | None
    n: N
    include: tuple[str, ...] | None
    exclude: tuple[str, ...] | None
    preset: str | None
    inputs: tuple[str, ...]
    out: str | None
    verbosity: int
    fmt: str
    jobs: int
    aggressive_reorder: bool
    min_rules: int

    @property
    def rule_ids(self) -> tuple[str, ...]:
        return tuple(r.rule_id for r in resolve_rules(self.include, self.exclude))

    @property
    def options(self) -> RuleOptions:
        return RuleOptions(aggressive_reorder=self.aggressive_reorder)


def _n_arg(text: str) -> N:
    if text.lower() == ALL:
        return ALL
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or '{ALL}', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("n must be at least 1")
    return value


def _id_list(text: str) -> tuple[str, ...]:
    ids = tuple(t.strip() for t in text.split(",") if t.strip())
    for rid in ids:
        try:
            get_rule(rid)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return ids


def _edges_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(math.inf if t.strip() in ("inf", "") else float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bucket edges {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more output (repeatable)")
    common.add_argument("--format", choices=("human", "structured"), default="human",
                        help="human-readable lines or one JSON object per line (default: human)")

    keyed = argparse.ArgumentParser(add_help=False)
    keyed.add_argument("--key", help=f"key file (default: ${KEY_ENV})")
    keyed.add_argument("--n", type=_n_arg, default=ALL,
                       help="number of keyed rules to embed/check, or 'all' (default)")
    group = keyed.add_mutually_exclusive_group()
    group.add_argument("--include-rules", type=_id_list, metavar="IDS",
                       help="comma-separated rule ids to use exclusively")
    group.add_argument("--exclude-rules", type=_id_list, metavar="IDS",
                       help="comma-separated rule ids to leave out")
    keyed.add_argument("--aggressive-reorder", action="store_true",
                       help="reorder + and * operands even when they are not provably numeric")
    keyed.add_argument("--min-rules", type=int, default=MIN_RULES,
                       help=f"applicable rules needed for a positive verdict (default: {MIN_RULES})")

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")

    parser = argparse.ArgumentParser(prog="codewm", description="Keyed, semantics-preserving watermarks for Python source.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="write a fresh 32-byte key file")
    p.add_argument("out", help="key file to create")
    p.add_argument("--force", action="store_true", help="overwrite an existing file")

    p = sub.add_parser("embed", parents=[common, keyed, batch], help="watermark files or a corpus")
    p.add_argument("inputs", nargs="+", help="source files, or one .jsonl corpus with --corpus")
    p.add_argument("--corpus", action="store_true", help="treat the input as a JSONL corpus")
    p.add_argument("--out", help="output file (single input) or directory; default: stdout")

    p = sub.add_parser("detect", parents=[common, keyed, batch], help="report whether files carry the mark")
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("attack", parents=[common, batch], help="apply an attack preset")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--preset", default="default", help="preset name (default: default)")
    p.add_argument("--out", help="output file (single input) or directory; default: stdout")

    p = sub.add_parser("eval", parents=[common, keyed, batch], help="run the evaluation harness on a corpus")
    p.add_argument("corpus", nargs="?", help="JSONL corpus (default: bundled fixture)")
    p.add_argument("--preset", help="attack preset applied before identification")
    p.add_argument("--utility", action="store_true", help="also run the sandboxed test suites")
    p.add_argument("--edges", type=_edges_arg, default=None, help="LOC bucket edges, e.g. 0,10,25,50,inf")
    p.add_argument("--evidence", help="write per-record evidence JSONL here")
    p.add_argument("--no-timing", action="store_true", help="leave timing out of the report")
    p.add_argument("--out", help="report path (default: stdout)")

    p = sub.add_parser("catalog", parents=[common], help="print the rule catalog")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--include-rules", type=_id_list, metavar="IDS")
    group.add_argument("--exclude-rules", type=_id_list, metavar="IDS")
    p.add_argument("--presets", action="store_true", help="print attack presets instead")
    return parser


def config_from_args(args: argparse.Namespace) -> CliConfig:
    inputs = getattr(args, "inputs", None) or []
    if args.command == "eval" and args.corpus:
        inputs = [args.corpus]
    return CliConfig(
        key_path=getattr(args, "key", None),
        n=getattr(args, "n", ALL),
        include=getattr(args, "include_rules", None),
        exclude=getattr(args, "exclude_rules", None),
        preset=getattr(args, "preset", None),
        inputs=tuple(inputs),
        out=getattr(args, "out", None),
        verbosity=args.verbose,
        fmt=args.format,
        jobs=max(1, getattr(args, "jobs", 1)),
        aggressive_reorder=getattr(args, "aggressive_reorder", False),
        min_rules=getattr(args, "min_rules", MIN_RULES),
    )


# -- file helpers ----------------------------------------------------------------


def read_source(path: str) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusIOError(f"{path}: {exc}") from exc


def write_text(path: Path, text: str, inputs: Sequence[str]) -> None:
    for src in inputs:
        if os.path.exists(src) and path.exists() and os.path.samefile(src, path):
            raise CorpusIOError(f"{path}: refusing to overwrite an input file")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CorpusIOError(f"{path}: {exc}") from exc


def output_paths(cfg: CliConfig, suffix: str = "") -> list[Path | None]:
    """Where each input's result goes; ``None`` means stdout."""
    if cfg.out is None:
        return [None] * len(cfg.inputs)
    out = Path(cfg.out)
    if len(cfg.inputs) == 1 and not out.is_dir():
        return [out]
    if out.exists() and not out.is_dir():
        raise CorpusIOError(f"{out}: must be a directory when several inputs are given")
    out.mkdir(parents=True, exist_ok=True)
    return [out / (Path(p).name + suffix) for p in cfg.inputs]


def _context(path: str, exc: WatermarkError) -> str:
    line = getattr(exc, "lineno", None)
    return f"{path}:{line}: {exc}" if line else f"{path}: {exc}"


def run_parallel(fn: Callable, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _rules(ids: Sequence[str]) -> tuple[TransformRule, ...]:
    return tuple(get_rule(r) for r in ids)


# -- per-file workers (top level so process pools can pickle them) ----------------


def _embed_file(job):
    path, key, n, ids, options = job
    try:
        res = embed(read_source(path), key, n, rules=_rules(ids), options=options)
    except WatermarkError as exc:
        return None, exc.exit_code, _context(path, exc)
    return res, 0, None


def _detect_file(job):
    path, key, n, ids, options, min_rules = job
    try:
        code = read_source(path)
    except WatermarkError as exc:
        return None, exc.exit_code, _context(path, exc)
    return identify(code, key, n, rules=_rules(ids), options=options, min_rules=min_rules), 0, None


def _attack_file(job):
    path, preset = job
    try:
        return attack(read_source(path), preset), 0, None
    except WatermarkError as exc:
        return None, exc.exit_code, _context(path, exc)


def _sidecar(res, source: str) -> dict:
    out = {"source": source}
    out.update({k: v for k, v in asdict(res).items() if k != "watermarked_code"})
    return out


# -- commands --------------------------------------------------------------------


def cmd_keygen(args, cfg: CliConfig) -> int:
    path = Path(args.out)
    if path.exists() and not args.force:
        raise CorpusIOError(f"{path}: already exists (use --force to replace)")
    try:
        key = write_key_file(path)
    except OSError as exc:
        raise CorpusIOError(f"{path}: {exc}") from exc
    if cfg.fmt == "structured":
        print(json.dumps({"path": str(path), "key_id": key.key_id}))
    else:
        print(f"wrote {path} (key id {key.key_id})")
    return 0


def _emit_errors(errors: list[tuple[int, str]]) -> int:
    for _, msg in errors:
        print(f"codewm: error: {msg}", file=sys.stderr)
    return errors[0][0] if errors else 0


def cmd_embed(args, cfg: CliConfig, key: SecretKey) -> int:
    ids = cfg.rule_ids
    if args.corpus:
        return _embed_corpus(cfg, key, ids)
    outs = output_paths(cfg)
    results = run_parallel(_embed_file, [(p, key, cfg.n, ids, cfg.options) for p in cfg.inputs], cfg.jobs)
    errors = []
    for path, dest, (res, code, msg) in zip(cfg.inputs, outs, results):
        if res is None:
            errors.append((code, msg))
            continue
        if dest is None:
            sys.stdout.write(res.watermarked_code)
        else:
            write_text(dest, res.watermarked_code, cfg.inputs)
            write_text(dest.with_name(dest.name + ".embed.json"),
                       json.dumps(_sidecar(res, path), indent=2) + "\n", cfg.inputs)
        if cfg.verbosity:
            print(f"{path}: applied {', '.join(res.applied_rule_ids) or 'nothing'} "
                  f"({res.applicable_count} applicable, {res.fixed_point_passes} pass(es))", file=sys.stderr)
    return _emit_errors(errors)


def _embed_corpus(cfg: CliConfig, key: SecretKey, ids) -> int:
    from .harness.corpus import CorpusRecord, load_corpus, write_corpus

    if len(cfg.inputs) != 1 or cfg.out is None:
        raise WatermarkError("--corpus takes exactly one input and requires --out")
    records = load_corpus(cfg.inputs[0])
    rules = _rules(ids)
    out, sidecars, errors = [], [], []
    for rec in records:
        try:
            res = embed(rec.code, key, cfg.n, rules=rules, options=cfg.options)
        except WatermarkError as exc:
            errors.append((exc.exit_code, _context(rec.id, exc)))
            out.append(rec)
            continue
        out.append(CorpusRecord(rec.id, res.watermarked_code, rec.label, rec.tests, rec.source))
        sidecars.append(json.dumps(_sidecar(res, rec.id)))
    dest = Path(cfg.out)
    if dest.exists() and os.path.samefile(dest, cfg.inputs[0]):
        raise CorpusIOError(f"{dest}: refusing to overwrite an input file")
    write_corpus(out, dest)
    write_text(dest.with_name(dest.name + ".embed.jsonl"), "".join(s + "\n" for s in sidecars), cfg.inputs)
    return _emit_errors(errors)


def format_verdict(path: str, v, cfg: CliConfig) -> str:
    if cfg.fmt == "structured":
        return json.dumps({
            "path": path, "label": v.label, "applicable_count": v.applicable_count,
            "n_checked": v.n_checked, "fp_estimate": v.fp_estimate,
            "per_rule": [[r, a] for r, a in v.per_rule], "note": v.note,
        })
    line = f"{path}: {v.label}"
    if cfg.verbosity:
        line += f" (checked {v.n_checked} of {v.applicable_count} applicable, fp<={v.fp_estimate:.4g})"
        if v.note:
            line += f" [{v.note}]"
        for rid, ok in v.per_rule:
            line += f"\n  {'ok  ' if ok else 'FAIL'} {rid}"
    return line


def cmd_detect(args, cfg: CliConfig, key: SecretKey) -> int:
    ids = cfg.rule_ids
    jobs = [(p, key, cfg.n, ids, cfg.options, cfg.min_rules) for p in cfg.inputs]
    errors = []
    for path, (v, code, msg) in zip(cfg.inputs, run_parallel(_detect_file, jobs, cfg.jobs)):
        if v is None:
            errors.append((code, msg))
        else:
            print(format_verdict(path, v, cfg))
    return _emit_errors(errors)


def cmd_attack(args, cfg: CliConfig) -> int:
    try:
        preset = get_preset(cfg.preset or "default")
    except ValueError as exc:
        print(f"codewm: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    outs = output_paths(cfg)
    errors = []
    results = run_parallel(_attack_file, [(p, preset) for p in cfg.inputs], cfg.jobs)
    for dest, (text, code, msg) in zip(outs, results):
        if text is None:
            errors.append((code, msg))
        elif dest is None:
            sys.stdout.write(text)
        else:
            write_text(dest, text, cfg.inputs)
    return _emit_errors(errors)


def cmd_eval(args, cfg: CliConfig, key: SecretKey) -> int:
    from .harness.corpus import load_bundled, load_corpus
    from .harness.evaluate import DEFAULT_EDGES, run_detection_eval, run_utility_eval, write_evidence
    from .harness.sandbox import SandboxRunner

    records = load_corpus(args.corpus) if args.corpus else load_bundled()
    preset = None
    if cfg.preset:
        try:
            preset = get_preset(cfg.preset)
        except ValueError as exc:
            print(f"codewm: error: {exc}", file=sys.stderr)
            return USAGE_EXIT
    rules = _rules(cfg.rule_ids)
    report, outcomes = run_detection_eval(
        records, key, cfg.n, preset, rules=rules, options=cfg.options,
        min_rules=cfg.min_rules, edges=args.edges or DEFAULT_EDGES, jobs=cfg.jobs,
    )
    if args.utility:
        runner = SandboxRunner(workers=max(4, cfg.jobs))
        report.add_utility(run_utility_eval(records, key, cfg.n, runner=runner, rules=rules, options=cfg.options))
    if args.evidence:
        write_evidence(outcomes, args.evidence)
    text = report.to_json(include_timing=not args.no_timing)
    if cfg.out:
        write_text(Path(cfg.out), text, cfg.inputs)
    if cfg.fmt == "structured":
        if not cfg.out:
            sys.stdout.write(json.dumps(report.to_dict(not args.no_timing)) + "\n")
    elif cfg.out:
        print(f"acc={report.acc:.4f} tpr={report.tpr:.4f} fpr={report.fpr:.4f} "
              f"(tp={report.tp} tn={report.tn} fp={report.fp} fn={report.fn}) -> {cfg.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_catalog(args, cfg: CliConfig) -> int:
    if args.presets:
        for preset in load_presets().values():
            if cfg.fmt == "structured":
                print(json.dumps(asdict(preset)))
            else:
                print(f"{preset.name}: {len(preset.rules)} perturbations, seed {preset.seed}")
                for rid in preset.rules:
                    print(f"  {rid}")
        return 0
    manifest = json.loads(resources.files("codewm").joinpath("data/catalog.json").read_text(encoding="utf-8"))
    wanted = set(cfg.rule_ids)
    for entry in manifest["rules"]:
        if entry["rule_id"] not in wanted:
            continue
        if cfg.fmt == "structured":
            print(json.dumps(entry))
        else:
            mark = "keyed" if entry["uses_keyed_hash"] else "     "
            print(f"{entry['rule_id']:<34} {entry['category']:<12} {mark}  {entry['description']}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG,
        format="codewm: %(levelname)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        if args.command == "keygen":
            return cmd_keygen(args, cfg)
        if args.command == "attack":
            return cmd_attack(args, cfg)
        if args.command == "catalog":
            return cmd_catalog(args, cfg)
        key = load_key(cfg.key_path)
        return {"embed": cmd_embed, "detect": cmd_detect, "eval": cmd_eval}[args.command](args, cfg, key)
    except KeyFileError as exc:
        print(f"codewm: error: {exc}\n{KEY_HINT}", file=sys.stderr)
        return exc.exit_code
    except WatermarkError as exc:
        print(f"codewm: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"codewm: error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
