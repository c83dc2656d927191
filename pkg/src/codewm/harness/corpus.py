"""Line-delimited JSON corpus: one ``{"id", "code", "label", "tests"}`` object per line.

Test objects take one of three shapes:

* ``{"call": "f(1, 2)", "expected": "3"}``: passes when ``repr`` of the
  evaluated call equals ``expected``;
* ``{"input": "1 2\\n", "expected": "3\\n"}``: the snippet runs as a script on
  that stdin and its stdout (trailing whitespace ignored) must match;
* ``{"check": "assert f(1) == 2"}``: passes when the statements run without
  raising.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable

from ..errors import CorpusIOError, SchemaError

LABELS = ("ai", "human")


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    code: str
    label: str
    tests: tuple[dict, ...] = ()
    source: str | None = field(default=None, compare=False)

    @property
    def length_loc(self) -> int:
        return len(self.code.splitlines())

    def to_json(self) -> str:
        obj = {"id": self.id, "label": self.label, "code": self.code, "tests": list(self.tests)}
        if self.source:
            obj["source"] = self.source
        return json.dumps(obj, ensure_ascii=False)


def _validate_test(test, line: int) -> dict:
    if not isinstance(test, dict):
        raise SchemaError("each test must be an object", line)
    kinds = [k for k in ("call", "input", "check") if k in test]
    if len(kinds) != 1:
        raise SchemaError("a test needs exactly one of 'call', 'input' or 'check'", line)
    kind = kinds[0]
    if not isinstance(test[kind], str):
        raise SchemaError(f"test field {kind!r} must be a string", line)
    if kind != "check" and not isinstance(test.get("expected"), str):
        raise SchemaError(f"{kind!r} tests need a string 'expected'", line)
    return dict(test)


def parse_record(obj, line: int) -> CorpusRecord:
    if not isinstance(obj, dict):
        raise SchemaError("record must be a JSON object", line)
    for name in ("id", "code", "label"):
        if name not in obj:
            raise SchemaError(f"missing field {name!r}", line)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise SchemaError("'id' must be a non-empty string", line)
    if not isinstance(obj["code"], str):
        raise SchemaError("'code' must be a string", line)
    if obj["label"] not in LABELS:
        raise SchemaError(f"'label' must be one of {LABELS}, got {obj['label']!r}", line)
    tests = obj.get("tests")
    if tests is None:
        tests = []
    if not isinstance(tests, list):
        raise SchemaError("'tests' must be a list", line)
    return CorpusRecord(
        obj["id"], obj["code"], obj["label"],
        tuple(_validate_test(t, line) for t in tests), obj.get("source"),
    )


def load_corpus(path: str | os.PathLike) -> list[CorpusRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusIOError(f"cannot read corpus {path}: {exc}") from exc
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from exc
        rec = parse_record(obj, lineno)
        if rec.id in seen:
            raise SchemaError(f"duplicate id {rec.id!r}", lineno)
        seen.add(rec.id)
        records.append(rec)
    return records


def write_corpus(records: Iterable[CorpusRecord], path: str | os.PathLike) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(rec.to_json() + "\n")
    except OSError as exc:
        raise CorpusIOError(f"cannot write corpus {path}: {exc}") from exc


def bundled_corpus_path():
    return resources.files("codewm").joinpath("data/corpus.jsonl")


def load_bundled() -> list[CorpusRecord]:
    with resources.as_file(bundled_corpus_path()) as path:
        return load_corpus(path)


# -- adapters for public benchmark layouts ---------------------------------------


def from_mbpp(row: dict, label: str = "human") -> CorpusRecord:
    """MBPP rows: ``task_id``, ``code``, ``test_list`` of assert statements."""
    setup = row.get("test_setup_code") or ""
    tests = tuple({"check": (setup + "\n" + t).strip()} for t in row.get("test_list", []))
    return CorpusRecord(f"mbpp-{row['task_id']}", row["code"], label, tests, "mbpp")


def from_humaneval(row: dict, label: str = "human") -> CorpusRecord:
    """HumanEval(+) rows: ``prompt`` + ``canonical_solution``, ``test`` defines ``check``."""
    code = row["prompt"] + row["canonical_solution"]
    check = f"{row['test']}\ncheck({row['entry_point']})\n"
    rid = "humaneval-" + str(row["task_id"]).replace("/", "-")
    return CorpusRecord(rid, code, label, ({"check": check},), "humaneval")


def from_apps(row: dict, label: str = "human") -> CorpusRecord:
    """APPS rows: JSON-encoded ``solutions`` and ``input_output`` fields.

    Standard-input problems become stdin tests; call-based problems
    (``fn_name`` present) become check tests.
    """
    solutions = row["solutions"]
    if isinstance(solutions, str):
        solutions = json.loads(solutions)
    io = row.get("input_output") or {}
    if isinstance(io, str):
        io = json.loads(io) if io else {}
    inputs, outputs = io.get("inputs", []), io.get("outputs", [])
    fn = io.get("fn_name")
    tests = []
    for given, want in zip(inputs, outputs):
        if fn:
            tests.append({"check": f"_r = {fn}(*{given!r})\nassert _r == {want!r} or [_r] == {want!r}"})
        else:
            given = "\n".join(given) if isinstance(given, list) else given
            want = "\n".join(want) if isinstance(want, list) else want
            tests.append({"input": given, "expected": want})
    return CorpusRecord(f"apps-{row['problem_id']}", solutions[0], label, tuple(tests), "apps")


ADAPTERS: dict[str, Callable[..., CorpusRecord]] = {
    "mbpp": from_mbpp,
    "humaneval": from_humaneval,
    "apps": from_apps,
}


def convert(path: str | os.PathLike, fmt: str, label: str = "human") -> list[CorpusRecord]:
    """Read a JSONL dump in one of the :data:`ADAPTERS` layouts."""
    if fmt not in ADAPTERS:
        raise ValueError(f"unknown format {fmt!r}; choose from {sorted(ADAPTERS)}")
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}")
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [(i, line) for i, line in enumerate(fh, 1) if line.strip()]
    except OSError as exc:
        raise CorpusIOError(f"cannot read {path}: {exc}") from exc
    out = []
    for lineno, line in rows:
        try:
            out.append(ADAPTERS[fmt](json.loads(line), label))
        except (KeyError, TypeError, IndexError, json.JSONDecodeError) as exc:
            raise SchemaError(f"not a {fmt} row: {exc}", lineno) from exc
    return out
