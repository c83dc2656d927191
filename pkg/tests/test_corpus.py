import json

import pytest

from codewm.errors import CorpusIOError, SchemaError
from codewm.harness.corpus import (
    ADAPTERS, CorpusRecord, convert, from_apps, from_humaneval, from_mbpp, load_corpus, write_corpus,
)
from codewm.harness.sandbox import SandboxRunner


def _write(tmp_path, lines):
    path = tmp_path / "c.jsonl"
    path.write_text("".join(line + "\n" for line in lines))
    return path


def test_bundled_corpus_shape(corpus):
    assert len(corpus) == 60
    assert sum(r.label == "ai" for r in corpus) == 30
    assert sum(r.label == "human" for r in corpus) == 30
    assert len({r.id for r in corpus}) == 60
    assert sum(bool(r.tests) for r in corpus) >= 30


def test_length_loc(corpus):
    for rec in corpus:
        assert rec.length_loc == len(rec.code.splitlines())


def test_empty_file(tmp_path):
    assert load_corpus(_write(tmp_path, [])) == []


def test_blank_lines_skipped(tmp_path):
    rec = json.dumps({"id": "a", "code": "x = 1\n", "label": "ai"})
    assert len(load_corpus(_write(tmp_path, ["", rec, "  "]))) == 1


def test_missing_label_names_line(tmp_path):
    good = json.dumps({"id": "a", "code": "x = 1\n", "label": "ai"})
    bad = json.dumps({"id": "b", "code": "x = 1\n"})
    with pytest.raises(SchemaError) as info:
        load_corpus(_write(tmp_path, [good, bad]))
    assert info.value.line == 2
    assert "label" in str(info.value) and "line 2" in str(info.value)


@pytest.mark.parametrize("obj", [
    [1, 2],
    {"id": "", "code": "", "label": "ai"},
    {"id": "a", "code": 3, "label": "ai"},
    {"id": "a", "code": "", "label": "robot"},
    {"id": "a", "code": "", "label": "ai", "tests": {}},
    {"id": "a", "code": "", "label": "ai", "tests": [{"call": "f()"}]},
    {"id": "a", "code": "", "label": "ai", "tests": [{"call": "f()", "input": "", "expected": ""}]},
    {"id": "a", "code": "", "label": "ai", "tests": [{"expected": "1"}]},
])
def test_schema_errors(tmp_path, obj):
    with pytest.raises(SchemaError):
        load_corpus(_write(tmp_path, [json.dumps(obj)]))


def test_bad_json(tmp_path):
    with pytest.raises(SchemaError) as info:
        load_corpus(_write(tmp_path, ["{not json"]))
    assert info.value.line == 1


def test_duplicate_ids(tmp_path):
    rec = json.dumps({"id": "a", "code": "", "label": "ai"})
    with pytest.raises(SchemaError):
        load_corpus(_write(tmp_path, [rec, rec]))


def test_missing_file(tmp_path):
    with pytest.raises(CorpusIOError):
        load_corpus(tmp_path / "absent.jsonl")


def test_write_roundtrip(tmp_path, corpus):
    path = tmp_path / "out.jsonl"
    write_corpus(corpus, path)
    assert load_corpus(path) == corpus


def test_crlf_survives(corpus):
    assert any("\r\n" in r.code for r in corpus)


# -- adapters ----------------------------------------------------------------------------

MBPP_ROW = {
    "task_id": 11, "text": "Remove first and last occurrence of a char.",
    "code": "def remove_Occ(s,ch):\n    return s.replace(ch, '', 1)[::-1].replace(ch, '', 1)[::-1]\n",
    "test_list": ["assert remove_Occ('hello','l') == 'heo'", "assert remove_Occ('abcda','a') == 'bcd'"],
    "test_setup_code": "",
}

HUMANEVAL_ROW = {
    "task_id": "HumanEval/0",
    "prompt": "def has_close_elements(numbers, threshold):\n",
    "canonical_solution": (
        "    for i, a in enumerate(numbers):\n        for j, b in enumerate(numbers):\n"
        "            if i != j and abs(a - b) < threshold:\n                return True\n    return False\n"
    ),
    "test": "def check(candidate):\n    assert candidate([1.0, 2.0, 3.9], 0.3) is False\n    assert candidate([1.0, 2.8, 3.0], 0.3) is True\n",
    "entry_point": "has_close_elements",
}

APPS_STDIN_ROW = {
    "problem_id": 4000,
    "solutions": json.dumps(["a, b = map(int, input().split())\nprint(a * b)\n"]),
    "input_output": json.dumps({"inputs": ["3 4\n", "5 6\n"], "outputs": ["12\n", "30\n"]}),
}

APPS_CALL_ROW = {
    "problem_id": 4001,
    "solutions": json.dumps(["def double(x):\n    return 2 * x\n"]),
    "input_output": json.dumps({"fn_name": "double", "inputs": [[2], [5]], "outputs": [[4], [10]]}),
}


@pytest.mark.parametrize("row, adapter, rid", [
    (MBPP_ROW, from_mbpp, "mbpp-11"),
    (HUMANEVAL_ROW, from_humaneval, "humaneval-HumanEval-0"),
    (APPS_STDIN_ROW, from_apps, "apps-4000"),
    (APPS_CALL_ROW, from_apps, "apps-4001"),
])
def test_adapters_produce_passing_records(row, adapter, rid):
    rec = adapter(row)
    assert isinstance(rec, CorpusRecord) and rec.id == rid and rec.label == "human"
    assert rec.tests
    runner = SandboxRunner()
    assert all(o.passed for o in runner.run_many([(rec.code, t) for t in rec.tests]))


def test_convert_file(tmp_path):
    path = tmp_path / "mbpp.jsonl"
    path.write_text(json.dumps(MBPP_ROW) + "\n")
    recs = convert(path, "mbpp", label="ai")
    assert [r.label for r in recs] == ["ai"]
    assert set(ADAPTERS) == {"mbpp", "humaneval", "apps"}


def test_convert_rejects_wrong_layout(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text(json.dumps({"nope": 1}) + "\n")
    with pytest.raises(SchemaError):
        convert(path, "humaneval")
    with pytest.raises(ValueError):
        convert(path, "codeforces")
