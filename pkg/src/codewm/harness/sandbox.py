"""Run corpus tests in throwaway interpreter processes.

Each test gets its own ``python -I`` subprocess in a fresh temporary
directory with a wall-clock timeout.  Socket creation is disabled inside the
child; this is a guard against accidental network use, not a security
boundary.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import subprocess
import sys
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from ..errors import InterpreterMissing

DEFAULT_TIMEOUT = 5.0

PASS = "pass"
FAIL = "fail"
ERROR = "error"
TIMEOUT = "timeout"

_RUNNER = r'''
import json
import socket
import sys


def _blocked(*args, **kwargs):
    raise OSError("network access is disabled in the test sandbox")


class _NoSocket(socket.socket):
    def __init__(self, *args, **kwargs):
        _blocked()


socket.socket = _NoSocket
socket.create_connection = _blocked
socket.getaddrinfo = _blocked

with open(sys.argv[1], encoding="utf-8") as fh:
    payload = json.load(fh)
code = compile(payload["code"], "<snippet>", "exec")
test = payload["test"]
if "call" in test:
    ns = {"__name__": "snippet"}
    exec(code, ns)
    value = repr(eval(test["call"], ns))
    with open(sys.argv[2], "w", encoding="utf-8") as fh:
        fh.write(value)
elif "input" in test:
    exec(code, {"__name__": "__main__"})
else:
    ns = {"__name__": "snippet"}
    exec(code, ns)
    exec(compile(test["check"], "<check>", "exec"), ns)
'''


@dataclass(frozen=True)
class TestOutcome:
    status: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


def _normalise_stdout(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.replace("\r\n", "\n").rstrip("\n").split("\n"))


def resolve_interpreter(python: str | None = None) -> str:
    exe = python or sys.executable
    found = shutil.which(exe) if not os.path.isabs(exe) else (exe if os.access(exe, os.X_OK) else None)
    if not found:
        raise InterpreterMissing(f"python interpreter not found: {exe!r}")
    return found


class SandboxRunner:
    """Executes (code, test) pairs; results are memoised per pair.

    The memo makes identical code on both sides of a utility comparison
    produce identical outcomes, so a no-op watermark shows zero degradation.
    """

    def __init__(self, python: str | None = None, timeout: float = DEFAULT_TIMEOUT, workers: int = 4):
        self.python = resolve_interpreter(python)
        self.timeout = timeout
        self.workers = max(1, workers)
        self._cache: dict[tuple[str, str], TestOutcome] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(code: str, test: dict) -> tuple[str, str]:
        return hashlib.sha256(code.encode("utf-8")).hexdigest(), json.dumps(test, sort_keys=True)

    def run(self, code: str, test: dict) -> TestOutcome:
        key = self._key(code, test)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        outcome = self._execute(code, test)
        with self._lock:
            self._cache[key] = outcome
        return outcome

    def run_many(self, jobs: Iterable[tuple[str, dict]]) -> list[TestOutcome]:
        jobs = list(jobs)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(lambda job: self.run(*job), jobs))

    def _execute(self, code: str, test: dict) -> TestOutcome:
        with tempfile.TemporaryDirectory(prefix="codewm-run-") as tmp:
            runner = os.path.join(tmp, "_runner.py")
            payload = os.path.join(tmp, "_payload.json")
            result = os.path.join(tmp, "_result.txt")
            with open(runner, "w", encoding="utf-8") as fh:
                fh.write(_RUNNER)
            with open(payload, "w", encoding="utf-8") as fh:
                json.dump({"code": code, "test": test}, fh)
            try:
                proc = subprocess.run(
                    [self.python, "-I", runner, payload, result],
                    input=test.get("input", ""),
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                    cwd=tmp,
                )
            except subprocess.TimeoutExpired:
                return TestOutcome(TIMEOUT, f"exceeded {self.timeout:g}s")
            if proc.returncode != 0:
                tail = proc.stderr.strip().splitlines()[-1:] or [f"exit {proc.returncode}"]
                return TestOutcome(ERROR, tail[0])
            if "call" in test:
                try:
                    with open(result, encoding="utf-8") as fh:
                        got = fh.read()
                except OSError:
                    return TestOutcome(ERROR, "no result written")
                ok = got == test["expected"]
                return TestOutcome(PASS if ok else FAIL, "" if ok else f"got {got}")
            if "input" in test:
                ok = _normalise_stdout(proc.stdout) == _normalise_stdout(test["expected"])
                return TestOutcome(PASS if ok else FAIL, "" if ok else f"stdout {proc.stdout!r}")
            return TestOutcome(PASS)
