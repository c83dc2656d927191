from pathlib import Path

import pytest

from codewm.harness.corpus import load_bundled
from codewm.keyed import load_key
from codewm.rules import RuleContext

DATA = Path(__file__).parent / "data"
GOLDEN_KEY = DATA / "golden.key"
SECOND_KEY = DATA / "second.key"


@pytest.fixture(scope="session")
def golden_key():
    return load_key(GOLDEN_KEY)


@pytest.fixture(scope="session")
def second_key():
    return load_key(SECOND_KEY)


@pytest.fixture(params=["golden", "second"], scope="session")
def any_key(request):
    return load_key(GOLDEN_KEY if request.param == "golden" else SECOND_KEY)


@pytest.fixture(scope="session")
def ctx(golden_key):
    return RuleContext(golden_key)


@pytest.fixture(scope="session")
def corpus():
    return load_bundled()


# Acceptance results, printed as one line per criterion after the run.
ACCEPTANCE: dict[str, str] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"{criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0][2:])):
            terminalreporter.write_line(ACCEPTANCE[key])
