import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from paraquery import CORPUS, ground_fixpoint_prov, parse_kb, parse_query  # noqa: E402


def load_kb(name):
    return parse_kb((CORPUS / f"{name}.kb").read_text())


def load_query(name):
    return parse_query((CORPUS / f"{name}.q").read_text())


@pytest.fixture
def tweety():
    return load_kb("tweety")


@pytest.fixture
def tweety_gkb(tweety):
    return ground_fixpoint_prov(tweety)


@pytest.fixture
def corpus():
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k[2:])):
        terminalreporter.write_line(mod.RESULTS[key])
