import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from corefkit.conllu import read_conllu  # noqa: E402
from corefkit.mentions import extract_entities  # noqa: E402


@pytest.fixture
def small_path() -> Path:
    return HERE / "data" / "small.conllu"


@pytest.fixture
def small_docs(small_path):
    return read_conllu(small_path)


@pytest.fixture
def small_coref(small_docs):
    return [extract_entities(d) for d in small_docs]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k][1])
