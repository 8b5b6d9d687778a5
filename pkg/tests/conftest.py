import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import FIXTURES  # noqa: E402


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def casestudy_config():
    from amrsg.config import load_config
    return load_config(FIXTURES / "pipeline.cfg")


@pytest.fixture(scope="session")
def casestudy_results(casestudy_config):
    from amrsg.pipeline import run_pipeline
    return {r.question.id: r for r in run_pipeline(casestudy_config)}


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
