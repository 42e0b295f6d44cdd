import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _builders import SHIPPED  # noqa: E402


@pytest.fixture(scope="session")
def reference_runs(tmp_path_factory):
    """The four shipped cases at full length, run once per session."""
    from mgsim.engine import run_case
    from mgsim.scenario import load_scenario

    out = tmp_path_factory.mktemp("reference")
    runs = {}
    for name, path in SHIPPED.items():
        summary, trace = run_case(load_scenario(path), out)
        runs[name] = {"summary": summary, "trace": trace, "dir": out}
    return runs


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
