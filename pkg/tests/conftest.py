import os
import time
from pathlib import Path

import pytest

from centmon.pipeline import run_pipeline


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """Complete k=4 run (a couple of minutes on one core).

    Set CENTMON_RUN_DIR to reuse or keep a run directory between sessions;
    finished stages are picked up from their checkpoints.
    """
    root = os.environ.get("CENTMON_RUN_DIR")
    workdir = Path(root) if root else tmp_path_factory.mktemp("run")
    t0 = time.perf_counter()
    report = run_pipeline(workdir)
    return {"workdir": workdir, "report": report, "seconds": time.perf_counter() - t0}


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
