import io
import sys
from contextlib import redirect_stderr
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stratboot.cli import main  # noqa: E402


class CliResult:
    def __init__(self, code, stdout, stderr):
        self.code = code
        self.stdout = stdout
        self.stderr = stderr


@pytest.fixture
def run_cli(monkeypatch):
    """Run the CLI in-process, capturing stdout bytes and stderr text."""

    def run(*argv):
        out = io.BytesIO()
        err = io.StringIO()
        fake_stdout = io.TextIOWrapper(out, encoding="utf-8")
        monkeypatch.setattr(sys, "stdout", fake_stdout)
        with redirect_stderr(err):
            code = main([str(a) for a in argv])
        fake_stdout.flush()
        return CliResult(code, out.getvalue(), err.getvalue())

    return run


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def walkthrough_rows(seed=42, n=100):
    """Uniform 1-5 answers to Q1..Q5 with a random Woman/Man label."""
    rng = np.random.default_rng(seed)
    groups = rng.choice(["Woman", "Man"], n)
    answers = rng.integers(1, 6, size=(n, 5))
    return [[g, *map(int, row)] for g, row in zip(groups, answers)]


@pytest.fixture
def walkthrough_csv(tmp_path):
    return write_csv(
        tmp_path / "survey.csv", ["group", "Q1", "Q2", "Q3", "Q4", "Q5"], walkthrough_rows()
    )


_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[number] = (title, "PASS" if report.outcome == "passed" else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
