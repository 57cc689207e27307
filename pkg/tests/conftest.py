import pytest

from mcarith.harness.config import ExperimentConfig
from mcarith.harness.experiments import run_cir_validation


@pytest.fixture(scope="session")
def default_cir():
    """10^5 A molecules, no reaction, default geometry (about 20 s)."""
    return run_cir_validation(ExperimentConfig(mode="cir_validation"))


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.append((props.get("label", report.nodeid.split("::")[-1]), report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in _ACCEPTANCE:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}: {detail}")
