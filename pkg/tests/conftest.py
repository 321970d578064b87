import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[str, str]] = {}
DURATIONS: dict[int, float] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    DURATIONS[number] = DURATIONS.get(number, 0.0) + report.duration
    previous = ACCEPTANCE.get(number, (title, "PASS"))[1]
    verdict = "PASS" if report.passed and previous == "PASS" else "FAIL"
    ACCEPTANCE[number] = (title, verdict)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, verdict = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title} ({DURATIONS[number]:.2f}s)")
