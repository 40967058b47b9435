import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_CRITERIA: list[str] = []


def record_criterion(number, title: str, passed: bool, detail: str = "") -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}"
    if detail:
        line += f" [{detail}]"
    _CRITERIA.append(line)
    print(line)
    return line


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
