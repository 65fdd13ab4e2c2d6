import pytest

ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_report():
    """Print one PASS/FAIL line for a criterion and keep it for the summary."""

    def report(criterion: str, ok, detail: str):
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{tag} criterion {criterion}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
