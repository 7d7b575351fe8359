import pytest

from uwbcap.system import SystemParams

_ACCEPTANCE = []


class AcceptanceRecorder:
    def __call__(self, criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return passed


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


@pytest.fixture
def defaults():
    return SystemParams.reference_defaults()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {criterion}: {detail}")
