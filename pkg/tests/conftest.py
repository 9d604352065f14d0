import pytest

from subscriber_ca import available_backends


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


_VERDICTS = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    _VERDICTS[criterion] = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[key])
