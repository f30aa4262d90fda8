import re

import pytest

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)", item.name)
    if m is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        note = getattr(item, "acceptance_note", "")
        _CRITERIA[int(m.group(1))] = ("PASS" if rep.passed else "FAIL", item.name, note)


@pytest.fixture
def note(request):
    """Attach a one-line measurement summary to an acceptance test."""
    def _note(text):
        request.node.acceptance_note = text
    return _note


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        status, name, note = _CRITERIA[k]
        terminalreporter.write_line(f"{status} criterion {k:2d}  {name}  {note}".rstrip())
