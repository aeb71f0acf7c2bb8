import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def gate(request):
    """Record one acceptance line: ``gate(number, title, ok, detail, seconds, budget)``."""
    lines = request.config.stash[ACCEPTANCE]

    def record(number, title, ok, detail, seconds, budget=None):
        timing = f"{seconds:.2f}s" + (f" (budget {budget:g}s)" if budget else "")
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number}: {title} | {detail} | {timing}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
