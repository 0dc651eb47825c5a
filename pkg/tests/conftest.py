import pytest

_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """criterion number -> list of (ok, detail); summarised after the run."""
    return request.config.stash.setdefault(_KEY, {})


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_KEY, None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(log):
        parts = log[crit]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
