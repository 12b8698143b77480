import time

import pytest

_LINES = pytest.StashKey[dict]()
_ACTIVE = pytest.StashKey[bool]()
N_CRITERIA = 12


def pytest_configure(config):
    config.stash[_LINES] = {}
    config.stash[_ACTIVE] = False


def pytest_collection_finish(session):
    # runs after deselection, so the summary only appears when criteria were selected
    session.config.stash[_ACTIVE] = any(item.path.name == "test_acceptance.py" for item in session.items)


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns whether the metric and the runtime both pass."""
    lines = request.config.stash[_LINES]
    start = time.perf_counter()

    def record(number: int, name: str, ok: bool, detail: str, limit: float) -> bool:
        secs = time.perf_counter() - start
        passed = bool(ok) and secs < limit
        lines[number] = (
            f"[{'PASS' if passed else 'FAIL'}] {number:>2} {name}: {detail} | {secs:.1f}s (limit {limit:g}s)"
        )
        print(lines[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    if not config.stash[_ACTIVE]:
        return
    lines = config.stash[_LINES]
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        terminalreporter.write_line(lines.get(n, f"[FAIL] {n:>2} no result recorded (the test errored or was deselected)"))
    passed = sum(line.startswith("[PASS]") for line in lines.values())
    terminalreporter.write_line(f"{passed}/{N_CRITERIA} criteria pass")
