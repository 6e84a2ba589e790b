import pytest

from faasorch.domain import load_builtin_profiles


@pytest.fixture(scope="session")
def profiles():
    return load_builtin_profiles()


@pytest.fixture(scope="session")
def linpack(profiles):
    return profiles["linpack"]


VERDICTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Record one acceptance line for the terminal summary, then assert it."""
    VERDICTS.append(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))
    print(VERDICTS[-1])
    assert ok, VERDICTS[-1]


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance")
        for line in VERDICTS:
            terminalreporter.write_line(line)
