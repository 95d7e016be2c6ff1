import re

import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary, then assert on it."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        prev = _ACCEPTANCE.get(name)
        if prev is not None:
            ok = ok and prev[0]
            detail = "; ".join(d for d in (prev[1], detail) if d)
        _ACCEPTANCE[name] = (bool(ok), detail)
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: (int(re.search(r"\d+", s).group()), s)):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
