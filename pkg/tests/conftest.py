import pytest


def pytest_runtest_logreport(report):
    """Print one pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::", 1)[1]
    if report.skipped:  # skips surface at setup, not call
        print(f"\n[ACCEPTANCE] {name}: SKIP", flush=True)
    elif report.when == "call":
        print(f"\n[ACCEPTANCE] {name}: {'PASS' if report.passed else 'FAIL'}",
              flush=True)


@pytest.fixture
def tmp_text(tmp_path):
    """Write text to a temp file and return its path."""

    def _write(content, name="file.txt"):
        p = tmp_path / name
        p.write_text(content, encoding="utf-8")
        return p

    return _write
