import pytest

_RESULTS: dict = {}


class CriterionRecorder:
    """Collects pass/fail per acceptance criterion; a criterion passes only if all its parts do."""

    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        entry = _RESULTS.setdefault(number, {"title": title, "ok": True, "details": []})
        entry["ok"] = entry["ok"] and bool(ok)
        if detail:
            entry["details"].append(detail)
        return bool(ok)


@pytest.fixture
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"criterion {number:>2} {status}  {entry['title']}  ({detail})")
