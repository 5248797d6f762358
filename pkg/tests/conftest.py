import pytest

from faunawatch.sentiment import Lexicon, ShifterTable

MINILEX = Lexicon({"good": 1.0, "happy": 1.0, "bad": -1.0, "dead": -1.0})
MINISHIFT = ShifterTable(
    negators=frozenset({"not", "no"}),
    amplifiers=frozenset({"very"}),
    de_amplifiers=frozenset({"barely"}),
)

MINICORPUS = [
    ("elephant ivory seizure poaching wildlife rangers", "relevant"),
    ("rhino horn trafficking conservation arrest", "relevant"),
    ("elephant mascot football team season", "irrelevant"),
    ("tiger golf major championship", "irrelevant"),
]


@pytest.fixture
def minilex():
    return MINILEX


@pytest.fixture
def minishift():
    return MINISHIFT


@pytest.fixture
def minicorpus():
    return list(MINICORPUS)


_VERDICTS = []


class _Verdict:
    def __init__(self):
        self.lines = []

    def check(self, number: int, ok: bool, detail: str) -> None:
        """Record a criterion's outcome, then fail the test if it did not hold."""
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        self.lines.append(line)
        _VERDICTS.append(line)
        assert ok, line


@pytest.fixture
def verdict(request):
    v = _Verdict()
    yield v
    if not v.lines:
        _VERDICTS.append(f"{request.node.name}: FAIL did not reach its check")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
