import pytest

from facefair.model import AlgorithmRecord, Dataset, GroupRates

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; printed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, text, ok, detail=""):
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        lines.append(f"[{status}] criterion {number:>2}: {text}" + (f" ({detail})" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = list(config.stash.get(_ACCEPTANCE_KEY, []))
    for rep in terminalreporter.stats.get("skipped", []):
        if "test_acceptance" in rep.nodeid:
            name = rep.nodeid.split("::")[-1]
            reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else ""
            lines.append(f"[SKIP] {name}: {reason.removeprefix('Skipped: ')}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


TOY_WIDE = """metric,algA,algB,algC
fmr:g1,0.01,0.0001,0.001
fmr:g2,0.02,0.0002,0.001
fnmr:g1,0.02,0.05,0.03
fnmr:g2,0.04,0.01,0.03
"""


@pytest.fixture
def toy_wide_text():
    return TOY_WIDE


@pytest.fixture
def hand_rates():
    return GroupRates({"a": 0.01, "b": 0.02}, {"a": 0.02, "b": 0.04})


@pytest.fixture
def hand_dataset(hand_rates):
    return Dataset((AlgorithmRecord("hand", hand_rates),))


def fair_record(name="fair", fmr=1e-4, fnmr=0.03, groups=("g1", "g2", "g3")):
    return AlgorithmRecord(name, GroupRates({g: fmr for g in groups}, {g: fnmr for g in groups}))
