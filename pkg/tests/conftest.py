import pytest

from prony_wavelets import make_bank

CRITERIA = {
    1: "1D example recovered exactly",
    2: "sampling set size bound",
    3: "sparse trigonometric polynomial suite",
    4: "alpert1d bank verification",
    5: "alpert1d round trips",
    6: "noise experiment",
    7: "2D example round trip",
    8: "shift validator",
    9: "Fourier evaluators against quadrature",
}

_results = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_results] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion as pass or fail with a detail string."""
    store = request.config.stash[_results]

    def record(number, passed, detail=""):
        store[number] = (bool(passed), detail)
        print(f"criterion {number} ({CRITERIA[number]}): {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_results, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number, name in CRITERIA.items():
        if number in store:
            ok, detail = store[number]
            terminalreporter.write_line(f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} {detail}")
        else:
            terminalreporter.write_line(f"criterion {number} ({name}): NOT RUN")


@pytest.fixture(scope="session")
def alpert():
    return make_bank("alpert1d")


@pytest.fixture(scope="session")
def haar1d():
    return make_bank("haar1d")


@pytest.fixture(scope="session")
def haar2d():
    return make_bank("haar2d", "t2")


@pytest.fixture(scope="session")
def haar2d_verbatim():
    return make_bank("haar2d", "verbatim")
