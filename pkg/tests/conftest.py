import random

import pytest

from margulis import kernels
from margulis.cf_engine import parse_angle
from margulis.region import RegionParams

GOLDEN = "pre:[];per:[1]"

#: filled by test_acceptance, reported once at the end of the session
ACCEPTANCE_RESULTS: dict[str, str] = {}


def random_coefficients(seed: int, length: int = 40, top: int = 5) -> list[int]:
    rng = random.Random(seed)
    return [rng.randint(1, top) for _ in range(length)]


@pytest.fixture(scope="session")
def golden():
    return parse_angle(GOLDEN)


@pytest.fixture(scope="session")
def golden_params(golden):
    return RegionParams(golden, 0.1)


@pytest.fixture(scope="session")
def silver_params():
    return RegionParams(parse_angle("2", depth=30), 0.1)


@pytest.fixture(scope="session")
def mixed_params():
    # has convergent denominators that are not constituents (q = 11 is skipped)
    return RegionParams(parse_angle("2,5,1,3,1,4,4,4,4,2", depth=30), 0.1)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    previous = kernels.backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split(".")[0])):
            terminalreporter.write_line(f"{ACCEPTANCE_RESULTS[name]}  {name}")
