import pytest

from disco.basis import build_disco_basis, build_interp_baseline
from disco.scaleconv import synthetic_images
from disco.scales import ScaleSet
from disco.solve import SolveConfig
from helpers import ACCEPTANCE, HARNESS_IMAGES, SQRT2_SCALES


@pytest.fixture(scope="session")
def sqrt2_set():
    return ScaleSet.parse(SQRT2_SCALES, 3)


@pytest.fixture(scope="session")
def integer_set():
    return ScaleSet.parse("1,2,4", 3)


@pytest.fixture(scope="session")
def disco_basis(sqrt2_set):
    return build_disco_basis(3, sqrt2_set, SolveConfig(seed=42))


@pytest.fixture(scope="session")
def integer_basis(integer_set):
    return build_disco_basis(3, integer_set, SolveConfig(seed=0))


@pytest.fixture(scope="session")
def baseline_basis(sqrt2_set):
    return build_interp_baseline(3, sqrt2_set, "bilinear")


@pytest.fixture(scope="session")
def harness_images():
    return synthetic_images(**HARNESS_IMAGES)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {summary}")
