import numpy as np
import pytest
from hypothesis import settings

from gibbsest.shift_core import LocallyConstantFn, PotentialFamily, SubshiftSpec

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_family(spec, depth, d, rng, scale=1.0):
    """Family with ``d`` random directions and a random base, all of ``depth``."""
    a = spec.alphabet_size
    base = LocallyConstantFn(spec, depth, rng.normal(scale=scale, size=(a,) * depth))
    dirs = [LocallyConstantFn(spec, depth, rng.normal(size=(a,) * depth)) for _ in range(d)]
    return PotentialFamily(base, dirs)


@pytest.fixture
def golden():
    return SubshiftSpec.golden_mean()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    """Store and print the one-line verdict of an acceptance criterion."""
    line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
