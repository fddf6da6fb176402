import math

import numpy as np
import pytest

from cocyclelab.arithmetic import Frequency
from cocyclelab.potentials import (make_peaky_bump, make_poisson_peak,
                                   make_zero)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture(scope="session")
def peak():
    """The analytic peak used throughout: K=10, lambda=1e4."""
    return make_poisson_peak(10.0, 1e4)


@pytest.fixture(scope="session")
def bump():
    """Compactly supported bump, support length 0.3."""
    return make_peaky_bump((0.1, 0.4), 20.0, 1.0)


@pytest.fixture(scope="session")
def narrow_bump():
    """Support length 0.08 < 1/8: closed-form traces valid up to q=8."""
    return make_peaky_bump((0.02, 0.10), 10.0, 1.0)


@pytest.fixture(scope="session")
def zero():
    return make_zero()


@pytest.fixture(scope="session")
def half():
    return Frequency.rational(1, 2)


@pytest.fixture(scope="session")
def one_step():
    return Frequency.rational(0, 1)


def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(b))
