import math

import pytest

from kllab import Moduli

N2 = Moduli((0.5,), (0.0,), (math.pi / 2,))
SYMMETRIC = Moduli((0.5,), (-math.pi / 4,), (math.pi / 4,))


@pytest.fixture
def n2():
    return N2


@pytest.fixture
def symmetric():
    return SYMMETRIC
