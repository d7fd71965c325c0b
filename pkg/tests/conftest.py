import math

import numpy as np
import pytest

from pmbpqm.channel import QubitBSCQ
from pmbpqm.decoder import lemma_instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lemma_channels():
    return lemma_instance()


@pytest.fixture
def mixed_channel():
    return QubitBSCQ(math.pi / 5, 0.15)
