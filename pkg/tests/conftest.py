import numpy as np
import pytest

from manipsynth.assets import (load_template_pose, load_tool, load_toy_hand,
                               load_full_hand)


@pytest.fixture(scope="session")
def toy_model():
    return load_toy_hand()


@pytest.fixture(scope="session")
def full_model():
    return load_full_hand()


@pytest.fixture(scope="session")
def diskplacer():
    return load_tool("diskplacer")


@pytest.fixture(scope="session")
def toy_template_pose():
    return load_template_pose("toy")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
