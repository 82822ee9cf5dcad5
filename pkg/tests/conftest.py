import json
import sys
from pathlib import Path

import pytest
from hypothesis import settings

from ucgna.config import Config
from ucgna.data import load_system, scale_loads
from ucgna.reformulation import assemble_trilevel

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")

FROZEN = json.loads((HERE / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture
def toy():
    return load_system("toy2x2")


@pytest.fixture(scope="session")
def mini():
    return load_system("mini_ne")


@pytest.fixture(scope="session")
def tight():
    """Config with a tight Benders stopping gap, used for cross-checks."""
    return Config().with_overrides(limits={"benders_gap": 1e-9})


def toy_tri(eta_g=1.0, eta_p=1.0):
    S = scale_loads(load_system("toy2x2"), eta_p, eta_g)
    return assemble_trilevel(S.power, S.gas, S.coupling, S.T)
