import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from diversort.core_io import l2_normalize  # noqa: E402
from diversort.simulate import builtin_scenario, generate  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def scenario_dir(tmp_path_factory):
    """Generate a built-in scenario once per session: ``scenario_dir("clutter")``."""
    cache = {}

    def make(name):
        if name not in cache:
            out = tmp_path_factory.mktemp(name)
            generate(builtin_scenario(name), str(out))
            cache[name] = out
        return cache[name]

    return make


def unit(values):
    return l2_normalize(values)


def rotated(f, g_perp, distance):
    """Unit vector at exactly ``distance`` cosine distance from unit ``f``."""
    cos = 1.0 - distance
    return cos * f + np.sqrt(1.0 - cos * cos) * g_perp


def basis(i, dim=58):
    v = np.zeros(dim)
    v[i] = 1.0
    return v
