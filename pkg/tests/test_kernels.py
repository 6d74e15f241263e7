import importlib

import numpy as np
import pytest

from diversort import kernels
from diversort.kernels import _pykernels

BACKENDS = [pytest.param(_pykernels, id="python")]
try:
    BACKENDS.append(pytest.param(importlib.import_module("diversort.kernels._ckernels"), id="cython"))
except ImportError:
    BACKENDS.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))


def total(cost, cols):
    return sum(cost[i, j] for i, j in enumerate(cols))


@pytest.mark.parametrize("impl", BACKENDS)
def test_solve_dense_against_scipy(impl):
    from scipy.optimize import linear_sum_assignment

    rng = np.random.default_rng(0)
    for n in range(1, 30):
        cost = rng.uniform(0, 10, (n, n))
        cols = impl.solve_dense(cost)
        assert sorted(cols) == list(range(n))
        r, c = linear_sum_assignment(cost)
        assert total(cost, cols) == pytest.approx(cost[r, c].sum(), rel=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
def test_solve_dense_empty_and_non_square(impl):
    assert impl.solve_dense(np.zeros((0, 0))).size == 0
    with pytest.raises(ValueError):
        impl.solve_dense(np.zeros((2, 3)))


@pytest.mark.parametrize("impl", BACKENDS)
def test_iou_matrix(impl):
    a = np.array([[0, 0, 10, 10], [100, 100, 5, 5]], float)
    b = np.array([[5, 0, 10, 10], [0, 0, 10, 10], [10, 0, 10, 10]], float)
    np.testing.assert_allclose(impl.iou_matrix(a, b), [[1 / 3, 1, 0], [0, 0, 0]])
    assert impl.iou_matrix(np.zeros((0, 4)), b).shape == (0, 3)


def test_backends_agree():
    if kernels.BACKEND != "cython":
        pytest.skip("extension not built")
    from diversort.kernels import _ckernels

    rng = np.random.default_rng(3)
    a = np.c_[rng.uniform(0, 50, (20, 2)), rng.uniform(1, 30, (20, 2))]
    b = np.c_[rng.uniform(0, 50, (15, 2)), rng.uniform(1, 30, (15, 2))]
    np.testing.assert_allclose(_ckernels.iou_matrix(a, b), _pykernels.iou_matrix(a, b), rtol=1e-15)
    cost = rng.integers(0, 5, (12, 12)).astype(float)
    assert total(cost, _ckernels.solve_dense(cost)) == total(cost, _pykernels.solve_dense(cost))


def test_backend_reported():
    assert kernels.BACKEND in ("python", "cython")
