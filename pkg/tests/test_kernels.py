import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tracerdeconv import kernels

IMPLS = kernels.implementations()
BACKENDS = sorted(IMPLS)


def _arr(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def test_python_backend_always_present():
    assert "python" in IMPLS
    assert kernels.BACKEND in IMPLS


@pytest.mark.parametrize("name", BACKENDS)
def test_cumulative_trapezoid(name):
    out = IMPLS[name].cumulative_trapezoid(_arr([1.0, 1.0, 1.0]), 0.5)
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])


@pytest.mark.parametrize("name", BACKENDS)
def test_gradient2_quadratic(name):
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(IMPLS[name].gradient2(_arr(t**2), 0.1), 2 * t, atol=1e-12)


@pytest.mark.parametrize("name", BACKENDS)
def test_convolve_delta(name):
    a = np.random.default_rng(0).normal(size=20)
    delta = np.zeros(20)
    delta[0] = 10.0
    np.testing.assert_allclose(IMPLS[name].convolve_direct(_arr(a), _arr(delta), 0.1), a, atol=1e-14)


@pytest.mark.skipif("cython" not in IMPLS, reason="compiled extension not built")
@given(st.integers(3, 300), st.integers(0, 2**32 - 1), st.floats(1e-3, 10.0))
def test_backends_agree(n, seed, dt):
    rng = np.random.default_rng(seed)
    a, b = _arr(rng.normal(size=n)), _arr(rng.normal(size=n))
    py, cy = IMPLS["python"], IMPLS["cython"]
    np.testing.assert_allclose(cy.convolve_direct(a, b, dt), py.convolve_direct(a, b, dt), rtol=1e-12, atol=1e-12 * dt * n)
    np.testing.assert_allclose(cy.cumulative_trapezoid(a, dt), py.cumulative_trapezoid(a, dt), rtol=1e-12, atol=1e-12 * dt * n)
    np.testing.assert_allclose(cy.gradient2(a, dt), py.gradient2(a, dt), rtol=1e-12, atol=1e-12 / dt)


def test_pure_env_forces_fallback():
    env = dict(os.environ, TRACERDECONV_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import tracerdeconv; print(tracerdeconv.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_wrapper_accepts_lists():
    np.testing.assert_allclose(kernels.cumulative_trapezoid([0, 2, 4], 1.0), [0, 1, 4])
