import os
import subprocess
import sys

import numpy as np
import pytest

from superode import io
from superode.dynamics import _kernels, expand_to_real
from superode.dynamics.riccati import RiccatiSpec, riccati_system


def systems():
    yield expand_to_real(io.load_system(io.data_path("example2.json")).flow())
    yield expand_to_real(io.load_system(io.data_path("lienard.json")).flow())
    yield riccati_system(io.load_system(io.data_path("riccati2.json")).body)


@pytest.mark.parametrize("R", list(systems()), ids=["example2", "lienard", "riccati"])
def test_rhs_backends_agree(R):
    rng = np.random.default_rng(0)
    arrays = R.compiled()
    for _ in range(10):
        x = rng.standard_normal(R.n)
        exact = np.array([float(v) for v in R.evaluate_exact([float(v) for v in x])])
        assert np.allclose(_kernels._rhs_numpy(x, *arrays), exact, rtol=1e-12, atol=1e-12)
        assert np.allclose(_kernels.rhs_eval(x, *arrays), exact, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("R", list(systems()), ids=["example2", "lienard", "riccati"])
def test_loops_agree(R):
    x0 = np.linspace(-0.3, 0.4, R.n)
    a, bad_a = _kernels.rk4_loop(x0, 1e-2, 50, 5, *R.compiled())
    b, bad_b = _kernels._rk4_numpy(x0, 1e-2, 50, 5, *R.compiled())
    assert bad_a == bad_b == -1
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
    c, _ = _kernels.euler_loop(x0, 1e-2, 30, *R.compiled())
    d, _ = _kernels._euler_numpy(x0, 1e-2, 30, *R.compiled())
    assert np.allclose(c, d, rtol=1e-12, atol=1e-14)


def test_divergence_index_agrees():
    R = riccati_system(RiccatiSpec(1, 1, [[1]], [[0]], [[0]], [[0]]))  # x' = x^2
    x0 = np.array([1.0])
    _, bad_a = _kernels.rk4_loop(x0, 0.1, 1000, 1, *R.compiled())
    _, bad_b = _kernels._rk4_numpy(x0, 0.1, 1000, 1, *R.compiled())
    assert bad_a == bad_b > 0


def test_env_flag_selects_numpy():
    code = "from superode.dynamics import _kernels as k; print(k.BACKEND, k.rk4_loop is k._rk4_numpy)"
    env = dict(os.environ, SUPERODE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_constant_terms_use_dummy_factor():
    R = riccati_system(RiccatiSpec(1, 1, [[0]], [[0]], [[0]], [[3]]))  # x' = 3
    target, coef, ptr, idx, pw = R.compiled()
    assert list(pw) == [0] and list(ptr) == [0, 1]
    assert _kernels.rhs_eval(np.array([7.0]), *R.compiled())[0] == 3.0
