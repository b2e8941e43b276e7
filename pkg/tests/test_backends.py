"""The compiled kernels and their numpy fallbacks must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from enersim import mfg, morph_mc, morph_pde
from enersim.morph_mc import init_lattice
from enersim.numerics import Grid1D, Grid2DPeriodic, make_rng


@pytest.fixture
def mfg_inputs():
    p = mfg.MfgParams(0.2, 1.0, 1.0, 1.0, 1.0, Grid1D(-25.0, 25.0, 60), 1.0, 300)
    g = p.grid
    rng = np.random.default_rng(0)
    u = (rng.uniform(size=(301, 60)) < 0.4).astype(float)
    return p, g, u


def test_forward_kernels_agree(mfg_inputs):
    p, g, u = mfg_inputs
    m0 = mfg.initial_density(g)
    args = (u, m0, g.interfaces[1:-1], g.h, p.dt, p.alpha, p.sigma, p.c, g.centers)
    m_a, mbar_a = mfg._forward_loops(*args)
    m_b, mbar_b = mfg._forward_numpy(*args)
    np.testing.assert_allclose(m_a, m_b, rtol=0, atol=1e-13)
    np.testing.assert_allclose(mbar_a, mbar_b, rtol=0, atol=1e-13)


def test_backward_kernels_agree(mfg_inputs):
    p, g, _ = mfg_inputs
    rng = np.random.default_rng(1)
    mbar = rng.normal(0, 1, 301)
    psi = rng.normal(0, 1, 60)
    args = (mbar, psi, g.centers, g.h, p.dt, p.alpha, p.sigma, p.c, p.r, p.q, p.h, p.k)
    v_a, u_a = mfg._backward_loops(*args)
    v_b, u_b = mfg._backward_numpy(*args)
    np.testing.assert_allclose(v_a, v_b, rtol=1e-12, atol=1e-12)
    assert np.array_equal(u_a, u_b)


def test_pde_update_kernels_agree():
    g = Grid2DPeriodic(32.0, 32)
    f = morph_pde.init_random_mixture(g, 0.8, 0.05, 3)
    k = morph_pde.make_kernel(g, 4.0)
    wx, wy = morph_pde.drift_velocity(f.m, k, 4.0)
    dt = morph_pde.stable_dt(g.h, wx, wy)
    a = morph_pde._update_loops(f.m, f.phi, wx, wy, g.h, dt)
    b = morph_pde._update_numpy(f.m, f.phi, wx, wy, g.h, dt)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-14)


def test_kawasaki_kernels_agree():
    c1 = init_lattice(12, 0.5, 0, beta=1.5)
    c2 = c1.copy()
    n = 5000
    rng = make_rng(8)
    sites, dirs, us = rng.integers(0, 144, n), rng.integers(0, 4, n), rng.uniform(n)
    M = morph_mc.DEFAULT_INTERACTION
    none = np.empty(0, dtype=np.int64)
    r1 = morph_mc._kawasaki(c1.spins, M, 1.5, sites, dirs, us, none)
    r2 = morph_mc._kawasaki.py_func(c2.spins, M, 1.5, sites, dirs, us, none)
    assert r1[0] == r2[0]
    assert r1[1] == pytest.approx(r2[1], abs=1e-9)
    assert np.array_equal(c1.spins, c2.spins)


def _run_backend(backend, code):
    env = dict(os.environ, ENERSIM_BACKEND=backend)
    return subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)


def test_backend_flag_is_honoured():
    code = "from enersim import _backend; print(_backend.BACKEND)"
    assert _run_backend("numpy", code).stdout.strip() == "numpy"
    assert _run_backend("numba", code).stdout.strip() == "numba"
    assert _run_backend("fortran", code).returncode != 0


def test_numpy_backend_end_to_end():
    code = (
        "from enersim import mfg\n"
        "_, s, r = mfg.solve_config(mfg.MfgConfig(n_cells=40, n_time=200))\n"
        "print(r.iterations, repr(float(s.mbar[-1])))\n"
    )
    a = _run_backend("numpy", code).stdout.split()
    b = _run_backend("numba", code).stdout.split()
    assert a[0] == b[0]
    assert float(a[1]) == pytest.approx(float(b[1]), abs=1e-12)
