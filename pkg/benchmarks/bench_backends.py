"""Time the numba kernels against their numpy/Python fallbacks.

    python benchmarks/bench_backends.py [--repeat N]

Both paths are called directly, so one process covers both backends; the
first numba call (compilation or cache load) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from enersim import mfg, morph_mc, morph_pde
from enersim.numerics import Grid2DPeriodic, make_rng


def mfg_cases():
    p = mfg.MfgConfig().params()
    g = p.grid
    m0 = mfg.initial_density(g)
    u = (np.random.default_rng(0).uniform(size=(p.n_time + 1, g.n_cells)) < 0.3).astype(float)
    fwd = (u, m0, g.interfaces[1:-1], g.h, p.dt, p.alpha, p.sigma, p.c, g.centers)
    mbar = np.linspace(-1, 1, p.n_time + 1)
    bwd = (mbar, np.zeros(g.n_cells), g.centers, g.h, p.dt, p.alpha, p.sigma, p.c, p.r, p.q, p.h, p.k)
    yield "mfg forward  200x1000", lambda: mfg._forward_loops(*fwd), lambda: mfg._forward_numpy(*fwd)
    yield "mfg backward 200x1000", lambda: mfg._backward_loops(*bwd), lambda: mfg._backward_numpy(*bwd)


def pde_cases():
    g = Grid2DPeriodic(128.0, 128)
    f = morph_pde.init_random_mixture(g, 0.8, 0.05, 0)
    wx, wy = morph_pde.drift_velocity(f.m, morph_pde.make_kernel(g, 4.0), 4.0)
    dt = morph_pde.stable_dt(g.h, wx, wy)
    args = (f.m, f.phi, wx, wy, g.h, dt)
    yield "pde step     128^2", lambda: morph_pde._update_loops(*args), lambda: morph_pde._update_numpy(*args)


def mc_cases():
    n = 64 * 64
    rng = make_rng(0)
    sites, dirs, us = rng.integers(0, n, n), rng.integers(0, 4, n), rng.uniform(n)
    spins = morph_mc.init_lattice(64, 0.8, 0, beta=2.0).spins
    M = morph_mc.DEFAULT_INTERACTION
    none = np.empty(0, dtype=np.int64)

    def run(kernel):
        return lambda: kernel(spins.copy(), M, 2.0, sites, dirs, us, none)

    yield "mc sweep     64^2", run(morph_mc._kawasaki), run(morph_mc._kawasaki.py_func)


def best(fn, repeat):
    fn()
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for cases in (mfg_cases, pde_cases, mc_cases):
        for name, fast, slow in cases():
            a, b = best(fast, args.repeat), best(slow, args.repeat)
            print(f"{name:<22}{1e3 * a:>12.3f}{1e3 * b:>12.3f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
