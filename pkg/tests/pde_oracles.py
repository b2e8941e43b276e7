"""Heat-equation references for the continuum mixture tests."""

import numpy as np

from enersim.morph_pde import FieldPair, PdeParams, make_kernel, run_pde
from enersim.numerics import Grid2DPeriodic


def sine_mode(grid, amplitude=0.1):
    x = (np.arange(grid.n) + 0.5) * grid.h
    return amplitude * np.sin(2 * np.pi * x / grid.side_length)[:, None] * np.ones(grid.n)


def heat_run(n, side, t_final, n_steps):
    """Evolve a single x-mode with beta = 0 on ``n x n`` cells; returns (numerical m, exact m)."""
    grid = Grid2DPeriodic(side, n)
    m0 = sine_mode(grid)
    fields = FieldPair(grid, m0, np.full(grid.shape, 0.5))
    params = PdeParams(beta=0.0, T_final=t_final, dt=t_final / n_steps, snapshot_every=n_steps)
    run = run_pde(fields, make_kernel(grid, 4 * grid.h), params)
    assert run.steps == n_steps
    exact = m0 * np.exp(-((2 * np.pi / side) ** 2) * t_final)
    return run.snapshots[-1][2].m, exact


def l2(a, h):
    return float(np.sqrt((a**2).sum() * h * h))


def spatial_order(side=128.0, t_final=None, coarse_steps=1200):
    """Observed order of the L2 error, 64^2 -> 128^2, with dt ~ h^2."""
    t_final = t_final if t_final is not None else np.log(2) / (2 * np.pi / side) ** 2
    errs = []
    for n, steps in ((64, coarse_steps), (128, 4 * coarse_steps)):
        m, exact = heat_run(n, side, t_final, steps)
        errs.append(l2(m - exact, side / n))
    return float(np.log2(errs[0] / errs[1])), errs
