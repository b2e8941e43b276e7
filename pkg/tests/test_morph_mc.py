import json
from pathlib import Path

import numpy as np
import pytest

from enersim import morph_mc
from enersim.errors import InputError
from enersim.morph_mc import (
    LatticeConfig,
    delta_energy,
    hamiltonian,
    init_lattice,
    kawasaki_sweep,
    run_mc,
    run_proposals,
    state_code_trace,
)
from enersim.numerics import NEIGHBOR_OFFSETS, Grid2DPeriodic, make_rng

from mc_oracles import boltzmann, empirical_tv, energy

GOLDEN = json.loads((Path(__file__).parent / "golden" / "values.json").read_text())


def lattice(spins, beta=1.0):
    spins = np.asarray(spins)
    return LatticeConfig(Grid2DPeriodic(float(spins.shape[0]), spins.shape[0]), spins, beta)


def test_init_counts():
    c = init_lattice(10, 0.8, seed=3)
    assert c.composition() == (10, 80, 10)


def test_init_deterministic():
    assert np.array_equal(init_lattice(16, 0.5, 4).spins, init_lattice(16, 0.5, 4).spins)
    assert not np.array_equal(init_lattice(16, 0.5, 4).spins, init_lattice(16, 0.5, 5).spins)


def test_init_rejects_bad_input():
    with pytest.raises(InputError):
        init_lattice(1, 0.5, 0)
    with pytest.raises(InputError):
        init_lattice(8, 1.5, 0)


def test_all_solvent_has_zero_energy():
    assert hamiltonian(init_lattice(8, 1.0, 0)) == 0


def test_single_ab_pair():
    spins = np.zeros((4, 4), dtype=np.int8)
    spins[1, 1], spins[1, 2] = -1, 1
    # one A-B bond (4) plus six A-S and six B-S bonds
    assert hamiltonian(lattice(spins)) == 4 + 6
    assert energy(spins) == 10


def test_checkerboard():
    i, j = np.indices((8, 8))
    spins = np.where((i + j) % 2 == 0, -1, 1)
    assert hamiltonian(lattice(spins)) == 128 * 4


@pytest.mark.parametrize("side", [2, 3, 4, 7])
def test_hamiltonian_matches_pair_enumeration(side):
    for seed in range(5):
        c = init_lattice(side, 0.4, seed)
        assert hamiltonian(c) == energy(c.spins)


def test_interaction_matrix_validation():
    with pytest.raises(InputError):
        morph_mc.interaction_matrix([[0, 1], [1, 0]])
    with pytest.raises(InputError):
        morph_mc.interaction_matrix([[0, 1, 2], [1, 0, 1], [4, 1, 0]])


def test_delta_equal_spins():
    c = init_lattice(6, 1.0, 0)
    assert delta_energy(c, (2, 2), (2, 3)) == 0


def test_delta_matches_recompute():
    rng = np.random.default_rng(5)
    c = init_lattice(8, 0.5, 1)
    for _ in range(10_000):
        a = tuple(rng.integers(0, 8, 2))
        di, dj = NEIGHBOR_OFFSETS[rng.integers(4)]
        b = ((a[0] + di) % 8, (a[1] + dj) % 8)
        before = hamiltonian(c)
        d = delta_energy(c, a, b)
        c.spins[a], c.spins[b] = c.spins[b], c.spins[a]
        assert d == pytest.approx(hamiltonian(c) - before, abs=1e-12)


def test_delta_on_side_two():
    for seed in range(20):
        c = init_lattice(2, 0.5, seed)
        for a in [(0, 0), (1, 1)]:
            for di, dj in NEIGHBOR_OFFSETS:
                b = ((a[0] + di) % 2, (a[1] + dj) % 2)
                after = c.spins.copy()
                after[a], after[b] = after[b], after[a]
                assert delta_energy(c, a, b) == energy(after) - energy(c.spins)


def test_isolated_pair_swap_is_free():
    spins = np.zeros((6, 6), dtype=np.int8)
    spins[2, 2], spins[2, 3] = -1, 1
    assert delta_energy(lattice(spins), (2, 2), (2, 3)) == 0


def test_delta_rejects_non_neighbours():
    with pytest.raises(InputError):
        delta_energy(init_lattice(6, 0.5, 0), (0, 0), (2, 2))


def test_infinite_temperature_accepts_everything():
    c = init_lattice(16, 0.5, 0, beta=0.0)
    accepted, _ = run_proposals(c, 20_000, rng=make_rng(1))
    assert accepted == 20_000


def test_cold_lattice_rejects_uphill():
    spins = np.zeros((8, 8), dtype=np.int8)
    spins[:, :4] = -1
    c = lattice(spins, beta=50.0)
    h0 = hamiltonian(c)
    run_proposals(c, 50_000, rng=make_rng(2))
    assert hamiltonian(c) <= h0


def test_boltzmann_two_by_two():
    beta = 1.0
    c = lattice(np.array([[-1, 0], [0, 1]]), beta)
    codes, probs = boltzmann(2, (1, 2, 1), beta)
    assert len(codes) == 12
    trace = state_code_trace(c, 400_000, rng=make_rng(17))
    assert empirical_tv(trace, codes, probs) <= 0.02


def test_state_codes_limited():
    with pytest.raises(InputError):
        state_code_trace(init_lattice(7, 0.5, 0), 10)


def test_bookkeeping_and_composition():
    c = init_lattice(32, 0.6, 2, beta=1.0)
    comp = c.composition()
    h0 = hamiltonian(c)
    accepted, dh = run_proposals(c, 100_000, rng=make_rng(3))
    assert 0 < accepted < 100_000
    assert abs((hamiltonian(c) - h0) - dh) <= 1e-6
    assert c.composition() == comp


def test_sweep_returns_same_config():
    c = init_lattice(8, 0.5, 0)
    out, accepted, _ = kawasaki_sweep(c, rng=make_rng(0))
    assert out is c
    assert 0 <= accepted <= 64


def test_run_mc_zero_sweeps():
    c = init_lattice(8, 0.5, 0)
    r = run_mc(c, sweeps=0, rng=make_rng(0))
    assert r.energies.size == 0
    assert len(r.snapshots) == 1


def test_run_mc_snapshots_and_validation():
    r = run_mc(init_lattice(8, 0.5, 0), sweeps=25, snapshot_every=10, rng=make_rng(0))
    assert [s for s, _ in r.snapshots] == [0, 10, 20]
    with pytest.raises(InputError):
        run_mc(init_lattice(8, 0.5, 0), sweeps=-1)


def test_coarsening_lowers_energy():
    c = init_lattice(64, 0.8, 9, beta=2.0)
    r = run_mc(c, sweeps=500, snapshot_every=100, rng=make_rng(10))
    assert r.initial_energy == GOLDEN["mc_cli_seed9_initial_energy"]
    assert r.energies[-50:].mean() == pytest.approx(GOLDEN["mc_cli_seed9_mean_energy_last_50"], rel=1e-12)
    assert r.energies[-50:].mean() < 0.6 * r.initial_energy


def test_run_mc_deterministic():
    a = run_mc(init_lattice(16, 0.5, 0), sweeps=20, rng=make_rng(4))
    b = run_mc(init_lattice(16, 0.5, 0), sweeps=20, rng=make_rng(4))
    assert np.array_equal(a.config.spins, b.config.spins)
    assert np.array_equal(a.energies, b.energies)


def test_render_colors():
    img = morph_mc.render(np.array([[-1, 0], [1, 0]], dtype=np.int8))
    assert tuple(img[0, 0]) == (0, 0, 255)
    assert tuple(img[0, 1]) == (255, 0, 0)
    assert tuple(img[1, 0]) == (255, 255, 0)
