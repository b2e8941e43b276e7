"""Kawasaki spin-exchange Monte Carlo for a three-species lattice mixture.

Spins ``-1, 0, +1`` stand for polymer A, solvent S and polymer B on an
``L x L`` periodic square lattice. The energy is a sum over nearest-neighbour
bonds of a symmetric interaction matrix (default: A-B costs 4, A-S and B-S
cost 1, like pairs cost 0). Moves swap a site with one of its four
neighbours and are accepted with the Metropolis probability
``min(1, exp(-beta * dH))``, so species counts never change.

Bonds join distinct neighbouring sites, each pair once. On ``L = 2`` the
+x and -x wrap directions reach the same site; that pair still carries a
single bond, and a move in either direction proposes the same swap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from enersim._backend import USE_NUMBA, njit
from enersim.errors import InputError
from enersim.numerics import NEIGHBOR_OFFSETS, Grid2DPeriodic, RngStream, make_rng

DEFAULT_INTERACTION = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])

# A, S, B as blue, red, yellow
SPECIES_COLORS = {-1: (0, 0, 255), 0: (255, 0, 0), 1: (255, 255, 0)}

_DI = np.array([d[0] for d in NEIGHBOR_OFFSETS], dtype=np.int64)
_DJ = np.array([d[1] for d in NEIGHBOR_OFFSETS], dtype=np.int64)


def interaction_matrix(values=None) -> np.ndarray:
    """Validated 3x3 matrix; rows/columns ordered (-1, 0, +1)."""
    M = DEFAULT_INTERACTION.copy() if values is None else np.array(values, dtype=float)
    if M.shape != (3, 3):
        raise InputError(f"interaction matrix must be 3x3, got {M.shape}")
    if not np.array_equal(M, M.T):
        raise InputError("interaction matrix must be symmetric")
    if np.any(np.diag(M) != 0) or np.any(M < 0):
        raise InputError("interaction matrix must be nonnegative with zero diagonal")
    return M


@dataclass
class LatticeConfig:
    grid: Grid2DPeriodic
    spins: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        self.spins = np.ascontiguousarray(self.spins, dtype=np.int8)
        if self.spins.shape != self.grid.shape:
            raise InputError(f"spins shape {self.spins.shape} does not match grid {self.grid.shape}")
        if not np.isin(self.spins, (-1, 0, 1)).all():
            raise InputError("spins must take values in {-1, 0, +1}")
        if not self.beta >= 0:
            raise InputError(f"beta must be >= 0, got {self.beta}")

    @property
    def side(self) -> int:
        return self.grid.n

    def composition(self) -> tuple[int, int, int]:
        return tuple(int((self.spins == s).sum()) for s in (-1, 0, 1))

    def copy(self) -> LatticeConfig:
        return LatticeConfig(self.grid, self.spins.copy(), self.beta)


def init_lattice(side: int, solvent_fraction: float, seed: int, beta: float = 1.0) -> LatticeConfig:
    """Random mixture with an exact solvent count and A/B split within one."""
    if int(side) != side or side < 2:
        raise InputError(f"side must be an integer >= 2, got {side}")
    if not 0 <= solvent_fraction <= 1:
        raise InputError(f"solvent_fraction must lie in [0, 1], got {solvent_fraction}")
    n_sites = side * side
    n_solvent = int(round(solvent_fraction * n_sites))
    n_a = (n_sites - n_solvent) // 2
    n_b = n_sites - n_solvent - n_a
    flat = np.concatenate([np.full(n_a, -1), np.zeros(n_solvent), np.full(n_b, 1)]).astype(np.int8)
    flat = flat[make_rng(seed).permutation(n_sites)]
    return LatticeConfig(Grid2DPeriodic(float(side), side), flat.reshape(side, side), beta)


def hamiltonian(config: LatticeConfig, M=None) -> float:
    """Sum of interaction energies over all bonds (each bond once)."""
    M = DEFAULT_INTERACTION if M is None else M
    s = config.spins.astype(np.int64) + 1
    total = M[s, np.roll(s, -1, axis=0)].sum() + M[s, np.roll(s, -1, axis=1)].sum()
    # on a side-2 torus each pair was visited from both ends
    return float(total / 2 if config.side == 2 else total)


def _check_adjacent(config: LatticeConfig, a, b) -> int:
    L = config.side
    for d, (di, dj) in enumerate(NEIGHBOR_OFFSETS):
        if ((a[0] + di) % L, (a[1] + dj) % L) == (b[0] % L, b[1] % L):
            return d
    raise InputError(f"sites {tuple(a)} and {tuple(b)} are not nearest neighbours")


@njit
def _delta(spins, M, ai, aj, bi, bj):
    L = spins.shape[0]
    sa = spins[ai, aj] + 1
    sb = spins[bi, bj] + 1
    if sa == sb:
        return 0.0
    d = 0.0
    for k in range(4):
        if L == 2 and k % 2 == 1:
            continue
        ni = (ai + _DI[k]) % L
        nj = (aj + _DJ[k]) % L
        if not (ni == bi and nj == bj):
            sn = spins[ni, nj] + 1
            d += M[sb, sn] - M[sa, sn]
        ni = (bi + _DI[k]) % L
        nj = (bj + _DJ[k]) % L
        if not (ni == ai and nj == aj):
            sn = spins[ni, nj] + 1
            d += M[sa, sn] - M[sb, sn]
    return d


def delta_energy(config: LatticeConfig, site_a, site_b, M=None) -> float:
    """Energy change of swapping two neighbouring sites, from local bonds only."""
    M = DEFAULT_INTERACTION if M is None else np.asarray(M, dtype=float)
    _check_adjacent(config, site_a, site_b)
    L = config.side
    return float(_delta(config.spins, M, site_a[0] % L, site_a[1] % L, site_b[0] % L, site_b[1] % L))


@njit
def _kawasaki(spins, M, beta, sites, dirs, us, codes):
    """Run proposals in place; returns (accepted, summed dH).

    ``codes`` (if non-empty) receives a base-3 encoding of the lattice after
    every proposal, for small-lattice distribution checks.
    """
    L = spins.shape[0]
    accepted = 0
    total = 0.0
    record = codes.shape[0] > 0
    code = 0
    if record:
        p = 1
        for i in range(L):
            for j in range(L):
                code += (spins[i, j] + 1) * p
                p *= 3
    for t in range(sites.shape[0]):
        ai = sites[t] // L
        aj = sites[t] % L
        bi = (ai + _DI[dirs[t]]) % L
        bj = (aj + _DJ[dirs[t]]) % L
        dh = _delta(spins, M, ai, aj, bi, bj)
        if dh <= 0.0 or us[t] < np.exp(-beta * dh):
            sa = spins[ai, aj]
            sb = spins[bi, bj]
            if record and sa != sb:
                pa = 3 ** (ai * L + aj)
                pb = 3 ** (bi * L + bj)
                code += (sb - sa) * pa + (sa - sb) * pb
            spins[ai, aj] = sb
            spins[bi, bj] = sa
            accepted += 1
            total += dh
        if record:
            codes[t] = code
    return accepted, total


_NO_CODES = np.empty(0, dtype=np.int64)


def _run_proposals(config: LatticeConfig, M, n: int, rng: RngStream, codes=_NO_CODES):
    L = config.side
    sites = rng.integers(0, L * L, n)
    dirs = rng.integers(0, 4, n)
    us = rng.uniform(n)
    kernel = _kawasaki if USE_NUMBA else _kawasaki.py_func
    return kernel(config.spins, np.ascontiguousarray(M, dtype=float), float(config.beta), sites, dirs, us, codes)


def kawasaki_sweep(config: LatticeConfig, M=None, rng: RngStream | None = None) -> tuple[LatticeConfig, int, float]:
    """``side**2`` Metropolis spin-exchange proposals, applied in place.

    Returns the (same, mutated) config, the number of accepted swaps and the
    summed energy change of the accepted swaps. Swaps of equal spins count as
    accepted (their energy change is zero).
    """
    M = DEFAULT_INTERACTION if M is None else M
    rng = rng if rng is not None else make_rng(0)
    accepted, dh = _run_proposals(config, M, config.side**2, rng)
    return config, int(accepted), float(dh)


def run_proposals(config: LatticeConfig, n_proposals: int, M=None, rng: RngStream | None = None):
    """Like :func:`kawasaki_sweep` but with an arbitrary proposal count."""
    M = DEFAULT_INTERACTION if M is None else M
    rng = rng if rng is not None else make_rng(0)
    accepted, dh = _run_proposals(config, M, int(n_proposals), rng)
    return int(accepted), float(dh)


def state_code_trace(config: LatticeConfig, n_proposals: int, M=None, rng: RngStream | None = None) -> np.ndarray:
    """Base-3 code of the lattice after each of ``n_proposals`` moves.

    Site ``(i, j)`` contributes ``(spin + 1) * 3**(i * L + j)``. Only for
    lattices with at most 39 sites (codes must fit in int64).
    """
    if config.side**2 > 39:
        raise InputError("state codes are limited to lattices of at most 39 sites")
    M = DEFAULT_INTERACTION if M is None else M
    rng = rng if rng is not None else make_rng(0)
    codes = np.empty(int(n_proposals), dtype=np.int64)
    _run_proposals(config, M, int(n_proposals), rng, codes)
    return codes


def encode_state(spins: np.ndarray) -> int:
    flat = spins.reshape(-1).astype(np.int64) + 1
    return int(sum(int(v) * 3**p for p, v in enumerate(flat)))


@dataclass
class McResult:
    config: LatticeConfig
    initial_energy: float
    energies: np.ndarray
    acceptance: np.ndarray
    snapshots: list  # (sweep, spins)


def run_mc(
    config: LatticeConfig,
    M=None,
    sweeps: int = 100,
    snapshot_every: int = 10,
    rng: RngStream | None = None,
) -> McResult:
    """Run ``sweeps`` sweeps in place, tracing energy and acceptance per sweep.

    Snapshots are taken of the initial lattice and after every
    ``snapshot_every``-th sweep.
    """
    M = DEFAULT_INTERACTION if M is None else M
    if int(sweeps) != sweeps or sweeps < 0:
        raise InputError(f"sweeps must be a nonnegative integer, got {sweeps}")
    if int(snapshot_every) != snapshot_every or snapshot_every < 1:
        raise InputError(f"snapshot_every must be a positive integer, got {snapshot_every}")
    rng = rng if rng is not None else make_rng(0)
    n = config.side**2
    energies = np.empty(sweeps)
    acceptance = np.empty(sweeps)
    snapshots = [(0, config.spins.copy())]
    h0 = hamiltonian(config, M)
    for sweep in range(1, sweeps + 1):
        _, accepted, _ = kawasaki_sweep(config, M, rng)
        energies[sweep - 1] = hamiltonian(config, M)
        acceptance[sweep - 1] = accepted / n
        if sweep % snapshot_every == 0:
            snapshots.append((sweep, config.spins.copy()))
    return McResult(config, h0, energies, acceptance, snapshots)


def render(spins: np.ndarray) -> np.ndarray:
    """RGB image, one pixel per site."""
    img = np.empty(spins.shape + (3,), dtype=np.uint8)
    for s, rgb in SPECIES_COLORS.items():
        img[spins == s] = rgb
    return img
