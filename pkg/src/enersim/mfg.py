"""First-order mean-field game for a population of thermostatic cooling devices.

State ``x`` is a device temperature on ``(x_lo, x_hi)``, the control ``u`` in
``[0, 1]`` switches cooling on. Agents move with the drift

    f(x, u) = -alpha * x + sigma * u + c,   sigma = -alpha (x_hi - x_lo),  c = alpha x_hi

and pay the running cost

    g(x, u, mbar) = r u + q x^2 + h mbar^+ u + k mbar^- (1 - u),

where ``mbar(t)`` is the mean temperature of the population. The density
obeys the transport equation ``m_t + (f m)_x = 0`` forward in time, the
cost-to-go ``v`` obeys ``-v_t + sup_u {-f v_x - g} = 0`` backward from
``v(T) = psi``. Both are discretised with explicit upwind finite volumes on a
shared grid and coupled by damped Picard iteration on the control.

Arrays over time have ``n_time + 1`` rows; row ``n`` is time ``n * dt``.
``u[n]`` is the best response at time level ``n`` and drives the forward step
``n -> n + 1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from enersim._backend import USE_NUMBA, njit
from enersim.errors import ConsistencyError, InputError, NumericalError, StabilityError
from enersim.numerics import Grid1D, norm_l1_diff


@dataclass(frozen=True)
class MfgParams:
    alpha: float
    r: float
    q: float
    h: float
    k: float
    grid: Grid1D
    T: float
    n_time: int

    def __post_init__(self):
        for name in ("alpha", "r", "T"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("q", "h", "k"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if int(self.n_time) != self.n_time or self.n_time < 1:
            raise InputError(f"n_time must be a positive integer, got {self.n_time}")

    @property
    def sigma(self) -> float:
        return -self.alpha * (self.grid.x_hi - self.grid.x_lo)

    @property
    def c(self) -> float:
        return self.alpha * self.grid.x_hi

    @property
    def dt(self) -> float:
        return self.T / self.n_time

    @property
    def max_speed(self) -> float:
        """``max |f|`` over the closed domain and all admissible controls."""
        return self.alpha * (self.grid.x_hi - self.grid.x_lo)

    @property
    def admissible_dt(self) -> float:
        return self.grid.h / self.max_speed

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_time + 1) * self.dt

    def check_cfl(self):
        if self.dt > self.admissible_dt:
            raise StabilityError(
                f"time step {self.dt:.6g} exceeds the CFL bound h/max|f| = {self.admissible_dt:.6g}",
                self.admissible_dt,
            )


@dataclass
class MfgState:
    times: np.ndarray
    m: np.ndarray
    v: np.ndarray
    u: np.ndarray
    mbar: np.ndarray
    control_applied: np.ndarray


@dataclass
class PicardReport:
    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = False
    damping: float = 0.5
    initial_damping: float = 0.5

    def to_json(self) -> dict:
        return asdict(self)


def drift(x, u, params: MfgParams):
    return -params.alpha * x + params.sigma * u + params.c


def running_cost(x, u, mbar, params: MfgParams):
    m_plus = (mbar + abs(mbar)) / 2
    m_minus = (mbar - abs(mbar)) / 2
    return params.r * u + params.q * x**2 + params.h * m_plus * u + params.k * m_minus * (1 - u)


def optimal_control(dv_dx: float, mbar: float, params: MfgParams) -> float:
    """Maximiser over ``s`` in ``[0, 1]`` of ``-f(x, s) v_x - g(x, s, mbar)``.

    The maximand is affine in ``s`` with slope
    ``-sigma v_x - r - h mbar^+ + k mbar^-``; a zero slope returns 0.
    """
    m_plus = (mbar + abs(mbar)) / 2
    m_minus = (mbar - abs(mbar)) / 2
    slope = -params.sigma * dv_dx - params.r - params.h * m_plus + params.k * m_minus
    return 1.0 if slope > 0 else 0.0


def mean_temperature(m_slice, grid: Grid1D) -> float:
    m_slice = np.asarray(m_slice, dtype=float)
    mass = grid.h * m_slice.sum()
    if abs(mass - 1.0) > 1e-6:
        raise ConsistencyError(f"density has mass {mass!r}, expected 1")
    if m_slice.min() < 0:
        raise ConsistencyError("density has negative entries")
    return float(grid.h * np.dot(grid.centers, m_slice))


def initial_density(grid: Grid1D, mu1: float = 10.0, mu2: float = 10.0, sigma0: float = 7.0) -> np.ndarray:
    """Two Gaussian bumps at ``-mu1`` and ``+mu2``, renormalised to unit mass."""
    if not sigma0 > 0:
        raise InputError(f"sigma0 must be positive, got {sigma0}")
    x = grid.centers
    m0 = (np.exp(-((x + mu1) ** 2) / sigma0**2) + np.exp(-((x - mu2) ** 2) / sigma0**2)) / math.sqrt(
        2 * math.pi * sigma0**2
    )
    mass = grid.h * m0.sum()
    if mass < 1e-30:
        raise InputError("initial bumps lie entirely outside the domain")
    return m0 / mass


# ---------------------------------------------------------------- kernels


def _forward_numpy(u, m0, x_faces, h, dt, alpha, sigma, c, centers):
    n_steps = u.shape[0] - 1
    m = np.empty((n_steps + 1, m0.shape[0]))
    m[0] = m0
    ratio = dt / h
    for n in range(n_steps):
        mn = m[n]
        f = -alpha * x_faces + sigma * 0.5 * (u[n, :-1] + u[n, 1:]) + c
        flux = np.zeros(mn.shape[0] + 1)
        flux[1:-1] = np.maximum(f, 0.0) * mn[:-1] + np.minimum(f, 0.0) * mn[1:]
        m[n + 1] = mn - ratio * (flux[1:] - flux[:-1])
    mbar = h * (m @ centers)
    return m, mbar


@njit
def _forward_loops(u, m0, x_faces, h, dt, alpha, sigma, c, centers):
    n_steps = u.shape[0] - 1
    nc = m0.shape[0]
    m = np.empty((n_steps + 1, nc))
    mbar = np.empty(n_steps + 1)
    m[0, :] = m0
    ratio = dt / h
    for n in range(n_steps):
        left = 0.0
        for i in range(nc):
            if i < nc - 1:
                f = -alpha * x_faces[i] + sigma * 0.5 * (u[n, i] + u[n, i + 1]) + c
                right = max(f, 0.0) * m[n, i] + min(f, 0.0) * m[n, i + 1]
            else:
                right = 0.0
            m[n + 1, i] = m[n, i] - ratio * (right - left)
            left = right
    for n in range(n_steps + 1):
        s = 0.0
        for i in range(nc):
            s += centers[i] * m[n, i]
        mbar[n] = h * s
    return m, mbar


def _hamiltonian_numpy(v, x, mb, h, alpha, sigma, c, r, q, hh, k):
    """Upwinded maximand for s = 0 and s = 1; returns (H, argmax)."""
    m_plus = (mb + abs(mb)) / 2
    m_minus = (mb - abs(mb)) / 2
    fwd = np.zeros_like(v)
    bwd = np.zeros_like(v)
    fwd[:-1] = (v[1:] - v[:-1]) / h
    bwd[1:] = (v[1:] - v[:-1]) / h
    f0 = -alpha * x + c
    f1 = f0 + sigma
    p0 = np.where(f0 > 0, fwd, bwd)
    p1 = np.where(f1 > 0, fwd, bwd)
    val0 = -f0 * p0 - (q * x * x + k * m_minus)
    val1 = -f1 * p1 - (r + q * x * x + hh * m_plus)
    take1 = val1 > val0
    return np.where(take1, val1, val0), take1.astype(np.float64)


def _backward_numpy(mbar, psi, x, h, dt, alpha, sigma, c, r, q, hh, k):
    n_steps = mbar.shape[0] - 1
    v = np.empty((n_steps + 1, psi.shape[0]))
    u = np.empty_like(v)
    v[n_steps] = psi
    for n in range(n_steps, -1, -1):
        H, u[n] = _hamiltonian_numpy(v[n], x, mbar[n], h, alpha, sigma, c, r, q, hh, k)
        if n > 0:
            v[n - 1] = v[n] - dt * H
    return v, u


@njit
def _backward_loops(mbar, psi, x, h, dt, alpha, sigma, c, r, q, hh, k):
    n_steps = mbar.shape[0] - 1
    nc = psi.shape[0]
    v = np.empty((n_steps + 1, nc))
    u = np.empty((n_steps + 1, nc))
    v[n_steps, :] = psi
    for n in range(n_steps, -1, -1):
        mb = mbar[n]
        m_plus = (mb + abs(mb)) / 2
        m_minus = (mb - abs(mb)) / 2
        for i in range(nc):
            fwd = (v[n, i + 1] - v[n, i]) / h if i < nc - 1 else 0.0
            bwd = (v[n, i] - v[n, i - 1]) / h if i > 0 else 0.0
            xi = x[i]
            f0 = -alpha * xi + c
            f1 = f0 + sigma
            p0 = fwd if f0 > 0 else bwd
            p1 = fwd if f1 > 0 else bwd
            val0 = -f0 * p0 - (q * xi * xi + k * m_minus)
            val1 = -f1 * p1 - (r + q * xi * xi + hh * m_plus)
            if val1 > val0:
                H = val1
                u[n, i] = 1.0
            else:
                H = val0
                u[n, i] = 0.0
            if n > 0:
                v[n - 1, i] = v[n, i] - dt * H
    return v, u


if USE_NUMBA:
    _forward = _forward_loops
    _backward = _backward_loops
else:
    _forward = _forward_numpy
    _backward = _backward_numpy


# ---------------------------------------------------------------- solvers


def kfp_forward(u, m0, params: MfgParams) -> tuple[np.ndarray, np.ndarray]:
    """Conservative upwind transport of ``m0`` under the control field ``u``."""
    params.check_cfl()
    g = params.grid
    u = np.ascontiguousarray(u, dtype=float)
    m0 = np.ascontiguousarray(m0, dtype=float)
    if u.shape != (params.n_time + 1, g.n_cells):
        raise InputError(f"control has shape {u.shape}, expected {(params.n_time + 1, g.n_cells)}")
    if m0.shape != (g.n_cells,):
        raise InputError(f"m0 has shape {m0.shape}, expected {(g.n_cells,)}")
    if u.min() < 0 or u.max() > 1:
        raise InputError("controls must lie in [0, 1]")
    return _forward(u, m0, g.interfaces[1:-1], g.h, params.dt, params.alpha, params.sigma, params.c, g.centers)


def hjb_backward(mbar, params: MfgParams, psi=None) -> tuple[np.ndarray, np.ndarray]:
    """Explicit upwind march of the cost-to-go from ``T`` down to 0."""
    params.check_cfl()
    g = params.grid
    mbar = np.ascontiguousarray(mbar, dtype=float)
    if mbar.shape != (params.n_time + 1,):
        raise InputError(f"mbar has shape {mbar.shape}, expected {(params.n_time + 1,)}")
    psi = np.zeros(g.n_cells) if psi is None else np.ascontiguousarray(psi, dtype=float)
    return _backward(
        mbar, psi, g.centers, g.h, params.dt, params.alpha, params.sigma, params.c,
        params.r, params.q, params.h, params.k,
    )


def picard_solve(
    params: MfgParams,
    m0,
    psi=None,
    damping: float = 0.5,
    tol: float = 1e-6,
    max_iter: int = 200,
    on_iterate=None,
    adaptive: bool = True,
) -> tuple[MfgState, PicardReport]:
    """Damped fixed-point iteration on the control.

    With ``adaptive`` the damping weight is halved whenever the residual
    fails to decrease; ``report.damping`` holds the final weight.

    ``on_iterate(k, m, u_applied)`` is called after every forward solve,
    starting with ``k = 0`` for the trajectory under ``u = 0``.
    """
    if not 0 < damping <= 1:
        raise InputError(f"damping must lie in (0, 1], got {damping}")
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    if int(max_iter) != max_iter or max_iter < 1:
        raise InputError(f"max_iter must be a positive integer, got {max_iter}")
    params.check_cfl()
    g = params.grid
    psi = np.zeros(g.n_cells) if psi is None else np.asarray(psi, dtype=float)

    u = np.zeros((params.n_time + 1, g.n_cells))
    m, mbar = kfp_forward(u, m0, params)
    if on_iterate is not None:
        on_iterate(0, m, u)
    report = PicardReport(iterations=0, damping=damping, initial_damping=damping)
    best = None
    weight = damping
    for it in range(1, max_iter + 1):
        v, u_raw = hjb_backward(mbar, params, psi)
        # a residual that stops shrinking means the bang-bang response is
        # cycling around a switching cell; halving the weight lets the damped
        # control settle at the indifference value instead
        if adaptive and len(report.residuals) >= 2 and report.residuals[-1] >= report.residuals[-2]:
            weight *= 0.5
        u = (1 - weight) * u + weight * u_raw
        m_new, mbar_new = kfp_forward(u, m0, params)
        if not (np.all(np.isfinite(m_new)) and np.all(np.isfinite(v))):
            raise NumericalError(f"non-finite values in Picard iteration {it}", step=it)
        if on_iterate is not None:
            on_iterate(it, m_new, u)
        residual = max(norm_l1_diff(a, b, g) for a, b in zip(m_new, m))
        report.residuals.append(residual)
        report.iterations = it
        report.damping = weight
        m, mbar = m_new, mbar_new
        if best is None or residual <= best[0]:
            best = (residual, MfgState(params.times, m, v, u_raw, mbar, u.copy()))
        if residual <= tol:
            report.converged = True
            break
    return best[1], report


# ---------------------------------------------------------------- config


@dataclass
class MfgConfig:
    """Run configuration as read from / written to JSON."""

    alpha: float = 0.2
    r: float = 1.0
    q: float = 1.0
    h: float = 1.0
    k: float = 1.0
    x_lo: float = -25.0
    x_hi: float = 25.0
    n_cells: int = 200
    T: float = 1.0
    n_time: int | None = 1000
    mu1: float = 10.0
    mu2: float = 10.0
    sigma0: float = 7.0
    damping: float = 0.5
    tol: float = 1e-6
    max_iter: int = 200
    cfl: float = 0.9

    @classmethod
    def from_dict(cls, doc: dict) -> MfgConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise InputError(f"unknown mfg config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("n_cells", "max_iter"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"{name} must be an integer, got {value!r}")
        if self.n_time is not None and (isinstance(self.n_time, bool) or not isinstance(self.n_time, int)):
            raise InputError(f"n_time must be an integer or null, got {self.n_time!r}")
        for name in ("alpha", "r", "q", "h", "k", "x_lo", "x_hi", "T", "mu1", "mu2", "sigma0",
                     "damping", "tol", "cfl"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InputError(f"{name} must be a finite number, got {value!r}")
        if not 0 < self.cfl <= 1:
            raise InputError(f"cfl must lie in (0, 1], got {self.cfl}")

    def resolved_n_time(self) -> int:
        if self.n_time is not None:
            return self.n_time
        dt_max = self.cfl * ((self.x_hi - self.x_lo) / self.n_cells) / (self.alpha * (self.x_hi - self.x_lo))
        return max(1, math.ceil(self.T / dt_max))

    def params(self) -> MfgParams:
        grid = Grid1D(float(self.x_lo), float(self.x_hi), self.n_cells)
        return MfgParams(self.alpha, self.r, self.q, self.h, self.k, grid, self.T, self.resolved_n_time())

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["n_time"] = self.resolved_n_time()
        return doc


def solve_config(cfg: MfgConfig, on_iterate=None) -> tuple[MfgParams, MfgState, PicardReport]:
    params = cfg.params()
    m0 = initial_density(params.grid, cfg.mu1, cfg.mu2, cfg.sigma0)
    state, report = picard_solve(params, m0, None, cfg.damping, cfg.tol, cfg.max_iter, on_iterate)
    return params, state, report
