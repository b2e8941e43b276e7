"""Explicit finite volumes for the nonlocal two-field mixture model.

Unknowns on a periodic square: the magnetisation ``m`` (local mean spin,
telling the two polymers apart) and the polymer concentration ``phi``
(``1 - phi`` is the solvent fraction). With ``w = 2 beta grad(J * m)``,

    m_t   = div( grad m   - (phi - m^2)   w )
    phi_t = div( grad phi - m (1 - phi)   w )

``J`` is a compactly supported smooth bump of unit mass. Setting ``phi = 1``
freezes ``phi`` and leaves a scalar nonlocal Cahn-Hilliard-type equation for
``m``.

Discretisation: cell averages, two-point diffusive fluxes, advective fluxes
upwinded by the sign of the face velocity with the nonlinear coefficient
taken from the upwind cell, forward Euler in time. Fluxes telescope on the
torus, so both discrete masses are conserved to round-off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from enersim._backend import USE_NUMBA, njit
from enersim.errors import DimensionError, InputError, NumericalError, StabilityError
from enersim.numerics import Grid2DPeriodic, make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldPair:
    grid: Grid2DPeriodic
    m: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("m", "phi"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape:
                raise DimensionError(f"{name} has shape {arr.shape}, grid is {self.grid.shape}")
            object.__setattr__(self, name, arr)

    def masses(self) -> tuple[float, float]:
        h2 = self.grid.h**2
        return float(self.m.sum() * h2), float(self.phi.sum() * h2)

    def bound_violation(self) -> float:
        """Largest breach of ``0 <= phi <= 1`` or ``m^2 <= phi`` (0 if none)."""
        return float(max(
            0.0,
            (self.m**2 - self.phi).max(),
            (-self.phi).max(),
            (self.phi - 1.0).max(),
        ))


@dataclass(frozen=True)
class KernelSpec:
    grid: Grid2DPeriodic
    epsilon: float
    J: np.ndarray
    grad_hat: tuple  # FFTs of the two centred-difference gradient components

    @property
    def grad(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        gx = (np.roll(self.J, -1, axis=0) - np.roll(self.J, 1, axis=0)) / (2 * g.h)
        gy = (np.roll(self.J, -1, axis=1) - np.roll(self.J, 1, axis=1)) / (2 * g.h)
        return gx, gy


def periodic_offsets(n: int) -> np.ndarray:
    """Signed index offsets ``0, 1, ..., -2, -1`` of an FFT-ordered axis."""
    i = np.arange(n)
    return np.where(i < (n + 1) // 2, i, i - n)


def make_kernel(grid: Grid2DPeriodic, epsilon: float) -> KernelSpec:
    """Unit-mass radial bump ``exp(-1 / (1 - (rho/eps)^2))`` of radius ``epsilon``.

    Stored with the origin at index ``(0, 0)``.
    """
    if not 0 < epsilon < grid.side_length / 2:
        raise InputError(f"epsilon must lie in (0, side_length/2) = (0, {grid.side_length / 2}), got {epsilon}")
    off = periodic_offsets(grid.n) * grid.h
    rho = np.hypot(off[:, None], off[None, :])
    s = rho / epsilon
    J = np.zeros(grid.shape)
    inside = s < 1
    J[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    J /= J.sum() * grid.h**2
    gx = (np.roll(J, -1, axis=0) - np.roll(J, 1, axis=0)) / (2 * grid.h)
    gy = (np.roll(J, -1, axis=1) - np.roll(J, 1, axis=1)) / (2 * grid.h)
    gx_hat = np.fft.fft2(gx) * grid.h**2
    gy_hat = np.fft.fft2(gy) * grid.h**2
    # centred differences sum to zero on the torus; drop the round-off
    gx_hat[0, 0] = 0.0
    gy_hat[0, 0] = 0.0
    return KernelSpec(grid, float(epsilon), J, (gx_hat, gy_hat))


def conv_grad(field, kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(grad J) * field`` by FFT; ``sum_y gJ(x - y) field(y) h^2``."""
    field = np.asarray(field, dtype=float)
    if field.shape != kernel.grid.shape:
        raise DimensionError(f"field shape {field.shape} does not match kernel grid {kernel.grid.shape}")
    f_hat = np.fft.fft2(field)
    gx = np.fft.ifft2(kernel.grad_hat[0] * f_hat).real
    gy = np.fft.ifft2(kernel.grad_hat[1] * f_hat).real
    return gx, gy


def conv_grad_direct(field, kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Reference double sum for :func:`conv_grad`, ``O(n^4)``."""
    field = np.asarray(field, dtype=float)
    n = kernel.grid.n
    h2 = kernel.grid.h**2
    gx, gy = kernel.grad
    out_x = np.zeros((n, n))
    out_y = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            ia = (a - np.arange(n)) % n
            ib = (b - np.arange(n)) % n
            out_x[a, b] = (gx[np.ix_(ia, ib)] * field).sum() * h2
            out_y[a, b] = (gy[np.ix_(ia, ib)] * field).sum() * h2
    return out_x, out_y


@dataclass(frozen=True)
class PdeParams:
    beta: float
    T_final: float
    dt: float | None = None
    snapshot_every: int = 100

    def __post_init__(self):
        if not self.beta >= 0:
            raise InputError(f"beta must be >= 0, got {self.beta}")
        if not self.T_final > 0:
            raise InputError(f"T_final must be positive, got {self.T_final}")
        if self.dt is not None and not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise InputError(f"snapshot_every must be a positive integer, got {self.snapshot_every}")


def drift_velocity(m, kernel: KernelSpec, beta: float) -> tuple[np.ndarray, np.ndarray]:
    if beta == 0:
        z = np.zeros(kernel.grid.shape)
        return z, z.copy()
    gx, gy = conv_grad(m, kernel)
    return 2 * beta * gx, 2 * beta * gy


def stable_dt(h: float, wx, wy) -> float:
    """``min(h^2/8, h / (2 max|w|))``."""
    wmax = max(float(np.abs(wx).max()), float(np.abs(wy).max()))
    bound = h * h / 8
    if wmax > 0:
        bound = min(bound, h / (2 * wmax))
    return bound


def _face_flux_numpy(u, a, w, axis, h):
    """Outward flux through the +face along ``axis`` of every cell."""
    u_next = np.roll(u, -1, axis=axis)
    a_next = np.roll(a, -1, axis=axis)
    wf = 0.5 * (w + np.roll(w, -1, axis=axis))
    return -(u_next - u) / h + np.where(wf > 0, a, a_next) * wf


def _update_numpy(m, phi, wx, wy, h, dt):
    am = phi - m * m
    ap = m * (1.0 - phi)
    ratio = dt / h
    out = []
    for u, a in ((m, am), (phi, ap)):
        fx = _face_flux_numpy(u, a, wx, 0, h)
        fy = _face_flux_numpy(u, a, wy, 1, h)
        div = (fx - np.roll(fx, 1, axis=0)) + (fy - np.roll(fy, 1, axis=1))
        out.append(u - ratio * div)
    return out[0], out[1]


@njit
def _update_loops(m, phi, wx, wy, h, dt):
    n = m.shape[0]
    ratio = dt / h
    m_new = np.empty_like(m)
    p_new = np.empty_like(phi)
    for i in range(n):
        ip = (i + 1) % n
        im = (i - 1) % n
        for j in range(n):
            jp = (j + 1) % n
            jm = (j - 1) % n
            div_m = 0.0
            div_p = 0.0
            # four faces: (+x, -x, +y, -y) as (left cell, right cell, velocity, sign)
            for face in range(4):
                if face == 0:
                    li, lj, ri, rj, wf, sgn = i, j, ip, j, 0.5 * (wx[i, j] + wx[ip, j]), 1.0
                elif face == 1:
                    li, lj, ri, rj, wf, sgn = im, j, i, j, 0.5 * (wx[im, j] + wx[i, j]), -1.0
                elif face == 2:
                    li, lj, ri, rj, wf, sgn = i, j, i, jp, 0.5 * (wy[i, j] + wy[i, jp]), 1.0
                else:
                    li, lj, ri, rj, wf, sgn = i, jm, i, j, 0.5 * (wy[i, jm] + wy[i, j]), -1.0
                if wf > 0:
                    ui, pi_ = m[li, lj], phi[li, lj]
                else:
                    ui, pi_ = m[ri, rj], phi[ri, rj]
                am = pi_ - ui * ui
                ap = ui * (1.0 - pi_)
                fm = -(m[ri, rj] - m[li, lj]) / h + am * wf
                fp = -(phi[ri, rj] - phi[li, lj]) / h + ap * wf
                div_m += sgn * fm
                div_p += sgn * fp
            m_new[i, j] = m[i, j] - ratio * div_m
            p_new[i, j] = phi[i, j] - ratio * div_p
    return m_new, p_new


_update = _update_loops if USE_NUMBA else _update_numpy


def step_explicit(fields: FieldPair, kernel: KernelSpec, params: PdeParams, dt: float | None = None) -> FieldPair:
    """One forward-Euler step; ``dt`` defaults to ``params.dt`` or the stable bound."""
    if kernel.grid != fields.grid:
        raise DimensionError("kernel and fields live on different grids")
    h = fields.grid.h
    wx, wy = drift_velocity(fields.m, kernel, params.beta)
    bound = stable_dt(h, wx, wy)
    dt = dt if dt is not None else (params.dt if params.dt is not None else bound)
    if dt > bound:
        raise StabilityError(f"dt = {dt:.6g} exceeds the stability bound {bound:.6g}", bound)
    m_new, phi_new = _update(fields.m, fields.phi, wx, wy, h, dt)
    return FieldPair(fields.grid, m_new, phi_new)


@dataclass
class PdeRun:
    snapshots: list  # (step, time, FieldPair)
    diagnostics: list  # dicts, one per snapshot
    steps: int
    time: float


DIAGNOSTIC_COLUMNS = ("step", "time", "mass_m", "mass_phi", "min_m", "max_m", "min_phi", "max_phi",
                      "max_bound_violation")


def _diagnose(step: int, t: float, f: FieldPair) -> dict:
    mass_m, mass_phi = f.masses()
    return {
        "step": step, "time": t, "mass_m": mass_m, "mass_phi": mass_phi,
        "min_m": float(f.m.min()), "max_m": float(f.m.max()),
        "min_phi": float(f.phi.min()), "max_phi": float(f.phi.max()),
        "max_bound_violation": f.bound_violation(),
    }


def run_pde(fields0: FieldPair, kernel: KernelSpec, params: PdeParams, max_steps: int | None = None) -> PdeRun:
    """Integrate to ``params.T_final`` (or ``max_steps`` steps).

    A fixed ``params.dt`` is checked against the stability bound at every
    step; without one, each step uses the current bound. The last step is
    shortened to land on ``T_final``.
    """
    f = fields0
    t = 0.0
    step = 0
    snapshots = [(0, 0.0, f)]
    diagnostics = [_diagnose(0, 0.0, f)]
    warned = False
    tol = 1e-12 * params.T_final
    while t < params.T_final - tol and (max_steps is None or step < max_steps):
        wx, wy = drift_velocity(f.m, kernel, params.beta)
        bound = stable_dt(f.grid.h, wx, wy)
        if params.dt is not None:
            if params.dt > bound:
                raise StabilityError(
                    f"step {step}: dt = {params.dt:.6g} exceeds the stability bound; admissible dt <= {bound:.6g}",
                    bound,
                )
            dt = params.dt
        else:
            dt = bound
        dt = min(dt, params.T_final - t)
        m_new, phi_new = _update(f.m, f.phi, wx, wy, f.grid.h, dt)
        step += 1
        t = t + dt if params.T_final - (t + dt) > tol else params.T_final
        if not (np.isfinite(m_new).all() and np.isfinite(phi_new).all()):
            raise NumericalError(f"non-finite field values at step {step}", step=step)
        f = FieldPair(f.grid, m_new, phi_new)
        last = not (t < params.T_final - tol and (max_steps is None or step < max_steps))
        if step % params.snapshot_every == 0 or last:
            snapshots.append((step, t, f))
            d = _diagnose(step, t, f)
            diagnostics.append(d)
            if d["max_bound_violation"] > 0 and not warned:
                log.warning("step %d: bounds 0<=phi<=1, m^2<=phi violated by %.3g", step, d["max_bound_violation"])
                warned = True
    return PdeRun(snapshots, diagnostics, step, t)


def init_random_mixture(grid: Grid2DPeriodic, solvent_fraction: float, amplitude: float, seed: int) -> FieldPair:
    """Homogeneous mixture plus zero-mean uniform noise of size ``amplitude``."""
    if not 0 <= solvent_fraction <= 1:
        raise InputError(f"solvent_fraction must lie in [0, 1], got {solvent_fraction}")
    phi_bar = 1.0 - solvent_fraction
    limit = min(phi_bar, 1.0 - phi_bar) / 2
    if not 0 <= amplitude <= limit:
        raise InputError(f"amplitude must lie in [0, {limit:.6g}] for solvent fraction {solvent_fraction}")
    rng = make_rng(seed)
    noise = []
    for _ in range(2):
        xi = rng.uniform(grid.shape) - 0.5
        xi -= xi.mean()
        peak = np.abs(xi).max()
        noise.append(amplitude * xi / peak if peak > 0 and amplitude > 0 else np.zeros(grid.shape))
    phi = phi_bar + noise[0]
    phi += phi_bar - phi.mean()
    m = noise[1]
    m -= m.mean()
    return FieldPair(grid, m, phi)


def render(fields: FieldPair) -> np.ndarray:
    """Solvent-rich cells red, else blue (m < 0) or yellow (m >= 0)."""
    img = np.empty(fields.grid.shape + (3,), dtype=np.uint8)
    img[...] = (255, 255, 0)
    img[fields.m < 0] = (0, 0, 255)
    img[(1.0 - fields.phi) > 0.5] = (255, 0, 0)
    return img


@dataclass
class PdeConfig:
    side_length: float = 128.0
    n_cells_per_side: int = 128
    beta: float = 4.0
    epsilon: float | None = None
    solvent_fraction: float = 0.8
    amplitude: float = 0.05
    T_final: float = 125.0
    dt: float | None = None
    snapshot_every: int = 100
    seed: int = 0
    dump_fields: bool = False

    @classmethod
    def from_dict(cls, doc: dict) -> PdeConfig:
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown morph-pde config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("n_cells_per_side", "snapshot_every", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise InputError(f"{name} must be an integer, got {v!r}")
        for name in ("side_length", "beta", "solvent_fraction", "amplitude", "T_final", "epsilon", "dt"):
            v = getattr(self, name)
            if v is None and name in ("epsilon", "dt"):
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InputError(f"{name} must be a finite number, got {v!r}")
        if not isinstance(self.dump_fields, bool):
            raise InputError("dump_fields must be true or false")

    def grid(self) -> Grid2DPeriodic:
        return Grid2DPeriodic(float(self.side_length), self.n_cells_per_side)

    def resolved_epsilon(self) -> float:
        return self.epsilon if self.epsilon is not None else 4 * self.side_length / self.n_cells_per_side

    def params(self) -> PdeParams:
        return PdeParams(self.beta, self.T_final, self.dt, self.snapshot_every)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["epsilon"] = self.resolved_epsilon()
        return doc
