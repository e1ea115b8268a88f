"""Two-site mean-field flow for the relative phase phi and imbalance z (theta = 0).

    dphi/dt = J z / sqrt(1 - z^2) cos(phi) + N U z / 4
    dz/dt   = -J sqrt(1 - z^2) sin(phi)

with hbar = 1.  The flow is Hamiltonian: with

    H_mf(phi, z) = -J sqrt(1 - z^2) cos(phi) + N U z^2 / 8

one has dphi/dt = dH_mf/dz and dz/dt = -dH_mf/dphi, so H_mf is conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, SingularityError
from .tables import write_csv

Z_EDGE = 1e-12


@dataclass(frozen=True)
class MeanFieldParams:
    J: float = 1.0
    U: float = 0.0
    N: int = 2

    def __post_init__(self):
        if not self.J >= 0:
            raise ConfigError("must be >= 0", "meanfield.J")
        if not self.N >= 1:
            raise ConfigError("must be >= 1", "meanfield.N")
        if not math.isfinite(self.U):
            raise ConfigError("must be finite", "meanfield.U")


@dataclass(frozen=True)
class MeanFieldState:
    phi: float
    z: float

    def __post_init__(self):
        if not abs(self.z) <= 1:
            raise ConfigError("|z| must not exceed 1", "meanfield.z0")


def _sin_cos(phi):
    """sin and cos after reduction by multiples of pi/2.

    The reduction is exact at phi = m*pi (as floats), where plain np.sin
    leaves a residue of order 1e-16; fixed points then evaluate to exact zeros.
    """
    phi = np.asarray(phi, dtype=float)
    k = np.rint(phi / (np.pi / 2))
    r = phi - k * (np.pi / 2)
    s, c = np.sin(r), np.cos(r)
    q = np.mod(k, 4).astype(int)
    sin = np.choose(q, [s, c, -s, -c])
    cos = np.choose(q, [c, -s, -c, s])
    return sin, cos


def _check_z(z) -> None:
    if np.any(np.abs(z) >= 1 - Z_EDGE):
        raise SingularityError("mean-field flow is singular at |z| -> 1")


def mft_rhs(phi, z, p: MeanFieldParams):
    """(dphi/dt, dz/dt); broadcasts over array arguments."""
    _check_z(z)
    sin, cos = _sin_cos(phi)
    root = np.sqrt(1.0 - np.square(z))
    dphi = p.J * z / root * cos + p.N * p.U * z / 4.0
    dz = -p.J * root * sin
    if np.ndim(dphi) == 0:
        return float(dphi), float(dz)
    return dphi, dz


def mft_energy(phi, z, p: MeanFieldParams):
    _, cos = _sin_cos(phi)
    val = -p.J * np.sqrt(1.0 - np.square(z)) * cos + p.N * p.U * np.square(z) / 8.0
    return float(val) if np.ndim(val) == 0 else val


def fixed_points(p: MeanFieldParams, m_values=(0, 1, 2)) -> list[tuple[float, float]]:
    """(m pi, 0) for each m, plus the self-trapped pi-mode pair
    z = ±sqrt(1 - (4J/NU)^2) at odd m when N U > 4 J."""
    pts = [(m * np.pi, 0.0) for m in m_values]
    if p.U > 0 and p.N * p.U > 4 * p.J:
        zs = math.sqrt(1.0 - (4 * p.J / (p.N * p.U)) ** 2)
        for m in m_values:
            if m % 2:
                pts += [(m * np.pi, zs), (m * np.pi, -zs)]
    return pts


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    phi: np.ndarray
    z: np.ndarray

    def write_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["t", "phi", "z"], zip(self.t, self.phi, self.z))


def integrate_mft(s0: MeanFieldState, p: MeanFieldParams, t_final: float, dt: float,
                  record_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4 from t = 0 to t_final."""
    if not dt > 0:
        raise ConfigError("must be > 0", "meanfield.dt")
    n = int(round(t_final / dt))
    if n < 1:
        raise ConfigError("t_final must be >= dt", "meanfield.t_final")
    _check_z(s0.z)
    J, c = p.J, p.N * p.U / 4.0
    half_pi = math.pi / 2

    def f(phi, z):
        # scalar twin of mft_rhs; the vectorised version dominates runtime here
        if abs(z) >= 1 - Z_EDGE:
            raise SingularityError(f"mean-field flow is singular at |z| -> 1 (z = {z!r})")
        k = round(phi / half_pi)
        r = phi - k * half_pi
        sr, cr = math.sin(r), math.cos(r)
        sin, cos = ((sr, cr), (cr, -sr), (-sr, -cr), (-cr, sr))[k % 4]
        root = math.sqrt(1.0 - z * z)
        return J * z / root * cos + c * z, -J * root * sin

    phi, z = float(s0.phi), float(s0.z)
    ts, phis, zs = [0.0], [phi], [z]
    h2, h6 = 0.5 * dt, dt / 6.0
    for step in range(1, n + 1):
        a1, b1 = f(phi, z)
        a2, b2 = f(phi + h2 * a1, z + h2 * b1)
        a3, b3 = f(phi + h2 * a2, z + h2 * b2)
        a4, b4 = f(phi + dt * a3, z + dt * b3)
        phi += h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        z += h6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if step % record_every == 0 or step == n:
            ts.append(step * dt)
            phis.append(phi)
            zs.append(z)
    return Trajectory(np.asarray(ts), np.asarray(phis), np.asarray(zs))

@dataclass(frozen=True)
class Portrait:
    phi: np.ndarray
    z: np.ndarray
    dphi: np.ndarray
    dz: np.ndarray

    def rows(self):
        return zip(self.phi.ravel(), self.z.ravel(), self.dphi.ravel(), self.dz.ravel())

    def write_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["phi", "z", "dphi", "dz"], self.rows())


def phase_portrait(p: MeanFieldParams, phi_range=(-np.pi, 3 * np.pi),
                   z_range=(-0.9, 0.9), grid=(33, 19)) -> Portrait:
    """Vector field sampled on a regular (phi, z) grid, endpoints included."""
    z0, z1 = z_range
    if not (-1 < z0 < z1 < 1):
        raise ConfigError("z_range must lie strictly inside (-1, 1)", "meanfield.z_range")
    if phi_range[1] <= phi_range[0]:
        raise ConfigError("phi_range must be increasing", "meanfield.phi_range")
    n_phi, n_z = grid
    if n_phi < 2 or n_z < 2:
        raise ConfigError("need at least two points per axis", "meanfield.grid")
    # multiples of pi that fall on the grid are hit exactly
    fr = np.linspace(phi_range[0] / np.pi, phi_range[1] / np.pi, n_phi)
    phis = np.pi * fr
    zs = np.linspace(z0, z1, n_z)
    if z0 == -z1:
        zs = 0.5 * (zs - zs[::-1])  # exact antisymmetry, so z = 0 is hit exactly
    PHI, Z = np.meshgrid(phis, zs, indexing="ij")
    dphi, dz = mft_rhs(PHI, Z, p)
    return Portrait(PHI, Z, dphi, dz)
