"""Static tweezer potentials: 1D Gaussian trap and 3D Gaussian beam.

Sign convention: alpha < 0 is attractive. Everything dimensionless
(energies in E_R, lengths in 1/k_R).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grids import SpatialGrid


@dataclass(frozen=True)
class GaussianTweezer1D:
    """V(x) = alpha * exp(-2 (x-x_c)^2 / w0^2)."""

    alpha: float
    w0: float
    x_c: float = 0.0

    def __post_init__(self):
        if self.w0 <= 0:
            raise ValueError(f"w0 must be > 0, got {self.w0}")

    def __call__(self, x):
        return self.alpha * np.exp(-2.0 * (x - self.x_c) ** 2 / self.w0**2)

    def with_control(self, delta_alpha: float, center: float) -> "GaussianTweezer1D":
        return replace(self, alpha=self.alpha + delta_alpha, x_c=center)

    @property
    def harmonic_omega(self) -> float:
        """Small-oscillation frequency of the well (kinetic = -d^2/dx^2)."""
        return np.sqrt(8.0 * abs(self.alpha)) / self.w0

    def to_dict(self) -> dict:
        return {"alpha_Er": self.alpha, "w0": self.w0, "x_c": self.x_c}


@dataclass(frozen=True)
class GaussianBeam3D:
    """Focused Gaussian beam: V = alpha (w0/w_z)^2 exp(-2 rho^2 / w_z^2),
    w_z = w0 sqrt(1 + (z-z_c)^2/z_R^2), z_R = pi w0^2 / lambda."""

    alpha: float
    w0: float
    wavelength: float
    z_c: float = 0.0

    def __post_init__(self):
        if self.w0 <= 0:
            raise ValueError(f"w0 must be > 0, got {self.w0}")
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")

    @property
    def z_R(self) -> float:
        return np.pi * self.w0**2 / self.wavelength

    def __call__(self, x, y, z):
        wz2 = self.w0**2 * (1.0 + ((z - self.z_c) / self.z_R) ** 2)
        return self.alpha * (self.w0**2 / wz2) * np.exp(-2.0 * (x**2 + y**2) / wz2)

    def axial(self, z):
        """On-axis profile V(0,0,z); the longitudinal trapping potential."""
        return self.alpha / (1.0 + ((z - self.z_c) / self.z_R) ** 2)

    def with_control(self, delta_alpha: float, center: float) -> "GaussianBeam3D":
        return replace(self, alpha=self.alpha + delta_alpha, z_c=center)

    @property
    def transverse_omega(self) -> float:
        """Harmonic frequency of the transverse confinement at the focus."""
        return np.sqrt(8.0 * abs(self.alpha)) / self.w0

    @property
    def axial_omega(self) -> float:
        """Harmonic frequency of the longitudinal confinement at the focus."""
        return 2.0 * np.sqrt(abs(self.alpha)) / self.z_R

    def to_dict(self) -> dict:
        return {
            "alpha_Er": self.alpha,
            "w0": self.w0,
            "wavelength": self.wavelength,
            "z_c": self.z_c,
        }


def eval_potential_1d(trap: GaussianTweezer1D, x):
    return trap(x)


def eval_potential_3d(beam: GaussianBeam3D, x, y, z):
    return beam(x, y, z)


def sample_1d(trap: GaussianTweezer1D, grid: SpatialGrid) -> np.ndarray:
    if grid.dims != 1:
        raise ValueError("sample_1d needs a 1D grid")
    return trap(grid.axes[0])


def total_potential_1d(main: GaussianTweezer1D, aux_template: GaussianTweezer1D,
                       schedule, t: float, grid: SpatialGrid) -> np.ndarray:
    """V1(x) + V2(x, t) on the grid; the auxiliary trap takes its depth
    offset and center from the schedule."""
    dalpha, center = schedule.eval(t)
    aux = aux_template.with_control(dalpha, center)
    return sample_1d(main, grid) + sample_1d(aux, grid)


def total_potential_3d(main: GaussianBeam3D, aux_template: GaussianBeam3D,
                       schedule, t: float, grid: SpatialGrid) -> np.ndarray:
    """Two-beam 3D potential with the auxiliary beam driven by the schedule
    (center is its longitudinal waist position z_c)."""
    dalpha, center = schedule.eval(t)
    aux = aux_template.with_control(dalpha, center)
    return sample_beam(main, grid) + sample_beam(aux, grid)


def sample_beam(beam: GaussianBeam3D, grid: SpatialGrid) -> np.ndarray:
    """Sample a beam on a 3D grid (axes: x, y, z).

    Computed per z-plane as an outer product of transverse factors; this is
    exact (the transverse Gaussian separates at fixed z) and avoids a full
    3D exponential evaluation.
    """
    if grid.dims != 3:
        raise ValueError("sample_beam needs a 3D grid")
    x, y, z = grid.axes
    wz2 = beam.w0**2 * (1.0 + ((z - beam.z_c) / beam.z_R) ** 2)  # (nz,)
    depth = beam.alpha * beam.w0**2 / wz2
    ex = np.exp(-2.0 * x[:, None] ** 2 / wz2[None, :])  # (nx, nz)
    ey = np.exp(-2.0 * y[:, None] ** 2 / wz2[None, :])  # (ny, nz)
    return depth[None, None, :] * ex[:, None, :] * ey[None, :, :]
