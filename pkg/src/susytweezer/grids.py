"""Uniform FFT grids and wavefunctions.

Grids are periodic and power-of-two sized (radix-2 FFT contract). The
momentum axis is the usual DFT frequency layout scaled by 2*pi/extent.
Everything here is dimensionless (lengths in 1/k_R).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform real-space grid with its conjugate momentum grid.

    ``axes[i]`` holds the coordinates of axis i (length ``points[i]``),
    ``k_axes[i]`` the DFT momentum values in the matching order.
    """

    dims: int
    extents: tuple[float, ...]
    points: tuple[int, ...]
    centers: tuple[float, ...]
    dx: tuple[float, ...] = field(init=False)
    axes: tuple[np.ndarray, ...] = field(init=False)
    k_axes: tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self):
        dx = tuple(e / n for e, n in zip(self.extents, self.points))
        axes = []
        k_axes = []
        for e, n, c, d in zip(self.extents, self.points, self.centers, dx):
            axes.append(c - e / 2.0 + d * np.arange(n))
            k_axes.append(2.0 * np.pi * sfft.fftfreq(n, d=d))
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "axes", tuple(axes))
        object.__setattr__(self, "k_axes", tuple(k_axes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def dvol(self) -> float:
        """Volume element dx^dims."""
        return float(np.prod(self.dx))

    def mesh(self, axis: int) -> np.ndarray:
        """Coordinate array of one axis broadcast to the grid shape."""
        shape = [1] * self.dims
        shape[axis] = self.points[axis]
        return self.axes[axis].reshape(shape)

    def k_mesh(self, axis: int) -> np.ndarray:
        shape = [1] * self.dims
        shape[axis] = self.points[axis]
        return self.k_axes[axis].reshape(shape)

    def k_squared(self) -> np.ndarray:
        """|k|^2 on the grid (the kinetic operator in momentum space)."""
        k2 = self.k_mesh(0) ** 2
        for ax in range(1, self.dims):
            k2 = k2 + self.k_mesh(ax) ** 2
        return k2

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "extents": list(self.extents),
            "points": list(self.points),
            "centers": list(self.centers),
        }


def build_grid(extent, points, dims: int = 1, center=0.0) -> SpatialGrid:
    """Build a grid; ``extent``/``points``/``center`` may be scalars or
    per-axis sequences. Point counts must be powers of two (FFT contract)."""
    if dims not in (1, 3):
        raise ValueError(f"dims must be 1 or 3, got {dims}")

    def _tup(v, cast):
        if np.isscalar(v):
            return tuple(cast(v) for _ in range(dims))
        t = tuple(cast(x) for x in v)
        if len(t) != dims:
            raise ValueError(f"expected {dims} per-axis values, got {len(t)}")
        return t

    extents = _tup(extent, float)
    pts = _tup(points, int)
    centers = _tup(center, float)
    for e in extents:
        if e <= 0:
            raise ValueError(f"extent must be > 0, got {e}")
    for n in pts:
        if not _is_power_of_two(n):
            raise ValueError(f"points per axis must be a power of two, got {n}")
    return SpatialGrid(dims=dims, extents=extents, points=pts, centers=centers)


@dataclass
class WaveFunction:
    """Complex amplitudes on a grid. Norm convention: sum |psi|^2 * dvol."""

    grid: SpatialGrid
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)
        if self.psi.shape != self.grid.shape:
            raise ValueError(
                f"amplitude shape {self.psi.shape} does not match grid {self.grid.shape}"
            )

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2).real * self.grid.dvol)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero wavefunction")
        return WaveFunction(self.grid, self.psi / n)

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi.copy())

    def boundary_leak(self, cells: int = 2) -> float:
        """Probability in the outer ``cells`` grid cells per side (per axis)."""
        p = np.abs(self.psi) ** 2
        total = 0.0
        for ax in range(self.grid.dims):
            sl_lo = [slice(None)] * self.grid.dims
            sl_hi = [slice(None)] * self.grid.dims
            sl_lo[ax] = slice(0, cells)
            sl_hi[ax] = slice(-cells, None)
            total += float(p[tuple(sl_lo)].sum() + p[tuple(sl_hi)].sum())
        return total * self.grid.dvol


def overlap(a: WaveFunction, b: WaveFunction) -> complex:
    """<a|b> = sum conj(a) b * dvol. Both must live on the same grid."""
    if a.grid is not b.grid and a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")
    return complex(np.vdot(a.psi, b.psi) * a.grid.dvol)


def momentum_norm_sq(w: WaveFunction) -> float:
    """Norm^2 evaluated from the DFT side (Parseval check)."""
    ft = sfft.fftn(w.psi)
    # DFT Parseval: sum|ft|^2 = N_total * sum|psi|^2
    return float(np.sum(np.abs(ft) ** 2).real * w.grid.dvol / ft.size)


def gaussian_packet(grid: SpatialGrid, x0, sigma, k0=0.0) -> WaveFunction:
    """Normalized Gaussian wavepacket; sigma is the |psi|^2 standard deviation
    per axis, k0 an optional plane-wave momentum per axis."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    k0 = np.atleast_1d(np.asarray(k0, dtype=float))
    if len(x0) != grid.dims:
        raise ValueError("x0 must have one entry per axis")
    psi = np.ones(grid.shape, dtype=np.complex128)
    for ax in range(grid.dims):
        x = grid.mesh(ax)
        amp = (2.0 * np.pi * sigma[ax] ** 2) ** (-0.25) * np.exp(
            -((x - x0[ax]) ** 2) / (4.0 * sigma[ax] ** 2) + 1j * k0[ax] * x
        )
        psi = psi * amp
    return WaveFunction(grid, psi)
