"""Stationary bound states of 1D potentials and spectrum tracking.

Two discretizations are available:

* ``fd`` -- second-order finite differences; the Hamiltonian is a real
  symmetric tridiagonal matrix, solved with LAPACK's bisection + inverse
  iteration. Fast, O(dx^2) accurate; the default.
* ``fourier`` -- dense spectral Hamiltonian (circulant kinetic matrix from
  the FFT wavenumbers plus diagonal potential). Spectrally accurate and
  consistent with the split-operator propagator, so its eigenstates are
  stationary under propagation to roundoff.

Energies are filtered to bound states only: E < asymptote - margin, where
the asymptote is the potential at the grid edge and the margin discards
grid-artifact continuum states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import AccuracyError, TrackingError
from .grids import SpatialGrid, WaveFunction, build_grid, overlap
from .potentials import GaussianTweezer1D, sample_1d
from .schedule import AdiabaticSchedule

BOUND_MARGIN = 1e-6  # E_R below the asymptote; grid-artifact filter
RESIDUAL_TOL = 1e-8


@dataclass
class BoundStateSet:
    """Ordered bound states of one static potential."""

    energies: np.ndarray
    states: list[WaveFunction]
    potential_asymptote: float

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def n_bound(self) -> int:
        return len(self.energies)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v))
    return v if v[i].real > 0 else -v


def fourier_hamiltonian(V: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Dense spectral Hamiltonian K + diag(V) for a 1D grid."""
    n = grid.points[0]
    k2 = grid.k_axes[0] ** 2
    col = sfft.ifft(k2).real  # circulant generator of the kinetic operator
    K = sla.circulant(col)
    H = 0.5 * (K + K.T)  # symmetrize away roundoff
    H[np.diag_indices(n)] += V
    return H


def _solve_fd(V: np.ndarray, grid: SpatialGrid, e_hi: float, n_max: int | None):
    dx = grid.dx[0]
    n = grid.points[0]
    diag = 2.0 / dx**2 + V
    off = np.full(n - 1, -1.0 / dx**2)
    if n_max is None:
        w, v = sla.eigh_tridiagonal(diag, off, select="v",
                                    select_range=(V.min() - 1.0, e_hi))
    else:
        hi = min(n_max + 4, n) - 1
        w, v = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, hi))
    return w, v


def _solve_fourier(V: np.ndarray, grid: SpatialGrid, e_hi: float, n_max: int | None):
    H = fourier_hamiltonian(V, grid)
    if n_max is None:
        w, v = sla.eigh(H, subset_by_value=(V.min() - 1.0, e_hi))
    else:
        hi = min(n_max + 4, grid.points[0]) - 1
        w, v = sla.eigh(H, subset_by_index=(0, hi))
    return w, v


def bound_states(V: np.ndarray, grid: SpatialGrid, n_max: int | None = None,
                 method: str = "fd", check_accuracy: bool = False) -> BoundStateSet:
    """Lowest bound states of a sampled 1D potential.

    ``n_max=None`` returns every bound state. ``check_accuracy`` compares the
    two discretizations and raises :class:`AccuracyError` when they disagree
    by more than 1e-6 E_R (grid too coarse for the requested potential).
    """
    if grid.dims != 1:
        raise ValueError("bound_states expects a 1D grid")
    V = np.asarray(V, dtype=float)
    asym = float(max(V[0], V[-1]))
    e_hi = asym - BOUND_MARGIN
    if method == "fd":
        w, v = _solve_fd(V, grid, e_hi, n_max)
    elif method == "fourier":
        w, v = _solve_fourier(V, grid, e_hi, n_max)
    else:
        raise ValueError(f"unknown method {method!r}")

    keep = w < e_hi
    w, v = w[keep], v[:, keep]
    if n_max is not None:
        w, v = w[:n_max], v[:, :n_max]

    dx = grid.dx[0]
    states = []
    for j in range(len(w)):
        vec = _fix_sign(v[:, j]) / np.sqrt(dx)
        states.append(WaveFunction(grid, vec.astype(np.complex128)))
    out = BoundStateSet(energies=np.asarray(w, dtype=float), states=states,
                        potential_asymptote=asym)

    if check_accuracy and len(w):
        other = "fourier" if method == "fd" else "fd"
        w2, _ = (_solve_fourier if other == "fourier" else _solve_fd)(V, grid, e_hi, len(w))
        w2 = w2[: len(w)]
        err = float(np.max(np.abs(w2 - w)))
        if err > 1e-6:
            raise AccuracyError(
                f"fd/fourier eigenvalues disagree by {err:.2e} E_R; grid too coarse"
            )
    return out


def residual_norm(V: np.ndarray, grid: SpatialGrid, state: WaveFunction,
                  energy: float, method: str = "fourier") -> float:
    """|| H psi - E psi || / || psi || for the given discretization."""
    psi = state.psi
    if method == "fourier":
        k2 = grid.k_axes[0] ** 2
        hpsi = sfft.ifft(k2 * sfft.fft(psi)) + V * psi
    else:
        dx = grid.dx[0]
        lap = np.zeros_like(psi)
        lap[1:-1] = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / dx**2
        lap[0] = (psi[1] - 2 * psi[0]) / dx**2
        lap[-1] = (psi[-2] - 2 * psi[-1]) / dx**2
        hpsi = -lap + V * psi
    num = np.sqrt(np.sum(np.abs(hpsi - energy * psi) ** 2))
    den = np.sqrt(np.sum(np.abs(psi) ** 2))
    return float(num / den)


def trap_bound_states(trap: GaussianTweezer1D, grid: SpatialGrid,
                      n_max: int | None = None, method: str = "fourier") -> BoundStateSet:
    return bound_states(sample_1d(trap, grid), grid, n_max=n_max, method=method)


def shifted_trap_bound_states(trap: GaussianTweezer1D, grid: SpatialGrid,
                              n_max: int | None = None,
                              window_points: int = 128) -> BoundStateSet:
    """Bound states of a displaced trap, solved spectrally on a window of the
    full grid around the trap center and embedded back (zero tails).

    The window must comfortably contain the trap's bound states; the result
    is then identical to a full-grid spectral solve up to the truncated-tail
    amplitude. Used where many displaced solves are needed (effective-model
    sampling), at a fraction of the dense full-grid cost.
    """
    if grid.dims != 1:
        raise ValueError("needs a 1D grid")
    x = grid.axes[0]
    n = grid.points[0]
    if window_points >= n:
        return trap_bound_states(trap, grid, n_max=n_max, method="fourier")
    i_c = int(np.argmin(np.abs(x - trap.x_c)))
    lo = i_c - window_points // 2
    hi = lo + window_points
    if lo < 0 or hi > n:
        raise ValueError("trap window extends beyond the grid")
    W = window_points * grid.dx[0]
    # window axes coincide with the parent grid points x[lo:hi]
    wgrid = build_grid(W, window_points, dims=1, center=float(x[lo] + W / 2.0))
    sub = bound_states(trap(wgrid.axes[0]), wgrid, n_max=n_max, method="fourier")
    states = []
    for s in sub.states:
        psi = np.zeros(n, dtype=np.complex128)
        psi[lo:hi] = s.psi
        states.append(WaveFunction(grid, psi))
    return BoundStateSet(energies=sub.energies, states=states,
                         potential_asymptote=sub.potential_asymptote)


# ---------------------------------------------------------------------------
# spectrum flow along a schedule
# ---------------------------------------------------------------------------

@dataclass
class SpectrumFlow:
    """Instantaneous composite spectra along the control path, with level
    identity assigned by maximal successive-state overlap and a main-tweezer
    attribution weight per level."""

    times: np.ndarray           # (S,)
    energies: np.ndarray        # (S, L), tracked order
    weights: np.ndarray         # (S, L), population fraction in the main trap


def _composite_levels(main, aux_template, s, t, grid, n_levels):
    from .potentials import total_potential_1d
    V = total_potential_1d(main, aux_template, s, t, grid)
    H = fourier_hamiltonian(V, grid)
    w, v = sla.eigh(H, subset_by_index=(0, n_levels - 1))
    return w, v / np.sqrt(grid.dx[0])


def _match(prev_v, cur_v, dx):
    """Map tracked order -> current columns by maximal overlap; returns
    (perm, ok) where ok=False flags an ambiguous assignment."""
    M = np.abs(prev_v.conj().T @ cur_v) * dx
    perm = np.full(M.shape[0], -1, dtype=int)
    used = np.zeros(M.shape[1], dtype=bool)
    order = np.argsort(-M.max(axis=1))
    for i in order:
        j = int(np.argmax(np.where(used, -1.0, M[i])))
        if M[i, j] < 0.5:
            return perm, False
        perm[i] = j
        used[j] = True
    return perm, True


def track_levels(main, aux_template, s: AdiabaticSchedule, grid: SpatialGrid,
                 samples: int = 129, n_levels: int = 11,
                 max_refine_depth: int = 8) -> SpectrumFlow:
    """Follow the lowest ``n_levels`` composite levels along the schedule.

    Between samples, identity is assigned by the largest overlap with the
    previous sample's state; if that overlap drops below 0.5 the interval is
    refined by bisection (up to ``max_refine_depth``) before giving up.
    """
    iso = trap_bound_states(main, grid, method="fourier")
    iso_mat = np.stack([st.psi for st in iso.states], axis=1)  # (n, Nb)
    dx = grid.dx[0]
    times = np.linspace(0.0, s.duration, samples)

    all_e = np.empty((samples, n_levels))
    all_w = np.empty((samples, n_levels))
    w0, v0 = _composite_levels(main, aux_template, s, times[0], grid, n_levels)
    order = np.arange(n_levels)

    def attribution(v):
        ov = np.abs(iso_mat.conj().T @ v) ** 2 * dx**2  # (Nb, L)
        return ov.sum(axis=0)

    all_e[0] = w0
    all_w[0] = np.clip(attribution(v0), 0.0, 1.0)
    prev_v, prev_e, prev_t = v0, w0, times[0]

    def advance(prev_v, t_prev, t_cur, depth):
        w, v = _composite_levels(main, aux_template, s, t_cur, grid, n_levels)
        perm, ok = _match(prev_v, v, dx)
        if ok:
            return w[perm], v[:, perm]
        if depth >= max_refine_depth:
            raise TrackingError(
                f"ambiguous level tracking near t={t_cur:.4g}", t=t_cur)
        t_mid = 0.5 * (t_prev + t_cur)
        _, v_mid = advance(prev_v, t_prev, t_mid, depth + 1)
        return advance(v_mid, t_mid, t_cur, depth + 1)

    for k in range(1, samples):
        e_k, v_k = advance(prev_v, prev_t, times[k], 0)
        all_e[k] = e_k
        all_w[k] = np.clip(attribution(v_k), 0.0, 1.0)
        prev_v, prev_t = v_k, times[k]
        _ = order
    return SpectrumFlow(times=times, energies=all_e, weights=all_w)


def min_gap(flow: SpectrumFlow) -> float:
    """Minimum over time of the minimum adjacent-level spacing."""
    if flow.energies.size == 0:
        raise ValueError("empty spectrum flow")
    e_sorted = np.sort(flow.energies, axis=1)
    if e_sorted.shape[1] < 2:
        raise ValueError("need at least two tracked levels for a gap")
    return float(np.min(np.diff(e_sorted, axis=1)))
