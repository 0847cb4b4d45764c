"""Supersymmetric partner construction and practical depth calibration.

With the kinetic operator -d^2/dx^2, a potential V1 with nodeless ground
state phi0 at energy E0 factorizes as H1 - E0 = Adag A with

    A = d/dx + W(x),      W = -phi0'/phi0,

and the partner H2 = A Adag + E0 has potential V2 = W^2 + W' + E0
= V1 + 2 W'. Its bound spectrum equals V1's with the ground level removed,
and eigenstates map pairwise through A / Adag.

For Gaussian tweezers the exact partner is not itself a Gaussian, so the
practical route is a second Gaussian whose depth alpha2 is calibrated to
minimize the rms mismatch between its ladder and the first trap's excited
ladder.

Numerics: W is the FD6 derivative of log|phi0| where |phi0| is above a
floor, frozen at its boundary value outside (the forbidden tail, where it
has already reached its asymptotic constant). The partner is built as
V1 + 2 W' so the tail of V2 follows V1 exactly instead of inheriting
quotient noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import CalibrationError
from .grids import SpatialGrid, WaveFunction, build_grid
from .potentials import GaussianTweezer1D
from .eigensolver import bound_states, trap_bound_states

QUOTIENT_FLOOR = 1e-12   # of max|phi0|: below this the quotient is regularized
FREEZE_FLOOR = 1e-10     # of max|phi0|: outside this region W is held constant
CORE_FLOOR = 1e-4        # of max|phi0|: log-derivative region when V is known
NODE_FLOOR = 1e-8        # of max|phi0|: sign changes above this flag a node

@dataclass
class Superpotential:
    """W on the grid plus the ground energy it was built at."""

    grid: SpatialGrid
    W: np.ndarray
    ground_energy: float


def _real_positive_ground(ground: WaveFunction) -> np.ndarray:
    """Fix the global phase so the state is real and positive at its peak;
    reject states with a node (sign change above the noise floor)."""
    psi = ground.psi
    i_peak = int(np.argmax(np.abs(psi)))
    phase = psi[i_peak] / abs(psi[i_peak])
    psi = (psi / phase).real.astype(float)
    if psi[i_peak] < 0:
        psi = -psi
    amax = float(np.max(np.abs(psi)))
    sig = psi[np.abs(psi) > NODE_FLOOR * amax]
    if np.any(sig <= 0):
        raise ValueError("state changes sign above the noise floor; not a ground state")
    return psi


def _cubic_at(V: np.ndarray, i: int, s: float) -> float:
    """Catmull-Rom value of the sampled V at fractional position i + s."""
    n = len(V)
    p0, p1 = V[max(i - 1, 0)], V[i]
    p2, p3 = V[min(i + 1, n - 1)], V[min(i + 2, n - 1)]
    return p1 + 0.5 * s * (
        p2 - p0 + s * (2 * p0 - 5 * p1 + 4 * p2 - p3 + s * (3 * (p1 - p2) + p3 - p0))
    )


def _riccati_forward(V: np.ndarray, e0: float, dx: float, i_stop: int) -> np.ndarray:
    """Integrate W' = W^2 - (V - e0) from the left boundary up to i_stop.

    Inward integration toward the well is self-correcting: deviations from
    the decaying-solution branch shrink as exp(2 integral W) with W < 0 on
    the left side, so the boundary seed only needs the right branch. RK4 is
    explicit, so each cell is sub-stepped to keep |2 W h| inside its
    stability region even where the potential grows large at the boundary.
    """
    W = np.empty(i_stop + 1)
    W[0] = -np.sqrt(max(V[0] - e0, 1e-30))
    for i in range(i_stop):
        w = W[i]
        n_sub = max(1, int(np.ceil(abs(2.0 * w) * dx)), 4)
        h = dx / n_sub
        for j in range(n_sub):
            s0 = j / n_sub
            v0 = _cubic_at(V, i, s0)
            vh = _cubic_at(V, i, s0 + 0.5 / n_sub)
            v1 = _cubic_at(V, i, s0 + 1.0 / n_sub)
            k1 = w * w - (v0 - e0)
            w2 = w + 0.5 * h * k1
            k2 = w2 * w2 - (vh - e0)
            w3 = w + 0.5 * h * k2
            k3 = w3 * w3 - (vh - e0)
            w4 = w + h * k3
            k4 = w4 * w4 - (v1 - e0)
            w = w + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        W[i + 1] = w
    return W


def superpotential_from_ground(ground: WaveFunction, e0: float,
                               V: np.ndarray | None = None) -> Superpotential:
    """W = -phi0'/phi0 from a nodeless ground state at energy e0.

    The quotient is only numerically meaningful where phi0 stands well above
    the eigenvector noise floor; there the derivative is taken spectrally,
    which is exact for these smooth decaying states. When the potential is
    supplied, the tails (|phi0| < CORE_FLOOR * max) are instead obtained by
    integrating the Riccati equation W' = W^2 - (V - e0) inward from each
    boundary, which is stable toward the decaying branch and free of the
    quotient's precision ceiling. Without V, W is frozen at its junction
    value (the forbidden tail, where it has already reached its asymptotic
    constant).
    """
    grid = ground.grid
    if grid.dims != 1:
        raise ValueError("superpotential construction is 1D")
    phi = _real_positive_ground(ground)
    amax = float(np.max(phi))
    dx = grid.dx[0]
    dphi = _spectral_derivative(phi.astype(np.complex128), grid).real
    W = -dphi / np.maximum(phi, QUOTIENT_FLOOR * amax)

    floor = CORE_FLOOR if V is not None else FREEZE_FLOOR
    idx = np.flatnonzero(phi >= floor * amax)
    i0, i1 = int(idx[0]) + 3, int(idx[-1]) - 3
    if i1 <= i0:
        return Superpotential(grid=grid, W=W, ground_energy=float(e0))

    if V is not None:
        V = np.asarray(V, dtype=float)
        n = len(V)
        e0f = float(e0)
        blend = 4

        # left tail: integrate up to just past the junction, cross-fade
        stop_l = min(i0 + blend, n - 1)
        w_left = _riccati_forward(V, e0f, dx, stop_l)
        a, b = max(i0 - blend, 0), stop_l + 1
        lam = np.linspace(0.0, 1.0, b - a)
        W[:a] = w_left[:a]
        W[a:b] = (1.0 - lam) * w_left[a:b] + lam * W[a:b]

        # right tail: same integration on the mirrored axis (W flips sign)
        start_r = max(i1 - blend, 0)
        stop_rev = n - 1 - start_r
        w_rev = _riccati_forward(V[::-1], e0f, dx, stop_rev)
        w_right = np.empty(n)
        w_right[start_r:] = -w_rev[: stop_rev + 1][::-1]
        a, b = start_r, min(i1 + blend, n - 1) + 1
        lam = np.linspace(0.0, 1.0, b - a)
        W[b:] = w_right[b:]
        W[a:b] = (1.0 - lam) * W[a:b] + lam * w_right[a:b]
    else:
        W[:i0] = W[i0]
        W[i1:] = W[i1]
    return Superpotential(grid=grid, W=W, ground_energy=float(e0))


def exact_partner(V1: np.ndarray, grid: SpatialGrid,
                  ground: WaveFunction | None = None,
                  e0: float | None = None) -> np.ndarray:
    """Partner potential with the same bound spectrum minus the ground level.

    Uses V2 = 2 W^2 - V1 + 2 E0, the algebraic form of W^2 + W' + E0 under
    the Riccati relation W' = W^2 - (V1 - E0); it needs no differentiation
    of W, so quotient noise enters only linearly through W itself. Solves
    for the ground state spectrally unless one is supplied.
    """
    V1 = np.asarray(V1, dtype=float)
    if ground is None:
        bs = bound_states(V1, grid, n_max=2, method="fourier")
        if len(bs) < 2:
            raise ValueError("V1 must support at least two bound states")
        ground, e0 = bs.states[0], float(bs.energies[0])
    sp = superpotential_from_ground(ground, e0 if e0 is not None else 0.0, V=V1)
    return 2.0 * sp.W**2 - V1 + 2.0 * sp.ground_energy


def _spectral_derivative(psi: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    k = grid.k_axes[0]
    return sfft.ifft(1j * k * sfft.fft(psi))


def apply_A(s: Superpotential, psi: WaveFunction) -> WaveFunction:
    """(d/dx + W) psi, unnormalized; annihilates the generating ground state."""
    if psi.grid != s.grid:
        raise ValueError("wavefunction grid differs from the superpotential grid")
    return WaveFunction(s.grid, _spectral_derivative(psi.psi, s.grid) + s.W * psi.psi)


def apply_Adag(s: Superpotential, psi: WaveFunction) -> WaveFunction:
    """(-d/dx + W) psi, unnormalized; maps partner states back."""
    if psi.grid != s.grid:
        raise ValueError("wavefunction grid differs from the superpotential grid")
    return WaveFunction(s.grid, -_spectral_derivative(psi.psi, s.grid) + s.W * psi.psi)


# ---------------------------------------------------------------------------
# Gaussian-pair calibration
# ---------------------------------------------------------------------------

@dataclass
class PartnerCalibration:
    """Best-matching partner depth for a Gaussian pair."""

    alpha2_star: float
    residual: float          # rms of E2[n-1] - E1[n] over n = 1..N-1
    N: int
    max_abs_residual: float
    mismatches: np.ndarray   # per-pair E2[n-1] - E1[n]
    alpha1: float
    w0: float

    def to_dict(self) -> dict:
        return {
            "alpha2_star_Er": self.alpha2_star,
            "rms_residual_Er": self.residual,
            "max_abs_residual_Er": self.max_abs_residual,
            "matched_levels": self.N,
            "alpha1_Er": self.alpha1,
            "w0": self.w0,
        }


def calibration_grid(alpha1: float, w0: float, n_levels: int,
                     points: int = 4096) -> SpatialGrid:
    """Grid wide enough for the lowest ``n_levels`` states of the trap and
    of any partner-depth candidate, with dx fine enough for FD energies."""
    omega = np.sqrt(8.0 * abs(alpha1)) / w0
    e_top = min(alpha1 + (n_levels + 0.5) * omega, 0.25 * alpha1)
    x_tp = w0 * np.sqrt(max(np.log(alpha1 / e_top), 0.25) / 2.0)
    kappa = np.sqrt(-e_top)
    extent = 2.0 * (x_tp + 16.0 / kappa) + 2.0 * w0
    return build_grid(extent, points, dims=1)


def _ladder(alpha: float, w0: float, n: int, grid: SpatialGrid) -> np.ndarray:
    bs = trap_bound_states(GaussianTweezer1D(alpha, w0), grid, n_max=n, method="fd")
    return bs.energies


def _golden_min(f, a: float, b: float, width: float):
    """Golden-section minimization of f on [a, b] to the given bracket width."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def calibrate_gaussian_partner(alpha1: float, w0: float, N: int,
                               grid: SpatialGrid | None = None,
                               bracket: tuple[float, float] | None = None,
                               bracket_width: float = 1e-4) -> PartnerCalibration:
    """Depth alpha2 of a same-width Gaussian minimizing the rms mismatch
    between its ladder and the first trap's excited ladder (pairs
    E2[n-1] vs E1[n], n = 1..N-1)."""
    if alpha1 >= 0:
        raise ValueError("alpha1 must be negative (attractive trap)")
    if N < 2:
        raise ValueError("need N >= 2 matched levels")
    if grid is None:
        grid = calibration_grid(alpha1, w0, N)
    e1 = _ladder(alpha1, w0, N + 1, grid)
    if len(e1) < N + 1:
        raise CalibrationError(
            f"V1 has only {len(e1)} bound states on the grid; need {N + 1}")
    omega = np.sqrt(8.0 * abs(alpha1)) / w0
    if bracket is None:
        bracket = (alpha1 + 0.4 * omega, alpha1 + 1.6 * omega)

    targets = e1[1:N]

    def mismatches(alpha2: float) -> np.ndarray:
        e2 = _ladder(alpha2, w0, N - 1, grid)
        if len(e2) < N - 1:
            raise CalibrationError(
                f"candidate alpha2={alpha2:.3f} holds only {len(e2)} bound states")
        return e2[: N - 1] - targets

    def objective(alpha2: float) -> float:
        return float(np.sqrt(np.mean(mismatches(alpha2) ** 2)))

    a2, _ = _golden_min(objective, bracket[0], bracket[1], bracket_width)
    mm = mismatches(a2)
    return PartnerCalibration(
        alpha2_star=float(a2),
        residual=float(np.sqrt(np.mean(mm**2))),
        N=N,
        max_abs_residual=float(np.max(np.abs(mm))),
        mismatches=mm,
        alpha1=alpha1,
        w0=w0,
    )
