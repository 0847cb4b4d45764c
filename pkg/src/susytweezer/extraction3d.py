"""Longitudinal extraction with full 3D Gaussian beams.

The two beams are coaxial; the auxiliary waist approaches along z. Because
the beam tail falls off only as 1/z^2, the partner ladder is dragged by
several E_R while the beams approach, so the depth control must follow a
compensated path: a channel model (on-axis potential plus the local
transverse zero-point) is solved on a 1D z-grid to find, for each
separation, the depth offset that holds the pair detuning at the loop
value. The resulting (z_c, delta_alpha) path is stored as an explicit
C^1 knot schedule.

Stationary states in 3D (initial levels, attribution targets) are relaxed
by imaginary time in the full instantaneous potential with a half-domain
support mask, which pins them to their own well even where the composite
spectra of the two wells interleave.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import AttributionError, CalibrationError
from .grids import SpatialGrid, WaveFunction, build_grid, overlap
from .potentials import GaussianBeam3D, sample_beam
from .eigensolver import fourier_hamiltonian, bound_states
from .schedule import KnotSchedule
from .tdse import PropagationJob, propagate, relax_state
from .extraction import LevelOutcome, ExtractionResult

ATTRIBUTION_TOL_3D = 1e-4   # projection vs spatial, desk-scale 3D grids


def channel_potential(beams: list[GaussianBeam3D], z: np.ndarray) -> np.ndarray:
    """On-axis potential plus the transverse zero-point of the combined
    beams (one sqrt(curvature) per transverse axis)."""
    V = np.zeros_like(z)
    curv = np.zeros_like(z)
    for b in beams:
        on_axis = b.axial(z)
        wz2 = b.w0**2 * (1.0 + ((z - b.z_c) / b.z_R) ** 2)
        V += on_axis
        curv += -4.0 * on_axis / wz2
    return V + 2.0 * np.sqrt(np.maximum(curv, 0.0))


@dataclass
class LongitudinalDesign:
    """Channel-model artifacts behind a compensated 3D schedule."""

    schedule: KnotSchedule
    d_grid: np.ndarray
    compensation: np.ndarray    # delta-alpha holding the mean pair detuning at 0
    resonant_gaps: np.ndarray   # (len(d_grid), N) pair gaps at compensation
    delta: float
    d_min: float
    d_max: float


def _channel_pairs(main: GaussianBeam3D, aux_base: GaussianBeam3D, d: float,
                   dalpha: float, zgrid: SpatialGrid, N: int):
    """Pair detunings and gaps of the channel model at one configuration."""
    z = zgrid.axes[0]
    aux = aux_base.with_control(dalpha, d)
    V = channel_potential([main, aux], z)
    H = fourier_hamiltonian(V, zgrid)
    w, v = sla.eigh(H, subset_by_index=(0, 2 * N))
    v = v / np.sqrt(zgrid.dx[0])
    on_main = z < 0.5 * (main.z_c + d)
    weights = (np.abs(v[on_main]) ** 2).sum(axis=0) * zgrid.dx[0]
    det = np.empty(N)
    gap = np.empty(N)
    for n in range(1, N + 1):
        ea, eb = w[2 * n - 1], w[2 * n]
        wa = min(max(weights[2 * n - 1], 0.0), 1.0)
        gap[n - 1] = eb - ea
        det[n - 1] = (eb - ea) * (2.0 * wa - 1.0)  # eps_x - eps_m
    return det, gap


def design_longitudinal_schedule(main: GaussianBeam3D, alpha2: float, tau: float,
                                 N: int = 5,
                                 d_max: float | None = None,
                                 d_min: float | None = None,
                                 delta: float | None = None,
                                 fractions=(0.30, 0.25, 0.45),
                                 n_knots: int = 61,
                                 gap_target: float | None = None,
                                 z_points: int = 512) -> LongitudinalDesign:
    """Build the compensated longitudinal control path.

    The mean pair detuning is nulled at each separation by Newton steps on
    the channel model; the loop detuning (+delta on approach, ramp to
    -delta at closest approach, -delta on retreat) rides on top of that
    compensation.
    """
    zR = main.z_R
    if d_max is None:
        d_max = 2.7 * zR
    aux_base = GaussianBeam3D(alpha2, main.w0, main.wavelength, d_max)

    extent = 2.0 * (d_max / 2.0 + 2.6 * zR)
    zgrid = build_grid(extent, z_points, dims=1, center=d_max / 2.0)

    iso = channel_potential([main], zgrid.axes[0])
    e_iso = sla.eigh_tridiagonal(
        2.0 / zgrid.dx[0] ** 2 + iso, np.full(z_points - 1, -1.0 / zgrid.dx[0] ** 2),
        select="i", select_range=(0, N + 1), eigvals_only=True)
    spacing_min = float(np.min(np.diff(e_iso[: N + 1])))
    if delta is None:
        delta = 0.5 * spacing_min
    if gap_target is None:
        gap_target = 0.5 * delta

    # compensation on a separation grid, continuing the previous solution
    lo = d_min if d_min is not None else 0.85 * zR
    d_grid = np.linspace(d_max, lo, 61)
    comp = np.empty_like(d_grid)
    gaps = np.empty((len(d_grid), N))
    guess = 0.0
    for i, d in enumerate(d_grid):
        for _ in range(6):
            det, gap = _channel_pairs(main, aux_base, d, guess, zgrid, N)
            det2, _ = _channel_pairs(main, aux_base, d, guess + 0.05, zgrid, N)
            slope = (det2.mean() - det.mean()) / 0.05
            if abs(slope) < 1e-6:
                break
            step = -det.mean() / slope
            guess += np.clip(step, -2.0, 2.0)
            if abs(step) < 1e-4:
                break
        det, gap = _channel_pairs(main, aux_base, d, guess, zgrid, N)
        comp[i] = guess
        gaps[i] = gap

    if d_min is None:
        ok = np.min(gaps, axis=1) >= gap_target
        if not np.any(ok):
            raise CalibrationError(
                f"no separation in [{d_grid[-1]:.1f}, {d_grid[0]:.1f}] opens the "
                f"pair gaps to {gap_target:.3f} E_R")
        k = int(np.argmax(ok))  # largest separation that reaches the target
        d_min = float(d_grid[k])
        d_grid, comp, gaps = d_grid[: k + 1], comp[: k + 1], gaps[: k + 1]

    # assemble the knot path: cosine legs for the center, compensation plus
    # the detuning loop for the depth
    f1, f2, _ = fractions
    t1, t2 = f1 * tau, (f1 + f2) * tau
    t_knots = np.unique(np.concatenate([
        np.linspace(0.0, t1, n_knots // 3 + 2),
        np.linspace(t1, t2, n_knots // 3 + 2),
        np.linspace(t2, tau, n_knots // 3 + 2),
    ]))
    centers = np.empty_like(t_knots)
    dalphas = np.empty_like(t_knots)
    comp_interp = lambda d: np.interp(d, d_grid[::-1], comp[::-1])
    for j, t in enumerate(t_knots):
        if t <= t1:
            u = 0.5 * (1.0 - np.cos(np.pi * t / t1))
            c = d_max + (d_min - d_max) * u
            loop = +delta
        elif t <= t2:
            u = 0.5 * (1.0 - np.cos(np.pi * (t - t1) / (t2 - t1)))
            c = d_min
            loop = delta * (1.0 - 2.0 * u)
        else:
            u = 0.5 * (1.0 - np.cos(np.pi * (t - t2) / (tau - t2)))
            c = d_min + (d_max - d_min) * u
            loop = -delta
        centers[j] = c
        dalphas[j] = comp_interp(c) + loop
    sched = KnotSchedule(tau=tau, t_knots=tuple(t_knots),
                         dalpha_knots=tuple(dalphas),
                         center_knots=tuple(centers), d_max=0.98 * d_max)
    return LongitudinalDesign(schedule=sched, d_grid=d_grid, compensation=comp,
                              resonant_gaps=gaps, delta=delta, d_min=d_min,
                              d_max=d_max)


# ---------------------------------------------------------------------------
# 3D setup and runs
# ---------------------------------------------------------------------------

@dataclass
class BeamSetup:
    main: GaussianBeam3D
    aux_template: GaussianBeam3D
    schedule: KnotSchedule
    grid: SpatialGrid
    n_levels: int
    dt: float
    initial_states: dict = field(default_factory=dict)
    initial_energies: dict = field(default_factory=dict)
    target_main: list = field(default_factory=list)
    target_aux: list = field(default_factory=list)

    @property
    def divider(self) -> float:
        _, center_f = self.schedule.eval(self.schedule.duration)
        return 0.5 * (self.main.z_c + center_f)


def _transverse_sigma(beam: GaussianBeam3D, z_local: float) -> float:
    wz2 = beam.w0**2 * (1.0 + ((z_local - beam.z_c) / beam.z_R) ** 2)
    curv = -4.0 * beam.axial(z_local) / wz2
    omega = 2.0 * np.sqrt(curv)
    return 1.0 / np.sqrt(omega)


def _separable_guess(setup: BeamSetup, beam: GaussianBeam3D, n_axial: int,
                     t: float) -> WaveFunction:
    """Transverse harmonic ground times the n-th channel eigenstate of the
    instantaneous potential, restricted to the beam's own side."""
    grid = setup.grid
    x, y, z = grid.axes
    dalpha, center = setup.schedule.eval(t)
    aux = setup.aux_template.with_control(dalpha, center)
    zgrid = build_grid(grid.extents[2], grid.points[2], dims=1,
                       center=grid.centers[2])
    Vch = channel_potential([setup.main, aux], zgrid.axes[0])
    # wall off the other well so the ladder is the local one
    own_side = (zgrid.axes[0] < setup.divider) if beam is setup.main \
        else (zgrid.axes[0] > setup.divider)
    Vw = np.where(own_side, Vch, Vch.max() + 50.0)
    bs = bound_states(Vw - Vw.min(), zgrid, n_max=n_axial + 1, method="fd")
    chi = bs.states[n_axial].psi
    sig = _transverse_sigma(beam, beam.z_c)
    gx = (2.0 * np.pi * sig**2) ** (-0.25) * np.exp(-(x**2) / (4.0 * sig**2))
    gy = (2.0 * np.pi * sig**2) ** (-0.25) * np.exp(-(y**2) / (4.0 * sig**2))
    psi = gx[:, None, None] * gy[None, :, None] * chi[None, None, :]
    return WaveFunction(grid, psi.astype(np.complex128)).normalized()


def _masked_relax(setup: BeamSetup, V: np.ndarray, guess: WaveFunction,
                  lower: list, side: str, dt_stages=(0.02, 0.008, 0.003),
                  energy_tol: float = 1e-10):
    z = setup.grid.axes[2]
    mask = (z < setup.divider) if side == "main" else (z > setup.divider)
    mask3 = np.broadcast_to(mask[None, None, :], setup.grid.shape)
    return relax_state(V, setup.grid, guess, project_out=lower,
                       dt_stages=dt_stages, energy_tol=energy_tol,
                       support_mask=mask3)


def make_beam_setup(main: GaussianBeam3D, aux_alpha2: float,
                    schedule: KnotSchedule, grid: SpatialGrid,
                    n_levels: int = 5, dt: float = 0.05,
                    n_aux_targets: int | None = None,
                    prep_levels=None) -> BeamSetup:
    """Prepare the shared assets: initial states at t=0 and attribution
    targets at t=tau, all relaxed in the full 3D instantaneous potential."""
    if grid.dims != 3:
        raise ValueError("needs a 3D grid")
    aux_template = GaussianBeam3D(aux_alpha2, main.w0, main.wavelength, 0.0)
    setup = BeamSetup(main=main, aux_template=aux_template, schedule=schedule,
                      grid=grid, n_levels=n_levels, dt=dt)
    if prep_levels is None:
        prep_levels = list(range(n_levels + 1))
    if n_aux_targets is None:
        n_aux_targets = n_levels + 2

    da0, c0 = schedule.eval(0.0)
    V0 = sample_beam(main, grid) + sample_beam(aux_template.with_control(da0, c0), grid)
    lower: list[WaveFunction] = []
    for n in sorted(prep_levels):
        for m in range(len(lower), n + 1):
            guess = _separable_guess(setup, main, m, 0.0)
            res = _masked_relax(setup, V0, guess, lower, "main")
            lower.append(res.state)
            if m in prep_levels:
                setup.initial_states[m] = res.state
                setup.initial_energies[m] = res.energy
    daf, cf = schedule.eval(schedule.duration)
    Vf = sample_beam(main, grid) + sample_beam(aux_template.with_control(daf, cf), grid)
    lower_main: list[WaveFunction] = []
    for m in range(max(prep_levels) + 1 if prep_levels else 1):
        guess = _separable_guess(setup, main, m, schedule.duration)
        res = _masked_relax(setup, Vf, guess, lower_main, "main")
        lower_main.append(res.state)
    setup.target_main = lower_main
    aux_final = aux_template.with_control(daf, cf)
    lower_aux: list[WaveFunction] = []
    for m in range(n_aux_targets):
        guess = _separable_guess(setup, aux_final, m, schedule.duration)
        res = _masked_relax(setup, Vf, guess, lower_aux, "aux")
        lower_aux.append(res.state)
    setup.target_aux = lower_aux
    return setup


def _potential_fn_3d(setup: BeamSetup):
    V1 = sample_beam(setup.main, setup.grid)
    x, y, z = setup.grid.axes
    aux = setup.aux_template
    w0sq = aux.w0**2
    zR = aux.z_R

    def fn(t: float) -> np.ndarray:
        dalpha, center = setup.schedule.eval(t)
        wz2 = w0sq * (1.0 + ((z - center) / zR) ** 2)
        depth = (aux.alpha + dalpha) * w0sq / wz2
        ex = np.exp(-2.0 * x[:, None] ** 2 / wz2[None, :])
        ey = np.exp(-2.0 * y[:, None] ** 2 / wz2[None, :])
        return V1 + depth[None, None, :] * ex[:, None, :] * ey[None, :, :]

    return fn


def run_level_3d(setup: BeamSetup, n: int, record_stride: int = 400,
                 keep_trace: bool = False, dt: float | None = None,
                 leak_threshold: float | None = None):
    """Propagate one initial longitudinal level through the 3D schedule.

    ``leak_threshold`` overrides the strict boundary monitor for
    deliberately diabatic reference runs (short tau), whose ejected ripples
    carry a harmless ~1e-8 to the grid edge.
    """
    if n not in setup.initial_states:
        raise ValueError(f"level {n} was not prepared in the setup")
    tau = setup.schedule.duration
    dt = setup.dt if dt is None else dt
    n_steps = max(int(round(tau / dt)), 1)
    from .tdse import LEAK_THRESHOLD
    job = PropagationJob(
        initial=setup.initial_states[n], potential=_potential_fn_3d(setup),
        dt=tau / n_steps, n_steps=n_steps, record_stride=record_stride,
        divider=lambda t: setup.divider,
        leak_threshold=LEAK_THRESHOLD if leak_threshold is None else leak_threshold,
    )
    psi, trace = propagate(job)

    dvol = setup.grid.dvol
    p_main = np.array([abs(overlap(s, psi)) ** 2 for s in setup.target_main])
    p_aux = np.array([abs(overlap(s, psi)) ** 2 for s in setup.target_aux])
    main_bound = float(p_main.sum())
    aux_proj = float(p_aux.sum())
    zmask = setup.grid.axes[2] > setup.divider
    aux_spatial = float((np.abs(psi.psi[:, :, zmask]) ** 2).sum() * dvol)
    residual = 1.0 - main_bound - aux_proj
    if abs(aux_proj - aux_spatial) > ATTRIBUTION_TOL_3D + max(residual, 0.0):
        raise AttributionError(
            f"3D attribution mismatch {abs(aux_proj - aux_spatial):.2e} for n={n}")
    fid = float(p_main[0]) if n == 0 else aux_spatial
    out = LevelOutcome(n=n, fidelity=fid, aux_projected=aux_proj,
                       aux_spatial=aux_spatial, main_bound=main_bound,
                       residual=residual)
    return out, (trace if keep_trace else None)


def run_extraction_3d(setup: BeamSetup, levels, keep_traces: bool = False,
                      dt: float | None = None,
                      leak_threshold: float | None = None) -> ExtractionResult:
    from .schedule import schedule_digest
    levels = [int(n) for n in np.atleast_1d(levels)]
    outcomes = {}
    traces = {}
    for n in levels:
        out, tr = run_level_3d(setup, n, keep_trace=keep_traces, dt=dt,
                               leak_threshold=leak_threshold)
        outcomes[n] = out
        if keep_traces:
            traces[n] = tr
    return ExtractionResult(tau=setup.schedule.duration, levels=outcomes,
                            min_gap=None, schedule_digest=schedule_digest(setup.schedule),
                            traces=traces)


def with_tau_3d(setup: BeamSetup, tau: float) -> BeamSetup:
    """Same setup traversing the control path over a different duration.
    The prepared endpoint states stay valid: the path endpoints (and so the
    instantaneous endpoint potentials) are unchanged."""
    from .schedule import with_tau
    return dataclasses.replace(setup, schedule=with_tau(setup.schedule, tau))
