import dataclasses

import numpy as np
import pytest

import susytweezer as st
from susytweezer.tdse import PropagationJob, propagate, propagate_3d, relax_state, choose_dt
from susytweezer.eigensolver import trap_bound_states
from susytweezer.errors import LeakError
from conftest import TAU_ACCEPT


def test_choose_dt_formula():
    assert choose_dt(20.0, 0.25) == pytest.approx(min(0.1 / 20.0, 0.1 * 0.0625))
    assert choose_dt(1.0, 1.0) == pytest.approx(0.1)


def test_free_packet_spreading():
    """sigma(t)^2 = sigma0^2 (1 + (t/(2 sigma0^2))^2) for kinetic -d^2/dx^2."""
    g = st.build_grid(400.0, 2048)
    sigma0 = 2.0
    w = st.gaussian_packet(g, 0.0, sigma0)
    T = 30.0
    n = 3000
    job = PropagationJob(initial=w, potential=np.zeros(g.shape), dt=T / n,
                         n_steps=n, record_stride=10**9)
    out, _ = propagate(job)
    x = g.axes[0]
    p = np.abs(out.psi) ** 2
    var = float(np.sum(x**2 * p) * g.dx[0] / np.sum(p * g.dx[0]))
    expect = sigma0**2 * (1.0 + (T / (2 * sigma0**2)) ** 2)
    assert var == pytest.approx(expect, rel=1e-6)


def test_harmonic_coherent_state_returns():
    omega = 1.3
    g = st.build_grid(80.0, 512)
    V = omega**2 * g.axes[0] ** 2 / 4.0
    # displaced ground state: coherent, returns after one period
    sigma = 1.0 / np.sqrt(omega)
    w = st.gaussian_packet(g, 3.0, sigma)
    T = 2 * np.pi / omega
    n = 4000
    job = PropagationJob(initial=w, potential=V, dt=T / n, n_steps=n,
                         record_stride=10**9)
    out, _ = propagate(job)
    assert abs(st.overlap(w, out)) > 1.0 - 1e-8


def test_eigenstate_stationarity(main_trap):
    """A spectral eigenstate only turns its phase: overlap magnitude stays
    above 1 - 1e-8 over 1000 time units."""
    g = st.build_grid(120.0, 1024)
    bs = trap_bound_states(main_trap, g, n_max=4, method="fourier")
    V = main_trap(g.axes[0])
    w = bs.states[3]
    T, dt = 1000.0, 1e-3
    job = PropagationJob(initial=w, potential=V, dt=dt, n_steps=int(T / dt),
                         record_stride=10**9)
    out, _ = propagate(job)
    ov = st.overlap(w, out)
    assert abs(ov) > 1.0 - 1e-8
    # and the turned phase is e^{-i E t}
    assert np.angle(ov * np.exp(1j * bs.energies[3] * T)) == pytest.approx(0.0, abs=1e-4)


def test_norm_drift_1d(main_trap):
    g = st.build_grid(120.0, 512)
    V = main_trap(g.axes[0])
    w = trap_bound_states(main_trap, g, n_max=1, method="fourier").states[0]
    job = PropagationJob(initial=w, potential=V, dt=5e-3, n_steps=10000,
                         record_stride=10**9)
    out, tr = propagate(job)
    assert abs(tr.norm[-1] - tr.norm[0]) < 1e-10


def test_time_reversal(default_setup):
    """Forward through the loop then backward (dt -> -dt along the reversed
    clock) returns the initial state to roundoff."""
    from susytweezer.extraction import _potential_fn
    tau = TAU_ACCEPT / 64
    sched = dataclasses.replace(default_setup.schedule, tau=tau)
    sub = dataclasses.replace(default_setup, schedule=sched)
    fn = _potential_fn(sub)
    w0 = sub.main_states.states[2]
    n = int(round(tau / sub.dt))
    fwd_job = PropagationJob(initial=w0, potential=fn, dt=tau / n, n_steps=n,
                             record_stride=10**9, check_leak=False)
    mid, _ = propagate(fwd_job)
    back_job = PropagationJob(initial=mid, potential=fn, dt=-tau / n, n_steps=n,
                              t0=tau, record_stride=10**9, check_leak=False)
    back, _ = propagate(back_job)
    assert abs(st.overlap(w0, back)) > 1.0 - 1e-8


def test_strang_convergence_order(default_setup):
    """Halving dt cuts the final-state error against a dt/8 reference by
    4 (+-20%), measured on the default extraction loop."""
    from susytweezer.extraction import _potential_fn
    tau = TAU_ACCEPT / 8
    sched = dataclasses.replace(default_setup.schedule, tau=tau)
    sub = dataclasses.replace(default_setup, schedule=sched)
    fn = _potential_fn(sub)
    w0 = sub.main_states.states[1]
    dt0 = 0.02

    def run(dt):
        n = int(round(tau / dt))
        job = PropagationJob(initial=w0, potential=fn, dt=tau / n, n_steps=n,
                             record_stride=10**9, check_leak=False)
        return propagate(job)[0]

    ref = run(dt0 / 8)
    e1 = np.sqrt(np.sum(np.abs(run(dt0).psi - ref.psi) ** 2) * sub.grid.dvol)
    e2 = np.sqrt(np.sum(np.abs(run(dt0 / 2).psi - ref.psi) ** 2) * sub.grid.dvol)
    ratio = e1 / e2
    assert 4.0 * 0.8 < ratio < 4.0 * 1.25
    slope = np.log2(ratio)
    assert slope == pytest.approx(2.0, abs=0.2)


def test_leak_error_reported_with_time():
    g = st.build_grid(30.0, 256)
    w = st.gaussian_packet(g, 0.0, 1.0, k0=2.0)   # free packet walks out
    job = PropagationJob(initial=w, potential=np.zeros(g.shape), dt=0.01,
                         n_steps=2000, record_stride=50)
    with pytest.raises(LeakError) as exc:
        propagate(job)
    assert exc.value.t is not None and exc.value.t > 0


def test_adiabatic_limit_monotonic(tau_ladder):
    """Per tracked level, the final infidelity falls monotonically (within
    1e-7) as tau doubles across three octaves."""
    for n in range(6):
        seq = [1.0 - r.fidelity(n) for r in tau_ladder]
        for a, b in zip(seq, seq[1:]):
            assert b <= a + 1e-7


# --- 3D ----------------------------------------------------------------------

def _beam_small():
    w0 = 6.981317007977318
    return st.GaussianBeam3D(-200.0, w0, 2 * np.pi, 0.0)


def test_3d_coherent_state_periodicity():
    g = st.build_grid((10.0, 10.0, 10.0), (32, 32, 32), dims=3)
    omega = 2.0
    x2 = g.mesh(0) ** 2 + g.mesh(1) ** 2 + g.mesh(2) ** 2
    V = omega**2 * x2 / 4.0
    sigma = 1.0 / np.sqrt(omega)
    w = st.gaussian_packet(g, (0.8, 0.0, -0.6), (sigma,) * 3)
    T = 2 * np.pi / omega
    n = 1200
    job = PropagationJob(initial=w, potential=V, dt=T / n, n_steps=n,
                         record_stride=10**9)
    out, _ = propagate_3d(job)
    assert abs(st.overlap(w, out)) > 1.0 - 1e-8


def test_3d_relaxed_state_quasi_stationary():
    """Transverse ground x longitudinal eigenstate, imaginary-time refined,
    holds its population over 100 time units."""
    from susytweezer.potentials import sample_beam
    beam = _beam_small()
    g = st.build_grid((6.0, 6.0, 24.0), (32, 32, 64), dims=3)
    V = sample_beam(beam, g)
    sig = 1.0 / np.sqrt(beam.transverse_omega)
    sigz = 1.0 / np.sqrt(beam.axial_omega)
    guess0 = st.gaussian_packet(g, (0, 0, 0), (sig, sig, sigz))
    r0 = relax_state(V, g, guess0)
    x, y, z = g.axes
    psi1 = r0.state.psi * z[None, None, :]
    guess1 = st.WaveFunction(g, psi1).normalized()
    r1 = relax_state(V, g, guess1, project_out=[r0.state])
    assert r1.energy - r0.energy == pytest.approx(beam.axial_omega, rel=0.05)
    T, dt = 100.0, 0.004
    job = PropagationJob(initial=r1.state, potential=V, dt=dt,
                         n_steps=int(T / dt), record_stride=10**9)
    out, _ = propagate_3d(job)
    assert abs(st.overlap(r1.state, out)) ** 2 > 1.0 - 1e-6


@pytest.mark.slow
def test_3d_norm_drift_1e5_steps():
    g = st.build_grid((6.0, 6.0, 12.0), (16, 16, 32), dims=3)
    x2 = g.mesh(0) ** 2 + g.mesh(1) ** 2 + g.mesh(2) ** 2
    V = x2 / 4.0
    w = st.gaussian_packet(g, (0.3, 0.0, 0.5), (1.0, 1.0, 1.0))
    job = PropagationJob(initial=w, potential=V, dt=5e-3, n_steps=100000,
                         record_stride=10**9, check_leak=False)
    out, tr = propagate_3d(job)
    assert abs(tr.norm[-1] - tr.norm[0]) < 1e-10


def test_propagate_3d_requires_3d_grid():
    g = st.build_grid(40.0, 256)
    w = st.gaussian_packet(g, 0.0, 1.0)
    job = PropagationJob(initial=w, potential=np.zeros(g.shape), dt=0.01, n_steps=10)
    with pytest.raises(ValueError, match="3D"):
        propagate_3d(job)


def test_relax_state_harmonic_ground():
    omega = 1.5
    g = st.build_grid(60.0, 256)
    V = omega**2 * g.axes[0] ** 2 / 4.0
    guess = st.gaussian_packet(g, 1.5, 2.0)   # displaced, wrong width
    res = relax_state(V, g, guess)
    assert res.energy == pytest.approx(omega / 2.0, abs=1e-6)
    assert res.residual < 1e-4
