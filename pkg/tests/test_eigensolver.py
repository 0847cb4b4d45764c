import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_h

import susytweezer as st
from susytweezer.eigensolver import (bound_states, trap_bound_states,
                                     shifted_trap_bound_states, residual_norm,
                                     track_levels, min_gap)
from susytweezer.errors import AccuracyError
from conftest import LADDER_12ER, W0_INTERNAL, TAU_ACCEPT


def test_harmonic_oracle():
    omega = 1.7
    g = st.build_grid(60.0, 1024)
    V = omega**2 * g.axes[0] ** 2 / 4.0
    bs = bound_states(V, g, n_max=6, method="fourier")
    # the asymptote filter sees the boundary value of the parabola; levels
    # far below it are physical
    expect = (np.arange(6) + 0.5) * omega
    assert np.max(np.abs(bs.energies[:6] - expect) / expect) < 1e-6


def test_frozen_richardson_ladder(main_trap):
    """Energies of the -12 E_R / 1 um trap against the fine-grid
    Richardson-extrapolated oracle (fd at dx, dx/2; the dx^2 error
    eliminated), frozen before the build."""
    g = st.build_grid(120.0, 2048)
    bs = trap_bound_states(main_trap, g, n_max=8, method="fourier")
    assert np.max(np.abs(bs.energies[:8] - LADDER_12ER)) < 1e-6


def test_repulsive_potential_empty():
    g = st.build_grid(40.0, 256)
    V = 5.0 * np.exp(-g.axes[0] ** 2)
    bs = bound_states(V, g, method="fd")
    assert len(bs) == 0


def test_zero_depth_empty():
    g = st.build_grid(40.0, 256)
    bs = trap_bound_states(st.GaussianTweezer1D(-1e-300, 5.0), g, method="fd")
    assert len(bs) == 0


@pytest.mark.parametrize("method", ["fd", "fourier"])
def test_orthonormality_and_residual(main_trap, method):
    g = st.build_grid(120.0, 1024)
    bs = trap_bound_states(main_trap, g, n_max=6, method=method)
    V = main_trap(g.axes[0])
    mat = np.stack([s.psi for s in bs.states], axis=1)
    gram = (mat.conj().T @ mat) * g.dx[0]
    assert np.max(np.abs(gram - np.eye(len(bs)))) < 1e-10
    for e, s in zip(bs.energies, bs.states):
        assert residual_norm(V, g, s, e, method=method) < 1e-8


@settings(max_examples=15, deadline=None)
@given(alpha=st_h.floats(-200, -5))
def test_random_depth_properties(alpha):
    """Bound sets of random Gaussian depths are orthonormal with tiny
    residuals and strictly increasing energies below the asymptote."""
    g = st.build_grid(90.0, 1024)
    trap = st.GaussianTweezer1D(alpha, W0_INTERNAL)
    bs = trap_bound_states(trap, g, n_max=6, method="fourier")
    assert len(bs) >= 2
    assert np.all(np.diff(bs.energies) > 0)
    assert np.all(bs.energies < -1e-6)
    V = trap(g.axes[0])
    for e, s in zip(bs.energies, bs.states):
        assert abs(s.norm() - 1.0) < 1e-10
        assert residual_norm(V, g, s, e, method="fourier") < 1e-8
    mat = np.stack([s.psi for s in bs.states], axis=1)
    gram = (mat.conj().T @ mat) * g.dx[0]
    assert np.max(np.abs(gram - np.eye(len(bs)))) < 1e-10


def test_refinement_plateau(main_trap):
    """Once converged, adding grid points moves no eigenvalue up by more
    than the residual tolerance."""
    e_coarse = trap_bound_states(main_trap, st.build_grid(120.0, 1024),
                                 n_max=6, method="fourier").energies
    e_fine = trap_bound_states(main_trap, st.build_grid(120.0, 2048),
                               n_max=6, method="fourier").energies
    assert np.all(e_fine - e_coarse < 1e-8)


def test_accuracy_check_flags_coarse_grid():
    trap = st.GaussianTweezer1D(-200.0, 2.0)   # needs dx far finer than this
    g = st.build_grid(40.0, 128)
    with pytest.raises(AccuracyError):
        bound_states(trap(g.axes[0]), g, n_max=4, method="fd",
                     check_accuracy=True)


def test_shifted_window_solve_matches_full(grid_1d, aux_trap):
    import dataclasses
    displaced = dataclasses.replace(aux_trap, x_c=15.3)
    win = shifted_trap_bound_states(displaced, grid_1d, n_max=4, window_points=128)
    full = trap_bound_states(displaced, grid_1d, n_max=4, method="fourier")
    assert np.max(np.abs(win.energies - full.energies)) < 1e-9
    for a, b in zip(win.states, full.states):
        assert 1.0 - abs(st.overlap(a, b)) < 1e-10


# --- spectrum flow ----------------------------------------------------------

def _far_flow(main_trap, aux_trap):
    """Composite flow at a separation where the traps truly decouple."""
    wide = st.build_grid(168.0, 1024)
    far = st.CosineLoopSchedule(tau=100.0, delta=0.45, d_min=8.0, d_max=33.0)
    flow = track_levels(main_trap, aux_trap, far, wide, samples=2, n_levels=11)
    return flow, far, wide


def test_flow_endpoints_disjoint_union(main_trap, aux_trap):
    """At t = 0 (far separation) the composite spectrum equals the union of
    the isolated spectra."""
    flow, far, wide = _far_flow(main_trap, aux_trap)
    da0, c0 = far.eval(0.0)
    aux0 = st.GaussianTweezer1D(aux_trap.alpha + da0, aux_trap.w0, c0)
    e_main = trap_bound_states(main_trap, wide, n_max=6, method="fourier").energies
    e_aux = shifted_trap_bound_states(aux0, wide, n_max=5).energies
    union = np.sort(np.concatenate([e_main, e_aux]))[:11]
    assert np.max(np.abs(np.sort(flow.energies[0]) - union)) < 1e-8


def test_flow_attribution_weights(main_trap, aux_trap):
    flow, _, _ = _far_flow(main_trap, aux_trap)
    w0 = flow.weights[0]
    # isolated main levels carry full weight; aux levels carry none beyond
    # the smear of the near-threshold attribution states
    assert w0[0] > 1.0 - 1e-8
    assert np.all((w0 > 1.0 - 1e-6) | (w0 < 5e-4))
    assert np.all((w0 >= 0.0) & (w0 <= 1.0))


def test_min_gap_trivial_cases(main_trap, grid_1d):
    # single tweezer: gap equals its smallest level spacing
    import dataclasses
    far = st.CosineLoopSchedule(tau=10.0, delta=1e-9, d_min=59.0, d_max=60.0)
    wide = st.build_grid(260.0, 1024)
    flow = track_levels(main_trap, st.GaussianTweezer1D(-1e-280, main_trap.w0),
                        far, wide, samples=2, n_levels=6)
    spacings = np.diff(trap_bound_states(main_trap, wide, n_max=6,
                                         method="fourier").energies)
    assert min_gap(flow) == pytest.approx(float(spacings.min()), abs=1e-8)


def test_matched_pair_gap_bounds(main_trap, aux_trap, calibration, grid_1d):
    """Far-separated matched pair: adjacent-gap floor is the calibration
    mismatch at zero loop detuning and opens linearly with the detuning."""
    from susytweezer.potentials import sample_1d
    from susytweezer.eigensolver import fourier_hamiltonian
    import scipy.linalg as sla
    import dataclasses

    def gaps(dalpha):
        aux = dataclasses.replace(aux_trap, alpha=aux_trap.alpha + dalpha, x_c=26.0)
        V = sample_1d(main_trap, grid_1d) + sample_1d(aux, grid_1d)
        w = sla.eigh(fourier_hamiltonian(V, grid_1d),
                     subset_by_index=(0, 10), eigvals_only=True)
        return np.diff(np.sort(w))

    g0 = gaps(0.0)
    assert g0.min() < np.max(np.abs(calibration.mismatches)) + 1e-6
    g_detuned = gaps(0.45)
    assert g_detuned.min() > 5.0 * g0.min()
