import dataclasses

import numpy as np
import pytest

import susytweezer as st
from susytweezer.extraction import (make_setup, run_level, run_extraction,
                                    check_adiabatic_conditions, default_schedule,
                                    RESIDUAL_ACCEPT)
from susytweezer.effective import extract_effective_model
from conftest import TAU_ACCEPT, N_LEVELS, W0_INTERNAL


def test_default_schedule_values(main_trap, default_sched):
    s = default_sched
    # half the smallest tracked spacing; the -12 E_R ladder spacings end at
    # ~0.995 between levels 4 and 5
    assert s.delta == pytest.approx(0.4977, abs=2e-3)
    assert s.d_min == pytest.approx(1.03 * W0_INTERNAL, rel=1e-12)
    assert s.d_max == pytest.approx(3.35 * W0_INTERNAL, rel=1e-12)
    assert s.fractions == (0.30, 0.25, 0.45)


def test_sudden_limit(default_setup):
    """tau -> 0+: the state has no time to move; the ground level keeps
    fidelity ~1 and nothing reaches the auxiliary trap."""
    sched = dataclasses.replace(default_setup.schedule, tau=1e-3)
    sub = dataclasses.replace(default_setup, schedule=sched)
    out0, _ = run_level(sub, 0)
    assert out0.fidelity > 1.0 - 1e-6
    out2, _ = run_level(sub, 2)
    assert out2.fidelity < 1e-6
    assert out2.main_bound > 1.0 - 1e-6


def test_ledger_and_attribution(tau_ladder):
    """Accepted runs: ledger closes, the two attribution routes agree to
    1e-7, and the residual stays under the acceptance bound."""
    full = tau_ladder[-1]
    for n, o in full.levels.items():
        assert o.main_bound + o.aux_projected + o.residual == pytest.approx(1.0, abs=1e-8)
        assert abs(o.aux_projected - o.aux_spatial) < 1e-7
        assert o.accepted
        assert abs(o.residual) < RESIDUAL_ACCEPT


def test_ground_state_protection(tau_ladder):
    """For n = 0 runs the auxiliary population never exceeds 1 - F0: the
    ground level has no partner to leak into."""
    for res in tau_ladder:
        o = res.levels[0]
        assert o.aux_projected <= (1.0 - o.fidelity) + 1e-8


def test_sweep_shares_gap_and_improves(tau_ladder):
    gaps = [r.min_gap for r in tau_ladder]
    assert all(g == gaps[0] for g in gaps)
    assert gaps[0] > 0
    worst = [max(1.0 - r.fidelity(n) for n in r.levels) for r in tau_ladder]
    assert worst[-1] < worst[0]


def test_fidelities_dict_sorted(tau_ladder):
    f = tau_ladder[-1].fidelities
    assert list(f.keys()) == list(range(6))
    assert all(0.0 <= v <= 1.0 for v in f.values())


def test_run_level_bad_index(default_setup):
    with pytest.raises(ValueError, match="bound state"):
        run_level(default_setup, 99)


def test_adiabaticity_report_default(effective_default, calibration):
    rep = check_adiabatic_conditions(effective_default, calibration.mismatches)
    assert rep.all_pass
    assert np.all(rep.mismatch_over_delta < 0.1)
    assert np.all(rep.coupling_over_spacing < 0.5)
    d = rep.to_dict()
    assert d["all_pass"] is True


def test_adiabaticity_report_miscalibrated(main_trap, aux_trap, grid_1d,
                                           default_sched, calibration):
    """A depth mismatch the size of the loop amplitude fails the first
    inequality."""
    bad_aux = dataclasses.replace(aux_trap, alpha=aux_trap.alpha + 0.45)
    model = extract_effective_model(main_trap, bad_aux, default_sched, grid_1d,
                                    N=N_LEVELS, samples=41)
    from susytweezer.eigensolver import trap_bound_states
    e1 = trap_bound_states(main_trap, grid_1d, n_max=6, method="fourier").energies
    e2 = trap_bound_states(bad_aux, grid_1d, n_max=5, method="fourier").energies
    rep = check_adiabatic_conditions(model, e2 - e1[1:])
    assert "fail" in rep.mismatch_flags or "warn" in rep.mismatch_flags
    assert not rep.all_pass


def test_too_close_approach_fails_and_degrades(main_trap, aux_trap, grid_1d):
    """Ramming the traps into each other pushes couplings past spacings;
    the report flags it and the short-tau extraction suffers."""
    tau = TAU_ACCEPT / 16
    good = default_schedule(main_trap, tau, N_LEVELS)
    bad = dataclasses.replace(good, d_min=5.2)
    model_bad = extract_effective_model(main_trap, aux_trap, bad, grid_1d,
                                        N=N_LEVELS, samples=81)
    rep = check_adiabatic_conditions(model_bad)
    assert "fail" in rep.coupling_flags

    setup_good = make_setup(main_trap, aux_trap, good, grid_1d, n_levels=N_LEVELS)
    setup_bad = make_setup(main_trap, aux_trap, bad, grid_1d, n_levels=N_LEVELS)
    f_good = run_level(setup_good, 1)[0].fidelity
    f_bad = run_level(setup_bad, 1)[0].fidelity
    assert f_bad < f_good


def test_extraction_result_serializes(tau_ladder):
    d = tau_ladder[-1].to_dict()
    assert set(d["levels"].keys()) == {str(n) for n in range(6)}
    assert d["min_gap_Er"] > 0
    assert len(d["schedule_digest"]) == 64
