"""Supersymmetric tweezer pairs on real-space grids.

Builds superpartner potentials for optical tweezers, propagates the
time-dependent Schroedinger equation along adiabatic extraction schedules,
and evaluates the resulting ground-state preparation fidelities for boson
and fermion qubits.
"""

__version__ = "0.1.0"

from .units import UnitSystem, make_unit_system, unit_system_for_species
from .grids import SpatialGrid, WaveFunction, build_grid, overlap, gaussian_packet
from .potentials import (
    GaussianTweezer1D,
    GaussianBeam3D,
    eval_potential_1d,
    eval_potential_3d,
    total_potential_1d,
    total_potential_3d,
)
from .schedule import (
    AdiabaticSchedule,
    CosineLoopSchedule,
    KnotSchedule,
    schedule_eval,
    schedule_digest,
    schedule_from_dict,
)
from .eigensolver import (
    BoundStateSet,
    SpectrumFlow,
    bound_states,
    trap_bound_states,
    track_levels,
    min_gap,
)
from .susy import (
    Superpotential,
    PartnerCalibration,
    superpotential_from_ground,
    exact_partner,
    apply_A,
    apply_Adag,
    calibrate_gaussian_partner,
)
from .tdse import PropagationJob, ObservableTrace, propagate, propagate_3d, relax_state, choose_dt
from .effective import EffectiveModel, extract_effective_model, propagate_effective, loewdin_audit
from .extraction import (
    ExtractionResult,
    ExtractionSetup,
    LevelOutcome,
    AdiabaticityReport,
    default_schedule,
    make_setup,
    run_extraction,
    sweep_tau,
    check_adiabatic_conditions,
)
from .extraction3d import (
    BeamSetup,
    LongitudinalDesign,
    design_longitudinal_schedule,
    make_beam_setup,
    run_extraction_3d,
)
from .optimizer import ScheduleParamVector, ParamBounds, OptimizeResult, optimize_schedule
from .initialization import (
    ThermalPopulations,
    thermal_populations,
    boson_total_fidelity,
    fermion_total_fidelity,
    fermi_ground_occupation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
