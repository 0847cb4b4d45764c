"""Command-line entry points.

Every subcommand reads a JSON config (or explicit flags), writes its
outputs plus a reproducibility manifest into --out, and exits 0 on
success, 2 on a config schema violation (machine-readable error on
stderr) or 3 on a numeric/leak failure (manifest still written).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SimulationError
from .units import UnitSystem
from .grids import build_grid
from .potentials import GaussianTweezer1D, GaussianBeam3D, sample_1d
from .schedule import schedule_digest, with_tau
from .eigensolver import trap_bound_states, track_levels, min_gap
from .susy import calibrate_gaussian_partner, exact_partner, calibration_grid
from .effective import extract_effective_model, propagate_effective
from .extraction import (default_schedule, make_setup, run_extraction, sweep_tau,
                         check_adiabatic_conditions)
from .extraction3d import design_longitudinal_schedule, make_beam_setup, run_extraction_3d
from .optimizer import ScheduleParamVector, ParamBounds, optimize_schedule
from .initialization import (thermal_populations, boson_total_fidelity,
                             fermion_total_fidelity, fermi_ground_occupation)
from .configs import Extract1DConfig, Extract3DConfig, SpeciesConfig
from . import dataio, manifest as mft
from .tdse import PropagationJob, propagate


def _load_config(path: str) -> dict:
    try:
        return dataio.read_json(path)
    except FileNotFoundError:
        raise ConfigError("(file)", f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("(file)", f"not valid JSON: {e}")


def _parse_levels(spec: str) -> list[int]:
    """'0..5' or '0,2,5' or '3'."""
    spec = spec.strip()
    if ".." in spec:
        a, b = spec.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in spec.split(",") if x.strip()]


class Problem1D:
    """Shared 1D assembly: units, grid, traps, calibration, schedule."""

    def __init__(self, cfg: Extract1DConfig, tau_ms_override: float | None = None):
        self.cfg = cfg
        self.units: UnitSystem = cfg.species.unit_system()
        self.w0 = self.units.length_to_internal(cfg.w0_um * 1e-6)
        self.main = GaussianTweezer1D(cfg.alpha1_Er, self.w0, 0.0)
        self.calibration = None
        if cfg.alpha2_Er is None:
            self.calibration = calibrate_gaussian_partner(cfg.alpha1_Er, self.w0,
                                                          cfg.n_levels)
            alpha2 = self.calibration.alpha2_star
        else:
            alpha2 = cfg.alpha2_Er
        self.aux_template = GaussianTweezer1D(alpha2, self.w0, 0.0)
        self.grid = build_grid(cfg.grid_extent, cfg.grid_points, dims=1)
        tau_ms = cfg.schedule.tau_ms if tau_ms_override is None else tau_ms_override
        tau = self.units.time_to_internal(tau_ms * 1e-3)
        sc = cfg.schedule
        self.schedule = default_schedule(self.main, tau, cfg.n_levels,
                                         delta=sc.delta_Er, d_min=sc.d_min,
                                         d_max=sc.d_max, fractions=sc.fractions,
                                         shape_power=sc.shape_power)

    def setup(self):
        return make_setup(self.main, self.aux_template, self.schedule, self.grid,
                          n_levels=self.cfg.n_levels, dt=self.cfg.dt)

    def derived(self) -> dict:
        d = {
            "unit_system": self.units.to_dict(),
            "grid": self.grid.to_dict(),
            "alpha2_Er": self.aux_template.alpha,
            "schedule": self.schedule.to_dict(),
            "schedule_digest": schedule_digest(self.schedule),
        }
        if self.calibration is not None:
            d["calibration"] = self.calibration.to_dict()
        return d


def _write_outputs(out_dir: Path, command: str, config_echo: dict, derived: dict,
                   t_start: float):
    m = mft.build_manifest(command, config_echo, derived)
    mft.finalize(m, t_start)
    dataio.write_json(out_dir / "manifest.json", m)
    return m


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    t0 = time.time()
    cfg = Extract1DConfig.from_dict(_load_config(args.config))
    prob = Problem1D(cfg)
    out = Path(args.out)
    bs = trap_bound_states(prob.main, prob.grid, method="fourier")
    m = _write_outputs(out, "spectrum", cfg.to_dict(), prob.derived(), t0)
    dataio.write_csv(out / "spectrum.csv",
                     ["level", "energy_Er", "manifest=" + m["content_hash"][:16]],
                     [(n, e) + ("",) for n, e in enumerate(bs.energies)])
    print(f"wrote {out / 'spectrum.csv'} ({len(bs)} bound states)")
    return 0


def cmd_partner(args) -> int:
    t0 = time.time()
    sp = SpeciesConfig(wavelength_nm=args.wavelength_nm, species=args.species,
                       mass_amu=None)
    units = sp.unit_system()
    w0 = units.length_to_internal(args.w0_um * 1e-6)
    if args.alpha1 >= 0:
        raise ConfigError("alpha1", "trap depths are negative (attractive)")
    out = Path(args.out)
    derived = {"unit_system": units.to_dict(), "w0_internal": w0}
    if args.mode == "calibrate":
        cal = calibrate_gaussian_partner(args.alpha1, w0, args.levels)
        derived["calibration"] = cal.to_dict()
        m = _write_outputs(out, "partner", vars(args).copy(), derived, t0)
        payload = cal.to_dict()
        payload["mismatches_Er"] = [float(x) for x in cal.mismatches]
        payload["manifest_sha256"] = m["content_hash"]
        dataio.write_json(out / "calibration.json", payload)
        print(f"alpha2* = {cal.alpha2_star:.4f} E_R (rms residual "
              f"{cal.residual:.2e} E_R); wrote {out / 'calibration.json'}")
    else:
        grid = calibration_grid(args.alpha1, w0, args.levels)
        trap = GaussianTweezer1D(args.alpha1, w0)
        V1 = sample_1d(trap, grid)
        V2 = exact_partner(V1, grid)
        m = _write_outputs(out, "partner", vars(args).copy(), derived, t0)
        dataio.write_csv(out / "partner_potential.csv",
                         ["x_invkR", "V1_Er", "V2_Er",
                          "manifest=" + m["content_hash"][:16]],
                         [(x, v1, v2, "") for x, v1, v2 in
                          zip(grid.axes[0], V1, V2)])
        print(f"wrote {out / 'partner_potential.csv'}")
    return 0


def cmd_extract(args) -> int:
    t0 = time.time()
    cfg = Extract1DConfig.from_dict(_load_config(args.config))
    prob = Problem1D(cfg, tau_ms_override=args.tau_ms)
    levels = _parse_levels(args.n)
    setup = prob.setup()
    out = Path(args.out)
    m = _write_outputs(out, "extract", cfg.to_dict(), prob.derived(), t0)
    try:
        res = run_extraction(setup, levels, compute_gap=not args.no_gap,
                             keep_traces=True)
    except SimulationError as e:
        _emit_error(e, code=3)
        return 3
    payload = res.to_dict()
    payload["level_energies_Er"] = [float(e) for e in
                                    setup.main_states.energies[: cfg.n_levels + 1]]
    payload["manifest_sha256"] = m["content_hash"]
    dataio.write_json(out / "extraction.json", payload)
    for n, tr in res.traces.items():
        dataio.write_csv(out / f"trace_n{n}.csv",
                         ["t_internal", "norm", "energy_Er", "pop_main", "pop_aux"],
                         zip(tr.t, tr.norm, tr.energy, tr.pop_main, tr.pop_aux))
    print(f"fidelities: " + " ".join(f"F{n}={res.fidelity(n):.6f}"
                                     for n in sorted(res.levels)))
    print(f"wrote {out / 'extraction.json'}")
    return 0


def cmd_sweep(args) -> int:
    t0 = time.time()
    cfg = Extract1DConfig.from_dict(_load_config(args.config))
    prob = Problem1D(cfg)
    levels = _parse_levels(args.n)
    taus_ms = [float(x) for x in args.tau_list.split(",") if x.strip()]
    taus = [prob.units.time_to_internal(x * 1e-3) for x in taus_ms]
    setup = prob.setup()
    out = Path(args.out)
    m = _write_outputs(out, "sweep", cfg.to_dict(), prob.derived(), t0)
    results = sweep_tau(setup, levels, taus, compute_gap=not args.no_gap)
    rows = []
    for tau_ms_v, res in zip(taus_ms, results):
        for n in sorted(res.levels):
            o = res.levels[n]
            rows.append((res.tau, tau_ms_v, n, o.fidelity,
                         res.min_gap if res.min_gap is not None else float("nan"),
                         o.residual))
    dataio.write_csv(out / "sweep.csv",
                     ["tau_internal", "tau_ms", "level", "fidelity",
                      "min_gap_Er", "residual"], rows)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows, "
          f"manifest {m['content_hash'][:16]})")
    return 0


def cmd_track(args) -> int:
    t0 = time.time()
    cfg = Extract1DConfig.from_dict(_load_config(args.config))
    prob = Problem1D(cfg)
    out = Path(args.out)
    m = _write_outputs(out, "track", cfg.to_dict(), prob.derived(), t0)
    flow = track_levels(prob.main, prob.aux_template, prob.schedule, prob.grid,
                        samples=args.samples, n_levels=2 * cfg.n_levels + 1)
    rows = []
    for k, t in enumerate(flow.times):
        for lvl in range(flow.energies.shape[1]):
            rows.append((t, lvl, flow.energies[k, lvl], flow.weights[k, lvl]))
    dataio.write_csv(out / "flow.csv",
                     ["t_internal", "level", "energy_Er", "main_weight"], rows)
    print(f"min gap = {min_gap(flow):.6f} E_R; wrote {out / 'flow.csv'} "
          f"(manifest {m['content_hash'][:16]})")
    return 0


def cmd_extract3d(args) -> int:
    t0 = time.time()
    cfg = Extract3DConfig.from_dict(_load_config(args.config))
    units = cfg.species.unit_system()
    w0 = units.length_to_internal(cfg.w0_um * 1e-6)
    lam = units.length_to_internal(cfg.species.wavelength_nm * 1e-9)
    main = GaussianBeam3D(cfg.alpha1_Er, w0, lam, 0.0)
    tau = units.time_to_internal(cfg.schedule.tau_ms * 1e-3)
    design = design_longitudinal_schedule(
        main, cfg.alpha2_Er, tau, N=cfg.n_levels,
        d_min=cfg.schedule.d_min, d_max=cfg.schedule.d_max,
        delta=cfg.schedule.delta_Er, fractions=cfg.schedule.fractions)
    grid3 = build_grid(cfg.grid_extent, cfg.grid_points, dims=3,
                       center=(0.0, 0.0, cfg.grid_center_z))
    derived = {
        "unit_system": units.to_dict(), "grid": grid3.to_dict(),
        "schedule": design.schedule.to_dict(),
        "schedule_digest": schedule_digest(design.schedule),
        "design": {"delta_Er": design.delta, "d_min": design.d_min,
                   "d_max": design.d_max,
                   "resonant_gaps_Er": [float(x) for x in design.resonant_gaps[-1]]},
    }
    out = Path(args.out)
    m = _write_outputs(out, "extract3d", cfg.to_dict(), derived, t0)
    setup = make_beam_setup(main, cfg.alpha2_Er, design.schedule, grid3,
                            n_levels=cfg.n_levels, dt=cfg.dt,
                            prep_levels=sorted(set(cfg.levels)))
    try:
        res = run_extraction_3d(setup, [n for n in cfg.levels if n > 0])
        if 0 in cfg.levels:
            from .extraction3d import run_level_3d
            out0, _ = run_level_3d(setup, 0, dt=cfg.dt_ground)
            res.levels[0] = out0
        if cfg.snapshots > 0:
            _snapshot_run(setup, max(cfg.levels), cfg.snapshots, out)
    except SimulationError as e:
        _emit_error(e, code=3)
        return 3
    payload = res.to_dict()
    payload["manifest_sha256"] = m["content_hash"]
    dataio.write_json(out / "extraction3d.json", payload)
    print("fidelities: " + " ".join(f"F{n}={res.fidelity(n):.6f}"
                                    for n in sorted(res.levels)))
    print(f"wrote {out / 'extraction3d.json'}")
    return 0


def _snapshot_run(setup, n: int, k: int, out_dir: Path):
    """Re-propagate one level, dumping |psi|^2 at k+1 evenly spaced times."""
    from .extraction3d import _potential_fn_3d
    tau = setup.schedule.duration
    psi = setup.initial_states[n]
    edges = np.linspace(0.0, tau, k + 1)
    dataio.dump_density(out_dir / "psi2_t0.bin", psi)
    fn = _potential_fn_3d(setup)
    for j in range(k):
        span = edges[j + 1] - edges[j]
        nst = max(int(round(span / setup.dt)), 1)
        job = PropagationJob(initial=psi, potential=fn, dt=span / nst, n_steps=nst,
                             t0=edges[j], record_stride=10**9)
        psi, _ = propagate(job)
        dataio.dump_density(out_dir / f"psi2_t{j + 1}.bin", psi)


def cmd_optimize(args) -> int:
    t0 = time.time()
    cfg = Extract1DConfig.from_dict(_load_config(args.config))
    prob = Problem1D(cfg)
    base = prob.schedule
    out = Path(args.out)
    m = _write_outputs(out, "optimize", cfg.to_dict(),
                       {**prob.derived(), "budget": args.budget, "seed": args.seed},
                       t0)
    N = cfg.n_levels

    def objective(pv: ScheduleParamVector) -> float:
        sched = pv.to_schedule(base.tau, base.d_max)
        model = extract_effective_model(prob.main, prob.aux_template, sched,
                                        prob.grid, N=N, samples=241)
        worst = 0.0
        for n in range(N + 1):
            p = propagate_effective(model, n, dt=0.5)["transfer"]
            worst = max(worst, 1.0 - p)
        return worst

    init = ScheduleParamVector(fractions=base.fractions, delta=base.delta,
                               d_min=base.d_min, shape_power=base.shape_power)
    bounds = ParamBounds()
    result = optimize_schedule(objective, init, bounds, budget=args.budget,
                               seed=args.seed)
    rows = [(ev.index, ev.restart, *ev.params.as_array(), ev.objective,
             int(ev.feasible), ev.tier) for ev in result.history]
    dataio.write_csv(out / "optimize_history.csv",
                     ["eval", "restart", "f1", "f2", "f3", "delta_Er", "d_min",
                      "shape_power", "objective", "feasible", "tier"], rows)
    best_sched = result.best.to_schedule(base.tau, base.d_max)
    confirm = None
    if not args.no_confirm:
        setup = make_setup(prob.main, prob.aux_template, best_sched, prob.grid,
                           n_levels=N, dt=cfg.dt)
        res = run_extraction(setup, list(range(N + 1)), compute_gap=False)
        confirm = {str(n): res.fidelity(n) for n in sorted(res.levels)}
    dataio.write_json(out / "optimize_best.json", {
        "best_params": result.best.to_dict(),
        "best_objective_surrogate": result.best_objective,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "full_tdse_confirmation": confirm,
        "schedule": best_sched.to_dict(),
        "manifest_sha256": m["content_hash"],
    })
    print(f"best surrogate objective {result.best_objective:.3e} after "
          f"{result.evaluations} evaluations; wrote {out / 'optimize_best.json'}")
    return 0


def cmd_init_fidelity(args) -> int:
    t0 = time.time()
    payload = dataio.read_json(args.extraction)
    levels = sorted(int(k) for k in payload["levels"])
    F = np.array([payload["levels"][str(n)]["fidelity"] for n in levels])
    report: dict = {"source_extraction": str(args.extraction),
                    "source_manifest": payload.get("manifest_sha256")}
    if args.boson_p0 is not None:
        energies = payload.get("level_energies_Er")
        if energies is None or len(energies) < 2:
            raise ConfigError("extraction", "extraction file carries no level "
                                            "energies; re-run `extract`")
        pops = thermal_populations(np.asarray(energies), ground_occupation=args.boson_p0)
        P = pops.populations[: len(F)]
        res = boson_total_fidelity(P, F, tail=pops.tail + float(pops.populations[len(F):].sum()))
        report["boson"] = {
            "P0": args.boson_p0,
            "populations": [float(p) for p in P],
            "tail_beyond_levels": pops.tail + float(pops.populations[len(F):].sum()),
            "temperature_Er": pops.temperature,
            **res,
        }
    if args.fermion_ttf is not None:
        if args.na > len(F):
            raise ConfigError("na", f"need fidelities for levels 0..{args.na - 1}; "
                                    f"extraction has {len(F)}")
        p0 = fermi_ground_occupation(args.fermion_ttf, args.depth)
        total = fermion_total_fidelity(p0, F[: args.na])
        report["fermion"] = {
            "T_over_TF": args.fermion_ttf,
            "depth_kBTF": args.depth,
            "N_a": args.na,
            "ground_occupation": p0,
            "total_fidelity": total,
        }
    if "boson" not in report and "fermion" not in report:
        raise ConfigError("mode", "give --boson-p0 or --fermion-ttf")
    out = Path(args.out)
    m = _write_outputs(out, "init-fidelity", vars(args).copy(),
                       {"levels": levels}, t0)
    report["manifest_sha256"] = m["content_hash"]
    dataio.write_json(out / "fidelity_report.json", report)
    for kind in ("boson", "fermion"):
        if kind in report:
            key = "bound" if kind == "boson" else "total_fidelity"
            print(f"{kind} total fidelity: {report[kind][key]:.8f}")
    print(f"wrote {out / 'fidelity_report.json'}")
    return 0


# ---------------------------------------------------------------------------

def _emit_error(e: Exception, code: int):
    kind = {2: "config", 3: "simulation"}[code]
    msg = {"error": kind, "type": type(e).__name__, "message": str(e)}
    if isinstance(e, ConfigError):
        msg["path"] = e.path
    print(json.dumps(msg), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="susytweezer",
        description="Supersymmetric tweezer pairs: partner calibration, adiabatic "
                    "extraction, and qubit-initialization fidelities.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", default=".", metavar="DIR")

    sp = sub.add_parser("spectrum", help="Bound states of the main trap.")
    sp.add_argument("--config", required=True)
    add_common(sp)
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("partner", help="Exact partner potential or calibrated depth.")
    sp.add_argument("--alpha1", type=float, required=True, metavar="E_R")
    sp.add_argument("--w0-um", dest="w0_um", type=float, required=True)
    sp.add_argument("--mode", choices=["exact", "calibrate"], default="calibrate")
    sp.add_argument("--levels", type=int, default=5)
    sp.add_argument("--wavelength-nm", dest="wavelength_nm", type=float, default=810.0)
    sp.add_argument("--species", default="Li6")
    add_common(sp)
    sp.set_defaults(fn=cmd_partner)

    sp = sub.add_parser("extract", help="Run the 1D extraction for chosen levels.")
    sp.add_argument("--config", required=True)
    sp.add_argument("--n", default="0..5", help="levels, e.g. 0..5 or 1,3")
    sp.add_argument("--tau-ms", dest="tau_ms", type=float, default=None)
    sp.add_argument("--no-gap", action="store_true")
    add_common(sp)
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("sweep", help="Fidelity versus adiabatic duration.")
    sp.add_argument("--config", required=True)
    sp.add_argument("--n", default="0..5")
    sp.add_argument("--tau-list", required=True, metavar="MS,MS,...")
    sp.add_argument("--no-gap", action="store_true")
    add_common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("track", help="Composite spectrum along the control path.")
    sp.add_argument("--config", required=True)
    sp.add_argument("--samples", type=int, default=129)
    add_common(sp)
    sp.set_defaults(fn=cmd_track)

    sp = sub.add_parser("extract3d", help="Longitudinal extraction, full 3D beams.")
    sp.add_argument("--config", required=True)
    add_common(sp)
    sp.set_defaults(fn=cmd_extract3d)

    sp = sub.add_parser("optimize", help="Tune schedule parameters (surrogate tier).")
    sp.add_argument("--config", required=True)
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--no-confirm", action="store_true",
                    help="skip the final full-propagation confirmation")
    add_common(sp)
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("init-fidelity", help="Qubit initialization fidelity report.")
    sp.add_argument("--extraction", required=True, metavar="JSON")
    sp.add_argument("--boson-p0", dest="boson_p0", type=float, default=None)
    sp.add_argument("--fermion-ttf", dest="fermion_ttf", type=float, default=None)
    sp.add_argument("--depth", type=float, default=5.0, metavar="kB_TF")
    sp.add_argument("--na", type=int, default=4)
    add_common(sp)
    sp.set_defaults(fn=cmd_init_fidelity)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        _emit_error(e, code=2)
        return 2
    except SimulationError as e:
        _emit_error(e, code=3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
