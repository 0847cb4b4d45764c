"""Qubit-initialization fidelity from occupation statistics and extraction
fidelities.

Bosons: a single pre-cooled atom with thermal level occupations P_n is run
through the extraction; post-selecting on an empty auxiliary tweezer keeps
the trials where the atom stayed in the main ground state. Fermions: N_a
spin-polarized atoms fill the lowest levels; all excited ones must extract
and the ground level must have been occupied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThermalPopulations:
    """Boltzmann occupations over a bound-level ladder, with the probability
    beyond the last supplied level estimated by a harmonic extension using
    the last computed spacing (Gaussian traps soften near the top, so the
    extension is an estimate and is reported separately)."""

    populations: np.ndarray   # P_n for the supplied levels
    tail: float               # probability beyond the last supplied level
    temperature: float        # in E_R (k_B T)

    def total(self) -> float:
        return float(self.populations.sum() + self.tail)


def _partition_terms(energies: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    e = energies - energies[0]
    weights = np.exp(-beta * e)
    spacing = energies[-1] - energies[-2] if len(energies) >= 2 else 1.0
    q = math.exp(-beta * spacing)
    # geometric continuation above the top supplied level
    tail = weights[-1] * q / (1.0 - q) if q < 1.0 else math.inf
    return weights, tail


def thermal_populations(energies, temperature: float | None = None,
                        ground_occupation: float | None = None,
                        cutoff: int | None = None) -> ThermalPopulations:
    """Thermal occupations for the supplied level energies.

    Exactly one of ``temperature`` (k_B T in E_R) or ``ground_occupation``
    (pinned P_0, solved for the matching temperature by bisection) must be
    given. ``cutoff`` truncates the reported ladder at N+1 levels, folding
    the rest into the tail.
    """
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1 or len(energies) < 2:
        raise ValueError("need at least two level energies")
    if np.any(np.diff(energies) <= 0):
        raise ValueError("energies must be strictly increasing")
    if (temperature is None) == (ground_occupation is None):
        raise ValueError("give exactly one of temperature or ground_occupation")

    if ground_occupation is not None:
        if not (0.0 < ground_occupation < 1.0):
            raise ValueError(f"ground occupation must be in (0,1), got {ground_occupation}")

        def p0_of_beta(beta):
            w, tail = _partition_terms(energies, beta)
            return 1.0 / (w.sum() + tail)

        # P0 rises monotonically with beta; bracket then bisect
        lo, hi = 1e-12, 1.0
        while p0_of_beta(hi) < ground_occupation:
            hi *= 2.0
            if hi > 1e9:
                raise ValueError("ground occupation too close to 1 to solve")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if p0_of_beta(mid) < ground_occupation:
                lo = mid
            else:
                hi = mid
        beta = 0.5 * (lo + hi)
    else:
        if temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {temperature}")
        beta = 1.0 / temperature

    weights, tail = _partition_terms(energies, beta)
    Z = weights.sum() + tail
    pops = weights / Z
    tail_p = tail / Z
    if cutoff is not None and cutoff + 1 < len(pops):
        tail_p += float(pops[cutoff + 1:].sum())
        pops = pops[: cutoff + 1]
    return ThermalPopulations(populations=pops, tail=float(tail_p),
                              temperature=1.0 / beta)


def boson_total_fidelity(populations, fidelities, tail: float = 0.0) -> dict:
    """Post-selected ground-state preparation fidelity for a single boson.

    ``populations[n]`` and ``fidelities[n]`` are index-aligned over levels
    0..N. Returns the bound P0 + sum_{n>0} P_n F_n, the conservative
    variant with the extra F_0 factor on the ground term, and the keep
    probability (trials post-selected as "auxiliary tweezer empty").
    """
    P = np.asarray(populations, dtype=float)
    F = np.asarray(fidelities, dtype=float)
    if P.shape != F.shape:
        raise ValueError(f"length mismatch: {P.shape} vs {F.shape}")
    if np.any(P < 0) or P.sum() + tail > 1.0 + 1e-9:
        raise ValueError("populations must be nonnegative and sum to <= 1")
    if np.any((F < 0) | (F > 1)):
        raise ValueError("fidelities must lie in [0, 1]")
    extracted = float(np.dot(P[1:], F[1:]))
    bound = float(P[0] + extracted)
    conservative = float(P[0] * F[0] + extracted)
    # kept trials: atom not found in aux. Initial excited population is in
    # aux with probability F_n; ground-state runs stray there with at most
    # 1 - F_0; tail levels are assumed extracted (they are above the matched
    # ladder, so counting them as lost is the conservative reading).
    keep = float(1.0 - (P[0] * (1.0 - F[0]) + extracted + tail))
    return {"bound": bound, "conservative": conservative, "keep_probability": keep}


def fermion_total_fidelity(ground_occupation: float, fidelities) -> float:
    """P0 * prod F_n over the N_a occupied levels (n = 0..N_a-1)."""
    F = np.asarray(fidelities, dtype=float)
    if F.ndim != 1 or len(F) < 1:
        raise ValueError("need fidelities for at least one occupied level")
    if not (0.0 <= ground_occupation <= 1.0):
        raise ValueError(f"ground occupation must be in [0,1], got {ground_occupation}")
    if np.any((F < 0) | (F > 1)):
        raise ValueError("fidelities must lie in [0, 1]")
    return float(ground_occupation * np.prod(F))


def fermi_ground_occupation(t_over_tf: float, depth_kbtf: float) -> float:
    """Fermi-Dirac occupation of the trap ground level loaded from a
    degenerate-gas reservoir.

    Convention: the level sits ``depth_kbtf`` (in units of k_B T_F) below
    the chemical potential, E0 - mu = -depth, ignoring the zero-point
    offset; f = 1/(exp((E0-mu)/k_B T) + 1).
    """
    if t_over_tf <= 0:
        raise ValueError(f"T/T_F must be > 0, got {t_over_tf}")
    x = -depth_kbtf / t_over_tf
    return float(1.0 / (math.exp(x) + 1.0))
