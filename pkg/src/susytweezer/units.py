"""Recoil-unit system.

All simulations run in dimensionless units with hbar = 1, energies in
E_R = hbar^2 k_R^2 / (2 m), lengths in 1/k_R and times in hbar/E_R, so the
kinetic operator is exactly -d^2/dx^2. This module owns the conversion
between those internal units and SI inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _const

# Atomic masses (kg) for the species used throughout; isotopes chosen as the
# common tweezer workhorses (6Li, 87Rb).
ATOMIC_MASS_KG = {
    "Li6": 6.0151228874 * _const.atomic_mass,
    "Rb87": 86.909180531 * _const.atomic_mass,
}


@dataclass(frozen=True)
class UnitSystem:
    """Derived recoil units for one (wavelength, mass) pair.

    Attributes
    ----------
    wavelength : float
        Trapping-light wavelength (m).
    atom_mass : float
        Atom mass (kg).
    k_R : float
        Recoil momentum 2*pi/wavelength (1/m).
    E_R : float
        Recoil energy hbar^2 k_R^2 / (2 m) (J).
    t_unit : float
        Internal time unit hbar/E_R (s).
    """

    wavelength: float
    atom_mass: float
    k_R: float
    E_R: float
    t_unit: float

    # --- conversions (SI <-> dimensionless) ---------------------------------
    def length_to_internal(self, meters: float) -> float:
        return meters * self.k_R

    def length_to_si(self, x: float) -> float:
        return x / self.k_R

    def energy_to_internal(self, joules: float) -> float:
        return joules / self.E_R

    def energy_to_si(self, e: float) -> float:
        return e * self.E_R

    def time_to_internal(self, seconds: float) -> float:
        return seconds / self.t_unit

    def time_to_si(self, t: float) -> float:
        return t * self.t_unit

    def to_dict(self) -> dict:
        return {
            "wavelength_m": self.wavelength,
            "atom_mass_kg": self.atom_mass,
            "k_R_per_m": self.k_R,
            "E_R_J": self.E_R,
            "t_unit_s": self.t_unit,
        }


def make_unit_system(wavelength: float, atom_mass: float) -> UnitSystem:
    """Build the unit system from wavelength (m) and atom mass (kg)."""
    if wavelength <= 0:
        raise ValueError(f"wavelength must be > 0, got {wavelength}")
    if atom_mass <= 0:
        raise ValueError(f"atom_mass must be > 0, got {atom_mass}")
    k_R = 2.0 * math.pi / wavelength
    E_R = _const.hbar**2 * k_R**2 / (2.0 * atom_mass)
    t_unit = _const.hbar / E_R
    return UnitSystem(wavelength=wavelength, atom_mass=atom_mass,
                      k_R=k_R, E_R=E_R, t_unit=t_unit)


def unit_system_for_species(species: str, wavelength: float) -> UnitSystem:
    """Unit system for a named species ('Li6', 'Rb87') at a wavelength (m)."""
    try:
        mass = ATOMIC_MASS_KG[species]
    except KeyError:
        raise ValueError(
            f"unknown species {species!r}; known: {sorted(ATOMIC_MASS_KG)}"
        ) from None
    return make_unit_system(wavelength, mass)
