"""JSON run configurations.

Physical inputs carry their unit in the field name (w0_um, alpha1_Er,
tau_ms); grid geometry is in internal units (1/k_R). Validation reports
the dotted path of the offending field, and parse -> serialize -> parse is
the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .units import ATOMIC_MASS_KG, UnitSystem, make_unit_system, unit_system_for_species

SCHEMA_VERSION = 1


def _get(d: dict, path: str, kind, required=True, default=None):
    cur = d
    parts = path.split(".")
    for i, p in enumerate(parts):
        if not isinstance(cur, dict) or p not in cur:
            if required:
                raise ConfigError(path, "missing required field")
            return default
        cur = cur[p]
    if kind is float:
        if isinstance(cur, bool) or not isinstance(cur, (int, float)):
            raise ConfigError(path, f"expected a number, got {type(cur).__name__}")
        return float(cur)
    if kind is int:
        if isinstance(cur, bool) or not isinstance(cur, int):
            raise ConfigError(path, f"expected an integer, got {type(cur).__name__}")
        return int(cur)
    if kind is str:
        if not isinstance(cur, str):
            raise ConfigError(path, f"expected a string, got {type(cur).__name__}")
        return cur
    if kind is list:
        if not isinstance(cur, list):
            raise ConfigError(path, f"expected a list, got {type(cur).__name__}")
        return cur
    return cur


def _check_version(d: dict):
    v = _get(d, "schema_version", int)
    if v != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {v}, expected {SCHEMA_VERSION}")


def _check_attractive(alpha: float, path: str) -> float:
    # sign is meaningful: reject positive depths instead of guessing
    if alpha >= 0:
        raise ConfigError(path, "trap depths are negative (attractive); "
                                f"got {alpha}; pass the signed value, e.g. -12.0")
    return alpha


@dataclass(frozen=True)
class SpeciesConfig:
    wavelength_nm: float
    species: str | None
    mass_amu: float | None

    def unit_system(self) -> UnitSystem:
        lam = self.wavelength_nm * 1e-9
        if self.species is not None:
            return unit_system_for_species(self.species, lam)
        return make_unit_system(lam, self.mass_amu * 1.66053906660e-27)

    @staticmethod
    def from_dict(d: dict) -> "SpeciesConfig":
        wl = _get(d, "wavelength_nm", float)
        if wl <= 0:
            raise ConfigError("wavelength_nm", "must be positive")
        species = _get(d, "species", str, required=False)
        mass = _get(d, "mass_amu", float, required=False)
        if (species is None) == (mass is None):
            raise ConfigError("species", "give exactly one of species or mass_amu")
        if species is not None and species not in ATOMIC_MASS_KG:
            raise ConfigError("species", f"unknown species {species!r}; "
                                         f"known: {sorted(ATOMIC_MASS_KG)}")
        return SpeciesConfig(wavelength_nm=wl, species=species, mass_amu=mass)

    def to_dict(self) -> dict:
        out = {"wavelength_nm": self.wavelength_nm}
        if self.species is not None:
            out["species"] = self.species
        if self.mass_amu is not None:
            out["mass_amu"] = self.mass_amu
        return out


@dataclass(frozen=True)
class ScheduleConfig:
    tau_ms: float
    delta_Er: float | None = None
    d_min: float | None = None
    d_max: float | None = None
    fractions: tuple[float, float, float] = (0.30, 0.25, 0.45)
    shape_power: float = 1.0

    @staticmethod
    def from_dict(d: dict) -> "ScheduleConfig":
        tau = _get(d, "schedule.tau_ms", float)
        if tau <= 0:
            raise ConfigError("schedule.tau_ms", "must be positive")
        fr = _get(d, "schedule.fractions", list, required=False,
                  default=[0.30, 0.25, 0.45])
        if len(fr) != 3:
            raise ConfigError("schedule.fractions", "need exactly 3 fractions")
        return ScheduleConfig(
            tau_ms=tau,
            delta_Er=_get(d, "schedule.delta_Er", float, required=False),
            d_min=_get(d, "schedule.d_min", float, required=False),
            d_max=_get(d, "schedule.d_max", float, required=False),
            fractions=tuple(float(x) for x in fr),
            shape_power=_get(d, "schedule.shape_power", float, required=False,
                             default=1.0),
        )

    def to_dict(self) -> dict:
        out = {"tau_ms": self.tau_ms, "fractions": list(self.fractions),
               "shape_power": self.shape_power}
        for k, v in (("delta_Er", self.delta_Er), ("d_min", self.d_min),
                     ("d_max", self.d_max)):
            if v is not None:
                out[k] = v
        return out


@dataclass(frozen=True)
class Extract1DConfig:
    species: SpeciesConfig
    alpha1_Er: float
    w0_um: float
    alpha2_Er: float | None       # None: calibrate
    n_levels: int
    grid_extent: float
    grid_points: int
    schedule: ScheduleConfig
    dt: float | None

    @staticmethod
    def from_dict(d: dict) -> "Extract1DConfig":
        _check_version(d)
        sp = SpeciesConfig.from_dict(d)
        a1 = _check_attractive(_get(d, "trap.alpha1_Er", float), "trap.alpha1_Er")
        w0 = _get(d, "trap.w0_um", float)
        if w0 <= 0:
            raise ConfigError("trap.w0_um", "must be positive")
        a2 = _get(d, "partner.alpha2_Er", float, required=False)
        if a2 is not None:
            _check_attractive(a2, "partner.alpha2_Er")
        nl = _get(d, "partner.levels", int, required=False, default=5)
        if nl < 1:
            raise ConfigError("partner.levels", "must be >= 1")
        ext = _get(d, "grid.extent", float, required=False, default=132.0)
        pts = _get(d, "grid.points", int, required=False, default=512)
        return Extract1DConfig(
            species=sp, alpha1_Er=a1, w0_um=w0, alpha2_Er=a2, n_levels=nl,
            grid_extent=ext, grid_points=pts,
            schedule=ScheduleConfig.from_dict(d),
            dt=_get(d, "dt", float, required=False),
        )

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            **self.species.to_dict(),
            "trap": {"alpha1_Er": self.alpha1_Er, "w0_um": self.w0_um},
            "partner": {"levels": self.n_levels},
            "grid": {"extent": self.grid_extent, "points": self.grid_points},
            "schedule": self.schedule.to_dict(),
        }
        if self.alpha2_Er is not None:
            out["partner"]["alpha2_Er"] = self.alpha2_Er
        if self.dt is not None:
            out["dt"] = self.dt
        return out


@dataclass(frozen=True)
class Extract3DConfig:
    species: SpeciesConfig
    alpha1_Er: float
    alpha2_Er: float
    w0_um: float
    n_levels: int
    levels: tuple[int, ...]
    grid_points: tuple[int, int, int]
    grid_extent: tuple[float, float, float]
    grid_center_z: float
    schedule: ScheduleConfig
    dt: float
    dt_ground: float
    snapshots: int

    @staticmethod
    def from_dict(d: dict) -> "Extract3DConfig":
        _check_version(d)
        sp = SpeciesConfig.from_dict(d)
        a1 = _check_attractive(_get(d, "beam.alpha1_Er", float), "beam.alpha1_Er")
        a2 = _check_attractive(_get(d, "beam.alpha2_Er", float), "beam.alpha2_Er")
        w0 = _get(d, "beam.w0_um", float)
        if w0 <= 0:
            raise ConfigError("beam.w0_um", "must be positive")
        pts = _get(d, "grid.points", list, required=False, default=[64, 64, 128])
        ext = _get(d, "grid.extent", list, required=False, default=[8.0, 8.0, 96.0])
        if len(pts) != 3 or len(ext) != 3:
            raise ConfigError("grid.points", "3D grid needs 3 entries per field")
        levels = _get(d, "levels", list, required=False, default=[0, 1, 2, 3])
        nl = _get(d, "n_levels", int, required=False, default=5)
        return Extract3DConfig(
            species=sp, alpha1_Er=a1, alpha2_Er=a2, w0_um=w0, n_levels=nl,
            levels=tuple(int(x) for x in levels),
            grid_points=tuple(int(x) for x in pts),
            grid_extent=tuple(float(x) for x in ext),
            grid_center_z=_get(d, "grid.center_z", float, required=False, default=32.0),
            schedule=ScheduleConfig.from_dict(d),
            dt=_get(d, "dt", float, required=False, default=0.1),
            dt_ground=_get(d, "dt_ground", float, required=False, default=0.05),
            snapshots=_get(d, "snapshots", int, required=False, default=5),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            **self.species.to_dict(),
            "beam": {"alpha1_Er": self.alpha1_Er, "alpha2_Er": self.alpha2_Er,
                     "w0_um": self.w0_um},
            "n_levels": self.n_levels,
            "levels": list(self.levels),
            "grid": {"points": list(self.grid_points),
                     "extent": list(self.grid_extent),
                     "center_z": self.grid_center_z},
            "schedule": self.schedule.to_dict(),
            "dt": self.dt,
            "dt_ground": self.dt_ground,
            "snapshots": self.snapshots,
        }
