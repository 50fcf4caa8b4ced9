"""Material, contact and thermal-load parameters of the panel simulator."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields


class _JsonConfig:
    """JSON load/save shared by the parameter records."""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class MaterialSpec(_JsonConfig):
    """Alumina-like ceramic; SI units except where the field name says otherwise."""

    tensile_strength_MPa: float = 220.0
    compressive_strength_MPa: float = 2068.0
    density_kg_m3: float = 3800.0
    conductivity_W_mK: float = 24.6
    heat_capacity_J_kgK: float = 880.0
    youngs_GPa: float = 303.0
    poisson: float = 0.21
    cte_per_K: float = 8.28e-6
    emissivity: float = 0.4
    convection_W_m2K: float = 10.0

    def __post_init__(self):
        positive = (
            "tensile_strength_MPa", "compressive_strength_MPa", "density_kg_m3",
            "conductivity_W_mK", "heat_capacity_J_kgK", "youngs_GPa", "cte_per_K",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.poisson < 0.5:
            raise ValueError("poisson ratio must lie in (0, 0.5)")
        # zero emissivity / convection switch the surface losses off
        if self.emissivity < 0 or self.convection_W_m2K < 0:
            raise ValueError("emissivity and convection coefficient must be non-negative")

    @property
    def youngs_Pa(self) -> float:
        return self.youngs_GPa * 1e9

    @property
    def volumetric_heat_capacity(self) -> float:
        return self.density_kg_m3 * self.heat_capacity_J_kgK


@dataclass(frozen=True)
class ContactSpec(_JsonConfig):
    """Tile-to-tile thermal and frictional contact."""

    gap_conductance_W_m2K: float = 2000.0
    asperity_height_m: float = 10e-6
    asperity_slope: float = 0.0167
    vickers_c1_GPa: float = 10.5
    vickers_c2: float = -0.03
    friction_mu: float = 0.24

    def __post_init__(self):
        if self.gap_conductance_W_m2K < 0:
            raise ValueError("gap conductance must be non-negative")
        if not self.asperity_height_m > 0 or not self.asperity_slope > 0:
            raise ValueError("asperity height and slope must be positive")
        if not self.vickers_c1_GPa > 0:
            raise ValueError("vickers c1 must be positive")
        if not 0.0 <= self.friction_mu <= 1.0:
            raise ValueError("friction coefficient must lie in [0, 1]")


@dataclass(frozen=True)
class LoadProfile(_JsonConfig):
    """Thermal shock: hold ambient, linear ramp, hold peak, then free cooling."""

    t_start_s: float = 5.0
    t_peak_s: float = 15.0
    t_hold_end_s: float = 35.0
    T_ambient_C: float = 25.0
    T_peak_C: float = 1000.0
    spot_radius_mm: float = 7.5
    t_end_s: float = 600.0

    def __post_init__(self):
        if not 0 <= self.t_start_s < self.t_peak_s <= self.t_hold_end_s <= self.t_end_s:
            raise ValueError("load times must satisfy 0 <= start < peak <= hold_end <= end")
        if self.T_peak_C < self.T_ambient_C:
            raise ValueError("peak temperature below ambient")
        if self.T_ambient_C <= -273.15:
            raise ValueError("ambient temperature below absolute zero")
        if not self.spot_radius_mm > 0:
            raise ValueError("heated spot radius must be positive")

    @property
    def ramp_rate_C_s(self) -> float:
        return (self.T_peak_C - self.T_ambient_C) / (self.t_peak_s - self.t_start_s)


def load_temperature(t: float, profile: LoadProfile = LoadProfile()) -> float | None:
    """Temperature (deg C) imposed on the heated spot at time ``t``.

    Returns ``None`` once the load has been removed; the spot is then an
    ordinary free surface.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if t > profile.t_hold_end_s:
        return None
    if t <= profile.t_start_s:
        return profile.T_ambient_C
    if t >= profile.t_peak_s:
        return profile.T_peak_C
    return profile.T_ambient_C + profile.ramp_rate_C_s * (t - profile.t_start_s)
