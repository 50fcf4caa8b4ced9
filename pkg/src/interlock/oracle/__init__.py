"""Desk-scale transient thermo-mechanical simulator of interlocked panels."""
from .config import ContactSpec, LoadProfile, MaterialSpec, load_temperature
from .contact import constriction_conductance, contact_conductance, microhardness_Pa
from .mechanics import (
    constrained_stress,
    contact_work,
    drucker_prager_constants,
    drucker_prager_safety,
    elastic_energy_density,
    mechanics_outputs,
)
from .panel import PanelModel, StabilityError, ThermalState, step_thermal
from .simulate import CHANNELS, UNITS, ResponseSeries, simulate

__all__ = [
    "CHANNELS",
    "UNITS",
    "ContactSpec",
    "LoadProfile",
    "MaterialSpec",
    "PanelModel",
    "ResponseSeries",
    "StabilityError",
    "ThermalState",
    "constrained_stress",
    "constriction_conductance",
    "contact_conductance",
    "contact_work",
    "drucker_prager_constants",
    "drucker_prager_safety",
    "elastic_energy_density",
    "load_temperature",
    "mechanics_outputs",
    "microhardness_Pa",
    "simulate",
    "step_thermal",
]
