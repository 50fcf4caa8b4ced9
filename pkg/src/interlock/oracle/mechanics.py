"""Closed-form mechanical response of the tile network.

All quantities follow from the tile temperature field:

* each tile is fully constrained in-plane, giving the equibiaxial stress
  ``sigma = E alpha dT / (1 - nu)``;
* the expansion of touching tiles produces lateral interference, which the
  inclined faces convert into vertical ride-up ``dz = delta * cot(theta)``;
* the constrained stress presses on the inclined faces with
  ``P = sigma * sin(theta)``, which drives friction and contact conductance;
* the Drucker-Prager check uses the self-equilibrated part of the stress,
  i.e. the node stress relative to its tile mean, which is where tension
  appears in the cooler part of a tile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import MaterialSpec
from .panel import PanelModel

SAFETY_FACTOR_CAP = 10.0


def constrained_stress(dT, material: MaterialSpec = MaterialSpec()):
    """Equibiaxial stress (Pa) of a fully restrained plate heated by ``dT``."""
    return material.youngs_Pa * material.cte_per_K * np.asarray(dT) / (1.0 - material.poisson)


def elastic_energy_density(stress, material: MaterialSpec = MaterialSpec()):
    """Strain energy per volume (J/m^3) of an equibiaxial plane-stress state."""
    return np.asarray(stress) ** 2 * (1.0 - material.poisson) / material.youngs_Pa


def drucker_prager_constants(material: MaterialSpec = MaterialSpec()) -> tuple[float, float]:
    """``(alpha, k)`` of the cone through the uniaxial tensile and compressive strengths (k in Pa)."""
    st = material.tensile_strength_MPa * 1e6
    sc = material.compressive_strength_MPa * 1e6
    alpha = (sc - st) / (math.sqrt(3.0) * (sc + st))
    k = 2.0 * sc * st / (math.sqrt(3.0) * (sc + st))
    return alpha, k


def drucker_prager_safety(stress, material: MaterialSpec = MaterialSpec(), cap: float = SAFETY_FACTOR_CAP):
    """Safety factor ``k / (alpha I1 + sqrt(J2))`` for in-plane equibiaxial ``stress`` (tension > 0).

    Here ``I1 = 2 s`` and ``sqrt(J2) = |s| / sqrt(3)``.  States inside the
    cone's apex region are safe; the result saturates smoothly at ``cap``
    for an unstressed point.
    """
    alpha, k = drucker_prager_constants(material)
    s = np.asarray(stress, dtype=float)
    f = alpha * 2.0 * s + np.abs(s) / math.sqrt(3.0)
    return k / (np.maximum(f, 0.0) + k / cap)


@dataclass(frozen=True)
class MechanicsSnapshot:
    oop_deformation_mm: float
    elastic_energy_J: float
    friction_force_N: float
    safety_factor: float
    tile_lift_m: np.ndarray  # (N, N)
    normal_force_x: np.ndarray  # (N, N-1)
    normal_force_y: np.ndarray  # (N-1, N)


def tile_lift(model: PanelModel, temperature: np.ndarray) -> np.ndarray:
    """Vertical ride-up (m) of every tile from wedge sliding, clamped at zero."""
    n = model.n
    alpha = model.material.cte_per_K
    dT = model.tile_mean(temperature) - model.T0
    w = model.tile_widths
    half_x = 0.5 * alpha * dT * w[None, :]  # half expansion across x
    half_y = 0.5 * alpha * dT * w[:, None]
    theta = model.tile_theta

    # interference and face angle on the four sides; the outer edges are rigid walls
    left, right = half_x.copy(), half_x.copy()
    left[:, 1:] += half_x[:, :-1]
    right[:, :-1] += half_x[:, 1:]
    low, high = half_y.copy(), half_y.copy()
    low[1:, :] += half_y[:-1, :]
    high[:-1, :] += half_y[1:, :]
    a_left, a_right, a_low, a_high = (theta.copy() for _ in range(4))
    if n > 1:
        a_left[:, 1:] = a_right[:, :-1] = model.theta_x
        a_low[1:, :] = a_high[:-1, :] = model.theta_y
    sides = (left, right, low, high)
    angles = (a_left, a_right, a_low, a_high)
    delta = np.mean(sides, axis=0)
    theta_mean = np.mean(angles, axis=0)
    return np.maximum(delta, 0.0) / np.tan(theta_mean)


def mechanics_outputs(model: PanelModel, state) -> MechanicsSnapshot:
    """Mechanical channels for a :class:`ThermalState` (or a bare temperature array)."""
    temperature = getattr(state, "temperature", state)
    m = model.material
    dT_node = temperature - model.T0
    sigma_node = constrained_stress(dT_node, m)
    elastic = float(np.sum(elastic_energy_density(sigma_node, m) * model.node_volume))

    lift = tile_lift(model, temperature)
    px, py = model.interface_pressures(temperature)
    nx = px * model.contact_area_x
    ny = py * model.contact_area_y
    friction = model.contact.friction_mu * float(nx.sum() + ny.sum())

    tile_mean_node = np.repeat(np.repeat(model.tile_mean(temperature), model.s, 0), model.s, 1)
    gradient_stress = constrained_stress(tile_mean_node - temperature, m)
    sf = float(np.min(drucker_prager_safety(gradient_stress, m)))
    return MechanicsSnapshot(float(lift.max()) * 1e3, elastic, friction, sf, lift, nx, ny)


def contact_work(model: PanelModel, before: MechanicsSnapshot, after: MechanicsSnapshot) -> float:
    """Frictional work (J) at tile interfaces between two snapshots.

    ``mu * N * |slip|`` with trapezoidal normal force and the relative ride-up
    of the two tiles measured along the inclined face.
    """
    mu = model.contact.friction_mu
    d = after.tile_lift_m - before.tile_lift_m
    slip_x = np.abs(d[:, :-1] - d[:, 1:]) / np.cos(model.theta_x)
    slip_y = np.abs(d[:-1, :] - d[1:, :]) / np.cos(model.theta_y)
    nx = 0.5 * (before.normal_force_x + after.normal_force_x)
    ny = 0.5 * (before.normal_force_y + after.normal_force_y)
    return mu * float(np.sum(nx * slip_x) + np.sum(ny * slip_y))
