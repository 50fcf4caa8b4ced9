"""Thermal contact conductance between pressed tile faces."""
from __future__ import annotations

import numpy as np

from .config import ContactSpec, MaterialSpec

# reference roughness of the Vickers size-index correlation
_SIGMA_REF_M = 1e-6


def microhardness_Pa(contact: ContactSpec) -> float:
    """Vickers microhardness ``c1 * (1.62 sigma' / m) ** c2`` with sigma' in micrometres."""
    sigma_rel = contact.asperity_height_m / _SIGMA_REF_M
    return contact.vickers_c1_GPa * 1e9 * (1.62 * sigma_rel / contact.asperity_slope) ** contact.vickers_c2


def constriction_conductance(pressure_Pa, contact: ContactSpec, material: MaterialSpec):
    """Cooper-Mikic-Yovanovich constriction conductance, W m^-2 K^-1.

    ``h_c = 1.25 K (m / sigma) (P / H_c) ** 0.95``; both faces are the same
    ceramic so the harmonic-mean conductivity is just ``K``.
    """
    p = np.asarray(pressure_Pa, dtype=float)
    if np.any(p < 0):
        raise ValueError("contact pressure must be non-negative")
    scale = 1.25 * material.conductivity_W_mK * contact.asperity_slope / contact.asperity_height_m
    return scale * (p / microhardness_Pa(contact)) ** 0.95


def contact_conductance(pressure_Pa, contact: ContactSpec = ContactSpec(), material: MaterialSpec = MaterialSpec()):
    """Total interface conductance: gap term plus constriction term."""
    h = contact.gap_conductance_W_m2K + constriction_conductance(pressure_Pa, contact, material)
    return float(h) if np.ndim(h) == 0 else h
