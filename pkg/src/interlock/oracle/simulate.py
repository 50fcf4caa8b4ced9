"""Full thermal-shock run of one panel and its sampled response channels."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..design_space import PanelDesign
from .config import ContactSpec, LoadProfile, MaterialSpec
from .mechanics import contact_work, mechanics_outputs
from .panel import PanelModel, ThermalState

CHANNELS = (
    "safety_factor",
    "friction_force",
    "internal_energy",
    "oop_deformation",
    "edge_temperature",
    "heat_rate",
    "contact_energy",
    "elastic_energy",
    "input_power",
)
UNITS = {
    "safety_factor": "-",
    "friction_force": "N",
    "internal_energy": "J",
    "oop_deformation": "mm",
    "edge_temperature": "degC",
    "heat_rate": "W",
    "contact_energy": "J",
    "elastic_energy": "J",
    "input_power": "W",
}


@dataclass
class ResponseSeries:
    """Sampled response of one run; ``values`` has one column per entry of ``CHANNELS``."""

    times: np.ndarray
    values: np.ndarray
    fields: list[np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), len(CHANNELS)):
            raise ValueError(f"values must have shape ({len(self.times)}, {len(CHANNELS)})")

    def __len__(self):
        return len(self.times)

    def channel(self, name: str) -> np.ndarray:
        return self.values[:, CHANNELS.index(name)]

    def window(self, t_min: float, t_max: float) -> "ResponseSeries":
        keep = (self.times >= t_min) & (self.times <= t_max)
        return ResponseSeries(self.times[keep], self.values[keep])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("t",) + CHANNELS)
            for t, row in zip(self.times, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "ResponseSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != ("t",) + CHANNELS:
                raise ValueError(f"unexpected response header {header}")
            data = np.array([[float(v) for v in row] for row in reader])
        data = data.reshape(-1, len(CHANNELS) + 1)
        return cls(data[:, 0], data[:, 1:])


def simulate(
    design: PanelDesign,
    material: MaterialSpec = MaterialSpec(),
    contact: ContactSpec = ContactSpec(),
    profile: LoadProfile = LoadProfile(),
    sample_step: float = 1.0,
    nodes_per_tile: int = 3,
    dt: float | None = None,
    keep_fields: bool = False,
) -> ResponseSeries:
    """Run the thermal shock from ``t = 0`` to ``profile.t_end_s``.

    Channels are sampled every ``sample_step`` seconds.  ``input_power`` and
    ``heat_rate`` are averages over the preceding sample interval, so their
    running sum times ``sample_step`` reproduces the change of internal
    energy.  With ``keep_fields`` the node temperature arrays (K) at every
    sample are attached to the result.
    """
    model = PanelModel(design, material, contact, profile, nodes_per_tile=nodes_per_tile)
    if dt is None:
        dt = model.default_dt(sample_step)
    substeps = int(round(sample_step / dt))
    if substeps < 1 or not np.isclose(substeps * dt, sample_step, rtol=1e-12, atol=0.0):
        raise ValueError(f"dt={dt} must divide the sample step {sample_step}")
    n_samples = int(round(profile.t_end_s / sample_step)) + 1

    state = model.initial_state()
    values = np.empty((n_samples, len(CHANNELS)))
    fields = [state.temperature] if keep_fields else None
    snap = mechanics_outputs(model, state)
    contact_energy = 0.0
    values[0] = _row(model, state, snap, 0.0, 0.0, contact_energy)

    for k in range(1, n_samples):
        injected = lost = 0.0
        for i in range(substeps):
            # pin the clock to the sample grid to keep load switching exact
            t_prev = (k - 1) * sample_step + i * dt
            state, flux = model.step(ThermalState(state.temperature, t_prev), dt, check=False)
            injected += flux.input_power * dt
            lost += flux.loss_power * dt
        state = ThermalState(state.temperature, k * sample_step)
        new_snap = mechanics_outputs(model, state)
        contact_energy += contact_work(model, snap, new_snap)
        snap = new_snap
        p_in = injected / sample_step
        values[k] = _row(model, state, snap, p_in, p_in - lost / sample_step, contact_energy)
        if keep_fields:
            fields.append(state.temperature)
        if not np.all(np.isfinite(values[k])):
            raise FloatingPointError(f"non-finite response at t={k * sample_step} s")
    times = np.arange(n_samples) * sample_step
    return ResponseSeries(times, values, fields)


def _row(model, state, snap, input_power, heat_rate, contact_energy):
    out = {
        "safety_factor": snap.safety_factor,
        "friction_force": snap.friction_force_N,
        "internal_energy": model.internal_energy(state),
        "oop_deformation": snap.oop_deformation_mm,
        "edge_temperature": model.edge_temperature_C(state),
        "heat_rate": heat_rate,
        "contact_energy": contact_energy,
        "elastic_energy": snap.elastic_energy_J,
        "input_power": input_power,
    }
    return [out[name] for name in CHANNELS]
