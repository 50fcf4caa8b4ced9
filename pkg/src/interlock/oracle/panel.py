"""Lumped tile-network heat conduction model of an interlocked panel.

Every tile is discretised into an ``s x s`` block of nodes spanning the full
tile thickness, so the panel is a tensor-product grid of ``N*s x N*s`` nodes
with non-uniform spacing.  Nodes inside a tile exchange heat by conduction;
neighbouring tiles exchange heat through their inclined contact faces, in
series with the two half-cells, with a pressure-dependent contact
conductance.  Top, bottom and outer edge faces lose heat by convection and
radiation.  While the thermal shock is applied the heated disc at the panel
centre is tied to the load temperature through a stiff surface conductance
integrated implicitly, which pins covered nodes to the prescribed value
without restricting the time step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..design_space import PANEL_SIZE_MM, PanelDesign, column_widths
from .config import ContactSpec, LoadProfile, MaterialSpec, load_temperature
from .contact import contact_conductance

STEFAN_BOLTZMANN = 5.670374419e-8
KELVIN = 273.15


class StabilityError(RuntimeError):
    """Explicit time step exceeds the stability bound of the scheme."""

    def __init__(self, dt, dt_max):
        super().__init__(f"time step {dt:.6g} s exceeds the explicit stability limit; max admissible dt = {dt_max:.6g} s")
        self.dt = dt
        self.dt_max = dt_max


@dataclass(frozen=True)
class ThermalState:
    """Node temperatures in kelvin, shape ``(N*s, N*s)``, at time ``time`` (s)."""

    temperature: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if np.any(self.temperature < 0):
            raise ValueError("temperatures must be non-negative kelvin")


@dataclass(frozen=True)
class StepFluxes:
    """Total heater input and surface loss (W) during one step."""

    input_power: float
    loss_power: float


def _disc_coverage(edges_x_m, edges_y_m, radius_m, centre_m, samples=16):
    """Fraction of each node cell lying inside the heated disc (midpoint sampling)."""
    u = (np.arange(samples) + 0.5) / samples

    def sample_points(edges):
        lo, hi = edges[:-1], edges[1:]
        return lo[:, None] + (hi - lo)[:, None] * u[None, :]

    px = sample_points(edges_x_m) - centre_m
    py = sample_points(edges_y_m) - centre_m
    inside = (py[:, None, :, None] ** 2 + px[None, :, None, :] ** 2) <= radius_m**2
    return inside.mean(axis=(2, 3))


class PanelModel:
    """Geometry, material constants and conductance network of one panel.

    Parameters
    ----------
    design : PanelDesign
    material, contact, profile : parameter records
    nodes_per_tile : int
        Nodes along each tile edge (``s``); the mesh density knob.
    heater_conductance : float
        Surface conductance (W m^-2 K^-1) tying the heated disc to the load
        temperature.  Large values reproduce a prescribed temperature.
    """

    def __init__(
        self,
        design: PanelDesign,
        material: MaterialSpec = MaterialSpec(),
        contact: ContactSpec = ContactSpec(),
        profile: LoadProfile = LoadProfile(),
        nodes_per_tile: int = 3,
        heater_conductance: float = 1e5,
        panel_size_mm: float = PANEL_SIZE_MM,
    ):
        if nodes_per_tile < 1:
            raise ValueError("nodes_per_tile must be >= 1")
        self.design = design
        self.material = material
        self.contact = contact
        self.profile = profile
        self.s = int(nodes_per_tile)
        self.n = design.grid_size
        self.heater_conductance = float(heater_conductance)
        self.T_ambient = profile.T_ambient_C + KELVIN
        self.T0 = self.T_ambient

        n, s = self.n, self.s
        K = material.conductivity_W_mK
        self.H = design.thickness_mm * 1e-3
        self.tile_widths = column_widths(design, panel_size_mm) * 1e-3
        self.dx = np.repeat(self.tile_widths / s, s)  # node pitch, same along x and y
        edges = np.concatenate([[0.0], np.cumsum(self.dx)])
        self.node_volume = self.dx[:, None] * self.dx[None, :] * self.H
        self.capacity = material.volumetric_heat_capacity * self.node_volume

        theta = np.radians(design.tile_angles())
        self.tile_theta = theta
        # interface angle: mean face angle of the two touching tiles
        self.theta_x = 0.5 * (theta[:, :-1] + theta[:, 1:])  # (n, n-1) between columns
        self.theta_y = 0.5 * (theta[:-1, :] + theta[1:, :])  # (n-1, n) between rows
        self.contact_area_x = self.tile_widths[:, None] * self.H / np.cos(self.theta_x)
        self.contact_area_y = self.tile_widths[None, :] * self.H / np.cos(self.theta_y)

        # conduction between horizontally adjacent nodes, shape (Ns, Ns-1)
        pitch = self.dx
        gx = K * pitch[:, None] * self.H / (0.5 * (pitch[None, :-1] + pitch[None, 1:]))
        gy = K * pitch[None, :] * self.H / (0.5 * (pitch[:-1, None] + pitch[1:, None]))
        self.iface_cols = np.arange(1, n) * s - 1  # node column left of each interface
        self.G_x = gx
        self.G_y = gy
        # half-cell resistances on both sides of every interface
        rows_pitch = pitch[:, None]
        self._half_x = (
            0.5 * pitch[None, self.iface_cols] / (K * rows_pitch * self.H)
            + 0.5 * pitch[None, self.iface_cols + 1] / (K * rows_pitch * self.H)
        )  # (Ns, n-1)
        self._half_y = self._half_x.T.copy()  # symmetric tensor grid
        # per-node-row share of each interface's contact area
        self._node_area_x = rows_pitch * self.H / np.cos(np.repeat(self.theta_x, s, axis=0))  # (Ns, n-1)
        self._node_area_y = pitch[None, :] * self.H / np.cos(np.repeat(self.theta_y, s, axis=1))  # (n-1, Ns)

        # free surfaces: top + bottom everywhere, plus the outer panel edges
        area = 2.0 * self.dx[:, None] * self.dx[None, :]
        area[:, 0] += self.dx * self.H
        area[:, -1] += self.dx * self.H
        area[0, :] += self.dx * self.H
        area[-1, :] += self.dx * self.H
        self.loss_area = area
        centre = 0.5 * panel_size_mm * 1e-3
        coverage = _disc_coverage(edges, edges, profile.spot_radius_mm * 1e-3, centre)
        self.heated_area = coverage * self.dx[:, None] * self.dx[None, :]
        self.loss_area_loaded = self.loss_area - self.heated_area

        edge = np.zeros(self.capacity.shape, dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        self.edge_mask = edge

    # ------------------------------------------------------------------ state
    @property
    def shape(self) -> tuple[int, int]:
        return self.capacity.shape

    def initial_state(self) -> ThermalState:
        return ThermalState(np.full(self.shape, self.T0), 0.0)

    def tile_mean(self, field: np.ndarray) -> np.ndarray:
        n, s = self.n, self.s
        return field.reshape(n, s, n, s).mean(axis=(1, 3))

    def tile_stress(self, temperature: np.ndarray) -> np.ndarray:
        """Constrained equibiaxial thermal stress magnitude (Pa) of every tile."""
        m = self.material
        dT = self.tile_mean(temperature) - self.T0
        return m.youngs_Pa * m.cte_per_K * dT / (1.0 - m.poisson)

    def interface_pressures(self, temperature: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Normal contact pressure (Pa) on x- and y-interfaces: mean tile stress times sin(theta)."""
        sig = self.tile_stress(temperature)
        px = np.maximum(0.5 * (sig[:, :-1] + sig[:, 1:]), 0.0) * np.sin(self.theta_x)
        py = np.maximum(0.5 * (sig[:-1, :] + sig[1:, :]), 0.0) * np.sin(self.theta_y)
        return px, py

    def _interface_conductance(self, px, py):
        s = self.s
        hx = np.repeat(contact_conductance(px, self.contact, self.material), s, axis=0)  # (Ns, n-1)
        hy = np.repeat(contact_conductance(py, self.contact, self.material), s, axis=1)  # (n-1, Ns)
        gx = 1.0 / (self._half_x + 1.0 / (hx * self._node_area_x))
        gy = 1.0 / (self._half_y + 1.0 / (hy * self._node_area_y))
        return gx, gy

    def conductances(self, temperature: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Node-to-node conductances (W/K) for the current contact pressures."""
        gx, gy = self.G_x.copy(), self.G_y.copy()
        if self.n > 1:
            ix, iy = self._interface_conductance(*self.interface_pressures(temperature))
            gx[:, self.iface_cols] = ix
            gy[self.iface_cols, :] = iy
        return gx, gy

    # -------------------------------------------------------------- stability
    def _dt_bound(self, gx, gy, T_max):
        total = np.zeros(self.shape)
        total[:, :-1] += gx
        total[:, 1:] += gx
        total[:-1, :] += gy
        total[1:, :] += gy
        m = self.material
        h_lin = m.convection_W_m2K + 4.0 * m.emissivity * STEFAN_BOLTZMANN * T_max**3
        total += h_lin * self.loss_area
        return float(np.min(self.capacity / total))

    def max_stable_dt(self, state: ThermalState | None = None) -> float:
        """Explicit stability limit.

        Without a state the bound covers the worst case of the whole run:
        peak load temperature everywhere and the corresponding contact pressure.
        """
        if state is not None:
            gx, gy = self.conductances(state.temperature)
            return self._dt_bound(gx, gy, float(state.temperature.max()))
        T_max = max(self.profile.T_peak_C, self.profile.T_ambient_C) + KELVIN
        hot = np.full(self.shape, T_max)
        gx, gy = self.conductances(hot)
        return self._dt_bound(gx, gy, T_max)

    def default_dt(self, sample_step: float = 1.0, safety: float = 0.5) -> float:
        """Largest step below ``safety`` x stability bound that divides ``sample_step``."""
        limit = safety * self.max_stable_dt()
        return sample_step / math.ceil(sample_step / limit)

    # ------------------------------------------------------------------- step
    def step(self, state: ThermalState, dt: float, check: bool = True) -> tuple[ThermalState, StepFluxes]:
        T = state.temperature
        gx, gy = self.conductances(T)
        if dt <= 0:
            raise ValueError("dt must be positive")
        if check:
            dt_max = self._dt_bound(gx, gy, float(T.max()))
            if dt > dt_max:
                raise StabilityError(dt, dt_max)

        net = np.zeros_like(T)
        fx = gx * (T[:, 1:] - T[:, :-1])
        net[:, :-1] += fx
        net[:, 1:] -= fx
        fy = gy * (T[1:, :] - T[:-1, :])
        net[:-1, :] += fy
        net[1:, :] -= fy

        t_new = state.time + dt
        T_load = load_temperature(t_new, self.profile)
        area = self.loss_area if T_load is None else self.loss_area_loaded
        m = self.material
        Ta = self.T_ambient
        loss = area * (m.convection_W_m2K * (T - Ta) + m.emissivity * STEFAN_BOLTZMANN * (T**4 - Ta**4))

        T_star = T + dt * (net - loss) / self.capacity
        injected = 0.0
        if T_load is None:
            T_new = T_star
        else:
            g = self.heater_conductance * self.heated_area * dt
            T_new = T_star + g / (self.capacity + g) * ((T_load + KELVIN) - T_star)
            injected = float(np.sum(self.capacity * (T_new - T_star))) / dt
        return ThermalState(T_new, t_new), StepFluxes(injected, float(loss.sum()))

    def internal_energy(self, state: ThermalState) -> float:
        return float(np.sum(self.capacity * (state.temperature - self.T0)))

    def edge_temperature_C(self, state: ThermalState) -> float:
        return float(state.temperature[self.edge_mask].max()) - KELVIN


def step_thermal(state: ThermalState, dt: float, model: PanelModel) -> ThermalState:
    """Advance ``state`` by one explicit step of ``dt`` seconds."""
    return model.step(state, dt)[0]
