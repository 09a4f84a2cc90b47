"""Air density, thrust, propulsion power and the flight energy budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# quadratic fit of density (x1e-3 kg/m^3) in altitude (km), valid 18-32 km
DENSITY_FIT = (0.95162, -52.29356, 753.39927)
DENSITY_WINDOW = (18e3, 32e3)


def air_density(z):
    z = np.asarray(z, dtype=float)
    lo, hi = DENSITY_WINDOW
    if np.any(z < lo - 1e-6) or np.any(z > hi + 1e-6):
        raise ValueError(f"altitude outside the density-fit window [{lo:g}, {hi:g}] m")
    zk = z / 1000.0
    a, b, c = DENSITY_FIT
    rho = (a * zk ** 2 + b * zk + c) * 1e-3
    return float(rho) if rho.ndim == 0 else rho


def thrust(rho, V, aero, approximate: bool = False):
    parasitic = 0.5 * rho * V ** 2 * aero.S * aero.C_D0
    if approximate:
        return parasitic
    return parasitic + 2 * aero.induced_factor * aero.F_w ** 2 / (rho * aero.S * V ** 2)


def shf_power(rho, V, aero, approximate: bool = False):
    return thrust(rho, V, aero, approximate) * V / (aero.f_p * aero.f_e)


def scf_power(rho, V, aero, bank_angle: float, approximate: bool = False):
    return shf_power(rho, V, aero, approximate) / math.cos(bank_angle) ** 2


def propulsion_bound_coefficient(scenario) -> float:
    """c in P_SCF <= c * rho_h(z): the approximate thrust at V_max."""
    a, fl = scenario.aero, scenario.flight
    return fl.V_max ** 3 * a.S * a.C_D0 / (2 * math.cos(fl.bank_angle) ** 2 * a.f_p * a.f_e)


def energy_bound(z, scenario):
    """Per-slot energy upper bound (P_max + P_SCF(V_max, z)) * dt, convex in z."""
    return (scenario.power_max + propulsion_bound_coefficient(scenario) * air_density(z)) * scenario.dt


@dataclass
class EnergyLedger:
    per_slot: np.ndarray
    budget: float | None

    @property
    def cumulative(self) -> float:
        return float(np.sum(self.per_slot))

    @property
    def feasible(self) -> bool:
        return self.budget is None or self.cumulative <= self.budget * (1 + 1e-9)

    def to_dict(self) -> dict:
        return {"per_slot": self.per_slot.tolist(), "cumulative": self.cumulative,
                "budget": self.budget, "feasible": self.feasible}


def slot_speeds(trajectory, dt: float) -> np.ndarray:
    """Airspeed in slots 1..N from successive waypoint displacements."""
    dh = np.diff(trajectory.h, axis=0)
    dz = np.diff(trajectory.z)
    return np.sqrt(np.sum(dh ** 2, axis=1) + dz ** 2) / dt


def energy_ledger(trajectory, p_ave, scenario, approximate: bool = True,
                  speeds=None) -> EnergyLedger:
    """E[n] = (P_ave[n] + P_SCF[n]) dt for n = 1..N.

    ``speeds`` overrides the per-slot airspeed (defaults to the waypoint
    displacement rate).  The approximate thrust form is the default since the
    induced-drag term diverges as the ground speed goes to zero.
    """
    p_ave = np.asarray(p_ave, dtype=float)
    V = slot_speeds(trajectory, scenario.dt) if speeds is None else np.asarray(speeds, float)
    rho = air_density(trajectory.z[1:])
    prop = scf_power(rho, V, scenario.aero, scenario.flight.bank_angle, approximate)
    return EnergyLedger((p_ave + prop) * scenario.dt, scenario.e_start)
