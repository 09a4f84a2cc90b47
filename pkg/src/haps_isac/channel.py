"""Geometry, ULA steering vectors, free-space path gain and Rician channels."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Placement3D(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def h(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def distance(p, g) -> float:
    """Slant range between the platform at ``p`` and ground point ``g``."""
    return float(np.sqrt((p[0] - g[0]) ** 2 + (p[1] - g[1]) ** 2 + p[2] ** 2))


def aod_cosine(p, g) -> float:
    """cos(theta) = z / d for the vertically oriented array."""
    return p[2] / distance(p, g)


def steering_from_cosine(cos_theta, M: int) -> np.ndarray:
    m = np.arange(M)
    return np.exp(1j * np.pi * m * np.asarray(cos_theta)[..., None])


def steering_vector(p, g, M: int) -> np.ndarray:
    """Half-wavelength ULA response, first element fixed to 1."""
    return steering_from_cosine(aod_cosine(p, g), M)


def steering_matrix(p, points, M: int) -> np.ndarray:
    """Steering vectors towards every row of ``points`` (shape (P, 2)) -> (P, M)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.sqrt(np.sum((pts - np.asarray(p[:2], dtype=float)) ** 2, axis=1) + p[2] ** 2)
    return steering_from_cosine(p[2] / d, M)


def path_gain(d, ref_gain: float):
    """Inverse free-space path loss rho0 / d^2."""
    return ref_gain / np.asarray(d, dtype=float) ** 2


def nlos_component(seed: int, user: int, slot: int, M: int) -> np.ndarray:
    """Unit-variance CN(0, 1) entries keyed by (seed, user, slot).

    Philox is counter based, so the draw for one key does not depend on the
    order in which other keys are evaluated.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, user, slot])))
    return (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2.0)


def rician_channel(p, g, rician_K: float, M: int, ref_gain: float, seed: int = 0,
                   user: int = 0, slot: int = 0, los_only: bool = False) -> np.ndarray:
    a = steering_vector(p, g, M)
    amp = np.sqrt(ref_gain) / distance(p, g)
    if los_only or np.isinf(rician_K):
        return amp * a
    los = np.sqrt(rician_K / (rician_K + 1.0))
    nlos = np.sqrt(1.0 / (rician_K + 1.0))
    return amp * (los * a + nlos * nlos_component(seed, user, slot, M))


def user_channels(scenario, p, slot: int = 0, los_only: bool = False) -> np.ndarray:
    """Channel of every user at placement ``p`` -> (K, M).

    NLOS parts depend only on (seed, user, slot), so all placements evaluated
    for one slot see the same scattering realization.
    """
    return np.array([
        rician_channel(p, u, scenario.rician_K, scenario.M, scenario.ref_gain,
                       scenario.rng_seed, k, slot, los_only)
        for k, u in enumerate(scenario.users)
    ])
