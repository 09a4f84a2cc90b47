"""Sensing metrics: transmit beampattern gain and SAR imaging SNR."""

from __future__ import annotations

import math

import numpy as np

from .channel import distance, steering_vector


def check_hermitian(A: np.ndarray, psd: bool = False, atol: float = 1e-12) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > atol * scale:
        raise ValueError("matrix is not Hermitian")
    if psd and not is_psd(A):
        raise ValueError("matrix is not positive semidefinite")
    return A


def is_psd(A: np.ndarray, rtol: float = 1e-9) -> bool:
    A = 0.5 * (A + A.conj().T)
    tr = abs(float(np.real(np.trace(A))))
    return bool(np.linalg.eigvalsh(A).min() >= -rtol * max(tr, 1e-300))


def beampattern_gain(p, t, H: np.ndarray) -> float:
    """a^H H a towards ground point ``t``."""
    a = steering_vector(p, t, H.shape[0])
    return float(np.real(a.conj() @ H @ a))


def bp_constraint_ok(p, t, H: np.ndarray, gamma: float, rtol: float = 1e-7) -> bool:
    need = gamma * distance(p, t) ** 2
    return beampattern_gain(p, t, H) >= need * (1.0 - rtol)


def sar_snr_constant(sar, wavelength: float, obs_angle: float) -> float:
    """Everything in the SAR SNR except P_total / (z^3 V)."""
    num = (sar.G_t * sar.G_r * wavelength ** 3 * sar.sigma0 * sar.c * sar.tau_p * sar.PRF
           * math.sin(obs_angle) ** 2)
    den = 256 * math.pi ** 3 * sar.kappa * sar.T_o * sar.NF * sar.B_r * sar.L_tot
    return num / den


def sar_snr(z, V, P_total, sar, wavelength: float, obs_angle: float):
    return sar_snr_constant(sar, wavelength, obs_angle) * P_total / (np.asarray(z) ** 3 * V)


def snr_power_floor(scenario, z: float, V: float | None = None) -> float:
    """Smallest total transmit power meeting SNR_min at altitude ``z`` and speed ``V``."""
    if scenario.snr_min <= 0:
        return 0.0
    V = scenario.flight.V_max if V is None else V
    c0 = sar_snr_constant(scenario.sar, scenario.wavelength, scenario.flight.obs_angle)
    return scenario.snr_min * z ** 3 * V / c0
