"""Per-user SINR, achievable rate and (average) weighted sum-rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BeamformingSolution:
    """One slot's transmit covariances.

    W  : (K, M, M) per-user covariances (w w^H once rank-one vectors exist)
    Rs : (M, M) dedicated sensing covariance
    w  : optional (K, M) rank-one beamformers
    """

    W: np.ndarray
    Rs: np.ndarray
    w: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return self.Rs.shape[0]

    @property
    def power(self) -> float:
        return float(np.real(np.trace(self.W, axis1=1, axis2=2).sum() + np.trace(self.Rs)))

    @property
    def total_covariance(self) -> np.ndarray:
        return self.W.sum(axis=0) + self.Rs

    @classmethod
    def from_vectors(cls, w: np.ndarray, Rs: np.ndarray, **meta) -> "BeamformingSolution":
        W = np.einsum("ki,kj->kij", w, w.conj())
        return cls(W, Rs, w, dict(meta))

    def to_dict(self) -> dict:
        def cmat(A):
            return np.stack([A.real, A.imag], axis=-1).tolist()
        out = {"W": cmat(self.W), "Rs": cmat(self.Rs), "power": self.power}
        if self.w is not None:
            out["w"] = cmat(self.w)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "BeamformingSolution":
        def cmat(x):
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]
        return cls(cmat(d["W"]), cmat(d["Rs"]), cmat(d["w"]) if "w" in d else None)


def received_powers(channels: np.ndarray, solution: BeamformingSolution):
    """(signal[k], interference[k]) with interference = other users + sensing."""
    G = np.asarray(channels)
    q = np.real(np.einsum("km,pmn,kn->kp", G.conj(), solution.W, G))
    r = np.real(np.einsum("km,mn,kn->k", G.conj(), solution.Rs, G))
    signal = np.diag(q).copy()
    interference = q.sum(axis=1) - signal + r
    return signal, interference


def sinr(k: int, channels, solution: BeamformingSolution, noise) -> float:
    signal, interference = received_powers(channels, solution)
    return float(max(signal[k], 0.0) / (interference[k] + np.asarray(noise)[k]))


def sinr_all(channels, solution, noise) -> np.ndarray:
    signal, interference = received_powers(channels, solution)
    return np.maximum(signal, 0.0) / (interference + np.asarray(noise))


def rate(k: int, channels, solution, noise) -> float:
    return float(np.log2(1.0 + sinr(k, channels, solution, noise)))


def rates(channels, solution, noise) -> np.ndarray:
    return np.log2(1.0 + sinr_all(channels, solution, noise))


def weighted_sum_rate(solutions, channels, beta, noise) -> float:
    """(1/N) sum_n sum_k beta_k R_k[n].

    ``solutions`` and ``channels`` are per-slot sequences; a single
    solution/channel matrix is treated as one slot.
    """
    if isinstance(solutions, BeamformingSolution):
        solutions, channels = [solutions], [channels]
    beta = np.asarray(beta, dtype=float)
    total = sum(float(beta @ rates(G, s, noise)) for s, G in zip(solutions, channels))
    return total / len(solutions)
