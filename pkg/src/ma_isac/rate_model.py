"""Transmit power, per-node SINR and rate, and the sum-rate objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import array_model
from .scenario import Scenario

# slack allowed on the per-slot power budget when validating a solution
POWER_RTOL = 1e-6
# |W_k - w_k w_k^H| tolerance when rank-one vectors are attached
RANK_ONE_ATOL = 1e-8


@dataclass
class BeamformingSolution:
    """Per-slot information covariances W (T, K, M, M), sensing covariance
    S (T, M, M), and optionally the extracted rank-one beams w (T, K, M)."""

    W: np.ndarray
    S: np.ndarray
    w: np.ndarray | None = None

    @property
    def num_slots(self) -> int:
        return self.W.shape[0]

    @property
    def num_gns(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "BeamformingSolution":
        return BeamformingSolution(self.W.copy(), self.S.copy(),
                                   None if self.w is None else self.w.copy())


def transmit_power(sol: BeamformingSolution, t: int) -> float:
    """Total radiated power in slot t: sum_k tr(W_k) + tr(S), watts."""
    return float(np.trace(sol.S[t]).real + np.einsum("kmm->", sol.W[t]).real)


def steering_matrix(x: np.ndarray, s: Scenario) -> np.ndarray:
    """(K+1, M) stack of steering vectors for every node at positions x."""
    cos = s.cosines()
    return np.exp(2j * np.pi / s.wavelength_m * np.outer(cos, np.asarray(x, float)))


def sinr(k: int, t: int, h: np.ndarray, a_k: np.ndarray,
         sol: BeamformingSolution, noise_w: float) -> float:
    """SINR of communication node k (1-based, k <= K) in slot t.

    Numerator |h_k|^2 a^H W_k a; denominator collects the other users'
    beams, the sensing covariance, and receiver noise.
    """
    kk = k - 1
    if not 0 <= kk < sol.num_gns:
        raise IndexError(f"node index {k} outside 1..{sol.num_gns}")
    c = float(abs(h[kk, t]) ** 2)
    q = np.einsum("m,lmn,n->l", a_k.conj(), sol.W[t], a_k).real
    qs = float((a_k.conj() @ sol.S[t] @ a_k).real)
    num = c * q[kk]
    den = c * (q.sum() - q[kk] + qs) + noise_w
    return float(num / den)


def rate(k: int, t: int, h: np.ndarray, a_k: np.ndarray,
         sol: BeamformingSolution, noise_w: float) -> float:
    """Spectral efficiency log2(1 + SINR) of node k in slot t, bits/s/Hz."""
    return float(np.log2(1.0 + sinr(k, t, h, a_k, sol, noise_w)))


def rates_per_gn(h: np.ndarray, x: np.ndarray, sol: BeamformingSolution,
                 s: Scenario) -> np.ndarray:
    """(T, K) rate table for all communication nodes and slots."""
    a = steering_matrix(x, s)[: s.num_gns]                      # (K, M)
    c = np.abs(h[: s.num_gns]) ** 2                              # (K, T)
    q = np.einsum("km,tlmn,kn->tkl", a.conj(), sol.W, a).real    # (T, K, K)
    qs = np.einsum("km,tmn,kn->tk", a.conj(), sol.S, a).real     # (T, K)
    sig = np.einsum("tkk->tk", q)
    num = c.T * sig
    den = c.T * (q.sum(axis=2) - sig + qs) + s.noise_power_w
    return np.log2(1.0 + num / den)


def total_rate(h: np.ndarray, x: np.ndarray, sol: BeamformingSolution,
               s: Scenario) -> float:
    """Sum of all per-node rates over every slot (the optimization objective)."""
    return float(rates_per_gn(h, x, sol, s).sum())


def validate_solution(sol: BeamformingSolution, s: Scenario) -> None:
    """Raise when the power budget, PSD-ness, or attached rank-one beams are off."""
    budget = s.max_power_w * (1.0 + POWER_RTOL)
    for t in range(sol.num_slots):
        p = transmit_power(sol, t)
        if p > budget:
            raise ValueError(f"slot {t}: transmit power {p} exceeds budget {s.max_power_w}")
        mats = [sol.S[t]] + [sol.W[t, k] for k in range(sol.num_gns)]
        for m in mats:
            hm = array_model.hermitian_part(m)
            lam = np.linalg.eigvalsh(hm)
            if lam[0] < -1e-9 * max(1.0, float(lam[-1])):
                raise ValueError(f"slot {t}: covariance not PSD (min eig {lam[0]})")
        if sol.w is not None:
            for k in range(sol.num_gns):
                outer = np.outer(sol.w[t, k], sol.w[t, k].conj())
                if float(np.max(np.abs(outer - sol.W[t, k]))) > RANK_ONE_ATOL:
                    raise ValueError(f"slot {t}, node {k + 1}: w w^H does not match W")
