"""Rician air-to-ground channel sampling.

The channel to every node is a complex scalar per slot (the per-antenna phase
lives in the steering vector, not here).  Small-scale fading is redrawn
independently per (node, slot) and has unit power for every Rician factor.
"""

from __future__ import annotations

import numpy as np

from .scenario import PURE_LOS_KAPPA, Scenario


def large_scale_gain(ref_gain: float, distance_m: float) -> float:
    """Squared-distance path gain relative to the 1 m reference."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return ref_gain / distance_m**2


def sample_channel(s: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Draw the (K+1, T) complex channel matrix; deterministic given the rng state.

    h[k, t] = sqrt(ref_gain / d_k^2) * (sqrt(kappa/(kappa+1))
                                        + sqrt(1/(kappa+1)) * g[k, t])
    with g ~ CN(0, 1) i.i.d.  kappa >= PURE_LOS_KAPPA collapses to the exact
    line-of-sight value sqrt(ref_gain)/d_k in every slot.
    """
    n, t = s.num_nodes, s.num_slots
    amp = np.sqrt(large_scale_gain(s.ref_gain, 1.0)) / s.distances()  # sqrt(h0)/d_k
    if s.rician_factor >= PURE_LOS_KAPPA:
        return np.repeat(amp[:, None], t, axis=1).astype(complex)
    draws = rng.standard_normal(size=(2, n, t))
    g = (draws[0] + 1j * draws[1]) / np.sqrt(2.0)
    los = np.sqrt(s.rician_factor / (s.rician_factor + 1.0))
    nlos = np.sqrt(1.0 / (s.rician_factor + 1.0))
    return amp[:, None] * (los + nlos * g)
