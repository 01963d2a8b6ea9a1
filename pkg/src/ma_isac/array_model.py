"""Steering vectors, antenna-position feasibility and repair, beampattern gain.

Antenna positions are plain float arrays of length M on the array axis,
stored ascending; all functions here are pure.
"""

from __future__ import annotations

import numpy as np

from . import sdp_solver

# relative tolerance accepting solver-accumulated asymmetry before symmetrizing
HERMITIAN_RTOL = 1e-9
# eigenvalues above RANK_RTOL * lambda_max count toward the sensing rank
RANK_RTOL = 1e-8


def steering_vector(x: np.ndarray, cos_theta: float, wavelength_m: float) -> np.ndarray:
    """Per-antenna phase response exp(j 2 pi / lambda * x_m * cos(theta))."""
    if wavelength_m <= 0:
        raise ValueError("wavelength must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(2j * np.pi / wavelength_m * x * cos_theta)


def is_feasible(x: np.ndarray, aperture_m: float, min_spacing_m: float) -> bool:
    """True iff every coordinate lies in [0, L] and all pairwise gaps reach d_min.

    Float-tolerant: repair places antennas exactly d_min apart, so equality
    must survive rounding.
    """
    x = np.asarray(x, dtype=float)
    atol = 1e-9 * max(1.0, aperture_m)
    if np.any(x < -atol) or np.any(x > aperture_m + atol):
        return False
    if len(x) < 2:
        return True
    xs = np.sort(x)
    return bool(np.all(np.diff(xs) >= min_spacing_m - atol))


def repair_spacing(x: np.ndarray, min_spacing_m: float, aperture_m: float) -> np.ndarray:
    """Restore the spacing constraint: sort, then sweep left to right pushing
    each antenna to at least d_min past its neighbor.  If the sweep overflows
    the aperture, a backward sweep anchored at the upper edge pulls the tail
    back in without disturbing spacings that were already fine (a plain
    whole-vector shift can push the leftmost antenna negative even when a
    feasible repair exists)."""
    x = np.sort(np.clip(np.asarray(x, dtype=float), 0.0, aperture_m))
    for m in range(1, len(x)):
        if x[m] < x[m - 1] + min_spacing_m:
            x[m] = x[m - 1] + min_spacing_m
    if x[-1] > aperture_m:
        x[-1] = aperture_m
        for m in range(len(x) - 2, -1, -1):
            if x[m] > x[m + 1] - min_spacing_m:
                x[m] = x[m + 1] - min_spacing_m
        atol = 1e-9 * max(1.0, aperture_m)
        if x[0] < -atol:
            raise ValueError(
                f"cannot fit {len(x)} antennas with spacing {min_spacing_m} in aperture {aperture_m}")
        x[0] = max(x[0], 0.0)
    return x


def hermitian_part(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Check near-Hermitian within tolerance, then symmetrize."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.conj().T))) > HERMITIAN_RTOL * scale:
        raise ValueError(f"{name}: not Hermitian within tolerance")
    return (a + a.conj().T) / 2.0


def beampattern_gain(x: np.ndarray, w_set, s_cov: np.ndarray,
                     cos_target: float, wavelength_m: float) -> float:
    """Transmit power radiated toward cos(theta): a^H (sum_k W_k + S) a, watts."""
    a = steering_vector(x, cos_target, wavelength_m)
    m = len(a)
    total = hermitian_part(s_cov, "S")
    if total.shape != (m, m):
        raise ValueError(f"S: expected shape {(m, m)}, got {total.shape}")
    for i, w in enumerate(w_set):
        w = hermitian_part(w, f"W[{i}]")
        if w.shape != (m, m):
            raise ValueError(f"W[{i}]: expected shape {(m, m)}, got {w.shape}")
        total = total + w
    val = a.conj() @ total @ a
    return float(val.real)


def extract_sensing_beams(s_cov: np.ndarray):
    """Eigenpairs of the sensing covariance above the rank tolerance,
    strongest first: [(power_w, unit beam vector), ...]."""
    s_cov = hermitian_part(s_cov, "S")
    vals, vecs = sdp_solver.hermitian_eig(s_cov)
    lam_max = float(vals[-1]) if len(vals) else 0.0
    if lam_max <= 0:
        return []
    out = []
    for i in range(len(vals) - 1, -1, -1):
        if vals[i] > RANK_RTOL * lam_max:
            out.append((float(vals[i]), vecs[:, i]))
    return out
