"""Joint information/sensing covariance optimization.

Outer loop: successive convex approximation on the sum-rate objective.  Each
round linearizes the interference-plus-sensing log term at the current
iterate, solves the resulting concave per-slot subproblem over PSD
covariances (power budget + beampattern floor), and keeps the candidate only
if the true objective improved.  A closed-form rank-one reconstruction is
applied once at exit; it preserves every per-node rate, the radiated power,
and the beampattern exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rate_model, sdp_solver
from .errors import InfeasibleProblemError
from .rate_model import BeamformingSolution
from .scenario import Scenario
from .sdp_solver import LN2, AffineExpression, ConicProblem

SCA_MAX_ITER = 20
SCA_TOL = 1e-4          # bits/s/Hz
# convex mix toward the interior (Slater) point so barrier starts are strict
INTERIOR_MIX = 1e-4


@dataclass
class ScaState:
    """Expansion point of one SCA round."""

    iteration: int
    W: np.ndarray          # (T, K, M, M)
    S: np.ndarray          # (T, M, M)
    objective: float       # true sum rate at the expansion point
    lin: np.ndarray        # (T, K, M, M) linearization matrices
    denom: np.ndarray      # (T, K) interference-plus-sensing-plus-noise values


def true_rate_matrix_form(k: int, w_slot: np.ndarray, s_slot: np.ndarray,
                          h_k: complex, a_k: np.ndarray, noise_w: float) -> float:
    """Rate of node k (1-based) from the trace form: log2(signal-plus-
    interference total) minus log2(interference-plus-sensing total)."""
    c = abs(h_k) ** 2
    q = np.einsum("m,lmn,n->l", a_k.conj(), w_slot, a_k).real
    qs = float((a_k.conj() @ s_slot @ a_k).real)
    full = c * (q.sum() + qs) + noise_w
    rest = full - c * q[k - 1]
    val = float(np.log2(full) - np.log2(rest))
    if not np.isfinite(val):
        raise FloatingPointError("non-finite rate; check that the noise power is positive")
    return val


def linearization(k: int, w_slot: np.ndarray, s_slot: np.ndarray,
                  h_k: complex, a_k: np.ndarray, noise_w: float) -> np.ndarray:
    """Gradient matrix of the interference log term at the expansion point:
    |h_k|^2 a_k a_k^H / (ln2 * (interference + sensing + noise))."""
    c = abs(h_k) ** 2
    q = np.einsum("m,lmn,n->l", a_k.conj(), w_slot, a_k).real
    qs = float((a_k.conj() @ s_slot @ a_k).real)
    denom = c * (q.sum() - q[k - 1] + qs) + noise_w
    return c * np.outer(a_k, a_k.conj()) / (LN2 * denom)


def lower_bound_rate(k: int, w_slot: np.ndarray, s_slot: np.ndarray,
                     h_k: complex, a_k: np.ndarray, noise_w: float,
                     exp_w: np.ndarray, exp_s: np.ndarray) -> float:
    """Concave global lower bound on the node-k rate, tight at the expansion
    point (exp_w, exp_s)."""
    c = abs(h_k) ** 2
    q = np.einsum("m,lmn,n->l", a_k.conj(), w_slot, a_k).real
    qs = float((a_k.conj() @ s_slot @ a_k).real)
    full = c * (q.sum() + qs) + noise_w

    qi = np.einsum("m,lmn,n->l", a_k.conj(), exp_w, a_k).real
    qsi = float((a_k.conj() @ exp_s @ a_k).real)
    denom_i = c * (qi.sum() - qi[k - 1] + qsi) + noise_w

    # tr(L (X - X_i)) collapses to scaled quadratic-form differences
    others = np.arange(len(q)) != (k - 1)
    delta = float(q[others].sum() - qi[others].sum() + qs - qsi)
    return float(np.log2(full) - np.log2(denom_i) - c * delta / (LN2 * denom_i))


def make_state(sol: BeamformingSolution, h: np.ndarray, steering: np.ndarray,
               s: Scenario, iteration: int = 0) -> ScaState:
    """Build the SCA expansion state (objective, denominators, gradients)."""
    a = steering[: s.num_gns]
    c = np.abs(h[: s.num_gns]) ** 2                              # (K, T)
    q = np.einsum("km,tlmn,kn->tkl", a.conj(), sol.W, a).real    # (T, K, K)
    qs = np.einsum("km,tmn,kn->tk", a.conj(), sol.S, a).real
    sig = np.einsum("tkk->tk", q)
    denom = c.T * (q.sum(axis=2) - sig + qs) + s.noise_power_w   # (T, K)
    objective = float(np.log2(1.0 + c.T * sig / denom).sum())
    outer = np.einsum("km,kn->kmn", a, a.conj())                 # (K, M, M)
    lin = (c.T / (LN2 * denom))[:, :, None, None] * outer[None, :, :, :]
    return ScaState(iteration=iteration, W=sol.W.copy(), S=sol.S.copy(),
                    objective=objective, lin=lin, denom=denom)


# ---------------------------------------------------------------------------
# feasible starting points
# ---------------------------------------------------------------------------

def _steered_split(s: Scenario, a_target: np.ndarray, total_w: float):
    """Power split (info_w, sensing covariance direction) meeting the
    beampattern floor with a small margin, or None if none of the ladder
    configurations reaches it."""
    m = s.num_antennas
    floor = s.beampattern_floor_w
    target = floor * 1.001 if floor > 0 else 0.0
    u = a_target / np.sqrt(m)
    uu = np.outer(u, u.conj())
    iso = np.eye(m) / m
    for info_frac in (0.5, 0.1, 0.02):
        pw = info_frac * total_w
        ps = total_w - pw
        # gain = pw + ps * (rho * (M - 1) + 1); pick the smallest rho that works
        if m > 1:
            rho = ((target - pw) / ps - 1.0) / (m - 1)
        else:
            rho = 0.0
        rho = min(max(rho, 0.0), 1.0)
        gain = pw + ps * (rho * (m - 1) + 1.0)
        if gain >= target:
            s_dir = rho * uu + (1.0 - rho) * iso
            return pw, ps * s_dir
    return None


def initial_solution(x: np.ndarray, s: Scenario) -> BeamformingSolution:
    """Default feasible starting covariances: half the budget spread evenly
    over the information beams, half in sensing; the sensing part is steered
    toward the target when the beampattern floor demands it."""
    k, m, t = s.num_gns, s.num_antennas, s.num_slots
    p = s.max_power_w
    a_t = rate_model.steering_matrix(x, s)[s.num_gns]
    if s.beampattern_floor_w > p * m:
        raise InfeasibleProblemError(
            f"beampattern floor {s.beampattern_floor_w} W exceeds the gain limit "
            f"P_max*M = {p * m} W")
    split = _steered_split(s, a_t, p)
    if split is None:
        raise InfeasibleProblemError(
            f"beampattern floor {s.beampattern_floor_w} W is too close to the "
            f"gain limit {p * m} W to start from")
    pw, s_cov = split
    w0 = np.broadcast_to(pw / (k * m) * np.eye(m), (t, k, m, m)).astype(complex).copy()
    s0 = np.broadcast_to(s_cov, (t, m, m)).astype(complex).copy()
    return BeamformingSolution(W=w0, S=s0)


def _slater_slot(s: Scenario, a_target: np.ndarray):
    """Strictly interior per-slot point: 90% of the budget, floor met with margin."""
    split = _steered_split(s, a_target, 0.9 * s.max_power_w)
    if split is None:
        raise InfeasibleProblemError(
            f"beampattern floor {s.beampattern_floor_w} W leaves no strict interior "
            f"(gain limit {s.max_power_w * s.num_antennas} W)")
    pw, s_cov = split
    k, m = s.num_gns, s.num_antennas
    w = np.broadcast_to(pw / (k * m) * np.eye(m), (k, m, m)).astype(complex).copy()
    return w, s_cov.astype(complex)


# ---------------------------------------------------------------------------
# the per-slot concave subproblem
# ---------------------------------------------------------------------------

def _slot_problem(state: ScaState, t: int, h: np.ndarray, steering: np.ndarray,
                  s: Scenario) -> ConicProblem:
    k, m = s.num_gns, s.num_antennas
    n = k + 1  # K information covariances plus the sensing covariance
    a = steering[:k]
    c = np.abs(h[:k, t]) ** 2
    outer = np.einsum("km,kn->kmn", a, a.conj())

    log_terms = []
    for i in range(k):
        coeff = np.broadcast_to(c[i] * outer[i], (n, m, m)).astype(complex).copy()
        log_terms.append(AffineExpression(coeff=coeff, offset=s.noise_power_w))

    lin = state.lin[t]                       # (K, M, M)
    lin_sum = lin.sum(axis=0)
    coeff = np.empty((n, m, m), dtype=complex)
    for l in range(k):
        coeff[l] = -(lin_sum - lin[l])       # every node but l penalizes W_l
    coeff[k] = -lin_sum
    const = 0.0
    for i in range(k):
        others = state.W[t].sum(axis=0) - state.W[t, i]
        const += (-np.log2(state.denom[t, i])
                  + float(np.real(np.vdot(lin[i], others + state.S[t]))))
    linear = AffineExpression(coeff=coeff, offset=const)

    constraints = []
    if s.beampattern_floor_w > 0:
        a_t = steering[k]
        gain_coeff = np.broadcast_to(np.outer(a_t, a_t.conj()), (n, m, m)).astype(complex).copy()
        constraints.append(AffineExpression(coeff=gain_coeff,
                                            offset=-s.beampattern_floor_w))
    return ConicProblem(num_vars=n, dim=m, log_terms=log_terms, linear=linear,
                        constraints=constraints, trace_cap=s.max_power_w,
                        name=f"slot{t}")


def solve_sca_subproblem(state: ScaState, x: np.ndarray, h: np.ndarray,
                         s: Scenario, rel_gap: float = 1e-7) -> BeamformingSolution:
    """Maximize the linearized sum rate slot by slot (the slots decouple).

    Returns a general-rank feasible solution; raises InfeasibleProblemError
    when the beampattern floor cannot be met at all.
    """
    k, m, t_slots = s.num_gns, s.num_antennas, s.num_slots
    if s.beampattern_floor_w > s.max_power_w * m:
        raise InfeasibleProblemError(
            f"beampattern floor {s.beampattern_floor_w} W exceeds the gain limit "
            f"P_max*M = {s.max_power_w * m} W")
    steering = rate_model.steering_matrix(x, s)
    slater_w, slater_s = _slater_slot(s, steering[k])
    w_out = np.empty((t_slots, k, m, m), dtype=complex)
    s_out = np.empty((t_slots, m, m), dtype=complex)
    for t in range(t_slots):
        problem = _slot_problem(state, t, h, steering, s)
        start = np.empty((k + 1, m, m), dtype=complex)
        start[:k] = (1.0 - INTERIOR_MIX) * state.W[t] + INTERIOR_MIX * slater_w
        start[k] = (1.0 - INTERIOR_MIX) * state.S[t] + INTERIOR_MIX * slater_s
        result = sdp_solver.solve(problem, start, rel_gap=rel_gap)
        w_out[t] = result.solution[:k]
        s_out[t] = result.solution[k]
    return BeamformingSolution(W=w_out, S=s_out)


# ---------------------------------------------------------------------------
# rank-one reconstruction
# ---------------------------------------------------------------------------

def rank_one_reconstruct(w_star: np.ndarray, s_star: np.ndarray,
                         steering: np.ndarray):
    """Convert general-rank information covariances into rank-one beams
    without changing any rate, the power, or the beampattern.

    Returns (W, S, w): rank-one covariances, the adjusted sensing covariance,
    and the beam vectors.  Raises ValueError if the adjusted sensing
    covariance loses positive semidefiniteness beyond tolerance.
    """
    k, m = w_star.shape[0], w_star.shape[1]
    w_new = np.zeros_like(w_star)
    beams = np.zeros((k, m), dtype=complex)
    for i in range(k):
        a = steering[i]
        p = float((a.conj() @ w_star[i] @ a).real)
        if p <= 1e-12 * max(1.0, float(np.trace(w_star[i]).real)):
            continue  # node gets no signal; its covariance folds into sensing
        beams[i] = w_star[i] @ a / np.sqrt(p)
        w_new[i] = np.outer(beams[i], beams[i].conj())
        preserved = float((a.conj() @ w_new[i] @ a).real)
        if abs(preserved - p) > 1e-9 * max(1.0, p):
            raise ValueError(f"quadratic form not preserved for node {i + 1}")
    s_new = s_star + w_star.sum(axis=0) - w_new.sum(axis=0)
    s_new = (s_new + s_new.conj().T) / 2.0
    lam = np.linalg.eigvalsh(s_new)
    if lam[0] < -1e-9 * max(1.0, float(lam[-1])):
        raise ValueError(f"adjusted sensing covariance not PSD (min eig {lam[0]:.3e})")
    total_err = float(np.max(np.abs((w_new.sum(axis=0) + s_new)
                                    - (w_star.sum(axis=0) + s_star))))
    if total_err > 1e-9 * max(1.0, float(np.abs(s_star).max())):
        raise ValueError(f"covariance sum drifted by {total_err:.3e}")
    return w_new, s_new, beams


def reconstruct_solution(sol: BeamformingSolution,
                         steering: np.ndarray) -> BeamformingSolution:
    """Apply the rank-one reconstruction to every slot."""
    t_slots, k = sol.num_slots, sol.num_gns
    w = np.empty_like(sol.W)
    s_cov = np.empty_like(sol.S)
    beams = np.empty((t_slots, k, sol.W.shape[2]), dtype=complex)
    for t in range(t_slots):
        w[t], s_cov[t], beams[t] = rank_one_reconstruct(sol.W[t], sol.S[t],
                                                        steering[:k])
    return BeamformingSolution(W=w, S=s_cov, w=beams)


# ---------------------------------------------------------------------------
# SCA outer loop
# ---------------------------------------------------------------------------

def run_beamforming(x: np.ndarray, h: np.ndarray, s: Scenario,
                    init: BeamformingSolution, max_iter: int = SCA_MAX_ITER,
                    tol: float = SCA_TOL, rel_gap: float = 1e-7) -> BeamformingSolution:
    """Iterate the convex subproblem until the true objective stalls, then
    reconstruct rank-one beams.  The returned solution is feasible and its
    objective is at least the initial one."""
    steering = rate_model.steering_matrix(x, s)
    sol = init.copy()
    obj = rate_model.total_rate(h, x, sol, s)
    for it in range(max_iter):
        state = make_state(sol, h, steering, s, iteration=it)
        cand = solve_sca_subproblem(state, x, h, s, rel_gap=rel_gap)
        cand_obj = rate_model.total_rate(h, x, cand, s)
        if cand_obj <= obj:
            break
        gain = cand_obj - obj
        sol, obj = cand, cand_obj
        if gain < tol:
            break
    return reconstruct_solution(sol, steering)
