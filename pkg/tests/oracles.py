"""Independent reference solvers used by the tests.

Everything here recomputes objectives from scratch (scalar formulas, grids,
Pareto pruning); nothing calls into the package's solver or SCA path.
"""

import numpy as np

FIVE = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


def _beam_gains(a, t, psi):
    """|a_k^H u|^2 for unit beams u = [cos t, sin t e^{j psi}] (M = 2)."""
    u = np.stack([np.cos(t), np.sin(t) * np.exp(1j * psi)], axis=-1)
    return np.abs(u @ a.conj().T) ** 2


def _pareto(signal, leak):
    """Indices whose (signal up, leak down) pair is undominated."""
    order = np.lexsort((leak, -signal))
    keep, best_leak = [], np.inf
    for i in order:
        if leak[i] < best_leak - 1e-15:
            keep.append(i)
            best_leak = leak[i]
    return np.array(keep)


def two_user_sum_rate_oracle(a, h, noise, p_max):
    """Global maximum of the 2-user sum rate at M = 2 over PSD information
    covariances with tr(W1) + tr(W2) <= p_max and no sensing covariance.

    Setting S = 0 is lossless here (it only adds interference and spends
    power), and rank-one covariances are lossless because replacing W_k by
    its matched rank-one part preserves a_k^H W_k a_k while (by the
    Cauchy-Schwarz argument) never increasing the other node's quadratic
    form or the trace.  The search is a dense beam grid with Pareto pruning
    per beam, crossed over a power-split grid, then refined by nested grids.
    """
    a = np.asarray(a)
    c = np.abs(np.asarray(h)) ** 2

    t = np.linspace(0, np.pi / 2, 96)
    psi = np.linspace(0, 2 * np.pi, 192, endpoint=False)
    tt, pp = np.meshgrid(t, psi, indexing="ij")
    gains = _beam_gains(a, tt.ravel(), pp.ravel())
    params = np.stack([tt.ravel(), pp.ravel()], axis=1)

    k1 = _pareto(gains[:, 0], gains[:, 1])
    k2 = _pareto(gains[:, 1], gains[:, 0])
    g1, g2 = gains[k1], gains[k2]
    fr = np.linspace(0.0, 1.0, 33)
    fa, fb = np.meshgrid(fr, fr, indexing="ij")
    ok = (fa + fb) <= 1.0 + 1e-12
    p1v, p2v = fa[ok] * p_max, fb[ok] * p_max

    best_val, best_par = -np.inf, None
    for i in range(len(g1)):
        r1 = np.log2(1 + c[0] * p1v[:, None] * g1[i, 0]
                     / (c[0] * p2v[:, None] * g2[None, :, 0] + noise))
        r2 = np.log2(1 + c[1] * p2v[:, None] * g2[None, :, 1]
                     / (c[1] * p1v[:, None] * g1[i, 1] + noise))
        v = r1 + r2
        j, k = np.unravel_index(np.argmax(v), v.shape)
        if v[j, k] > best_val:
            best_val = float(v[j, k])
            best_par = np.array([params[k1[i]][0], params[k1[i]][1],
                                 params[k2[k]][0], params[k2[k]][1], p1v[j], p2v[j]])

    center = best_par
    width = np.array([np.pi / 48, np.pi / 24, np.pi / 48, np.pi / 24,
                      p_max / 16, p_max / 16])
    off = np.stack(np.meshgrid(*([FIVE] * 6)), axis=-1).reshape(-1, 6)
    for _ in range(20):
        cand = center[None, :] + off * width[None, :]
        cand[:, 4:] = np.clip(cand[:, 4:], 0.0, p_max)
        cand = cand[cand[:, 4] + cand[:, 5] <= p_max + 1e-15]
        b1 = _beam_gains(a, cand[:, 0], cand[:, 1])
        b2 = _beam_gains(a, cand[:, 2], cand[:, 3])
        r1 = np.log2(1 + c[0] * cand[:, 4] * b1[:, 0]
                     / (c[0] * cand[:, 5] * b2[:, 0] + noise))
        r2 = np.log2(1 + c[1] * cand[:, 5] * b2[:, 1]
                     / (c[1] * cand[:, 4] * b1[:, 1] + noise))
        v = r1 + r2
        i = int(np.argmax(v))
        if v[i] > best_val:
            best_val, center = float(v[i]), cand[i]
        width *= 0.55
    return best_val


def concave_subproblem_oracle(a, h, noise, p_max, exp_w, exp_s):
    """Global maximum of the linearized (concave) per-slot objective at
    M = 2, K = 2 over PSD (W1, W2, S) with the trace budget.

    Works in Hermitian entry coordinates (w11, w22, Re w12, Im w12), where
    the objective stays concave and the feasible set is convex, so any local
    maximizer is global; several SLSQP starts plus a feasibility check make
    the value trustworthy.  Same constant terms as the package's assembled
    subproblem, computed from scratch.
    """
    from scipy.optimize import minimize

    a = np.asarray(a)
    c = np.abs(np.asarray(h)) ** 2
    ln2 = np.log(2.0)
    phi = np.conj(a[:, 0]) * a[:, 1]                       # (2,)

    qi = np.einsum("km,lmn,kn->kl", a.conj(), exp_w, a).real
    qsi = np.einsum("km,mn,kn->k", a.conj(), exp_s, a).real
    denom_i = np.array([c[0] * (qi[0, 1] + qsi[0]) + noise,
                        c[1] * (qi[1, 0] + qsi[1]) + noise])
    ell = c / (ln2 * denom_i)

    def qforms(p):
        q = np.empty((2, 3))
        for l in range(3):
            w11, w22, wr, wi = p[4 * l: 4 * l + 4]
            for k in range(2):
                q[k, l] = w11 + w22 + 2 * (wr * phi[k].real - wi * phi[k].imag)
        return q

    def neg_obj(p):
        q = qforms(p)
        val = 0.0
        for k in range(2):
            other = 1 - k
            full = c[k] * (q[k, 0] + q[k, 1] + q[k, 2]) + noise
            if full <= 0:
                return 1e9
            val += (np.log2(full) - np.log2(denom_i[k])
                    - ell[k] * (q[k, other] + q[k, 2] - qi[k, other] - qsi[k]))
        return -val

    cons = [{"type": "ineq",
             "fun": lambda p: p_max - (p[0] + p[1] + p[4] + p[5] + p[8] + p[9])}]
    for l in range(3):
        cons.append({"type": "ineq", "fun": lambda p, l=l: p[4 * l]})
        cons.append({"type": "ineq", "fun": lambda p, l=l: p[4 * l + 1]})
        cons.append({"type": "ineq",
                     "fun": lambda p, l=l: (p[4 * l] * p[4 * l + 1]
                                            - p[4 * l + 2] ** 2 - p[4 * l + 3] ** 2)})

    def feasible(p, tol=1e-7):
        return all(cn["fun"](p) >= -tol for cn in cons)

    starts = []
    for sc in (0.02, 0.1, 0.3):
        p0 = np.zeros(12)
        p0[[0, 1, 4, 5, 8, 9]] = sc * p_max / 3
        starts.append(p0)
    srng = np.random.default_rng(7)
    for _ in range(4):
        p0 = np.zeros(12)
        for l in range(3):
            g = srng.standard_normal((2, 2)) + 1j * srng.standard_normal((2, 2))
            w = g @ g.conj().T
            w *= srng.uniform(0.02, 0.3) * p_max / np.trace(w).real
            p0[4 * l: 4 * l + 4] = [w[0, 0].real, w[1, 1].real, w[0, 1].real, w[0, 1].imag]
        starts.append(p0)

    best = -np.inf
    for p0 in starts:
        r = minimize(neg_obj, p0, constraints=cons, method="SLSQP",
                     options={"maxiter": 500, "ftol": 1e-14})
        if feasible(r.x):
            best = max(best, -neg_obj(r.x))
    return best


def pso_grid_oracle(fitness_fn, aperture, min_spacing, step):
    """Exhaustive 2-antenna search: evaluate fitness on the full feasible
    (x1, x2) grid with the given step and return the best value."""
    grid = np.arange(0.0, aperture + step / 2, step)
    best = -np.inf
    for x1 in grid:
        x2 = grid[grid >= x1 + min_spacing]
        if len(x2) == 0:
            continue
        pairs = np.column_stack([np.full(len(x2), x1), x2])
        vals = fitness_fn(pairs)
        m = float(np.max(vals))
        if m > best:
            best = m
    return best
