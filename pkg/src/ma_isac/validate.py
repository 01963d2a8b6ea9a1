"""Fast self-check battery behind ``ma-isac validate``.

Each check prints one PASS/FAIL line; the battery exits nonzero if anything
fails.  These are smoke-level versions of the test-suite properties, sized to
run in seconds.
"""

from __future__ import annotations

import numpy as np

from . import array_model, beamforming, channel, driver, rate_model, sdp_solver
from .rate_model import BeamformingSolution
from .scenario import Scenario


def _random_psd(rng, m, scale=1.0):
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    a = g @ g.conj().T
    return scale * a / max(np.trace(a).real, 1e-12)


def _check_steering(s, rng):
    for _ in range(50):
        x = rng.uniform(0, s.aperture_m, s.num_antennas)
        a = array_model.steering_vector(x, rng.uniform(-1, 1), s.wavelength_m)
        if np.max(np.abs(np.abs(a) - 1.0)) > 1e-12:
            return False
    return True


def _check_repair(s, rng):
    for _ in range(100):
        x = rng.uniform(-0.2 * s.aperture_m, 1.2 * s.aperture_m, s.num_antennas)
        y = array_model.repair_spacing(x, s.min_spacing_m, s.aperture_m)
        if not array_model.is_feasible(y, s.aperture_m, s.min_spacing_m):
            return False
    return True


def _check_lower_bound(s, rng):
    m, k = 4, 3
    a = np.exp(1j * rng.uniform(0, 2 * np.pi, (k, m)))
    h = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    noise = 1e-3
    for _ in range(50):
        exp_w = np.stack([_random_psd(rng, m) for _ in range(k)])
        exp_s = _random_psd(rng, m)
        cnd_w = np.stack([_random_psd(rng, m) for _ in range(k)])
        cnd_s = _random_psd(rng, m)
        for i in range(1, k + 1):
            tight = beamforming.lower_bound_rate(i, exp_w, exp_s, h[i - 1], a[i - 1],
                                                 noise, exp_w, exp_s)
            truth = beamforming.true_rate_matrix_form(i, exp_w, exp_s, h[i - 1],
                                                      a[i - 1], noise)
            if abs(tight - truth) > 1e-10:
                return False
            bound = beamforming.lower_bound_rate(i, cnd_w, cnd_s, h[i - 1], a[i - 1],
                                                 noise, exp_w, exp_s)
            other = beamforming.true_rate_matrix_form(i, cnd_w, cnd_s, h[i - 1],
                                                      a[i - 1], noise)
            if bound > other + 1e-9:
                return False
    return True


def _check_reconstruction(rng):
    for m in (2, 4):
        for _ in range(20):
            k = 2
            w = np.stack([_random_psd(rng, m, scale=rng.uniform(0.1, 1)) for _ in range(k)])
            s_cov = _random_psd(rng, m, scale=0.3)
            a = np.exp(1j * rng.uniform(0, 2 * np.pi, (k, m)))
            w2, s2, _ = beamforming.rank_one_reconstruct(w, s_cov, a)
            if np.max(np.abs((w2.sum(0) + s2) - (w.sum(0) + s_cov))) > 1e-9:
                return False
            if np.linalg.eigvalsh(s2)[0] < -1e-9:
                return False
    return True


def _check_solver(rng):
    m = 4
    a = _random_psd(rng, m, scale=3.0)
    lam_max = float(np.linalg.eigvalsh(a)[-1])
    prob = sdp_solver.ConicProblem(
        num_vars=1, dim=m,
        linear=sdp_solver.AffineExpression(coeff=a[None], offset=0.0),
        trace_cap=1.0)
    res = sdp_solver.solve(prob, 0.1 * np.eye(m, dtype=complex)[None])
    if abs(res.objective - lam_max) > 1e-5 * lam_max:
        return False
    c, p = 7.0, 2.0
    prob = sdp_solver.ConicProblem(
        num_vars=1, dim=m,
        log_terms=[sdp_solver.AffineExpression(coeff=c * np.eye(m, dtype=complex)[None],
                                               offset=1.0)],
        trace_cap=p)
    res = sdp_solver.solve(prob, 0.01 * np.eye(m, dtype=complex)[None])
    want = np.log2(1.0 + c * p)
    return abs(res.objective - want) <= 1e-5 * want


def _check_channel(s, rng):
    if s.rician_factor >= 1e6:
        return True  # effectively deterministic; nothing to average
    h = channel.sample_channel(s, rng)
    # loose sanity at scenario size; the test suite does the 1e5-sample version
    mean = np.mean(np.abs(h) ** 2, axis=1)
    want = s.ref_gain / s.distances() ** 2
    return bool(np.all(mean < want * 50) and np.all(mean > want / 50))


def run_battery(s: Scenario) -> int:
    rng = np.random.default_rng(s.rng_seed)
    checks = [
        ("steering unit modulus", lambda: _check_steering(s, rng)),
        ("spacing repair feasibility", lambda: _check_repair(s, rng)),
        ("rate lower bound (tight + global)", lambda: _check_lower_bound(s, rng)),
        ("rank-one reconstruction identities", lambda: _check_reconstruction(rng)),
        ("solver analytic battery", lambda: _check_solver(rng)),
        ("channel power scale", lambda: _check_channel(s, rng)),
    ]
    failed = 0
    for name, fn in checks:
        ok = fn()
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    return 1 if failed else 0
