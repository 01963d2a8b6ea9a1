import numpy as np
import pytest

from ma_isac import sdp_solver
from ma_isac.errors import EigNonConvergenceError, InfeasibleStartError
from ma_isac.sdp_solver import AffineExpression, ConicProblem

from conftest import random_psd


def hermitian(rng, m):
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (g + g.conj().T) / 2


def test_eig_identity():
    w, u = sdp_solver.hermitian_eig(np.eye(3, dtype=complex))
    np.testing.assert_allclose(w, 1.0, atol=1e-14)


def test_eig_diagonal_sorted():
    w, u = sdp_solver.hermitian_eig(np.diag([3.0, 1.0]).astype(complex))
    np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-14)
    np.testing.assert_allclose(np.abs(u), [[0, 1], [1, 0]], atol=1e-14)


def test_eig_reconstruction_oracle(rng):
    for _ in range(25):
        a = hermitian(rng, 6)
        w, u = sdp_solver.hermitian_eig(a)
        rec = (u * w) @ u.conj().T
        scale = np.max(np.abs(a))
        assert np.max(np.abs(a - rec)) <= 1e-10 * scale
        assert np.max(np.abs(u.conj().T @ u - np.eye(6))) < 1e-12
        assert np.all(np.diff(w) >= -1e-14)


def test_eig_matches_lapack(rng):
    for m in (2, 3, 5, 8):
        a = hermitian(rng, m)
        w, _ = sdp_solver.hermitian_eig(a)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-11)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        sdp_solver.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_sweep_cap():
    a = hermitian(np.random.default_rng(0), 6)
    with pytest.raises(EigNonConvergenceError):
        sdp_solver.hermitian_eig(a, max_sweeps=0)


def test_psd_project_fixed_point(rng):
    a = random_psd(rng, 4, trace=2.0)
    np.testing.assert_allclose(sdp_solver.psd_project(a), a, atol=1e-12)


def test_psd_project_clips_negative():
    out = sdp_solver.psd_project(np.diag([1.0, -2.0]).astype(complex))
    np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-14)


def test_psd_project_optimality_sampling(rng):
    # the projection must be the closest PSD point in Frobenius norm
    a = hermitian(rng, 4)
    out = sdp_solver.psd_project(a)
    dist = np.linalg.norm(out - a)
    for _ in range(100):
        b = random_psd(rng, 4, trace=rng.uniform(0.1, 5.0))
        assert dist <= np.linalg.norm(b - a) + 1e-12


def test_psd_project_matches_batched_clip(rng):
    # the solver's fast path and the public op agree
    stack = np.stack([hermitian(rng, 5) for _ in range(6)])
    fast = sdp_solver._clip_psd_stack(stack)
    for i in range(6):
        np.testing.assert_allclose(fast[i], sdp_solver.psd_project(stack[i]), atol=1e-10)


def lambda_max_problem(a):
    m = a.shape[0]
    return ConicProblem(
        num_vars=1, dim=m,
        linear=AffineExpression(coeff=a[None].astype(complex), offset=0.0),
        trace_cap=1.0)


def test_solve_lambda_max(rng):
    a = random_psd(rng, 4, trace=5.0)
    lam = float(np.linalg.eigvalsh(a)[-1])
    res = sdp_solver.solve(lambda_max_problem(a), 0.1 * np.eye(4, dtype=complex)[None])
    assert res.objective == pytest.approx(lam, rel=1e-5)
    # solution concentrates on the leading eigenvector
    vec = np.linalg.eigh(a)[1][:, -1]
    align = float(np.real(vec.conj() @ res.solution[0] @ vec))
    assert align == pytest.approx(1.0, abs=1e-3)


def test_solve_trace_log(rng):
    m, c, p = 3, 7.0, 2.0
    prob = ConicProblem(
        num_vars=1, dim=m,
        log_terms=[AffineExpression(coeff=c * np.eye(m, dtype=complex)[None], offset=1.0)],
        trace_cap=p)
    res = sdp_solver.solve(prob, 0.01 * np.eye(m, dtype=complex)[None])
    assert res.objective == pytest.approx(np.log2(1 + c * p), rel=1e-5)


def test_solve_feasibility_and_ascent(rng):
    a = random_psd(rng, 3, trace=1.0)
    prob = lambda_max_problem(a)
    start = 0.2 * np.eye(3, dtype=complex)[None]
    res = sdp_solver.solve(prob, start)
    assert np.trace(res.solution[0]).real <= prob.trace_cap + 1e-8
    assert np.linalg.eigvalsh(res.solution[0])[0] >= -1e-10
    assert res.objective >= prob.linear.value(start) - 1e-12


def test_solve_deterministic(rng):
    a = random_psd(rng, 3, trace=2.0)
    prob = lambda_max_problem(a)
    start = 0.3 * np.eye(3, dtype=complex)[None]
    r1 = sdp_solver.solve(prob, start)
    r2 = sdp_solver.solve(prob, start)
    assert r1.objective == r2.objective
    np.testing.assert_array_equal(r1.solution, r2.solution)


def test_solve_gain_floor_barrier(rng):
    # barrier-handled constraint: a_t^H (sum V) a_t >= floor
    m = 3
    a_t = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    gain = AffineExpression(coeff=np.outer(a_t, a_t.conj())[None], offset=-0.5)
    c = random_psd(rng, m, trace=1.0)
    prob = ConicProblem(num_vars=1, dim=m,
                        linear=AffineExpression(coeff=-c[None], offset=0.0),
                        constraints=[gain], trace_cap=2.0)
    start = 0.5 * np.eye(m, dtype=complex)[None]  # gain = 1.5 > 0.5
    res = sdp_solver.solve(prob, start)
    assert gain.value(res.solution) >= -1e-8
    with pytest.raises(InfeasibleStartError):
        sdp_solver.solve(prob, 1e-4 * np.eye(m, dtype=complex)[None])


def random_problem(rng, n, m, n_log):
    log_terms = []
    for _ in range(n_log):
        coeff = np.stack([hermitian(rng, m) * 0.5 for _ in range(n)])
        log_terms.append(AffineExpression(coeff=coeff, offset=rng.uniform(2.0, 4.0)))
    linear = AffineExpression(
        coeff=np.stack([hermitian(rng, m) * 0.3 for _ in range(n)]),
        offset=rng.uniform(-1, 1))
    return ConicProblem(num_vars=n, dim=m, log_terms=log_terms, linear=linear,
                        trace_cap=5.0)


def test_objective_gradient_matches_central_differences(rng):
    # rebuild the solver's gradient from the problem data and compare with
    # central finite differences along random Hermitian directions
    ln2 = np.log(2.0)
    for trial in range(5):
        n, m = 2, 3
        prob = random_problem(rng, n, m, n_log=3)
        v = np.stack([random_psd(rng, m, trace=0.5) for _ in range(n)])

        def objective(stack):
            val = prob.linear.offset + float(np.real(np.vdot(prob.linear.coeff, stack)))
            for term in prob.log_terms:
                val += np.log2(term.value(stack))
            return val

        grad = prob.linear.coeff.copy()
        for term in prob.log_terms:
            grad = grad + term.coeff / (ln2 * term.value(v))

        for _ in range(4):
            d = np.stack([hermitian(rng, m) for _ in range(n)])
            d /= np.linalg.norm(d)
            eps = 1e-6
            fd = (objective(v + eps * d) - objective(v - eps * d)) / (2 * eps)
            analytic = float(np.real(np.vdot(grad, d)))
            assert fd == pytest.approx(analytic, rel=1e-4)
