import numpy as np
import pytest
import scipy.sparse as sp

from qpflow.grid import flat_start, residual
from qpflow.newton import (
    NewtonConfig,
    SingularJacobianError,
    dense_lu_solve,
    diagnostics_csv,
    lu_solve,
    newton_raphson,
)


def gaussian_elimination_oracle(a, b):
    """Independent elimination with partial pivoting, no library calls."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    for col in range(n):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if a[p, col] == 0:
            raise ZeroDivisionError("singular")
        if p != col:
            a[[col, p]] = a[[p, col]]
            b[[col, p]] = b[[p, col]]
        for row in range(col + 1, n):
            m = a[row, col] / a[col, col]
            a[row, col:] -= m * a[col, col:]
            b[row] -= m * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


class TestLuSolve:
    def test_identity(self):
        b = np.array([3.0, -1.0, 2.0])
        assert np.allclose(lu_solve(np.eye(3), b), b)

    def test_diag(self):
        x = lu_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_matches_independent_elimination(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(64, 64)) + 64 * np.eye(64)
        b = rng.normal(size=64)
        assert np.max(np.abs(lu_solve(a, b) - gaussian_elimination_oracle(a, b))) < 1e-10

    def test_sparse_path(self):
        rng = np.random.default_rng(5)
        a = sp.random(40, 40, density=0.2, random_state=3, format="csr") + 40 * sp.eye(40)
        b = rng.normal(size=40)
        x = lu_solve(a.tocsr(), b)
        assert np.max(np.abs(a @ x - b)) <= 1e-10 * np.max(np.abs(b))

    def test_singular_raises(self):
        with pytest.raises(SingularJacobianError):
            lu_solve(np.zeros((3, 3)), np.ones(3))

    def test_residual_contract(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            a = rng.normal(size=(30, 30)) + 30 * np.eye(30)
            b = rng.normal(size=30)
            x = lu_solve(a, b)
            assert np.max(np.abs(a @ x - b)) <= 1e-10 * np.max(np.abs(b))


class TestNewton:
    @pytest.mark.parametrize("name", ["3", "5", "14"])
    def test_converges_from_flat_start(self, name, request):
        problem = request.getfixturevalue(f"problem{name}")
        u, trace = newton_raphson(problem)
        assert trace.converged
        assert trace.iterations <= 10
        assert trace.residuals[-1] < 1e-8

    def test_exact_start_zero_iterations(self, problem3):
        u, trace = newton_raphson(problem3)
        u2, trace2 = newton_raphson(problem3, NewtonConfig(u0=u))
        assert trace2.converged
        assert trace2.iterations == 0
        assert np.array_equal(u, u2)

    def test_case3_within_six_iterations(self, problem3):
        _, trace = newton_raphson(problem3)
        assert trace.iterations <= 6

    def test_matches_dense_oracle(self, problem14):
        u_sparse, _ = newton_raphson(problem14, linear_solver=lu_solve)
        u_dense, _ = newton_raphson(problem14, linear_solver=dense_lu_solve)
        assert np.max(np.abs(u_sparse - u_dense)) < 1e-8

    def test_golden_agreement(self, problem14):
        from qpflow.fixtures import load_fixture

        _, golden = load_fixture("case14")
        u, _ = newton_raphson(problem14)
        assert np.max(np.abs(u - np.array(golden["solution"]))) < 1e-8

    def test_deterministic_trace(self, problem5):
        u1, t1 = newton_raphson(problem5)
        u2, t2 = newton_raphson(problem5)
        assert np.array_equal(u1, u2)
        assert t1.residuals == t2.residuals
        assert t1.kappas == t2.kappas
        assert t1.step_norms == t2.step_norms

    @pytest.mark.parametrize("name", ["3", "5"])
    def test_quadratic_local_convergence(self, name, request):
        problem = request.getfixturevalue(f"problem{name}")
        _, trace = newton_raphson(problem, NewtonConfig(eps0=1e-12))
        r = trace.residuals
        # a case-constant c with r_{k+1} <= c * r_k**2 near the solution;
        # pairs whose successor sits at the float noise floor are excluded
        tail = [(r[k + 1], r[k]) for k in range(len(r) - 1) if r[k] < 1e-2 and r[k + 1] > 1e-13]
        assert tail, "no late-stage iterations recorded"
        cs = [nxt / prev**2 for nxt, prev in tail]
        assert max(cs) < 1e3

    def test_case14_kappa_rises_then_declines(self, problem14):
        _, trace = newton_raphson(problem14)
        kappas = trace.kappas
        peak = int(np.argmax(kappas))
        assert 0 < peak < len(kappas) - 1

    def test_nonconvergence_flag(self, problem14):
        _, trace = newton_raphson(problem14, NewtonConfig(k_max=1))
        assert not trace.converged
        assert trace.iterations == 1


class TestDiagnosticsCsv:
    def test_header_contract(self, problem3):
        _, trace = newton_raphson(problem3)
        lines = diagnostics_csv(trace).decode().splitlines()
        assert lines[0] == "iter,residual,kappa,sparsity,step_norm"
        assert len(lines) == trace.iterations + 1

    def test_single_iteration_trace(self, problem3):
        _, trace = newton_raphson(problem3, NewtonConfig(k_max=1))
        lines = diagnostics_csv(trace).decode().splitlines()
        assert len(lines) == 2

    def test_empty_trace_rejected(self):
        from qpflow.newton import SolveTrace

        with pytest.raises(ValueError):
            diagnostics_csv(SolveTrace())

    def test_sparsity_column_constant_after_first_iteration(self, problem14):
        # the flat start zeroes every imaginary part, which blanks a few
        # entries that are structurally present; from iteration 2 on the
        # strict nonzero count equals the topology-fixed pattern size
        _, trace = newton_raphson(problem14)
        assert len(set(trace.sparsities[1:])) == 1
