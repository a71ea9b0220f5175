"""Newton-Raphson outer loop with a pluggable inner linear solver.

The default inner solve is a sparse LU factorization; the dense variant
serves as the independent oracle when regenerating golden fixtures.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import PowerFlowProblem, condition_number, flat_start, jacobian, residual, sparsity

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20


class SingularJacobianError(RuntimeError):
    """The inner linear system could not be solved to working precision."""


@dataclass
class NewtonConfig:
    u0: np.ndarray | None = None  # None selects the flat start
    k_max: int = DEFAULT_MAX_ITER
    eps0: float = DEFAULT_TOL

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")


@dataclass
class SolveTrace:
    """Per-iteration diagnostics; residuals are post-step infinity norms."""

    residuals: list[float] = field(default_factory=list)
    kappas: list[float] = field(default_factory=list)
    sparsities: list[int] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    extras: dict = field(default_factory=dict)


def lu_solve(a, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by LU with one step of iterative refinement.

    Guarantees the residual contract ||A x - b||_inf <= 1e-10 * ||b||_inf
    or raises SingularJacobianError.
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    try:
        if sp.issparse(a):
            factor = spla.splu(a.tocsc())
            x = factor.solve(b)
            x += factor.solve(b - a @ x)
        else:
            dense = np.asarray(a, dtype=float)
            x = np.linalg.solve(dense, b)
            x += np.linalg.solve(dense, b - dense @ x)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise SingularJacobianError(f"linear solve failed: {exc}") from exc
    resid = np.max(np.abs(a @ x - b))
    bound = 1e-10 * max(np.max(np.abs(b)), 1e-300)
    if not np.isfinite(resid) or resid > bound:
        raise SingularJacobianError(f"solution residual {resid:.3g} exceeds {bound:.3g}")
    return x


def dense_lu_solve(a, b: np.ndarray) -> np.ndarray:
    """Dense-path variant of lu_solve (the fixture oracle)."""
    dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    return lu_solve(dense, b)


def newton_raphson(
    problem: PowerFlowProblem,
    cfg: NewtonConfig | None = None,
    linear_solver=lu_solve,
) -> tuple[np.ndarray, SolveTrace]:
    """Iterate u <- u - J^-1 F until ||F||_inf < eps0 or k_max steps.

    An already-converged initial guess returns immediately with an empty
    trace.  Non-finite iterates raise.
    """
    cfg = cfg or NewtonConfig()
    u = flat_start(problem.n_bus) if cfg.u0 is None else np.array(cfg.u0, dtype=float)
    if u.size != problem.dim:
        raise ValueError(f"initial guess has length {u.size}, expected {problem.dim}")

    trace = SolveTrace()
    f = residual(problem, u)
    norm = float(np.max(np.abs(f)))
    for _ in range(cfg.k_max):
        if norm < cfg.eps0:
            break
        j = jacobian(problem, u)
        kappa = condition_number(j)
        s = sparsity(j)
        du = linear_solver(j, -f)
        u = u + du
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("Newton iterate is not finite")
        f = residual(problem, u)
        norm = float(np.max(np.abs(f)))
        trace.residuals.append(norm)
        trace.kappas.append(kappa)
        trace.sparsities.append(s)
        trace.step_norms.append(float(np.max(np.abs(du))))
    trace.iterations = len(trace.residuals)
    trace.converged = norm < cfg.eps0
    return u, trace


def diagnostics_csv(trace: SolveTrace) -> bytes:
    """One row per iteration: iter, residual, kappa, sparsity, step_norm."""
    if trace.iterations == 0:
        raise ValueError("trace is empty")
    buf = io.StringIO()
    buf.write("iter,residual,kappa,sparsity,step_norm\n")
    for i in range(trace.iterations):
        buf.write(
            f"{i + 1},{trace.residuals[i]!r},{trace.kappas[i]!r},"
            f"{trace.sparsities[i]},{trace.step_norms[i]!r}\n"
        )
    return buf.getvalue().encode()
