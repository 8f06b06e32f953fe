"""Levenberg-Marquardt nonlinear least squares with Marquardt diagonal scaling.

Minimises ``cost(p) = 0.5 * sum(r(p)**2)`` by solving

    (J^T J + lam * diag(J^T J)) delta = -J^T r

at every trial. A trial is accepted when it lowers the cost (``lam /= nu``) and
rejected otherwise (``lam *= nu``). Trial points that leave a parameter's
validity domain, or produce non-finite residuals, are charged ``PENALTY_COST``
so they are always rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericError, UsageError

PENALTY_COST = 1e100
MAX_LAMBDA = 1e12

CONVERGED_COST = "converged-cost"
CONVERGED_STEP = "converged-step"
MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class LmConfig:
    lambda0: float = 1e-3
    nu: float = 10.0
    max_iter: int = 200
    ftol: float = 1e-12
    xtol: float = 1e-10
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("lambda0", "ftol", "xtol", "fd_step"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if not self.nu > 1:
            raise UsageError("damping factor nu must exceed 1")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise UsageError("max_iter must be a positive integer")


@dataclass
class FitProblem:
    residuals: Callable[[np.ndarray], np.ndarray]
    n_params: int
    n_residuals: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.n_residuals < self.n_params:
            raise UsageError(
                f"over-parameterised problem: {self.n_params} parameters for "
                f"{self.n_residuals} residuals"
            )
        n = self.n_params
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise UsageError("bounds must have one entry per parameter")
        if np.any(self.lower > self.upper):
            raise UsageError("lower bounds must not exceed upper bounds")
        if self.names is None:
            self.names = [f"p{i}" for i in range(n)]

    def clip(self, p: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(p, self.lower), self.upper)


@dataclass
class IterationRecord:
    iter: int
    cost: float
    lam: float
    step_norm: float
    accepted: bool


@dataclass
class FitReport:
    params: np.ndarray
    names: list
    initial_cost: float
    final_cost: float
    status: str
    rmse: float
    trace: list = field(default_factory=list)

    @property
    def n_iter(self) -> int:
        return len(self.trace)

    def accepted_costs(self) -> list[float]:
        return [self.initial_cost] + [rec.cost for rec in self.trace if rec.accepted]

    def to_dict(self) -> dict:
        return {
            "parameters": {n: float(v) for n, v in zip(self.names, self.params)},
            "cost_trace": [
                {
                    "iter": rec.iter,
                    "cost": rec.cost,
                    "lambda": rec.lam,
                    "step_norm": rec.step_norm,
                    "accepted": rec.accepted,
                }
                for rec in self.trace
            ],
            "status": self.status,
            "rmse": self.rmse,
            "initial_cost": self.initial_cost,
            "final_cost": self.final_cost,
        }


def _cost(r: np.ndarray) -> float:
    return 0.5 * float(np.dot(r, r))


def _safe_cost(problem: FitProblem, p: np.ndarray) -> tuple[float, Optional[np.ndarray]]:
    try:
        r = np.asarray(problem.residuals(p), dtype=float)
    except DomainError:
        return PENALTY_COST, None
    if not np.all(np.isfinite(r)):
        return PENALTY_COST, None
    return min(_cost(r), PENALTY_COST), r


def numerical_jacobian(
    problem: FitProblem, params: np.ndarray, step: float = 1e-6, r0: Optional[np.ndarray] = None
) -> np.ndarray:
    """Forward-difference Jacobian with per-parameter step ``step * max(|p_j|, 1)``.

    The step flips to a backward difference when the forward point would cross
    an upper bound.
    """
    params = np.asarray(params, dtype=float)
    if r0 is None:
        r0 = np.asarray(problem.residuals(params), dtype=float)
    jac = np.empty((r0.size, params.size))
    for j in range(params.size):
        h = step * max(abs(params[j]), 1.0)
        if params[j] + h > problem.upper[j]:
            h = -h
        trial = params.copy()
        trial[j] += h
        try:
            rj = np.asarray(problem.residuals(trial), dtype=float)
        except DomainError as exc:
            raise DomainError(f"residuals failed perturbing parameter {j} ({problem.names[j]}): {exc}") from exc
        if not np.all(np.isfinite(rj)):
            raise NumericError(f"non-finite residuals perturbing parameter {j} ({problem.names[j]})")
        jac[:, j] = (rj - r0) / (trial[j] - params[j])
    return jac


def _report(problem, p, initial_cost, cost, status, trace) -> FitReport:
    rmse = float(np.sqrt(2.0 * cost / problem.n_residuals))
    return FitReport(p.copy(), list(problem.names), initial_cost, cost, status, rmse, trace)


def lm_fit(problem: FitProblem, initial, cfg: LmConfig = LmConfig()) -> FitReport:
    p = np.asarray(initial, dtype=float).copy()
    if p.shape != (problem.n_params,):
        raise UsageError(f"initial point has shape {p.shape}, expected ({problem.n_params},)")
    if np.any(p < problem.lower) or np.any(p > problem.upper):
        raise UsageError("initial point violates the parameter bounds")
    try:
        r = np.asarray(problem.residuals(p), dtype=float)
    except DomainError as exc:
        raise UsageError(f"residuals undefined at the initial point: {exc}") from exc
    if r.shape != (problem.n_residuals,):
        raise UsageError(f"residual vector has shape {r.shape}, expected ({problem.n_residuals},)")
    if not np.all(np.isfinite(r)):
        raise UsageError("non-finite residuals at the initial point")

    cost = _cost(r)
    initial_cost = cost
    trace: list[IterationRecord] = []
    if cost == 0.0:
        return _report(problem, p, initial_cost, cost, CONVERGED_COST, trace)
    if problem.n_params == 0:
        return _report(problem, p, initial_cost, cost, CONVERGED_STEP, trace)

    lam = cfg.lambda0
    jac = numerical_jacobian(problem, p, cfg.fd_step, r)
    it = 0
    while it < cfg.max_iter:
        it += 1
        a = jac.T @ jac
        g = jac.T @ r
        scale = np.diag(a).copy()
        # parameters with no influence (e.g. shapes of a zero-amplitude component) still get damped
        floor = 1e-12 * scale.max() if scale.max() > 0 else 1.0
        scale = np.maximum(scale, floor)

        while True:
            try:
                delta = np.linalg.solve(a + lam * np.diag(scale), -g)
                if np.all(np.isfinite(delta)):
                    break
            except np.linalg.LinAlgError:
                pass
            lam *= cfg.nu
            if lam > MAX_LAMBDA:
                raise NumericError("normal equations singular at every damping level")

        trial = problem.clip(p + delta)
        step = trial - p
        step_norm = float(np.linalg.norm(step))
        new_cost, new_r = _safe_cost(problem, trial)
        accepted = new_cost < cost
        trace.append(IterationRecord(it, new_cost, lam, step_norm, accepted))

        small_step = step_norm <= cfg.xtol * (float(np.linalg.norm(p)) + cfg.xtol)
        if accepted:
            decrease = cost - new_cost
            p, r, cost = trial, new_r, new_cost
            lam = max(lam / cfg.nu, 1e-300)
            # relative stall, or the residual norm has fallen by a factor of ftol overall
            if decrease <= cfg.ftol * (cost + decrease) or cost <= cfg.ftol**2 * initial_cost:
                return _report(problem, p, initial_cost, cost, CONVERGED_COST, trace)
            if small_step:
                return _report(problem, p, initial_cost, cost, CONVERGED_STEP, trace)
            jac = numerical_jacobian(problem, p, cfg.fd_step, r)
        else:
            if small_step:
                return _report(problem, p, initial_cost, cost, CONVERGED_STEP, trace)
            lam *= cfg.nu
            if lam > MAX_LAMBDA:
                # damping has shrunk the step below any useful size without progress
                return _report(problem, p, initial_cost, cost, CONVERGED_STEP, trace)
    return _report(problem, p, initial_cost, cost, MAX_ITERATIONS, trace)
