"""Derivative-free minimisation under a hard evaluation budget.

``minimize`` defaults to COBYLA (scipy's implementation, used unconstrained);
``method="nelder-mead"`` runs the simplex method implemented below, which
serves as an independent cross-check behind the same contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sp

from .errors import InputError

DEFAULT_BUDGET = 100
RHO_END = 1e-6
# stand-in for +inf handed to COBYLA, which cannot digest non-finite values
_LARGE = 1e300


@dataclass
class OptimizeResult:
    best_params: np.ndarray
    best_value: float
    n_evaluations: int
    converged: bool
    trace: list[float] = field(default_factory=list)


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    def __init__(self, objective, budget):
        self.objective = objective
        self.budget = budget
        self.n = 0
        self.best_x = None
        self.best = np.inf
        self.trace = []
        self._memo = {}

    def __call__(self, x):
        x = np.array(x, dtype=float)
        key = x.tobytes()
        if key in self._memo:
            return self._memo[key]
        if self.n >= self.budget:
            raise _BudgetExhausted
        value = float(self.objective(x))
        if not np.isfinite(value):
            value = np.inf
        self.n += 1
        if value < self.best or self.best_x is None:
            self.best = value
            self.best_x = x.copy()
        self.trace.append(self.best)
        if len(self._memo) < 4:
            self._memo[key] = value
        return value

    def finite(self, x):
        v = self(x)
        return v if np.isfinite(v) else _LARGE


def minimize(
    objective,
    x0,
    max_evaluations: int = DEFAULT_BUDGET,
    seed=None,
    method: str = "cobyla",
    rhobeg: float = 1.0,
    tol: float = RHO_END,
) -> OptimizeResult:
    """Minimise ``objective`` starting from ``x0`` with at most
    ``max_evaluations`` calls. The result holds the best point seen."""
    if max_evaluations < 1:
        raise InputError("max_evaluations must be at least 1")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not np.all(np.isfinite(x0)):
        raise InputError("starting point contains non-finite entries")
    tracker = _Tracker(objective, max_evaluations)
    if not np.isfinite(tracker(x0)):
        raise InputError("objective is not finite at the starting point")

    converged = False
    try:
        if method == "cobyla":
            res = _sp.minimize(
                tracker.finite,
                x0,
                method="COBYLA",
                options={"maxiter": max_evaluations, "rhobeg": rhobeg, "tol": tol},
            )
            converged = bool(res.success)
        elif method == "nelder-mead":
            converged = _nelder_mead(tracker, x0, rhobeg, tol, np.random.default_rng(seed))
        else:
            raise InputError(f"unknown optimizer {method!r}")
    except _BudgetExhausted:
        converged = False
    return OptimizeResult(tracker.best_x, tracker.best, tracker.n, converged, tracker.trace)


def _nelder_mead(f, x0, step, tol, rng) -> bool:
    # rng only orders ties among equal vertices, keeping runs reproducible per seed
    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += step
        simplex.append(v)
    values = [f(v) for v in simplex]
    while True:
        order = np.lexsort((rng.permutation(n + 1), values))
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        spread = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        if spread < tol and abs(values[-1] - values[0]) < tol:
            return True
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0]
        for i in range(1, n + 1):
            simplex[i] = best + 0.5 * (simplex[i] - best)
            values[i] = f(simplex[i])
