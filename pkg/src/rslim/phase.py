"""Phase thresholds and phase-diagram sweeps for centred unit-variance priors."""
from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import asdict, dataclass

import numpy as np

from . import prior as priors
from .errors import BadParam, NotCentered
from .prior import Prior
from .rs_potential import solve
from .state_evolution import q_tilde

Q_POSITIVE = 1e-7
LAMBDA_TOL = 1e-6
PARAM_TOL = 1e-4
HARD_GAP = 1e-6


@dataclass(frozen=True)
class PhaseRow:
    """One parameter value of a sweep.

    ``q_star``/``q_tilde`` are evaluated at ``lam``, the midpoint of the
    interval (lambda_c, 1) when it is non-empty and lambda = 1 otherwise.
    ``hard_lo``/``hard_hi`` bound the lambda grid points where q_tilde < q_star.
    """

    param: float
    lam: float
    lambda_c: float
    q_star: float
    q_tilde: float
    hard: bool
    pca_mse: float
    hard_lo: float = float("nan")
    hard_hi: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def pca_mse(lam: float) -> float:
    """Limit of the matrix MSE of the optimally rescaled top eigenvector."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if lam <= 1:
        return 1.0
    return (2.0 - 1.0 / lam) / lam


def _check_centered(prior: Prior):
    if not prior.is_scalar:
        raise BadParam("thresholds are defined for scalar priors")
    if abs(prior.mean) >= 1e-10:
        raise NotCentered(f"prior mean is {prior.mean:g}; lambda_c needs E X = 0")
    if abs(prior.second_moment - 1.0) > 1e-10:
        raise BadParam("lambda_c assumes E X^2 = 1; rescale the prior")


def _nontrivial(prior: Prior, lam: float) -> bool:
    return solve(prior, lam).q_star > Q_POSITIVE


def lambda_c(prior: Prior, tol: float = LAMBDA_TOL) -> float:
    """sup{lambda : q*(lambda) = 0}, by bisection of ``q* > 1e-7`` on (0, 1]."""
    _check_centered(prior)
    if not _nontrivial(prior, 1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _nontrivial(prior, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def hard_interval(prior: Prior, lam_c: float, n_grid: int = 8, lam_max: float = 1.0):
    """Grid points of (lambda_c, lam_max) where q_tilde < q_star - 1e-6."""
    if lam_c >= lam_max:
        return []
    grid = np.linspace(lam_c, lam_max, n_grid + 2)[1:-1]
    hard = []
    for lam in grid:
        if q_tilde(prior, lam, check_eta=False) < solve(prior, lam).q_star - HARD_GAP:
            hard.append(float(lam))
    return hard


def phase_row(prior: Prior, param: float, n_grid: int = 8) -> PhaseRow:
    lc = lambda_c(prior)
    lam = 0.5 * (lc + 1.0) if lc < 1.0 else 1.0
    qs = solve(prior, lam).q_star
    qt = q_tilde(prior, lam, check_eta=False)
    hard = hard_interval(prior, lc, n_grid=n_grid)
    return PhaseRow(
        param=float(param),
        lam=float(lam),
        lambda_c=lc,
        q_star=qs,
        q_tilde=qt,
        hard=bool(hard),
        pca_mse=pca_mse(lam),
        hard_lo=min(hard) if hard else float("nan"),
        hard_hi=max(hard) if hard else float("nan"),
    )


def _boundary(family, lo: float, hi: float, tol: float = PARAM_TOL) -> float:
    """Bisect the parameter where lambda_c drops below 1.

    Assumes lambda_c(family(lo)) < 1 and lambda_c(family(hi)) = 1. Below the
    boundary the maximiser at lambda = 1 is already positive, so a single
    solve decides each side.
    """
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _nontrivial(family(mid), 1.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sweep(family, grid, executor: Executor | None, n_grid: int):
    grid = [float(v) for v in grid]

    def row(v):
        return phase_row(family(v), v, n_grid=n_grid)

    rows = list(executor.map(row, grid)) if executor else [row(v) for v in grid]
    below = [r.param for r in rows if r.lambda_c < 1.0]
    at_one = [r.param for r in rows if r.lambda_c >= 1.0]
    boundary = float("nan")
    if below and at_one:
        lo = max(below)
        above = [v for v in at_one if v > lo]
        if above:
            boundary = _boundary(family, lo, min(above))
    return rows, boundary


def sweep_rho(grid, executor: Executor | None = None, n_grid: int = 8):
    """lambda_c over sparsity levels of the sparse Rademacher prior, and rho*."""
    if any(not 0 < v <= 1 for v in grid):
        raise BadParam("rho grid must lie in (0, 1]")
    return _sweep(priors.sparse_rademacher, grid, executor, n_grid)


def sweep_p(grid, executor: Executor | None = None, n_grid: int = 8):
    """lambda_c over the community size p of the two-point block-model prior, and p*."""
    if any(not 0 < v <= 0.5 for v in grid):
        raise BadParam("p grid must lie in (0, 0.5]")
    return _sweep(priors.sbm_two_point, grid, executor, n_grid)


P_STAR_EXACT = 0.5 - 1.0 / (2.0 * math.sqrt(3.0))
