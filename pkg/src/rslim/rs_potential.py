"""Replica-symmetric potential F(lambda, q) and its global maximiser.

F is evaluated as ``lambda q/2 (E X^2 - q/2) - i(lambda q)`` so the same
quadrature engine serves the scalar mutual information and the potential.
Its q-derivative is ``lambda/2 (E X^2 - q - mmse(lambda q))``, hence the
stationary points are exactly the fixed points of ``q = E X^2 - mmse(lambda q)``.
"""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import scalar_channel as sc
from .errors import NoConvergence
from .prior import Prior

GRID_POINTS = 512
TIE_TOL = 1e-9
ROOT_XTOL = 1e-14
MAX_ROOT_ITER = 200
# extra scan points close to q = 0, where small roots appear just above a
# continuous transition and the uniform grid is too coarse to bracket them
_NEAR_ZERO = 10.0 ** -np.arange(10, 2, -1)
_SCAN_ORDER = 488
_ZERO_TOL = 1e-15


@dataclass(frozen=True)
class FixedPoint:
    q: float
    f: float
    stable: bool


@dataclass(frozen=True)
class RsSolution:
    """Asymptotic limits for one (prior, lambda) pair."""

    lam: float
    q_star: float
    f_sup: float
    mi_limit: float
    mmse_limit: float
    dmse: float
    fixed_points: tuple[FixedPoint, ...] = ()
    degenerate: bool = False
    maximizers: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["fixed_points"] = [asdict(fp) for fp in self.fixed_points]
        d["maximizers"] = list(self.maximizers)
        return d


def _check_scalar(prior: Prior):
    if not prior.is_scalar:
        raise ValueError("the rank-one potential needs a scalar prior; use rank_k for vector priors")


def potential(prior: Prior, lam: float, q, order: int = sc.DEFAULT_ORDER, tol: float | None = sc.DEFAULT_TOL):
    """F(lambda, q), vectorised over ``q``. F(lambda, 0) = 0 exactly."""
    _check_scalar(prior)
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("q must be >= 0")
    mi = sc.mutual_info_scalar(prior, lam * q, order=order, tol=tol)
    return 0.5 * lam * q * (prior.second_moment - 0.5 * q) - mi


def dmse(prior: Prior) -> float:
    """Error of the best data-independent estimator, E[X^2]^2 - E[X]^4."""
    _check_scalar(prior)
    return float(prior.second_moment**2 - prior.mean**4)


def fixed_point_residual(prior: Prior, lam: float, q):
    """G(lambda q) - q = E X^2 - mmse(lambda q) - q; zero at stationary points of F."""
    q = np.asarray(q, dtype=float)
    return sc.overlap_g(prior, lam * q) - q


def _zero_is_local_max(prior: Prior, lam: float) -> bool:
    # G'(0) = Var(X)^2, so the slope of the residual at 0 is lam Var^2 - 1;
    # at zero slope the quadratic term decides, read off a small probe point
    slope = lam * prior.variance**2 - 1.0
    if abs(slope) > 1e-12:
        return slope < 0
    probe = 1e-4 * prior.second_moment
    return float(fixed_point_residual(prior, lam, probe)) <= 0


def solve(prior: Prior, lam: float) -> RsSolution:
    """Global maximiser of q -> F(lambda, q) on [0, E X^2].

    All fixed points are located by a sign scan followed by bracketed root
    refinement; the candidate maximisers are the local maxima of F among them.
    """
    _check_scalar(prior)
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    lam = float(lam)
    ex2 = float(prior.second_moment)
    if prior.is_point_mass_at_zero:
        return RsSolution(lam, 0.0, 0.0, 0.0, 0.0, 0.0, (FixedPoint(0.0, 0.0, True),), False, (0.0,))

    def resid(q):
        return sc.overlap_g(prior, lam * q) - q

    grid = np.unique(np.concatenate([np.linspace(0.0, ex2, GRID_POINTS), ex2 * _NEAR_ZERO]))
    r = sc.channel_terms(prior, lam * grid, order=_SCAN_ORDER, tol=None)[2] - grid

    roots: list[tuple[float, bool]] = []
    zero_root = abs(prior.mean) ** 2 <= _ZERO_TOL
    if zero_root:
        roots.append((0.0, _zero_is_local_max(prior, lam)))
        r[0] = np.nan
    for i in range(len(grid) - 1):
        a, b = r[i], r[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0 or a == b == 0:
            continue
        if b == 0 and i + 1 < len(grid) - 1:
            continue  # handled as the left end of the next interval
        lo, hi = grid[i], grid[i + 1]
        flo, fhi = resid(lo), resid(hi)
        if flo == 0:
            root = lo
        elif fhi == 0:
            root = hi
        elif flo * fhi > 0:
            # the scan rule and the validated rule disagree about a sign within
            # quadrature noise; this is a tangency and carries no extra maximum
            continue
        else:
            root, info = brentq(resid, lo, hi, xtol=ROOT_XTOL, maxiter=MAX_ROOT_ITER,
                                full_output=True, disp=False)
            if not info.converged:
                raise NoConvergence(f"root refinement on [{lo}, {hi}] did not converge")
        roots.append((float(root), bool(flo > 0 or (flo == 0 and fhi < 0))))
    if abs(r[-1]) <= _ZERO_TOL and not any(abs(q - ex2) < 1e-12 for q, _ in roots):
        roots.append((ex2, True))

    qs = np.array([q for q, _ in roots])
    fvals = potential(prior, lam, qs)
    fixed = tuple(FixedPoint(float(q), float(f), s) for (q, s), f in zip(roots, fvals))
    candidates = [fp for fp in fixed if fp.stable]
    best = max(candidates, key=lambda fp: (fp.f, fp.q))
    tied = sorted(fp.q for fp in candidates if best.f - fp.f <= TIE_TOL)
    # at a tie the jump point is reported on its upper branch
    q_star = tied[-1]
    f_sup = best.f
    return RsSolution(
        lam=lam,
        q_star=q_star,
        f_sup=f_sup,
        mi_limit=lam * ex2**2 / 4 - f_sup,
        mmse_limit=ex2**2 - q_star**2,
        dmse=dmse(prior),
        fixed_points=fixed,
        degenerate=len(tied) > 1,
        maximizers=tuple(tied),
    )


def solve_many(prior: Prior, lambdas, executor: Executor | None = None) -> list[RsSolution]:
    """Solve on a grid of lambda values; output order follows the input."""
    lambdas = [float(v) for v in lambdas]
    if executor is None:
        return [solve(prior, v) for v in lambdas]
    return list(executor.map(lambda v: solve(prior, v), lambdas))
