"""State evolution ``q <- E X^2 - mmse(lambda q)`` and the quantities built on it.

The limit reached from a vanishing initialisation is the overlap an
AMP-type algorithm is expected to achieve; comparing it with the maximiser
of the potential separates the easy and the (conjecturally) hard regimes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import scalar_channel as sc
from .errors import NoConvergence
from .prior import Prior

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
ETA_FACTOR = 1e-8
ETA_SENSITIVITY = 1e-6


@dataclass
class SeTrace:
    lam: float
    eta: float
    iterates: list[float] = field(default_factory=list)
    converged: bool = False
    q_limit: float = float("nan")
    iterations: int = 0
    residual: float = float("nan")


def g_prime_zero(prior: Prior) -> float:
    """Derivative of G at zero SNR, Var(X)^2 (the posterior is the prior there)."""
    return float(prior.variance**2)


def _step(prior: Prior, lam: float, q: float) -> float:
    return min(max(sc.overlap_g(prior, lam * q), 0.0), prior.second_moment)


def iterate(prior: Prior, lam: float, q0: float, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER, raise_on_failure: bool = True) -> SeTrace:
    """Run the recursion from ``q0`` until the remaining distance is below ``tol``.

    The iterates of a monotone map are monotone, so once successive steps
    shrink geometrically with ratio r the tail is bounded by step * r / (1 - r);
    this, rather than the raw step size, is compared to ``tol`` so that a slow
    start near an unstable fixed point is not mistaken for convergence.
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    ex2 = prior.second_moment
    if not -1e-12 <= q0 <= ex2 + 1e-12:
        raise ValueError(f"q0 must lie in [0, {ex2}]")
    q = float(min(max(q0, 0.0), ex2))
    trace = SeTrace(lam=float(lam), eta=float(q0), iterates=[q])
    prev_step = None
    for t in range(1, max_iter + 1):
        q_next = _step(prior, lam, q)
        step = abs(q_next - q)
        trace.iterates.append(q_next)
        q = q_next
        trace.iterations = t
        if step == 0.0:
            trace.residual = 0.0
            trace.converged = True
            break
        if prev_step is not None and step < tol:
            ratio = step / prev_step
            tail = step * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
            trace.residual = step + tail
            if tail < tol:
                trace.converged = True
                break
        prev_step = step
    else:
        trace.residual = abs(trace.iterates[-1] - trace.iterates[-2])
    trace.q_limit = q
    if not trace.converged and raise_on_failure:
        raise NoConvergence(
            f"state evolution did not converge in {max_iter} iterations "
            f"(last step {trace.residual:.3g})", trace=trace)
    return trace


def q_tilde(prior: Prior, lam: float, tol: float = DEFAULT_TOL, max_iter: int = 10 * DEFAULT_MAX_ITER,
            check_eta: bool = True) -> float:
    """Fixed point reached from a vanishing initialisation.

    ``eta = 1e-8 E X^2`` stands in for the eta -> 0 limit; with ``check_eta`` the
    run is repeated at eta/10 and a warning is issued if the limit moves.
    """
    ex2 = prior.second_moment
    if abs(prior.mean) < 1e-12 and lam * ex2**2 < 1:
        return 0.0
    eta = ETA_FACTOR * ex2
    q = iterate(prior, lam, eta, tol=tol, max_iter=max_iter).q_limit
    if check_eta:
        q_small = iterate(prior, lam, eta / 10, tol=tol, max_iter=max_iter).q_limit
        if abs(q_small - q) > ETA_SENSITIVITY:
            warnings.warn(
                f"q_tilde moved by {abs(q_small - q):.3g} when eta was divided by 10",
                RuntimeWarning, stacklevel=2)
    return q


def algorithmic_mse(prior: Prior, lam: float) -> dict:
    """Matrix MSE conjectured to be the best reachable in polynomial time.

    Returned as a record flagged ``conjectured`` because the statement that
    no efficient algorithm beats it is unproven.
    """
    qt = q_tilde(prior, lam)
    return {
        "lambda": float(lam),
        "q_tilde": qt,
        "mse": float(prior.second_moment**2 - qt**2),
        "conjectured": True,
    }
