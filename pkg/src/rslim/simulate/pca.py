"""Top eigenvector of Y / sqrt(n) and the rescaled rank-one estimate built on it."""
from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import eigsh
from sklearn.base import BaseEstimator

from ..errors import PowerIterationStalled
from .instances import Instance, matrix_mse

MAX_SWEEPS = 100_000


def _as_matrix(Y):
    if isinstance(Y, Instance):
        return Y.y_matrix()
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError("Y must be a square matrix or an Instance")
    return Y


def power_iteration(A, v0, tol: float = 1e-10, max_sweeps: int = MAX_SWEEPS):
    """Leading eigenpair of the symmetric matrix ``A`` (largest algebraic eigenvalue).

    A is shifted by its Gershgorin bound so the wanted eigenvalue is also the
    largest in magnitude.
    """
    shift = np.abs(A).sum(axis=1).max()
    v = v0 / np.linalg.norm(v0)
    theta = v @ A @ v
    for _ in range(max_sweeps):
        w = A @ v + shift * v
        v = w / np.linalg.norm(w)
        new = v @ A @ v
        if abs(new - theta) <= tol * max(abs(new), 1.0):
            return new, v
        theta = new
    raise PowerIterationStalled(f"power iteration did not settle in {max_sweeps} sweeps")


class PCAEstimator(BaseEstimator):
    """Spectral estimate of the spike from the top eigenvector of Y / sqrt(n).

    ``solver="lanczos"`` uses ARPACK; ``"power"`` runs plain shifted power
    iteration, which is slow near the bulk edge where the top gap is O(n^-2/3).
    """

    def __init__(self, lam=None, solver="lanczos", tol=1e-10, max_sweeps=MAX_SWEEPS, random_state=0):
        self.lam = lam
        self.solver = solver
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.random_state = random_state

    def fit(self, Y, y=None):
        A = _as_matrix(Y)
        n = A.shape[0]
        A = A / np.sqrt(n)
        rng = np.random.default_rng(self.random_state)
        v0 = rng.standard_normal(n)
        if self.solver == "lanczos":
            vals, vecs = eigsh(A, k=1, which="LA", v0=v0, tol=self.tol)
            theta, v = float(vals[0]), vecs[:, 0]
        elif self.solver == "power":
            theta, v = power_iteration(A, v0, self.tol, self.max_sweeps)
        else:
            raise ValueError(f"unknown solver {self.solver!r}")
        # fix the sign so repeated fits agree
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        self.top_eig_ = float(theta)
        self.v_ = v * np.sqrt(n) / np.linalg.norm(v)
        return self

    def delta(self) -> float:
        """Optimal rescaling max(0, 1 - 1/lambda) of v v^T."""
        if self.lam is None:
            raise ValueError("lam is needed for the rescaled estimate")
        return max(0.0, 1.0 - 1.0 / self.lam)

    def score_mse(self, x_true) -> float:
        return matrix_mse(x_true, self.v_, scale=self.delta())


def pca_estimate(instance: Instance, solver: str = "lanczos") -> dict:
    est = PCAEstimator(lam=instance.lam, solver=solver, random_state=instance.seed % 2**32).fit(instance)
    return {"v": est.v_, "top_eig": est.top_eig_, "mse_opt": est.score_mse(instance.x_true)}
