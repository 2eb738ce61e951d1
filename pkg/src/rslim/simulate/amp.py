"""Approximate message passing with the Bayes posterior-mean denoiser.

With B = sqrt(lam/n) Y the field h = B x - b x_prev behaves like
lam q X + sqrt(lam q) Z, i.e. a scalar channel at SNR gamma = lam q, so the
denoiser is the scalar posterior mean at that SNR applied to h / sqrt(gamma).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .. import scalar_channel as sc
from ..errors import Diverged
from ..prior import Prior
from .instances import Instance, matrix_mse
from .pca import PCAEstimator, _as_matrix

DIVERGE_FACTOR = 1e3
MEAN_ZERO = 1e-12


def _denoise(prior: Prior, gamma: float, h: np.ndarray):
    """Posterior mean and its derivative in h (the posterior variance)."""
    if gamma <= 0:
        return np.full_like(h, prior.mean), np.zeros_like(h)
    return sc.posterior_moments(prior, gamma, h / np.sqrt(gamma))


class AMPEstimator(BaseEstimator):
    """Rank-one AMP for the spiked Wigner model.

    Initialisation is spectral for centred priors (the top eigenvector is
    read as a scalar channel at SNR lam - 1) and the prior mean otherwise.
    ``damping`` mixes the previous iterate into the new one; 0 gives the
    undamped recursion that state evolution describes.
    """

    def __init__(self, prior, lam, max_iter=30, damping=0.2, tol=1e-10, random_state=0):
        self.prior = prior
        self.lam = lam
        self.max_iter = max_iter
        self.damping = damping
        self.tol = tol
        self.random_state = random_state

    def _init(self, Y):
        n = Y.shape[0]
        prior, lam = self.prior, float(self.lam)
        if abs(prior.mean) > MEAN_ZERO:
            return np.full(n, prior.mean), np.zeros(n)
        pca = PCAEstimator(random_state=self.random_state).fit(Y)
        v = pca.v_
        gamma0 = max(lam - 1.0, 0.0)
        if gamma0 == 0:
            return np.full(n, prior.mean), np.zeros(n)
        # v ~ sqrt(1 - 1/lam) X + sqrt(1/lam) g, i.e. sqrt(lam) v is a channel output at SNR lam - 1
        mean, var = sc.posterior_moments(prior, gamma0, np.sqrt(lam) * v)
        # B x0 carries a component along v from the noise; for a linear x0 = a v
        # it is exactly a v, which the memory term removes
        slope = np.sqrt(lam * gamma0) * var.mean()
        return mean, slope * v

    def fit(self, Y, x_true=None):
        if not 0 <= self.damping < 1:
            raise ValueError("damping must lie in [0, 1)")
        if isinstance(Y, Instance) and x_true is None:
            x_true = Y.x_true
        A = _as_matrix(Y)
        n = A.shape[0]
        prior, lam = self.prior, float(self.lam)
        B = np.sqrt(lam / n) * A
        limit = DIVERGE_FACTOR * np.sqrt(n * prior.second_moment)
        x, memory = self._init(A)
        q_hat = [float(x @ x / n)]
        mse, overlap = [], []
        if x_true is not None:
            mse.append(matrix_mse(x_true, x))
            overlap.append(abs(float(x @ x_true)) / n)
        self.converged_ = False
        for t in range(int(self.max_iter)):
            h = B @ x - memory
            gamma = lam * q_hat[-1]
            new, var = _denoise(prior, gamma, h)
            new = (1 - self.damping) * new + self.damping * x
            # Onsager term for the next step: (lam/n) sum eta'(h) times the current iterate
            memory = lam * (1 - self.damping) * var.mean() * x
            step = float(np.sum((new - x) ** 2) / n)
            x = new
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > limit:
                raise Diverged(f"AMP iterate norm exceeded {limit:.3g} at step {t + 1}")
            q_hat.append(float(x @ x / n))
            if x_true is not None:
                mse.append(matrix_mse(x_true, x))
                overlap.append(abs(float(x @ x_true)) / n)
            if step < self.tol:
                self.converged_ = True
                break
        self.x_hat_ = x
        self.n_iter_ = len(q_hat) - 1
        self.q_hat_trajectory_ = np.array(q_hat)
        if x_true is not None:
            self.mse_trajectory_ = np.array(mse)
            self.overlap_trajectory_ = np.array(overlap)
        return self


def amp(instance: Instance, prior: Prior, max_iter: int = 30, damping: float = 0.2, seed: int = 0) -> dict:
    est = AMPEstimator(prior, instance.lam, max_iter=max_iter, damping=damping, random_state=seed).fit(instance)
    return {
        "x_hat": est.x_hat_,
        "mse_trajectory": est.mse_trajectory_,
        "overlap_trajectory": est.overlap_trajectory_,
    }
