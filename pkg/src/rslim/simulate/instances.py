"""Seeded spiked-Wigner instances and the replicate harness."""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from ..prior import Prior


@dataclass(frozen=True, eq=False)
class Instance:
    """One draw of ``Y_ij = sqrt(lam/n) x_i x_j + z_ij`` observed for i < j.

    ``y_upper`` holds the n(n-1)/2 observations in ``np.triu_indices(n, 1)`` order.
    """

    n: int
    lam: float
    x_true: np.ndarray
    y_upper: np.ndarray
    seed: int

    def y_matrix(self) -> np.ndarray:
        """Symmetric completion with a zero diagonal."""
        y = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        y[iu] = self.y_upper
        return y + y.T


def replicate_seed(master_seed: int, replicate: int) -> int:
    """64-bit seed of replicate ``r``; independent of scheduling and thread count."""
    hi, lo = np.random.SeedSequence([int(master_seed), int(replicate)]).generate_state(2)
    return (int(hi) << 32) | int(lo)


def sample_prior(prior: Prior, size: int, rng: np.random.Generator) -> np.ndarray:
    if prior.is_gaussian:
        return rng.standard_normal(size)
    if not prior.is_scalar:
        raise ValueError("instances need a scalar prior")
    return rng.choice(prior.atoms, size=size, p=prior.weights)


def gen_gaussian_instance(prior: Prior, lam: float, n: int, seed: int) -> Instance:
    if n < 2:
        raise ValueError("n must be >= 2")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    rng = np.random.default_rng(seed)
    x = sample_prior(prior, n, rng)
    i, j = np.triu_indices(n, 1)
    z = rng.standard_normal(len(i))
    y = np.sqrt(lam / n) * x[i] * x[j] + z
    return Instance(n=int(n), lam=float(lam), x_true=x, y_upper=y, seed=int(seed))


def matrix_mse(x_true, x_hat, scale: float = 1.0) -> float:
    """(2/n^2) sum_{i<j} (X_i X_j - scale x_i x_j)^2 without forming n x n matrices."""
    x = np.asarray(x_true, dtype=float)
    h = np.sqrt(scale) * np.asarray(x_hat, dtype=float)
    n = len(x)
    full = (x @ x) ** 2 - 2.0 * (x @ h) ** 2 + (h @ h) ** 2
    diag = np.sum((x * x - h * h) ** 2)
    return float((full - diag) / n**2)


def run_replicates(fn, master_seed: int, replicates: int, executor: Executor | None = None) -> list:
    """Call ``fn(r, seed_r)`` for every replicate; results come back in replicate order."""
    seeds = [replicate_seed(master_seed, r) for r in range(replicates)]
    if executor is None:
        return [fn(r, s) for r, s in enumerate(seeds)]
    return list(executor.map(fn, range(replicates), seeds))
