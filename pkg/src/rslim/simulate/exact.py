"""Exact Gibbs averages by enumerating every configuration in S^n."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import TooLarge
from ..prior import Prior
from .instances import Instance

MAX_STATES = 2**24
_CHUNK = 2**16


@dataclass(frozen=True)
class ExactStats:
    """Posterior averages for one instance.

    ``free_energy`` is log Z / n; its mean over instances estimates F_n.
    ``mi`` is (H(X) - log Z) / n, whose mean is I(X; Y) / n.
    ``overlap_sq_var`` is the posterior variance of (x.X)^2 and
    ``overlap_sq_mean`` its posterior mean.
    """

    free_energy: float
    matrix_mmse: float
    overlap_x_X: float
    overlap_replicas: float
    overlap_sq_mean: float
    overlap_sq_var: float
    pair_overlap: float
    mi: float

    def to_dict(self) -> dict:
        return asdict(self)


def _configs(atoms: np.ndarray, logw: np.ndarray, n: int, start: int, stop: int):
    """Configurations ``start..stop`` in base-|S| order, with their log prior weight."""
    m = len(atoms)
    idx = np.arange(start, stop)
    digits = np.empty((len(idx), n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        digits[:, i] = idx % m
        idx //= m
    return atoms[digits], logw[digits].sum(axis=1)


def exact_posterior_stats(instance: Instance, prior: Prior) -> ExactStats:
    if prior.is_gaussian or not prior.is_scalar:
        raise ValueError("enumeration needs a finite-support scalar prior")
    keep = prior.weights > 0
    atoms, logw = prior.atoms[keep], np.log(prior.weights[keep])
    n = instance.n
    total = len(atoms) ** n
    if total > MAX_STATES:
        raise TooLarge(f"|S|^n = {total} exceeds the enumeration cap {MAX_STATES}")
    lam = instance.lam
    a = np.sqrt(lam / n) * instance.y_matrix()
    x_true = instance.x_true

    def hamiltonian(c):
        sq = c * c
        return 0.5 * np.einsum("ki,ij,kj->k", c, a, c) - lam / (4 * n) * (sq.sum(1) ** 2 - (sq * sq).sum(1))

    # first pass: the log partition function, with a running max shift
    log_z = -np.inf
    for lo in range(0, total, _CHUNK):
        c, lp = _configs(atoms, logw, n, lo, min(total, lo + _CHUNK))
        e = hamiltonian(c) + lp
        top = max(log_z, e.max())
        log_z = top + np.log(np.exp(log_z - top) + np.exp(e - top).sum())

    m1 = np.zeros(n)
    m2 = np.zeros((n, n))
    s2 = s4 = 0.0
    for lo in range(0, total, _CHUNK):
        c, lp = _configs(atoms, logw, n, lo, min(total, lo + _CHUNK))
        p = np.exp(hamiltonian(c) + lp - log_z)
        m1 += p @ c
        m2 += (c * p[:, None]).T @ c
        ov2 = (c @ x_true / n) ** 2
        s2 += p @ ov2
        s4 += p @ ov2**2

    iu = np.triu_indices(n, 1)
    xx = np.outer(x_true, x_true)[iu]
    npairs = len(iu[0])
    h_true = float(hamiltonian(x_true[None, :])[0])
    return ExactStats(
        free_energy=float(log_z / n),
        matrix_mmse=float(np.sum((xx - m2[iu]) ** 2) / npairs),
        overlap_x_X=float(m1 @ x_true / n),
        overlap_replicas=float(m1 @ m1 / n),
        overlap_sq_mean=float(s2),
        overlap_sq_var=float(max(s4 - s2 * s2, 0.0)),
        pair_overlap=float(np.sum(xx * m2[iu]) / npairs),
        mi=float((h_true - log_z) / n),
    )


def _noise_features(instance: Instance) -> np.ndarray:
    """Zero-mean polynomials of the sign-gauged noise, used as control variates."""
    n, x = instance.n, instance.x_true
    i, j = np.triu_indices(n, 1)
    sign = np.where(x[i] * x[j] < 0, -1.0, 1.0)
    w = (instance.y_upper - np.sqrt(instance.lam / n) * x[i] * x[j]) * sign
    W = np.zeros((n, n))
    W[i, j] = w
    W = W + W.T
    s, sq = w.sum(), w @ w
    deg = W.sum(axis=1)
    paths = 0.5 * (deg @ deg - sq * 2)
    matchings = 0.5 * (s * s - sq) - paths
    return np.array([sq - len(w), paths, matchings, np.sum(w**4 - 6 * w**2 + 3)])


def _antithetic(instance: Instance) -> Instance:
    n, x = instance.n, instance.x_true
    i, j = np.triu_indices(n, 1)
    signal = np.sqrt(instance.lam / n) * x[i] * x[j]
    return Instance(n, instance.lam, x, 2 * signal - instance.y_upper, instance.seed)


def estimate_free_energy(prior: Prior, lam: float, n: int, replicates: int, seed: int,
                         executor=None) -> dict:
    """Monte Carlo estimate of F_n = E log Z_n / n with its standard error.

    Each replicate averages the instance with its noise-flipped twin, which
    cancels the odd orders of log Z in the noise; the even orders up to four
    are removed by regression on zero-mean noise polynomials.
    """
    from .instances import gen_gaussian_instance, run_replicates

    def one(r, s):
        inst = gen_gaussian_instance(prior, lam, n, s)
        f = 0.5 * (exact_posterior_stats(inst, prior).free_energy
                   + exact_posterior_stats(_antithetic(inst), prior).free_energy)
        return f, _noise_features(inst)

    out = run_replicates(one, seed, replicates, executor)
    y = np.array([f for f, _ in out])
    feats = np.array([c for _, c in out])
    design = np.column_stack([np.ones(len(y)), feats])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(len(y) - design.shape[1], 1)
    return {
        "free_energy": float(coef[0]),
        "stderr": float(np.sqrt(resid @ resid / dof / len(y))),
        "plain_mean": float(y.mean()),
        "plain_stderr": float(y.std(ddof=1) / np.sqrt(len(y))),
    }
