"""Two-community stochastic block model: graphs, exact tiny-n posterior, overlap."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from ..errors import BadParams, TooLarge
from ..prior import sbm_two_point

MAX_NODES = 14


@dataclass(frozen=True, eq=False)
class SbmGraph:
    """Labels in {1, 2} (1 with probability p) and a symmetric boolean adjacency."""

    n: int
    p: float
    d: float
    epsilon: float
    labels: np.ndarray
    adjacency: np.ndarray
    seed: int

    @property
    def lam(self) -> float:
        return self.d * self.epsilon**2


def connectivity(p: float, d: float, eps: float, n: int) -> np.ndarray:
    """Edge probabilities (d/n) [[a, b], [b, c]] with the degree-balancing a, b, c."""
    if not 0 < p < 1:
        raise BadParams("p must lie in (0, 1)")
    if d <= 0 or n < 2:
        raise BadParams("need d > 0 and n >= 2")
    a = 1.0 + (1.0 - p) * eps / p
    b = 1.0 - eps
    c = 1.0 + p * eps / (1.0 - p)
    m = (d / n) * np.array([[a, b], [b, c]])
    if np.any(m < 0) or np.any(m > 1):
        raise BadParams(f"edge probabilities {m.ravel().round(4).tolist()} leave [0, 1]")
    return m


def gen_sbm(p: float, d: float, eps: float, n: int, seed: int) -> SbmGraph:
    m = connectivity(p, d, eps, n)
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < p, 1, 2)
    i, j = np.triu_indices(n, 1)
    prob = m[labels[i] - 1, labels[j] - 1]
    edges = rng.random(len(i)) < prob
    adj = np.zeros((n, n), dtype=bool)
    adj[i[edges], j[edges]] = True
    return SbmGraph(int(n), float(p), float(d), float(eps), labels, adj | adj.T, int(seed))


def centred_labels(labels, p: float) -> np.ndarray:
    """X~ = phi_p(label): sqrt((1-p)/p) for community 1, -sqrt(p/(1-p)) for community 2."""
    prior = sbm_two_point(p)
    return np.where(np.asarray(labels) == 1, prior.atoms[0], prior.atoms[1])


def exact_sbm_stats(graph: SbmGraph, p: float | None = None) -> dict:
    """Per-instance I(X; G)/n sample, MMSE^G and the overlap of the MAP labelling.

    The mutual information sample is log P(G | X) - log P(G), whose mean over
    graphs is I(X; G).
    """
    n = graph.n
    if n > MAX_NODES:
        raise TooLarge(f"exact SBM enumeration is capped at n = {MAX_NODES}")
    p = graph.p if p is None else float(p)
    m = connectivity(p, graph.d, graph.epsilon, n)
    g = graph.adjacency.astype(float)
    # s = 1 marks community 1; rows enumerate all 2^n labellings
    states = ((np.arange(2**n)[:, None] >> np.arange(n)[::-1]) & 1).astype(float)

    def loglik(s):
        t = 1.0 - s
        n1 = s.sum(axis=1)
        n2 = n - n1
        gs, gt = s @ g, t @ g
        e11 = 0.5 * np.einsum("ki,ki->k", gs, s)
        e22 = 0.5 * np.einsum("ki,ki->k", gt, t)
        e12 = np.einsum("ki,ki->k", gs, t)
        pairs = [(e11, n1 * (n1 - 1) / 2, m[0, 0]), (e22, n2 * (n2 - 1) / 2, m[1, 1]), (e12, n1 * n2, m[0, 1])]
        out = np.zeros(len(s))
        for e, tot, prob in pairs:
            out += xlogy(e, prob) + xlogy(tot - e, 1.0 - prob)
        return out + n1 * np.log(p) + n2 * np.log1p(-p)

    logpost = loglik(states)
    top = logpost.max()
    log_pg = top + np.log(np.exp(logpost - top).sum())
    post = np.exp(logpost - log_pg)
    truth = (graph.labels == 1).astype(float)[None, :]
    prior_true = truth.sum() * np.log(p) + (n - truth.sum()) * np.log1p(-p)
    mi = float(loglik(truth)[0] - prior_true - log_pg) / n

    xt = centred_labels(np.where(states == 1, 1, 2), p)
    second = (xt * post[:, None]).T @ xt
    x_true = centred_labels(graph.labels, p)
    iu = np.triu_indices(n, 1)
    mmse_g = float(np.mean((np.outer(x_true, x_true)[iu] - second[iu]) ** 2))
    best = np.where(states[np.argmax(post)] == 1, 1, 2)
    return {"mi_per_node": mi, "mmse_g": mmse_g, "overlap": community_overlap(graph.labels, best)}


def community_overlap(x, y) -> float:
    """Chance-corrected agreement of two {1, 2} labellings, maximised over label swaps."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("label vectors must have equal length")
    n = len(x)
    best = -np.inf
    for perm in ((1, 2), (2, 1)):
        total = 0.0
        for lab, img in zip((1, 2), perm):
            sx, sy = x == lab, y == img
            total += np.sum(sx & sy) - np.sum(sx) * np.sum(sy) / n
        best = max(best, total / n)
    return float(best)
