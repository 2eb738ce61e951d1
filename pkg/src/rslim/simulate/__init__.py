"""Finite-n simulation: instances, exact enumeration, AMP, PCA and block-model graphs."""
from .amp import AMPEstimator, amp
from .exact import ExactStats, estimate_free_energy, exact_posterior_stats
from .instances import Instance, gen_gaussian_instance, matrix_mse, replicate_seed, run_replicates
from .pca import PCAEstimator, pca_estimate
from .sbm import SbmGraph, community_overlap, exact_sbm_stats, gen_sbm

__all__ = [
    "AMPEstimator", "ExactStats", "Instance", "PCAEstimator", "SbmGraph", "amp",
    "community_overlap", "estimate_free_energy", "exact_posterior_stats", "exact_sbm_stats",
    "gen_gaussian_instance", "gen_sbm", "matrix_mse", "pca_estimate", "replicate_seed",
    "run_replicates",
]
