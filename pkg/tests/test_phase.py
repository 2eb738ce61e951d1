import numpy as np
import pytest

from rslim import phase
from rslim import prior as P
from rslim import rs_potential as rs
from rslim import state_evolution as se
from rslim.errors import BadParam, NotCentered


def test_pca_mse():
    assert phase.pca_mse(0.5) == 1 and phase.pca_mse(2.0) == 0.75 and phase.pca_mse(1.0) == 1


def test_lambda_c_examples():
    assert abs(phase.lambda_c(P.rademacher()) - 1) < 1e-3
    assert abs(phase.lambda_c(P.sparse_rademacher(0.5)) - 1) < 1e-3


def test_lambda_c_sparse_matches_dense_grid():
    pr = P.sparse_rademacher(0.04)
    lc = phase.lambda_c(pr)
    assert lc < 1
    grid = np.linspace(0.4, 1.0, 61)
    positive = [lam for lam in grid if rs.solve(pr, lam).q_star > 1e-7]
    assert abs(min(positive) - lc) <= 0.01 + 1e-9


def test_lambda_c_requires_centred():
    with pytest.raises(NotCentered):
        phase.lambda_c(P.bernoulli(0.2))
    with pytest.raises(BadParam):
        phase.lambda_c(P.make_discrete([-2, 2], [0.5, 0.5]))


def test_threshold_brackets():
    for pr in (P.rademacher(), P.sparse_rademacher(0.04), P.sbm_two_point(0.1)):
        lc = phase.lambda_c(pr)
        assert rs.solve(pr, lc - 2e-3).q_star == 0
        assert rs.solve(pr, lc + 2e-3).q_star > 0


def test_mmse_below_pca():
    for pr in (P.rademacher(), P.sparse_rademacher(0.25), P.sbm_two_point(0.3)):
        for lam in np.linspace(0.2, 4, 12):
            assert rs.solve(pr, lam).mmse_limit <= phase.pca_mse(lam) + 1e-8
    for lam in (1.5, 2.0, 3.0):
        assert rs.solve(P.rademacher(), lam).mmse_limit < phase.pca_mse(lam) - 1e-4


def test_sweep_rows():
    rows, p_star = phase.sweep_p([0.1, 0.3, 0.5])
    by = {r.param: r for r in rows}
    assert by[0.5].lambda_c == 1 and by[0.1].lambda_c < 1
    assert abs(p_star - phase.P_STAR_EXACT) < 1e-3
    for r in rows:
        assert 0 < r.lambda_c <= 1
        if r.hard:
            assert r.q_tilde < r.q_star - 1e-6 or r.hard_lo > r.lambda_c
            assert r.lambda_c < r.hard_lo <= r.hard_hi < 1


def test_sweep_rho_hard_row():
    rows, rho_star = phase.sweep_rho([0.04, 1.0])
    by = {r.param: r for r in rows}
    assert by[1.0].lambda_c == 1
    assert by[0.04].hard
    assert 0.07 < rho_star < 0.11
    lam = by[0.04].hard_lo
    pr = P.sparse_rademacher(0.04)
    assert se.q_tilde(pr, lam) < rs.solve(pr, lam).q_star - 1e-6


def test_sweep_grid_validation():
    with pytest.raises(BadParam):
        phase.sweep_p([0.6])
    with pytest.raises(BadParam):
        phase.sweep_rho([0.0])
