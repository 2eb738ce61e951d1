import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rslim import prior as P
from rslim.errors import BadParam, DuplicateAtom, NonPositiveMass


def test_rademacher_moments():
    r = P.make_discrete([1, -1], [0.5, 0.5])
    assert r.mean == 0 and r.second_moment == 1


def test_bernoulli_moments():
    b = P.make_discrete([0, 1], [0.8, 0.2])
    assert b.mean == pytest.approx(0.2, abs=1e-15)
    assert b.second_moment == pytest.approx(0.2, abs=1e-15)


def test_sbm_two_point_centred():
    p = 0.3
    pr = P.make_discrete([math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p))], [p, 1 - p])
    assert abs(pr.mean) < 1e-12 and abs(pr.second_moment - 1) < 1e-12


def test_sparse_rademacher():
    assert np.allclose(np.sort(P.sparse_rademacher(1.0).atoms), [-1, 1])
    s = P.sparse_rademacher(0.25)
    order = np.argsort(s.atoms)
    assert np.allclose(s.atoms[order], [-2, 0, 2])
    assert np.allclose(s.weights[order], [0.125, 0.75, 0.125])
    assert s.second_moment == pytest.approx(1, abs=1e-12)


def test_gaussian_moments():
    g = P.gaussian_unit()
    assert P.moment(g, 1) == 0 and P.moment(g, 2) == 1
    assert g.is_gaussian


def test_moment_orders():
    assert P.moment(P.rademacher(), 2) == 1
    assert P.moment(P.bernoulli(0.2), 1) == pytest.approx(0.2)
    with pytest.raises(BadParam):
        P.moment(P.rademacher(), 3)


def test_errors():
    with pytest.raises(NonPositiveMass):
        P.make_discrete([0, 1], [0, 0])
    with pytest.raises(DuplicateAtom):
        P.make_discrete([1, 1], [0.5, 0.5])
    with pytest.raises(BadParam):
        P.make_discrete([1, 2], [0.5, -0.1])
    for bad in (lambda: P.bernoulli(0), lambda: P.sparse_rademacher(1.5), lambda: P.sbm_two_point(1.0),
                lambda: P.builtin("nope")):
        with pytest.raises(BadParam):
            bad()


def test_parse_and_file(tmp_path):
    assert P.parse_prior("sparse_rademacher:0.25").second_moment == pytest.approx(1)
    assert P.parse_prior("gaussian").is_gaussian
    f = tmp_path / "p.txt"
    f.write_text("# two atoms\n1 0.5\n-1 0.5\n")
    assert P.load_prior_file(f).variance == pytest.approx(1)
    f2 = tmp_path / "p2.txt"
    f2.write_text("1 0 0.5\n0 1 0.5\n")
    v = P.load_prior_file(f2, k=2)
    assert np.allclose(v.mean, [0.5, 0.5])
    assert np.allclose(v.second_moment, np.diag([0.5, 0.5]))


@pytest.mark.parametrize("family", [P.rademacher, lambda: P.sparse_rademacher(0.1),
                                    lambda: P.sbm_two_point(0.2), lambda: P.sbm_two_point(0.5)])
def test_centred_families(family):
    pr = family()
    assert abs(P.moment(pr, 1)) < 1e-12 and abs(P.moment(pr, 2) - 1) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.floats(0.01, 10)), min_size=1, max_size=8,
                unique_by=lambda t: t[0]))
def test_moments_match_weighted_sums(pairs):
    atoms = np.array([a / 7 for a, _ in pairs])
    w = np.array([w for _, w in pairs])
    pr = P.make_discrete(atoms, w)
    w = w / w.sum()
    assert abs(pr.weights.sum() - 1) < 1e-12
    assert pr.mean == pytest.approx(float(w @ atoms), abs=1e-13)
    assert pr.second_moment == pytest.approx(float(w @ atoms**2), abs=1e-13)
