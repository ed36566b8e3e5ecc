import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrowescape import interaction as ia
from narrowescape.asymptotics import two_clustered, two_separated
from narrowescape.errors import InvalidGap, SingularKernel
from narrowescape.geometry import BoundaryArc, TargetConfiguration


def capacity_alpha(d):
    """Per-arc mass for two unit intervals centered at +-d/2.

    The set {a <= |x| <= b} maps onto [a^2, b^2] under x -> x^2, so its
    logarithmic capacity is sqrt((b^2 - a^2)/4) = sqrt(d/2).  The density with
    unit log-potential has total mass 1/ln(capacity).
    """
    return 1.0 / math.log(d / 2.0)


def test_single_arc_reduces_to_carleman():
    sol = ia.solve_cluster(ia.ClusterGeometry(np.zeros((1, 1))))
    assert sol.alphas[0] == pytest.approx(-1.0 / math.log(2.0), abs=1e-13)


@pytest.mark.parametrize("d", [2.5, 3.0, 4.0, 10.0, 100.0])
def test_pair_matches_capacity(d):
    assert ia.alpha_of_d(d) == pytest.approx(capacity_alpha(d), rel=1e-9)


def test_pair_examples():
    a25, a4, a10 = ia.alpha_of_d(2.5), ia.alpha_of_d(4.0), ia.alpha_of_d(10.0)
    assert a25 > a4 > a10 > 0
    assert a10 == pytest.approx(1 / math.log(5), rel=0.15)
    assert ia.alpha_of_d(100.0) * math.log(50) == pytest.approx(1.0, abs=0.05)
    assert abs(ia.alpha_of_d(3.0) - ia.alpha_of_d(3.0 + 1e-6)) < 1e-4
    assert ia.alpha_of_d(2.01) > ia.alpha_of_d(2.1) > ia.alpha_of_d(2.5)
    for big in (1e3, 1e4):
        assert ia.alpha_of_d(big) * math.log(big / 2) == pytest.approx(1.0, abs=1e-8)


def test_gap_guards():
    with pytest.raises(InvalidGap):
        ia.alpha_of_d(2.0)
    with pytest.raises(InvalidGap):
        ia.ClusterGeometry.pair(1.5)
    with pytest.raises(ValueError):
        ia.ClusterGeometry(np.array([[0.0, 3.0], [3.0, 0.0]]))


def test_symmetric_pair_structure():
    sol = ia.solve_cluster(ia.ClusterGeometry.pair(5.0))
    assert sol.alphas[0] == pytest.approx(sol.alphas[1], abs=1e-12)
    c1, c2 = sol.densities[0].coeffs, sol.densities[1].coeffs
    flip = (-1.0) ** np.arange(len(c1))
    np.testing.assert_allclose(c1, flip * c2, atol=1e-12)
    assert sol.residual < 1e-10
    assert sol.condition_estimate < ia.COND_LIMIT


def test_block_reversal_symmetry():
    geom = ia.ClusterGeometry.pair(3.5)
    order = 24
    a = ia.assemble_system(geom, order)
    m = order + 1
    # nodes are symmetric: reversing s and t flips rows and odd columns
    rev = np.arange(m)[::-1]
    flip = (-1.0) ** np.arange(m)
    a12, a21 = a[:m, m:], a[m:, :m]
    np.testing.assert_allclose(a12[rev] * flip[None, :], a21, atol=1e-12)


def test_residual_on_dense_grid():
    geom = ia.ClusterGeometry.from_positions([0.0, 3.0, 7.5])
    sol = ia.solve_cluster(geom)
    s = np.linspace(-0.999, 0.999, 301)
    resid = ia.apply_system(geom, sol.densities, s) - 1.0
    assert np.max(np.abs(resid)) < 1e-8
    assert np.all(sol.alphas > 0)


def test_order_doubling_is_stable():
    geom = ia.ClusterGeometry.from_positions([0.0, 2.6, 6.0])
    a1 = ia.solve_cluster(geom, check=False).alphas
    a2 = ia.solve_cluster(geom, order=2 * ia.default_order(geom), check=False).alphas
    np.testing.assert_allclose(a1, a2, atol=1e-8)


def test_shifted_block_rejects_overlap():
    geom = ia.ClusterGeometry.pair(3.0)
    object.__setattr__(geom, "offsets", np.array([[0.0, 1.5], [-1.5, 0.0]]))
    with pytest.raises(SingularKernel):
        ia.assemble_system(geom, 8)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(2.2, 6.0), min_size=2, max_size=3), st.permutations([0, 1, 2, 3]))
def test_permutation_equivariance(steps, perm):
    pos = np.concatenate([[0.0], np.cumsum(steps)])
    perm = [p for p in perm if p < len(pos)]
    geom = ia.ClusterGeometry.from_positions(pos)
    base = ia.solve_cluster(geom, check=False)
    moved = ia.solve_cluster(geom.permuted(perm), check=False)
    np.testing.assert_allclose(moved.alphas, base.alphas[perm], atol=1e-10)
    assert np.all(base.alphas > 0)


@pytest.mark.parametrize("d", [20.0, 50.0, 100.0])
def test_clustered_and_separated_agree_at_crossover(d):
    eps = 1e-4
    config = TargetConfiguration((BoundaryArc(0.0, eps), BoundaryArc(d * eps, eps)))
    clustered = two_clustered(config).evaluate(np.zeros(2))
    separated = two_separated(config).evaluate(np.zeros(2))
    assert clustered == pytest.approx(separated, rel=0.03)
