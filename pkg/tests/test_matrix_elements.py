import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticelight import oracles
from latticelight.core import LatticeSpec
from latticelight.matrix_elements import (LatticeModel, StructureFactorBreakdown, apply_separable,
                                          bilinear, diffraction_1d, dirichlet, f00, f_element,
                                          outer3, separable_sum, sum_rule_defect)

SMALL = LatticeModel(LatticeSpec((4, 3, 2), (15.0, 8.0, 15.0)))


@given(st.floats(-6, 6), st.integers(1, 40))
def test_dirichlet_matches_direct_sum(kappa, M):
    direct = np.mean(np.exp(1j * np.pi * kappa * np.arange(M)))
    assert abs(dirichlet(kappa, M) - direct) < 1e-10


def test_dirichlet_at_reciprocal_lattice_vectors():
    for n in range(-4, 5):
        assert np.isclose(dirichlet(2.0 * n, 7), 1.0)
        assert np.isclose(diffraction_1d(2.0 * n, 7), 49.0)


@pytest.mark.parametrize("V", [1.0, 3.0, 8.0, 15.0])
def test_sum_rule_defect_ring_momenta(V):
    # k on the ring's quasimomentum grid: six bands close the sum rule
    model = LatticeModel(LatticeSpec((6, 1, 1), (V, V, V)))
    for k in [(1 / 3, 0, 0), (1.0, 0, 0), (5 / 3, 0, 0)]:
        for i, j in itertools.product(range(6), repeat=2):
            assert sum_rule_defect(model, (i, 0, 0), (j, 0, 0), k, 6) < 1e-3


def test_sum_rule_defect_generic_k_deep_lattice():
    # off the ring grid exp(i pi k x) is not ring-periodic and the band sum
    # converges slowly; at V = 15 six bands are still enough
    model = LatticeModel(LatticeSpec((4, 1, 1), (15.0, 15.0, 15.0)))
    for i, j in itertools.product(range(4), repeat=2):
        assert sum_rule_defect(model, (i, 0, 0), (j, 0, 0), (0.37, 0.2, 0.1), 6) < 1e-3


def test_sum_rule_improves_with_bands():
    model = LatticeModel(LatticeSpec((4, 1, 1), (8.0, 8.0, 8.0)))
    k = (0.8, 0.3, 0.2)
    defects = [sum_rule_defect(model, (1, 0, 0), (1, 0, 0), k, m) for m in (1, 2, 4, 6)]
    assert defects[0] > defects[-1]
    with pytest.raises(ValueError):
        sum_rule_defect(model, (1, 0, 0), (1, 0, 0), k, 7)


def test_f_at_zero_k_is_identity():
    for q1 in itertools.product(range(4), range(3), range(2)):
        for q2 in [(0, 0, 0), (1, 2, 1), q1]:
            val = f_element(SMALL, q1, (0, 0, 0), q2, (0, 0, 0), (0, 0, 0))
            assert np.isclose(val, float(q1 == q2), atol=1e-12)


def test_f_hermitian_under_k_reversal():
    # f(q1 -> q2; k) = conj(f(q2 -> q1; -k))
    k = np.array([0.31, -0.7, 0.45])
    for q1, q2 in [((0, 1, 0), (2, 2, 1)), ((3, 0, 1), (1, 1, 0))]:
        a = f_element(SMALL, q1, (0, 0, 0), q2, (0, 0, 0), k)
        b = f_element(SMALL, q2, (0, 0, 0), q1, (0, 0, 0), -k)
        assert np.isclose(a, np.conj(b), atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 15.0), st.floats(-2.0, 2.0))
def test_f_matches_plane_wave_oracle(V, kd):
    model = LatticeModel(LatticeSpec((5, 1, 1), (V, 1.0, 1.0), n_bands=3))
    ref = oracles.f_plane_wave(V, 5, kd, n_bands=3)
    assert np.allclose(model.band_matrix(0, kd, 0), ref[0], atol=1e-9)
    # excited bands touch at q = 0 in the shallow limit; elsewhere only the
    # sign gauge differs, so compare |f|
    for m in (1, 2) if V >= 2 else ():
        assert np.allclose(np.abs(model.band_matrix(0, kd, m)), np.abs(ref[m]), atol=1e-9)


def test_lowest_f_3d_oracle():
    depths, sites = (15.0, 8.0, 15.0), (4, 3, 2)
    k = np.array([0.3, 0.45, -0.2])
    ref = oracles.lowest_f_3d(depths, sites, k)
    tab = SMALL.table(k)
    mine = np.kron(np.kron(*tab.mats[:2]), tab.mats[2])
    assert np.allclose(mine, ref, atol=1e-9)


def test_table_diagonal_and_rows_consistent():
    k = np.array([0.37, 0.8, 0.1])
    tab = SMALL.table(k)
    lazy = SMALL.table(k).diagonal()
    assert np.allclose(lazy, tab.diagonal() if tab.mats else None)
    for d in range(3):
        A = SMALL.lowest_matrix(d, k[d])
        assert np.allclose(SMALL.lowest_diagonals(d, [k[d]])[0], np.diagonal(A))
        for i in range(SMALL.shape[d]):
            assert np.allclose(SMALL.lowest_rows(d, [k[d]], i)[0], A[i])
    with pytest.raises(ValueError):
        SMALL.lowest_matrix(0, 0.2)[0, 0] = 1.0


def test_threshold_drops_bounded_weight():
    k = np.array([0.37, 0.8, 0.1])
    full = SMALL.table(k)
    cut = SMALL.table(k, threshold=0.3)
    dropped = cut.dropped_weight()
    assert np.all(dropped >= -1e-15)
    assert np.allclose(full.row_weight() - cut.row_weight(), dropped)
    assert np.allclose(SMALL.table(k).dropped_weight(), 0.0)


def test_separable_sum_matches_einsum_and_chunks():
    rng = np.random.default_rng(1)
    fac = [rng.normal(size=(11, M)) + 1j * rng.normal(size=(11, M)) for M in (4, 3, 2)]
    W = rng.normal(size=(2, 4, 3, 2))
    ref = np.einsum("na,nb,nc,sabc->ns", *fac, W)
    assert np.allclose(separable_sum(fac, W), ref)
    assert np.allclose(separable_sum(fac, W, max_elements=10), ref)


def test_apply_separable_and_bilinear():
    rng = np.random.default_rng(2)
    mats = [rng.normal(size=(M, M)) for M in (4, 3, 2)]
    X = rng.normal(size=(5, 4, 3, 2))
    big = np.kron(np.kron(*mats[:2]), mats[2])
    Y = apply_separable(mats, X)
    assert np.allclose(Y.reshape(5, -1), X.reshape(5, -1) @ big.T)
    L = rng.normal(size=(5, 4, 3, 2))
    assert np.allclose(bilinear(mats, L, X), np.einsum("si,ij,sj->s", L.reshape(5, -1), big,
                                                       X.reshape(5, -1)))
    assert outer3(np.ones(2), np.ones(3), np.ones(4)).shape == (2, 3, 4)


def test_f00_properties():
    model = LatticeModel(LatticeSpec((10, 10, 1), (15.0, 15.0, 15.0)))
    assert np.isclose(f00(model, np.zeros(3)), 1.0, atol=1e-6)
    k = np.array([[0.3, 0.4, 0.2], [1.2, 0.0, 0.9]])
    vals = f00(model, k)
    assert np.all(np.abs(vals) <= 1 + 1e-9)
    # symmetric site density: the transform is real
    assert np.allclose(vals.imag, 0.0, atol=1e-10)
    ref = np.prod([oracles.wannier_density_ft(15.0, M, kd) for M, kd in zip((10, 10, 1), k[0])])
    assert np.isclose(vals[0], ref, atol=1e-5)


def test_breakdown_totals():
    z = np.zeros((2, 1))
    sf = StructureFactorBreakdown("fermi", g0=z + 1, g1=z + 2, g2=z, b=z + 3)
    assert np.all(sf.total == 6)
    assert np.all(sf.inelastic == 5)
    assert np.all(sf.elastic == 1)
    assert set(sf.as_dict()) == {"g0", "g1", "g2", "b", "total"}
    with pytest.raises(KeyError):
        sf.component("g3")
