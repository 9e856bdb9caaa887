from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decstab import (
    DimensionMismatch,
    IllPosedInterconnection,
    IndexOutOfRange,
    Region,
    RegionKind,
    Spectrum,
    StateSpace,
    add_controllers,
    closed_loop_a,
    embed_siso,
    lft_close,
    match_spectra,
    siso_channel,
    spectrum,
)
from decstab.statespace import inf_norm

from randsys import random_plant, well_posed_controller


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(DimensionMismatch):
        StateSpace(np.ones((2, 3)), np.ones((2, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(DimensionMismatch):
        StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((2, 1)))


def test_static_and_zero():
    K = StateSpace.static([[1.0, 2.0]])
    assert K.n == 0 and K.is_static
    assert (K.n_outputs, K.n_inputs) == (1, 2)
    Z = StateSpace.zero(3, 2)
    assert Z.D.shape == (3, 2) and not Z.D.any()


def test_matrices_are_read_only():
    P = StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        P.A[0, 0] = 5.0


def test_closed_loop_scalar_static():
    # x' = x + u, y = x, u = k y  ->  x' = (1 + k) x
    P = StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    A = closed_loop_a(P, StateSpace.static([[-3.0]]))
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(-2.0)


def test_closed_loop_with_feedthrough_matches_hand_formula():
    # scalar plant with D_P = 0.5, static k = 1: M = 1/(1 - 0.5) = 2
    P = StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.5]])
    A = closed_loop_a(P, StateSpace.static([[1.0]]))
    assert A[0, 0] == pytest.approx(1.0 + 2.0)


def test_ill_posed_raises():
    P = StateSpace([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(IllPosedInterconnection):
        closed_loop_a(P, StateSpace.static([[1.0]]))


def test_closed_loop_block_layout(rng):
    P = random_plant(rng, 3, 2, 2)
    K = well_posed_controller(rng, P, 2)
    A = closed_loop_a(P, K)
    # strictly proper plant: M = N = I
    np.testing.assert_allclose(A[:3, :3], P.A + P.B @ K.D @ P.C)
    np.testing.assert_allclose(A[:3, 3:], P.B @ K.C)
    np.testing.assert_allclose(A[3:, :3], K.B @ P.C)
    np.testing.assert_allclose(A[3:, 3:], K.A)


def test_lft_frequency_response(rng):
    P = random_plant(rng, 3, 2, 2, proper=True)
    K = well_posed_controller(rng, P, 2)
    G = lft_close(P, K)
    s = 0.7 + 1.3j
    Hp, Hk = P.freqresp(s), K.freqresp(s)
    # y = Hp (Hk y + r)  =>  y = (I - Hp Hk)^{-1} Hp r
    expected = np.linalg.solve(np.eye(2) - Hp @ Hk, Hp)
    np.testing.assert_allclose(G.freqresp(s), expected, rtol=1e-10, atol=1e-12)


def test_add_controllers_is_parallel_sum(rng):
    P = random_plant(rng, 2, 2, 3)
    K1 = well_posed_controller(rng, P, 1)
    K2 = well_posed_controller(rng, P, 2)
    s = 1.1 - 0.4j
    np.testing.assert_allclose(add_controllers(K1, K2).freqresp(s), K1.freqresp(s) + K2.freqresp(s))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), n_u=st.integers(1, 3), n_y=st.integers(1, 3))
def test_lft_additivity_property(seed, n, n_u, n_y):
    rng = np.random.default_rng(seed)
    P = random_plant(rng, n, n_u, n_y, proper=True)
    try:
        K1 = well_posed_controller(rng, P, int(rng.integers(0, 3)))
        K2 = well_posed_controller(rng, lft_close(P, K1), int(rng.integers(0, 3)))
        nested = lft_close(lft_close(P, K1), K2)
        direct = closed_loop_a(P, add_controllers(K1, K2))
    except IllPosedInterconnection:
        return
    scale = 1.0 + inf_norm(direct)
    assert match_spectra(np.linalg.eigvals(nested.A), np.linalg.eigvals(direct)) < 1e-7 * scale


def test_embed_and_channel():
    k = StateSpace([[-1.0]], [[2.0]], [[3.0]], [[4.0]])
    K = embed_siso(k, 2, 3, n_u=2, n_y=3)
    assert K.D.shape == (2, 3)
    assert K.D[1, 2] == 4.0 and np.count_nonzero(K.D) == 1
    assert K.B[0, 2] == 2.0 and K.C[1, 0] == 3.0
    with pytest.raises(IndexOutOfRange):
        embed_siso(k, 3, 1, 2, 3)

    P = StateSpace(np.diag([1.0, 2.0]), [[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0]], [[0.0, 7.0]])
    ch = siso_channel(P, 2, 1)
    np.testing.assert_array_equal(ch.B, [[0.0], [1.0]])
    assert ch.D[0, 0] == 7.0
    with pytest.raises(IndexOutOfRange):
        siso_channel(P, 1, 2)


def test_region_membership():
    lhp = Region()
    assert lhp.contains(-0.1) and not lhp.contains(0.0) and not lhp.contains(1j)
    shifted = Region(margin=0.5)
    assert not shifted.contains(-0.4) and shifted.contains(-0.6)
    disk = Region(RegionKind.OPEN_UNIT_DISK, 0.1)
    assert disk.contains(0.85) and not disk.contains(0.95)
    assert lhp.count_unacceptable([-1, 0, 2, 1j]) == 3
    assert lhp.abscissa([-1, -2 + 5j]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        Region(margin=-1.0)
    with pytest.raises(ValueError):
        Region(RegionKind.OPEN_UNIT_DISK, 1.0)


def test_region_domain_check():
    P = StateSpace([[0.5]], [[1.0]], [[1.0]], [[0.0]], "discrete")
    Region.for_domain(P.time_domain).check_domain(P)
    with pytest.raises(ValueError):
        Region().check_domain(P)


def test_spectrum_multiplicity_and_union():
    s = spectrum(np.diag([2.0, 3.0, -1.0, -1.0]))
    assert s.multiplicity(-1.0) == 2
    assert s.contains(3.0) and not s.contains(4.0)
    assert len(s) == 4 and len(s.modes) == 3
    u = Spectrum.union([s, spectrum(np.array([[5.0]]))])
    assert u.multiplicity(5.0) == 1 and len(u) == 5


def test_spectrum_conjugate_closed():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert spectrum(rot).is_conjugate_closed()
    assert not Spectrum(np.array([1j])).is_conjugate_closed()


def test_match_spectra_uses_best_pairing():
    a = np.array([0.0, 1.0, 2.0])
    b = np.array([2.0 + 1e-9, 0.0, 1.0])
    assert match_spectra(a, b) < 1e-8
    assert match_spectra(a, b[:2]) == np.inf
