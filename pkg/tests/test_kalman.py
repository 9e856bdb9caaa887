from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decstab import StateSpace, centralized_fixed_modes, controllable_observable_part, kalman_decompose, match_spectra
from decstab.kalman import zero_tol

from randsys import kalman_form_plant, pbh_controllable, pbh_observable


def test_diagonal_example_by_hand():
    # mode 1 reaches input and output; mode -1 is unreachable from u and invisible to y
    P = StateSpace(np.diag([1.0, -1.0]), [[1.0], [0.0]], [[1.0, 0.0]], [[0.0]])
    dec = kalman_decompose(P)
    assert dec.block_dims == (1, 0, 0, 1)
    assert dec.a(1, 1)[0, 0] == pytest.approx(1.0)
    assert dec.a(4, 4)[0, 0] == pytest.approx(-1.0)


def test_zero_state_system():
    dec = kalman_decompose(StateSpace.static([[2.0]]))
    assert dec.block_dims == (0, 0, 0, 0)


def test_all_four_blocks_present():
    # x1 co, x2 controllable only, x3 observable only, x4 neither
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    B = np.array([[1.0], [1.0], [0.0], [0.0]])
    C = np.array([[1.0, 0.0, 1.0, 0.0]])
    dec = kalman_decompose(StateSpace(A, B, C, np.zeros((1, 1))))
    assert dec.block_dims == (1, 1, 1, 1)
    for k, lam in enumerate([1.0, 2.0, 3.0, 4.0], start=1):
        assert dec.a(k, k)[0, 0] == pytest.approx(lam)
    assert dec.structural_residual() < 1e-12
    cf = centralized_fixed_modes(StateSpace(A, B, C, np.zeros((1, 1))))
    assert sorted(z.real for z in cf.eigenvalues) == pytest.approx([2.0, 3.0, 4.0])


def test_transformation_is_inverse_pair():
    rng = np.random.default_rng(2)
    P, _ = kalman_form_plant(rng, (2, 1, 1, 2), 2, 1)
    dec = kalman_decompose(P)
    np.testing.assert_allclose(dec.T @ dec.Tinv, np.eye(P.n), atol=1e-10)
    np.testing.assert_allclose(dec.T @ P.A @ dec.Tinv, dec.Atilde, atol=1e-10)


def test_co_part_transfer_function_matches_plant():
    rng = np.random.default_rng(8)
    P, _ = kalman_form_plant(rng, (2, 2, 1, 1), 2, 2)
    co = controllable_observable_part(kalman_decompose(P))
    for s in (0.3 + 1j, 2.0, -0.1 + 4j):
        np.testing.assert_allclose(co.freqresp(s), P.freqresp(s), rtol=1e-8, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    dims=st.tuples(*[st.integers(0, 2)] * 4).filter(lambda d: sum(d) > 0),
    n_u=st.integers(1, 2),
    n_y=st.integers(1, 2),
)
def test_blocks_match_construction(seed, dims, n_u, n_y):
    rng = np.random.default_rng(seed)
    P, blockev = kalman_form_plant(rng, dims, n_u, n_y)
    dec = kalman_decompose(P)
    assert dec.block_dims == dims
    assert dec.structural_residual() <= zero_tol(P) * 10
    for k in range(4):
        if dims[k]:
            got = np.linalg.eigvals(dec.a(k + 1, k + 1))
            assert match_spectra(got, np.array(blockev[k])) < 1e-6


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.tuples(*[st.integers(0, 2)] * 4).filter(lambda d: sum(d) > 0))
def test_pbh_agrees_with_blocks(seed, dims):
    rng = np.random.default_rng(seed)
    P, _ = kalman_form_plant(rng, dims, 1, 1)
    dec = kalman_decompose(P)
    expect = {1: (True, True), 2: (True, False), 3: (False, True), 4: (False, False)}
    for k in range(1, 5):
        for lam in np.linalg.eigvals(dec.a(k, k)) if dec.block_dims[k - 1] else []:
            assert (pbh_controllable(P, lam), pbh_observable(P, lam)) == expect[k]
