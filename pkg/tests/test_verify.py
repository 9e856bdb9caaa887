from __future__ import annotations

from importlib.resources import files

import numpy as np
import pytest

from decstab import (
    IllPosedInterconnection,
    Region,
    SparsityPattern,
    StateSpace,
    sample_dynamic_fixed_mode_invariance,
    synthesize,
    verify_closed_loop,
)
from decstab.io import load_controller, load_problem
from decstab.verify import lft_additivity_residual, random_stable_siso, random_structured_controller

from randsys import kalman_form_plant, random_plant, stabilizable_instance, well_posed_controller

DATA = files("decstab") / "data"


@pytest.fixture(scope="module")
def five_state():
    return load_problem(DATA / "five_state_example.json")


def test_stable_plant_zero_controller():
    P = StateSpace(np.diag([-1.0, -2.0]), np.eye(2), np.eye(2), np.zeros((2, 2)))
    rep = verify_closed_loop(P, StateSpace.zero(2, 2), SparsityPattern.diagonal(2))
    assert rep.closed_loop_stable and rep.sparsity_ok and rep.ok


def test_unstable_scalar_abscissa():
    P = StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    rep = verify_closed_loop(P, StateSpace.zero(1, 1), SparsityPattern.diagonal(1))
    assert not rep.closed_loop_stable
    assert rep.abscissa == pytest.approx(1.0)


def test_ill_posed_propagates():
    P = StateSpace([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(IllPosedInterconnection):
        verify_closed_loop(P, StateSpace.static([[1.0]]), SparsityPattern.diagonal(1))


def test_printed_reference_controller_is_sparse(five_state):
    # the printed gains are rounded to four decimals; only their structure is checked here
    K = load_controller(DATA / "five_state_reference_controller.json")
    rep = verify_closed_loop(five_state.plant, K, five_state.pattern)
    assert rep.sparsity_ok


def test_synthesized_controller_verifies(five_state):
    res = synthesize(five_state.plant, five_state.pattern)
    rep = verify_closed_loop(five_state.plant, res.controller, five_state.pattern)
    assert rep.ok
    assert rep.to_dict()["closed_loop_stable"] is True


@pytest.mark.parametrize("seed", range(6))
def test_end_to_end_soundness(seed):
    rng = np.random.default_rng(seed)
    P, pat = stabilizable_instance(rng)
    res = synthesize(P, pat)
    assert verify_closed_loop(P, res.controller, pat).ok


def test_random_stable_pieces_are_stable():
    rng = np.random.default_rng(0)
    for region in (Region(), Region.for_domain("discrete", 0.1)):
        for order in (1, 2, 3):
            k = random_stable_siso(order, region, rng)
            assert region.count_unacceptable(np.linalg.eigvals(k.A)) == 0


def test_random_structured_controller_is_sparse(five_state):
    rng = np.random.default_rng(3)
    K = random_structured_controller(five_state.pattern, rng)
    assert verify_closed_loop(five_state.plant, K, five_state.pattern).sparsity_ok
    assert 9 <= K.n <= 27


def test_fixed_mode_survives_dynamic_controllers(five_state):
    res = sample_dynamic_fixed_mode_invariance(five_state.plant, five_state.pattern, trials=100, rng_seed=1)
    assert res.ok and res.passes == 100
    assert res.fixed.contains(-1.0)


def test_invariance_vacuous_without_fixed_modes():
    rng = np.random.default_rng(4)
    P, _ = kalman_form_plant(rng, (3, 0, 0, 0), 2, 2)
    res = sample_dynamic_fixed_mode_invariance(P, SparsityPattern.centralized(2, 2), trials=10)
    assert res.ok and len(res.fixed) == 0


def test_unreachable_mode_persists():
    P = StateSpace([[1.0]], [[0.0]], [[0.0]], [[0.0]])
    res = sample_dynamic_fixed_mode_invariance(P, SparsityPattern.diagonal(1), trials=20)
    assert res.ok and res.fixed.contains(1.0)


def test_additivity_residual_small():
    rng = np.random.default_rng(9)
    P = random_plant(rng, 3, 2, 2, proper=True)
    K1 = well_posed_controller(rng, P, 2)
    K2 = well_posed_controller(rng, P, 1)
    assert lft_additivity_residual(P, K1, K2) < 1e-8
