import itertools

import numpy as np
import pytest

from nambukepler.cnb_engine import (
    PAIRINGS_6,
    all_pairings,
    cnb6_det,
    cnb6_pfaffian,
    hadamard_bound,
    log_gradient,
    permutation_sign,
    poisson,
    poisson_algebra_residuals,
    poisson_matrix,
)
from nambukepler.config import make_rng
from nambukepler.phase_space import PhaseState, sample_bound_state

def levi_civita_det(rows):
    """Determinant as the explicit signed sum over all 720 permutations."""
    total = 0.0
    for perm in itertools.permutations(range(6)):
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        term = (-1) ** inversions
        for i, j in enumerate(perm):
            term *= rows[i][j]
        total += term
    return total

@pytest.fixture
def rng():
    return make_rng(42)

def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([2, 0, 1]) == 1
    assert permutation_sign([5, 4, 3, 2, 1, 0]) == -1

def test_fifteen_pairings_of_six():
    assert len(all_pairings(range(6))) == 15
    assert len(PAIRINGS_6) == 15
    assert PAIRINGS_6[0] == (1, ((0, 1), (2, 3), (4, 5)))
    assert len(all_pairings(range(4))) == 3

def test_canonical_poisson_brackets():
    e = np.eye(6)
    assert poisson(e[0], e[1]) == 1.0   # {x, px}
    assert poisson(e[1], e[0]) == -1.0
    assert poisson(e[0], e[3]) == 0.0   # {x, py}
    assert poisson(e[2], e[3]) == 1.0   # {y, py}

def test_poisson_matrix_is_antisymmetric(rng):
    grads = rng.uniform(-1, 1, size=(6, 6))
    m = poisson_matrix(grads)
    assert np.allclose(m, -m.T)
    assert m[0, 1] == pytest.approx(poisson(grads[0], grads[1]))

def test_coordinate_bracket_is_one():
    assert cnb6_det(np.eye(6)) == pytest.approx(1.0)
    assert cnb6_pfaffian(np.eye(6)) == pytest.approx(1.0)

def test_det_matches_permutation_sum(rng):
    for _ in range(5):
        grads = rng.uniform(-1, 1, size=(6, 6))
        assert cnb6_det(grads) == pytest.approx(levi_civita_det(grads), abs=1e-12 * hadamard_bound(grads))

def test_pfaffian_resolution_matches_determinant(rng):
    for _ in range(100):
        grads = rng.uniform(-1, 1, size=(6, 6))
        assert abs(cnb6_det(grads) - cnb6_pfaffian(grads)) < 1e-10 * hadamard_bound(grads)

def test_antisymmetry_under_argument_swap(rng):
    grads = rng.uniform(-1, 1, size=(6, 6))
    swapped = grads[[1, 0, 2, 3, 4, 5]]
    assert cnb6_pfaffian(swapped) == pytest.approx(-cnb6_pfaffian(grads))

def test_repeated_argument_vanishes(rng):
    grads = rng.uniform(-1, 1, size=(6, 6))
    grads[3] = grads[0]
    assert abs(cnb6_pfaffian(grads)) < 1e-12 * hadamard_bound(grads)

def test_bracket_needs_six_gradients():
    with pytest.raises(ValueError, match="six 6-vector gradients"):
        cnb6_det(np.eye(5))
    with pytest.raises(ValueError, match="shape"):
        cnb6_pfaffian(np.ones((6, 4)))

def test_hadamard_bound_and_log_gradient():
    assert hadamard_bound(np.eye(6)) == pytest.approx(1.0)
    assert hadamard_bound(2 * np.eye(6)) == pytest.approx(64.0)
    assert list(log_gradient([2.0, 4.0], 2.0)) == [1.0, 2.0]

def test_poisson_algebra_at_eccentric_point():
    residuals = poisson_algebra_residuals(PhaseState(1.0, 0.0, 0.0, 0.5, 0.0, 0.0))
    assert set(residuals) == {"L_L", "L_A", "A_A", "R_R", "Lcal_Lcal", "R_Lcal", "H_invariants"}
    for name, value in residuals.items():
        assert value < 1e-12, name

def test_poisson_algebra_on_samples(rng):
    for _ in range(10):
        residuals = poisson_algebra_residuals(sample_bound_state(rng))
        assert max(residuals.values()) < 1e-10

@pytest.mark.parametrize("i,j", list(itertools.combinations(range(6), 2)))
def test_both_evaluators_flip_sign_under_every_transposition(i, j, rng):
    grads = rng.uniform(-1, 1, size=(6, 6))
    order = list(range(6))
    order[i], order[j] = j, i
    swapped = grads[order]
    bound = 1e-12 * hadamard_bound(grads)
    assert cnb6_det(swapped) == pytest.approx(-cnb6_det(grads), abs=bound)
    assert cnb6_pfaffian(swapped) == pytest.approx(-cnb6_pfaffian(grads), abs=bound)

@pytest.mark.parametrize("slot", range(6))
def test_bracket_is_linear_in_each_slot(slot, rng):
    grads = rng.uniform(-1, 1, size=(6, 6))
    f, g = rng.uniform(-1, 1, size=6), rng.uniform(-1, 1, size=6)
    a, b = 1.7, -0.4
    with_f, with_g, combined = grads.copy(), grads.copy(), grads.copy()
    with_f[slot], with_g[slot], combined[slot] = f, g, a * f + b * g
    bound = 1e-12 * (hadamard_bound(with_f) + hadamard_bound(with_g))
    for bracket in (cnb6_det, cnb6_pfaffian):
        expected = a * bracket(with_f) + b * bracket(with_g)
        assert bracket(combined) == pytest.approx(expected, abs=bound)
