"""
Poisson brackets and the 6-argument classical Nambu bracket.

The Nambu bracket is evaluated two independent ways: as the Jacobian
determinant of the six functions, and as the Pfaffian of their Poisson
bracket matrix, enumerated over the 15 perfect pairings of six slots.
"""
import itertools
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from nambukepler.phase_space import EPS3, PhaseState, invariant_gradients, invariants

logger = logging.getLogger(__name__)

Pairing = Tuple[Tuple[int, int], ...]


def permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def all_pairings(items) -> List[List[Tuple[int, int]]]:
    """All partitions of items into ordered pairs (first element smaller)."""
    items = list(items)
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    pairings = []
    for i, partner in enumerate(rest):
        for tail in all_pairings(rest[:i] + rest[i + 1:]):
            pairings.append([(first, partner)] + tail)
    return pairings


def signed_pairings(n: int = 6) -> List[Tuple[int, Pairing]]:
    """Perfect pairings of range(n) with the sign of the flattened permutation."""
    out = []
    for pairing in all_pairings(range(n)):
        flat = [i for pair in pairing for i in pair]
        out.append((permutation_sign(flat), tuple(pairing)))
    return out


PAIRINGS_6 = signed_pairings(6)


def poisson(grad_f, grad_g) -> float:
    """
    Canonical Poisson bracket from two gradients in coordinate order.
    {f, g} = sum over pairs of df/dq dg/dp - df/dp dg/dq.
    """
    grad_f = np.asarray(grad_f, dtype=float)
    grad_g = np.asarray(grad_g, dtype=float)
    return float(grad_f[0::2] @ grad_g[1::2] - grad_f[1::2] @ grad_g[0::2])


def poisson_matrix(grads) -> np.ndarray:
    """Antisymmetric matrix of pairwise Poisson brackets."""
    grads = np.asarray(grads, dtype=float)
    return grads[:, 0::2] @ grads[:, 1::2].T - grads[:, 1::2] @ grads[:, 0::2].T


def _as_sextuple(grads) -> np.ndarray:
    grads = np.asarray(grads, dtype=float)
    if grads.shape != (6, 6):
        raise ValueError(f"A 6-bracket needs six 6-vector gradients, got shape {grads.shape}")
    return grads


def cnb6_det(grads) -> float:
    """Jacobian determinant d(I1..I6)/d(x, px, y, py, z, pz); rows are the gradients."""
    return float(np.linalg.det(_as_sextuple(grads)))


def cnb6_pfaffian(grads) -> float:
    """Pfaffian of the Poisson bracket matrix: 15 signed pairings of PB triples."""
    grads = _as_sextuple(grads)
    total = 0.0
    for sign, ((i, j), (k, l), (m, n)) in PAIRINGS_6:
        total += sign * (
            poisson(grads[i], grads[j]) * poisson(grads[k], grads[l]) * poisson(grads[m], grads[n])
        )
    return float(total)


def hadamard_bound(grads) -> float:
    """Product of row norms; the natural scale of a determinant of these rows."""
    return float(np.prod(np.linalg.norm(np.asarray(grads, dtype=float), axis=1)))


def log_gradient(grad, value: float) -> np.ndarray:
    """Gradient of ln(f) from the gradient and value of f."""
    return np.asarray(grad, dtype=float) / value


def poisson_algebra_residuals(z: PhaseState) -> Dict[str, float]:
    """
    Largest violation of each Poisson-algebra relation at a bound-state point.

    Checks {Li,Lj} = eps Lk, {Li,Aj} = eps Ak, {Ai,Aj} = -2H eps Lk,
    {Ri,Rj} = 2 eps Rk, {Lcal_i,Lcal_j} = 2 eps Lcal_k, {Ri,Lcal_j} = 0
    and {H, .} = 0 for all of them.
    """
    inv = invariants(z)
    table = invariant_gradients(z)

    def vec(stem):
        return [table[f"{stem}{i + 1}"] for i in range(3)]

    L, A, R, C = vec("L"), vec("A"), vec("R"), vec("Lcal")
    H = table["H"]

    def closure(left, right, target, factor):
        worst = 0.0
        for i in range(3):
            for j in range(3):
                expected = factor * (EPS3[i, j] @ target)
                worst = max(worst, abs(poisson(left[i], right[j]) - expected))
        return worst

    zero = np.zeros(3)
    return {
        "L_L": closure(L, L, inv.Lvec, 1.0),
        "L_A": closure(L, A, inv.Avec, 1.0),
        "A_A": closure(A, A, inv.Lvec, -2.0 * inv.H),
        "R_R": closure(R, R, inv.Rvec, 2.0),
        "Lcal_Lcal": closure(C, C, inv.Lcalvec, 2.0),
        "R_Lcal": closure(R, C, zero, 0.0),
        "H_invariants": max(abs(poisson(H, g)) for g in L + A + R + C),
    }
