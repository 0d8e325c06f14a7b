"""
Quantum Nambu brackets and the quantized Nambu evolution laws.

The 6-bracket is the fully antisymmetrized product of its arguments. It is
evaluated by brute force over all 720 orderings, and through its resolution
into 90 ordered strings of three commutators (15 pairings times 3! orderings).
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from nambukepler.cnb_engine import PAIRINGS_6, permutation_sign
from nambukepler.config import THRESHOLDS, TOLERANCES
from nambukepler.exceptions import DimMismatch, Incompatible, NotHermitean
from nambukepler.report import VerificationReport, relative_residual
from nambukepler.su2_rep import (
    GENERATOR_NAMES,
    Operator,
    RepSpec,
    build_generators,
    hamiltonian_operator,
)

logger = logging.getLogger(__name__)

PERMUTATIONS_6 = [(permutation_sign(p), p) for p in itertools.permutations(range(6))]

# 15 signed pairings, each expanded over the 3! orderings of its commutators
COMMUTATOR_STRINGS = [
    (sign, ordered)
    for sign, pairing in PAIRINGS_6
    for ordered in itertools.permutations(pairing)
]


class Convention(str, Enum):
    SUM = "sum-over-6-orderings"
    NORMALIZED = "sum/3!"


@dataclass
class EvolutionCheck:
    lhs: Operator
    rhs: Operator
    residual: float
    scale: float


@dataclass
class JordanKuroshSolution:
    x: Operator
    incompatibility: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    nonsingular: np.ndarray
    epsilon: float

    @property
    def singular_pairs(self) -> int:
        return int(np.count_nonzero(~self.nonsingular))


def classical_limit_factor() -> Fraction:
    """Ratio of the classical (1/48) to quantum (1/8) Levi-Civita normalizations: 3!."""
    return Fraction(48, 8)


def _check_same(ops: Sequence[Operator]):
    first = ops[0]
    for op in ops[1:]:
        first.check_compatible(op)


def commutator(a: Operator, b: Operator) -> Operator:
    a.check_compatible(b)
    return Operator(a.matrix @ b.matrix - b.matrix @ a.matrix, a.hbar)


def anticommutator(a: Operator, b: Operator) -> Operator:
    a.check_compatible(b)
    return Operator(a.matrix @ b.matrix + b.matrix @ a.matrix, a.hbar)


def _sextuple(ops) -> List[Operator]:
    ops = list(ops)
    if len(ops) != 6:
        raise DimMismatch(f"A 6-bracket needs six operators, got {len(ops)}")
    _check_same(ops)
    return ops


def qnb6_full(ops) -> Operator:
    """Sum over all 720 orderings of sgn(sigma) I_sigma(1) ... I_sigma(6)."""
    ops = _sextuple(ops)
    mats = [op.matrix for op in ops]
    total = np.zeros_like(mats[0])
    for sign, perm in PERMUTATIONS_6:
        product = mats[perm[0]]
        for index in perm[1:]:
            product = product @ mats[index]
        total += sign * product
    return Operator(total, ops[0].hbar)


def qnb6_strings(ops) -> Operator:
    """(1/8) eps^{ijklmn} [Ii,Ij][Ik,Il][Im,In], as 90 ordered commutator strings."""
    ops = _sextuple(ops)
    mats = [op.matrix for op in ops]
    commutators = {}
    for _, pairing in PAIRINGS_6:
        for i, j in pairing:
            if (i, j) not in commutators:
                commutators[(i, j)] = mats[i] @ mats[j] - mats[j] @ mats[i]

    total = np.zeros_like(mats[0])
    for sign, (first, second, third) in COMMUTATOR_STRINGS:
        total += sign * (commutators[first] @ commutators[second] @ commutators[third])
    return Operator(total, ops[0].hbar)


def argument_scale(ops: Sequence[Operator]) -> float:
    """Product of Frobenius norms, an upper magnitude for a multilinear bracket."""
    return float(np.prod([op.norm() for op in ops]))


def heisenberg_rhs(f: Operator, H: Operator, hbar: Optional[float] = None) -> Operator:
    """df/dt = [f, H] / (i hbar)."""
    hbar = f.hbar if hbar is None else hbar
    return commutator(f, H) * (1.0 / (1j * hbar))


def quantum_rotation(f: Operator, gens: Dict[str, Operator], H: Operator, hbar: Optional[float] = None) -> Operator:
    """Q = 2 hbar^2 H sum_i ([[[f, Lcal_i], Lcal_i], R3] + [[[f, R_i], R_i], Lcal3]) H."""
    hbar = f.hbar if hbar is None else hbar
    R3, Lcal3 = gens["R3"], gens["Lcal3"]
    nested = Operator.zeros(f.dim, f.hbar)
    for i in (1, 2, 3):
        Li, Ri = gens[f"Lcal{i}"], gens[f"R{i}"]
        nested = nested + commutator(commutator(commutator(f, Li), Li), R3)
        nested = nested + commutator(commutator(commutator(f, Ri), Ri), Lcal3)
    return (H @ nested @ H) * (2.0 * hbar**2)


def _check_dim(f: Operator, rep: RepSpec):
    if f.dim != rep.dim:
        raise DimMismatch(f"Operator dimension {f.dim} does not match representation dimension {rep.dim}")


def _law_residual(lhs: Operator, rhs: Operator, natural: float, floor: float) -> Tuple[float, float]:
    """
    Discrepancy relative to the larger side (or the sum of the terms building the
    right-hand side). The argument scale is used only when everything is round-off.
    """
    scale = max(lhs.norm(), rhs.norm(), natural)
    if scale <= THRESHOLDS.vanishing_law * floor:
        scale = floor
    return relative_residual((lhs - rhs).norm(), scale), scale


def entwined_evolution_check(f: Operator, rep: RepSpec) -> EvolutionCheck:
    """
    Compare 3 (i hbar)^3 (K df/dt + df/dt K) with H [f, K, R1, R2, Lcal1, Lcal2] H + Q,
    K = R3 + Lcal3 and df/dt from Heisenberg's law.
    """
    _check_dim(f, rep)
    f = Operator(f.matrix, rep.hbar)
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    K = gens["R3"] + gens["Lcal3"]
    fdot = heisenberg_rhs(f, H, rep.hbar)
    ihbar3 = (1j * rep.hbar) ** 3

    lhs = anticommutator(K, fdot) * (3.0 * ihbar3)
    args = [f, K, gens["R1"], gens["R2"], gens["Lcal1"], gens["Lcal2"]]
    bracket = H @ qnb6_strings(args) @ H
    rotation = quantum_rotation(f, gens, H, rep.hbar)
    rhs = bracket + rotation

    floor = argument_scale(args) * H.norm() ** 2
    residual, scale = _law_residual(lhs, rhs, bracket.norm() + rotation.norm(), floor)
    return EvolutionCheck(lhs=lhs, rhs=rhs, residual=residual, scale=scale)


def symmetrized_triple(a: Operator, b: Operator, c: Operator, convention=Convention.SUM) -> Operator:
    """Sum of the six orderings of abc, divided by 3! under the normalized convention."""
    ops = [a, b, c]
    _check_same(ops)
    total = np.zeros_like(a.matrix)
    for x, y, z in itertools.permutations(ops):
        total = total + x.matrix @ y.matrix @ z.matrix
    if Convention(convention) is Convention.NORMALIZED:
        total = total / factorial(3)
    return Operator(total, a.hbar)


def symmetrized_evolution_check(f: Operator, rep: RepSpec, convention=Convention.SUM) -> EvolutionCheck:
    """Compare 4 (i hbar)^3 (R3, Lcal3, df/dt) with [f, H, R1, R2, Lcal1, Lcal2]."""
    _check_dim(f, rep)
    f = Operator(f.matrix, rep.hbar)
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    fdot = heisenberg_rhs(f, H, rep.hbar)

    lhs = symmetrized_triple(gens["R3"], gens["Lcal3"], fdot, convention) * (4.0 * (1j * rep.hbar) ** 3)
    args = [f, H, gens["R1"], gens["R2"], gens["Lcal1"], gens["Lcal2"]]
    rhs = qnb6_strings(args)
    residual, scale = _law_residual(lhs, rhs, 0.0, argument_scale(args))
    return EvolutionCheck(lhs=lhs, rhs=rhs, residual=residual, scale=scale)


def select_symmetrization_convention(
    f: Operator, rep: RepSpec, tolerance: float = TOLERANCES.bracket
) -> Tuple[Optional[Convention], Dict[str, float]]:
    """
    Evaluate the symmetrized law under both conventions.
    :return: the convention that alone passes (None if zero or both pass), and all residuals.
    """
    residuals = {c.value: symmetrized_evolution_check(f, rep, c).residual for c in Convention}
    passing = [c for c in Convention if residuals[c.value] < tolerance]
    selected = passing[0] if len(passing) == 1 else None
    logger.info(f"Symmetrization residuals {residuals}; selected {selected.value if selected else None}")
    return selected, residuals


def jordan_kurosh_solve(
    K: Operator,
    B: Operator,
    strict: bool = False,
    eps_factor: float = TOLERANCES.jordan_kurosh_eps,
    tolerance: float = TOLERANCES.bracket,
) -> JordanKuroshSolution:
    """
    Minimal-norm solution of K X + X K = B for hermitean K.
    :param K: hermitean operator.
    :param B: right-hand side.
    :param strict: raise Incompatible when B has weight on singular eigenpairs.
    :param eps_factor: pairs with |l_i + l_j| <= eps_factor ||K|| are singular.
    :param tolerance: incompatibility allowed in strict mode, relative to ||B||^2.
    :return: JordanKuroshSolution with X and the incompatibility, the sum of |B~_ij|^2
        over singular eigenpairs.
    :raises: NotHermitean, Incompatible.
    """
    K.check_compatible(B)
    if not K.is_hermitean():
        raise NotHermitean(f"Jordan-Kurosh solve needs a hermitean K (defect {K.hermiticity_defect():.3e})")

    values, vectors = np.linalg.eigh(K.matrix)
    epsilon = eps_factor * max(np.linalg.norm(K.matrix, 2), np.finfo(float).tiny)
    sums = values[:, None] + values[None, :]
    nonsingular = np.abs(sums) > epsilon

    b_tilde = vectors.conj().T @ B.matrix @ vectors
    x_tilde = np.zeros_like(b_tilde)
    x_tilde[nonsingular] = b_tilde[nonsingular] / sums[nonsingular]
    incompatibility = float(np.sum(np.abs(b_tilde[~nonsingular]) ** 2))

    if incompatibility > 0.0:
        logger.warning(f"{np.count_nonzero(~nonsingular)} singular eigenpairs; discarded weight {incompatibility:.3e}")
    if strict and incompatibility > tolerance * max(B.norm() ** 2, 1.0):
        raise Incompatible(f"K X + X K = B has no solution: incompatible weight {incompatibility:.3e}")

    x = Operator(vectors @ x_tilde @ vectors.conj().T, K.hbar)
    return JordanKuroshSolution(
        x=x,
        incompatibility=incompatibility,
        eigenvalues=values,
        eigenvectors=vectors,
        nonsingular=nonsingular,
        epsilon=epsilon,
    )


def in_eigenbasis(solution: JordanKuroshSolution, op: Operator) -> np.ndarray:
    return solution.eigenvectors.conj().T @ op.matrix @ solution.eigenvectors


def nonsingular_distance(solution: JordanKuroshSolution, reference: Operator) -> float:
    """Largest difference between X and a reference on the nonsingular eigenpairs."""
    diff = in_eigenbasis(solution, solution.x) - in_eigenbasis(solution, reference)
    masked = diff[solution.nonsingular]
    return float(np.max(np.abs(masked))) if masked.size else 0.0


def disentangle_rate(f: Operator, rep: RepSpec, strict: bool = False) -> Tuple[Operator, JordanKuroshSolution]:
    """
    Solve the entwined law for df/dt: K X + X K = (H [f, K, R1, R2, Lcal1, Lcal2] H + Q) / (3 (i hbar)^3).
    :return: Heisenberg rate and the Jordan-Kurosh solution for comparison.
    """
    _check_dim(f, rep)
    f = Operator(f.matrix, rep.hbar)
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    K = gens["R3"] + gens["Lcal3"]
    args = [f, K, gens["R1"], gens["R2"], gens["Lcal1"], gens["Lcal2"]]
    rhs = H @ qnb6_strings(args) @ H + quantum_rotation(f, gens, H, rep.hbar)
    solution = jordan_kurosh_solve(K, rhs * (1.0 / (3.0 * (1j * rep.hbar) ** 3)), strict=strict)
    return heisenberg_rhs(f, H, rep.hbar), solution


def sector_expectation_check(
    rep: RepSpec, f: Operator, tolerance: float = TOLERANCES.identity
) -> VerificationReport:
    """
    For every eigenvector psi of K = R3 + Lcal3 with eigenvalue kappa, check
    <psi| K fdot + fdot K |psi> = 2 kappa <psi| fdot |psi>.
    """
    _check_dim(f, rep)
    f = Operator(f.matrix, rep.hbar)
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    K = gens["R3"] + gens["Lcal3"]
    fdot = heisenberg_rhs(f, H, rep.hbar)
    entwined = anticommutator(K, fdot).matrix

    values, vectors = np.linalg.eigh(K.matrix)
    scale = np.linalg.norm(K.matrix, 2) * np.linalg.norm(fdot.matrix, 2)
    report = VerificationReport(test_name="sector_expectation", tolerance=tolerance, rep=rep.spin_values())
    ratios = []
    worst = 0.0
    for kappa, psi in zip(values, vectors.T):
        lhs = psi.conj() @ entwined @ psi
        expectation = psi.conj() @ fdot.matrix @ psi
        worst = max(worst, relative_residual(abs(lhs - 2.0 * kappa * expectation), scale))
        if abs(expectation) > 1e-8 * max(scale, 1.0):
            ratios.append({"kappa": float(kappa), "ratio": float((lhs / expectation).real)})
    report.record("proportionality", worst)
    report.trials = len(values)
    report.notes["ratios"] = ratios
    return report


def random_hermitean(dim: int, rng: np.random.Generator, hbar: float = 1.0) -> Operator:
    """Real and imaginary parts uniform in [-1, 1], then (M + M^dagger) / 2."""
    m = rng.uniform(-1.0, 1.0, size=(dim, dim)) + 1j * rng.uniform(-1.0, 1.0, size=(dim, dim))
    return Operator((m + m.conj().T) / 2.0, hbar)


def random_operator(dim: int, rng: np.random.Generator, hbar: float = 1.0) -> Operator:
    m = rng.uniform(-1.0, 1.0, size=(dim, dim)) + 1j * rng.uniform(-1.0, 1.0, size=(dim, dim))
    return Operator(m, hbar)


def generator_monomials(rep: RepSpec, max_degree: int = 2) -> List[Tuple[str, Operator]]:
    """Identity and ordered products of up to max_degree chiral generators."""
    gens = build_generators(rep)
    out = [("1", Operator.identity(rep.dim, rep.hbar))]
    for degree in range(1, max_degree + 1):
        for names in itertools.product(GENERATOR_NAMES, repeat=degree):
            op = gens[names[0]]
            for name in names[1:]:
                op = op @ gens[name]
            out.append(("*".join(names), op))
    return out
