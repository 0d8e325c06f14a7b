"""
Finite-dimensional representations of the chiral su(2) x su(2) algebra.

Each spin s contributes an irreducible (s, s) block of size (2s+1)^2 with
R_i = 2 S_i (x) 1 and Lcal_i = 1 (x) 2 S_i, so that
[R_i, R_j] = 2 i hbar eps_ijk R_k.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag

from nambukepler.config import TOLERANCES
from nambukepler.exceptions import DimMismatch, InvalidSpin, NotHermitean
from nambukepler.report import VerificationReport, relative_residual

logger = logging.getLogger(__name__)

GENERATOR_NAMES = ("R1", "R2", "R3", "Lcal1", "Lcal2", "Lcal3")


class Operator:
    """Dense complex square matrix tagged with hbar."""

    # numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __init__(self, matrix, hbar: float = 1.0):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimMismatch(f"Operator needs a square matrix, got shape {matrix.shape}")
        if hbar <= 0:
            raise ValueError(f"hbar must be positive, got {hbar}")
        self.matrix = matrix
        self.hbar = float(hbar)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int, hbar: float = 1.0) -> "Operator":
        return cls(np.eye(dim), hbar)

    @classmethod
    def zeros(cls, dim: int, hbar: float = 1.0) -> "Operator":
        return cls(np.zeros((dim, dim)), hbar)

    def check_compatible(self, other: "Operator"):
        if not isinstance(other, Operator):
            raise TypeError(f"Expected an Operator, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimMismatch(f"Operator dimensions differ: {self.dim} vs {other.dim}")
        if not np.isclose(other.hbar, self.hbar, rtol=1e-14, atol=0.0):
            raise DimMismatch(f"Operators built at different hbar: {self.hbar} vs {other.hbar}")

    def _wrap(self, matrix) -> "Operator":
        return Operator(matrix, self.hbar)

    def __add__(self, other):
        self.check_compatible(other)
        return self._wrap(self.matrix + other.matrix)

    def __sub__(self, other):
        self.check_compatible(other)
        return self._wrap(self.matrix - other.matrix)

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __matmul__(self, other):
        self.check_compatible(other)
        return self._wrap(self.matrix @ other.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            raise TypeError("Use @ for operator products")
        return self._wrap(scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._wrap(self.matrix / scalar)

    def dagger(self) -> "Operator":
        return self._wrap(self.matrix.conj().T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    def is_hermitean(self, tol: float = TOLERANCES.hermitean) -> bool:
        return self.hermiticity_defect() <= tol * max(self.norm(), 1.0)

    def __repr__(self):
        return f"Operator(dim={self.dim}, hbar={self.hbar})"


@dataclass(frozen=True)
class RepSpec:
    hbar: float
    spins: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        object.__setattr__(self, "spins", tuple(validate_spin(s) for s in self.spins))

    @classmethod
    def of(cls, spins: Sequence, hbar: float = 1.0) -> "RepSpec":
        return cls(hbar=float(hbar), spins=tuple(spins))

    @property
    def block_sizes(self) -> List[int]:
        return [int(2 * s + 1) ** 2 for s in self.spins]

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    def block_slices(self) -> List[slice]:
        out, start = [], 0
        for size in self.block_sizes:
            out.append(slice(start, start + size))
            start += size
        return out

    def spin_values(self) -> List[float]:
        return [float(s) for s in self.spins]


def validate_spin(s) -> Fraction:
    """Return s as an exact half-integer Fraction; reject anything else."""
    try:
        two_s = 2 * float(s)
    except (TypeError, ValueError, OverflowError):
        raise InvalidSpin(f"Spin must be a finite number, got {s!r}")
    if not math.isfinite(two_s):
        raise InvalidSpin(f"Spin must be a finite number, got {s!r}")
    if two_s < 0 or abs(two_s - round(two_s)) > 1e-9:
        raise InvalidSpin(f"Spin must be a non-negative half-integer, got {s!r}")
    return Fraction(int(round(two_s)), 2)


def parse_spins(text: str) -> List[Fraction]:
    """Parse a comma-separated spin list such as '0,0.5,1' or '1/2,3/2'."""
    spins = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            value = Fraction(token)
        except (ValueError, ZeroDivisionError):
            raise InvalidSpin(f"Cannot parse spin '{token}'")
        spins.append(validate_spin(value))
    if not spins:
        raise InvalidSpin(f"No spins in '{text}'")
    return spins


def spin_matrices(s, hbar: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Spin-s generators S_x, S_y, S_z in the |s, m> basis, m = s, s-1, ..., -s.
    :raises: InvalidSpin unless 2s is a non-negative integer.
    """
    s = validate_spin(s)
    m = np.array([s - k for k in range(int(2 * s) + 1)], dtype=float)
    sv = float(s)
    # <m+1| S_+ |m> = sqrt(s(s+1) - m(m+1))
    raising = np.diag(np.sqrt(sv * (sv + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    lowering = raising.conj().T
    sx = (raising + lowering) / 2
    sy = (raising - lowering) / 2j
    sz = np.diag(m).astype(complex)
    return hbar * sx, hbar * sy, hbar * sz


def _block_generators(s: Fraction, hbar: float) -> List[np.ndarray]:
    spin = spin_matrices(s, hbar)
    eye = np.eye(int(2 * s + 1))
    right = [np.kron(2 * si, eye) for si in spin]
    left = [np.kron(eye, 2 * si) for si in spin]
    return right + left


def build_generators(rep: RepSpec) -> Dict[str, Operator]:
    """Block-diagonal R1..R3, Lcal1..Lcal3 over the spins of rep."""
    blocks = [_block_generators(s, rep.hbar) for s in rep.spins]
    gens = {}
    for n, name in enumerate(GENERATOR_NAMES):
        gens[name] = Operator(block_diag(*[b[n] for b in blocks]), rep.hbar)
    logger.debug(f"Built generators for spins {rep.spin_values()} (dim {rep.dim})")
    return gens


def block_energy(s, hbar: float) -> float:
    """-1 / (2 hbar^2 (2s+1)^2)."""
    n = int(2 * validate_spin(s) + 1)
    return -1.0 / (2.0 * hbar**2 * n**2)


def hamiltonian_operator(rep: RepSpec) -> Operator:
    """H = -1/2 (R^2 + hbar^2)^(-1), inverted block by block."""
    blocks = []
    for s in rep.spins:
        gens = _block_generators(s, rep.hbar)
        casimir = sum(g @ g for g in gens[:3])
        shifted = casimir + rep.hbar**2 * np.eye(casimir.shape[0])
        blocks.append(-0.5 * np.linalg.inv(shifted))
    return Operator(block_diag(*blocks), rep.hbar)


def casimir(gens: Dict[str, Operator], side: str = "R") -> Operator:
    names = GENERATOR_NAMES[:3] if side == "R" else GENERATOR_NAMES[3:]
    ops = [gens[n] for n in names]
    total = ops[0] @ ops[0]
    for op in ops[1:]:
        total = total + op @ op
    return total


def operator_function(op: Operator, fn) -> Operator:
    """Apply a scalar function to a hermitean operator through its eigenbasis."""
    values, vectors = np.linalg.eigh(op.matrix)
    return Operator((vectors * fn(values)) @ vectors.conj().T, op.hbar)


def spectrum(op: Operator, cluster_tol: float = TOLERANCES.spectrum_cluster) -> List[Tuple[float, int]]:
    """
    Eigenvalues of a hermitean operator with multiplicities, ascending.
    :raises: NotHermitean if ||op - op^dagger|| > 1e-12 ||op||.
    """
    if op.hermiticity_defect() > TOLERANCES.hermitean * op.norm():
        raise NotHermitean(f"Operator is not hermitean (defect {op.hermiticity_defect():.3e})")
    values = np.linalg.eigvalsh(op.matrix)
    levels: List[List[float]] = []
    for v in values:
        if levels and abs(v - levels[-1][-1]) <= cluster_tol:
            levels[-1].append(v)
        else:
            levels.append([v])
    return [(float(np.mean(group)), len(group)) for group in levels]


def balmer_levels(smax, hbar: float = 1.0) -> List[dict]:
    """Closed-form levels for s = 0, 1/2, ..., smax."""
    smax = validate_spin(smax)
    out = []
    for two_s in range(int(2 * smax) + 1):
        s = Fraction(two_s, 2)
        n = two_s + 1
        out.append({"s": float(s), "energy": block_energy(s, hbar), "degeneracy": n**2, "balmer_n": n})
    return out


def spins_up_to(smax) -> List[Fraction]:
    return [Fraction(k, 2) for k in range(int(2 * validate_spin(smax)) + 1)]


def algebra_residuals(gens: Dict[str, Operator]) -> Dict[str, float]:
    """
    Worst violation of [R_i,R_j] = 2i hbar eps R_k, [Lcal_i,Lcal_j] = 2i hbar eps Lcal_k
    and [R_i, Lcal_j] = 0, in Frobenius norm.
    """
    hbar = next(iter(gens.values())).hbar
    R = [gens[n] for n in GENERATOR_NAMES[:3]]
    C = [gens[n] for n in GENERATOR_NAMES[3:]]
    cyclic = ((0, 1, 2), (1, 2, 0), (2, 0, 1))

    def closure(ops):
        return max(
            (ops[i] @ ops[j] - ops[j] @ ops[i] - (2j * hbar) * ops[k]).norm() for i, j, k in cyclic
        )

    mixed = max((r @ c - c @ r).norm() for r in R for c in C)
    return {"R_R": closure(R), "Lcal_Lcal": closure(C), "R_Lcal": mixed}


def prl_operator_identity_check(rep: RepSpec, tolerance: float = TOLERANCES.identity) -> VerificationReport:
    """
    Residual of (A')^2 = 2H(L^2 + hbar^2) + 1 with L = (R + Lcal)/2 and
    A' = sqrt(-2H) (R - Lcal)/2, evaluated on each block.
    """
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    root = operator_function(H, lambda v: np.sqrt(-2.0 * v))
    eye = Operator.identity(rep.dim, rep.hbar)

    L = [(gens[f"R{i}"] + gens[f"Lcal{i}"]) * 0.5 for i in (1, 2, 3)]
    A = [root @ ((gens[f"R{i}"] - gens[f"Lcal{i}"]) * 0.5) for i in (1, 2, 3)]
    L2 = L[0] @ L[0] + L[1] @ L[1] + L[2] @ L[2]
    A2 = A[0] @ A[0] + A[1] @ A[1] + A[2] @ A[2]
    rhs = (H @ (L2 + eye * rep.hbar**2)) * 2.0 + eye

    report = VerificationReport(test_name="prl_operator_identity", tolerance=tolerance, rep=rep.spin_values())
    for sl, s in zip(rep.block_slices(), rep.spins):
        diff = np.linalg.norm((rhs - A2).matrix[sl, sl])
        scale = max(np.linalg.norm(A2.matrix[sl, sl]), np.linalg.norm(rhs.matrix[sl, sl]), 1.0)
        report.record(f"s={float(s)}", relative_residual(diff, scale))
    return report


def casimir_check(rep: RepSpec, tolerance: float = TOLERANCES.identity) -> VerificationReport:
    """R^2 = Lcal^2 = 4 hbar^2 s(s+1) per block, and both expressions of H coincide."""
    gens = build_generators(rep)
    r2, c2 = casimir(gens, "R"), casimir(gens, "Lcal")
    eye = np.eye(rep.dim)
    expected = np.zeros((rep.dim, rep.dim), dtype=complex)
    for sl, s in zip(rep.block_slices(), rep.spins):
        expected[sl, sl] = 4.0 * rep.hbar**2 * float(s) * (float(s) + 1) * eye[sl, sl]

    scale = max(np.linalg.norm(expected), 1.0)
    h_from_r = -0.5 * np.linalg.inv(r2.matrix + rep.hbar**2 * eye)
    h_from_c = -0.5 * np.linalg.inv(c2.matrix + rep.hbar**2 * eye)

    report = VerificationReport(test_name="casimir", tolerance=tolerance, rep=rep.spin_values())
    report.record("R2", relative_residual(np.linalg.norm(r2.matrix - expected), scale))
    report.record("Lcal2", relative_residual(np.linalg.norm(c2.matrix - expected), scale))
    report.record("H_R_vs_H_Lcal", relative_residual(np.linalg.norm(h_from_r - h_from_c), np.linalg.norm(h_from_r)))
    return report
