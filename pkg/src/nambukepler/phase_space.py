"""
Phase space of the rescaled Coulomb problem.

States are points z = (x, px, y, py, z, pz); every 6-vector in the package
(gradients, flow vectors) uses this interleaved coordinate order.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

from nambukepler.config import THRESHOLDS
from nambukepler.exceptions import (
    PhaseSpaceError,
    SingularPoint,
    StencilFailure,
    UnboundState,
)

logger = logging.getLogger(__name__)

COORDINATES = ("x", "px", "y", "py", "z", "pz")

# Levi-Civita symbol in three dimensions
EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS3[_i, _j, _k] = 1.0
    EPS3[_i, _k, _j] = -1.0


@dataclass(frozen=True)
class PhaseState:
    x: float
    px: float
    y: float
    py: float
    z: float
    pz: float

    @classmethod
    def from_array(cls, values) -> "PhaseState":
        values = np.asarray(values, dtype=float)
        if values.shape != (6,):
            raise ValueError(f"Phase state needs 6 coordinates, got shape {values.shape}")
        return cls(*(float(v) for v in values))

    @classmethod
    def from_position_momentum(cls, position, momentum) -> "PhaseState":
        q = np.asarray(position, dtype=float)
        p = np.asarray(momentum, dtype=float)
        return cls(q[0], p[0], q[1], p[1], q[2], p[2])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.px, self.y, self.py, self.z, self.pz])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def momentum(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.position))

    def reversed(self) -> "PhaseState":
        """Same position, negated momentum."""
        return PhaseState.from_position_momentum(self.position, -self.momentum)


@dataclass(frozen=True)
class InvariantSet:
    H: float
    Lvec: np.ndarray
    Avec: np.ndarray
    Dvec: np.ndarray
    Rvec: np.ndarray
    Lcalvec: np.ndarray
    kepler_residual: float
    zero_angular_momentum: bool = False


@dataclass
class GradientTable:
    """Partial derivatives of named invariants, in COORDINATES order."""

    entries: Dict[str, np.ndarray] = field(default_factory=dict)
    zero_angular_momentum: bool = False

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self):
        return list(self.entries)


def interleave(d_position, d_momentum) -> np.ndarray:
    """
    Merge position and momentum partials into coordinate order.
    Works on 3-vectors and on (n, 3) stacks of rows.
    """
    d_position = np.asarray(d_position, dtype=float)
    d_momentum = np.asarray(d_momentum, dtype=float)
    out = np.empty(d_position.shape[:-1] + (6,))
    out[..., 0::2] = d_position
    out[..., 1::2] = d_momentum
    return out


def _checked_radius(z: PhaseState) -> float:
    r = z.radius
    if r == 0.0:
        raise SingularPoint(f"Coulomb singularity: r = 0 at {z}")
    return r


def hamiltonian(z: PhaseState) -> float:
    r = _checked_radius(z)
    p = z.momentum
    return float(0.5 * p @ p - 1.0 / r)


def _prl_vector(q, p, r):
    return q * (p @ p) - p * (q @ p) - q / r


def invariants(z: PhaseState) -> InvariantSet:
    """
    Evaluate H, L, A and the chiral combinations at a bound-state point.
    :param z: phase point with r > 0 and H < 0.
    :return: InvariantSet; zero_angular_momentum is flagged, not raised.
    :raises: SingularPoint at r = 0, UnboundState when H >= 0.
    """
    r = _checked_radius(z)
    q, p = z.position, z.momentum
    H = float(0.5 * p @ p - 1.0 / r)
    if H >= 0.0:
        raise UnboundState(f"H = {H!r} >= 0; D, R and Lcal need a bound state")

    L = np.cross(q, p)
    A = _prl_vector(q, p, r)
    D = A / np.sqrt(-2.0 * H)
    L2 = float(L @ L)
    kepler = float(q @ A / r + 1.0 - L2 / r)
    return InvariantSet(
        H=H,
        Lvec=L,
        Avec=A,
        Dvec=D,
        Rvec=L + D,
        Lcalvec=L - D,
        kepler_residual=kepler,
        zero_angular_momentum=bool(np.sqrt(L2) < THRESHOLDS.zero_angular_momentum),
    )


def invariant_gradients(z: PhaseState) -> GradientTable:
    """
    Analytic gradients of H, L, A, D, R and Lcal at a bound-state point.
    D is differentiated through w = (-2H)^(-1/2), whose gradient is w^3 grad H.
    """
    inv = invariants(z)
    r = z.radius
    q, p = z.position, z.momentum
    eye = np.eye(3)

    dH_q = q / r**3
    dH_p = p

    # rows i, columns m: dL_i/dq_m and dL_i/dp_m
    dL_q = np.einsum("imk,k->im", EPS3, p)
    dL_p = np.einsum("ijm,j->im", EPS3, q)

    dA_q = (p @ p) * eye - np.outer(p, p) - eye / r + np.outer(q, q) / r**3
    dA_p = 2.0 * np.outer(q, p) - (q @ p) * eye - np.outer(p, q)

    w = 1.0 / np.sqrt(-2.0 * inv.H)
    dD_q = w * dA_q + w**3 * np.outer(inv.Avec, dH_q)
    dD_p = w * dA_p + w**3 * np.outer(inv.Avec, dH_p)

    grad_L = interleave(dL_q, dL_p)
    grad_A = interleave(dA_q, dA_p)
    grad_D = interleave(dD_q, dD_p)

    table = GradientTable(zero_angular_momentum=inv.zero_angular_momentum)
    table.entries["H"] = interleave(dH_q, dH_p)
    for i in range(3):
        table.entries[f"L{i + 1}"] = grad_L[i]
        table.entries[f"A{i + 1}"] = grad_A[i]
        table.entries[f"D{i + 1}"] = grad_D[i]
        table.entries[f"R{i + 1}"] = grad_L[i] + grad_D[i]
        table.entries[f"Lcal{i + 1}"] = grad_L[i] - grad_D[i]
    return table


def scalar_invariant(name: str) -> Callable[[PhaseState], float]:
    """Return z -> value of a named invariant, matching GradientTable names."""
    if name == "H":
        return hamiltonian

    vectors = {"L": "Lvec", "A": "Avec", "D": "Dvec", "R": "Rvec", "Lcal": "Lcalvec"}
    stem, index = name[:-1], int(name[-1]) - 1
    if stem not in vectors or index not in range(3):
        raise KeyError(f"Unknown invariant '{name}'")
    attribute = vectors[stem]

    def evaluate(z: PhaseState) -> float:
        return float(getattr(invariants(z), attribute)[index])

    return evaluate


def fd_gradient_oracle(f: Callable[[PhaseState], float], z: PhaseState, h: float = 1e-5) -> np.ndarray:
    """
    Central-difference gradient of a scalar phase-space function.
    :param f: function of PhaseState.
    :param z: base point.
    :param h: stencil half-width.
    :return: 6-vector in coordinate order, error O(h^2).
    :raises: StencilFailure if f fails on any of the 12 stencil points.
    """
    base = z.as_array()
    grad = np.empty(6)
    for k in range(6):
        step = np.zeros(6)
        step[k] = h
        try:
            forward = f(PhaseState.from_array(base + step))
            backward = f(PhaseState.from_array(base - step))
        except PhaseSpaceError as e:
            raise StencilFailure(f"Stencil point along {COORDINATES[k]} is singular: {e}") from e
        grad[k] = (forward - backward) / (2.0 * h)
    return grad


def _random_direction(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def sample_bound_state(rng: np.random.Generator, max_attempts: int = 100000) -> PhaseState:
    """
    Draw a well-conditioned bound-state point.

    Radius uniform in [0.5, 2] with a random direction, momentum in a random
    direction with magnitude fixed by a target energy uniform in [-1.5, -0.1].
    Points with small |L|, R3 + Lcal3 or |R3 Lcal3| are rejected.
    """
    cut = THRESHOLDS.sampler_rejection
    for _ in range(max_attempts):
        radius = rng.uniform(0.5, 2.0)
        position = radius * _random_direction(rng)
        energy = rng.uniform(-1.5, -0.1)
        kinetic = energy + 1.0 / radius
        direction = _random_direction(rng)
        if kinetic <= 0.0:
            continue

        z = PhaseState.from_position_momentum(position, np.sqrt(2.0 * kinetic) * direction)
        inv = invariants(z)
        R3, Lcal3 = inv.Rvec[2], inv.Lcalvec[2]
        if np.linalg.norm(inv.Lvec) < cut or R3 + Lcal3 < cut or abs(R3 * Lcal3) < cut:
            logger.debug(f"Rejected sample {z}")
            continue
        return z

    raise RuntimeError(f"No admissible bound state after {max_attempts} draws")
