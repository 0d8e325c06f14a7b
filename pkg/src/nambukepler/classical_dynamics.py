"""
Flow laws of the Kepler problem and their time integration.

Three right-hand sides describe the same flow: Hamilton's equations, the
Nambu law H^2 {z, ln(R3 + Lcal3), R1, R2, Lcal1, Lcal2}, and the alternative
form {z, H, R1, R2, Lcal1, Lcal2} / (4 R3 Lcal3).
"""
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from nambukepler.cnb_engine import cnb6_det, log_gradient, poisson
from nambukepler.config import INTEGRATOR, THRESHOLDS, TOLERANCES
from nambukepler.exceptions import (
    DegenerateInvariants,
    DomainExit,
    PhaseSpaceError,
    SingularPoint,
    StepFailure,
    ZeroAngularMomentum,
)
from nambukepler.phase_space import (
    GradientTable,
    PhaseState,
    invariant_gradients,
    invariants,
)
from nambukepler.report import VerificationReport, relative_residual, write_text

logger = logging.getLogger(__name__)

CSV_HEADER = "t,x,px,y,py,z,pz,H,L3,kepler_residual"


class RhsKind(str, Enum):
    HAMILTON = "hamilton"
    NAMBU_LOG = "nambu_log"
    NAMBU_ALT = "nambu_alt"


def hamilton_rhs(z: PhaseState) -> np.ndarray:
    """dq/dt = p, dp/dt = -q / r^3, interleaved."""
    r = z.radius
    if r == 0.0:
        raise SingularPoint(f"Coulomb singularity: r = 0 at {z}")
    q, p = z.position, z.momentum
    out = np.empty(6)
    out[0::2] = p
    out[1::2] = -q / r**3
    return out


def _chiral_rows(table: GradientTable) -> List[np.ndarray]:
    return [table["R1"], table["R2"], table["Lcal1"], table["Lcal2"]]


def _nambu_vector(second_row: np.ndarray, table: GradientTable) -> np.ndarray:
    """{z^i, second, R1, R2, Lcal1, Lcal2} for every coordinate z^i."""
    rest = _chiral_rows(table)
    return np.array([cnb6_det([e, second_row] + rest) for e in np.eye(6)])


def nambu_rhs(z: PhaseState) -> np.ndarray:
    """
    Nambu flow H^2 {z^i, ln(R3 + Lcal3), R1, R2, Lcal1, Lcal2}.
    :raises: ZeroAngularMomentum when |L| vanishes, DegenerateInvariants when
        R3 + Lcal3 is not above the degeneracy threshold.
    """
    inv = invariants(z)
    if inv.zero_angular_momentum:
        raise ZeroAngularMomentum(f"|L| = 0 at {z}; the Nambu invariants are degenerate")
    k = inv.Rvec[2] + inv.Lcalvec[2]
    if k <= THRESHOLDS.degeneracy:
        raise DegenerateInvariants(f"R3 + Lcal3 = {k!r} is not above {THRESHOLDS.degeneracy}")

    table = invariant_gradients(z)
    grad_log_k = log_gradient(table["R3"] + table["Lcal3"], k)
    return inv.H**2 * _nambu_vector(grad_log_k, table)


def alt_nambu_rhs(z: PhaseState) -> np.ndarray:
    """
    Alternative flow {z^i, H, R1, R2, Lcal1, Lcal2} / (4 R3 Lcal3).
    :raises: DegenerateInvariants when |R3 Lcal3| is not above the threshold.
    """
    inv = invariants(z)
    product = inv.Rvec[2] * inv.Lcalvec[2]
    if abs(product) <= THRESHOLDS.degeneracy:
        raise DegenerateInvariants(f"R3 Lcal3 = {product!r}; |R3 Lcal3| must exceed {THRESHOLDS.degeneracy}")

    table = invariant_gradients(z)
    return _nambu_vector(table["H"], table) / (4.0 * product)


RHS = {
    RhsKind.HAMILTON: hamilton_rhs,
    RhsKind.NAMBU_LOG: nambu_rhs,
    RhsKind.NAMBU_ALT: alt_nambu_rhs,
}


def general_evolution(grad_f, z: PhaseState) -> float:
    """df/dt = H^2 {f, ln(R3 + Lcal3), R1, R2, Lcal1, Lcal2} for f given by its gradient."""
    inv = invariants(z)
    k = inv.Rvec[2] + inv.Lcalvec[2]
    if inv.zero_angular_momentum or k <= THRESHOLDS.degeneracy:
        raise DegenerateInvariants(f"R3 + Lcal3 = {k!r} at {z}")
    table = invariant_gradients(z)
    grad_log_k = log_gradient(table["R3"] + table["Lcal3"], k)
    return float(inv.H**2 * cnb6_det([np.asarray(grad_f, dtype=float), grad_log_k] + _chiral_rows(table)))


def hamiltonian_evolution(grad_f, z: PhaseState) -> float:
    """df/dt = {f, H}."""
    return poisson(grad_f, invariant_gradients(z)["H"])


def orbital_period(z: PhaseState) -> float:
    """T = 2 pi a^(3/2) with semimajor axis a = -1 / (2H)."""
    a = -1.0 / (2.0 * invariants(z).H)
    return float(2.0 * np.pi * a**1.5)


def flow_residual(reference: np.ndarray, candidate: np.ndarray) -> float:
    """Max-norm discrepancy relative to the max-norm of the reference vector."""
    return relative_residual(
        float(np.max(np.abs(candidate - reference))), float(np.max(np.abs(reference)))
    )


@dataclass
class Trajectory:
    times: np.ndarray
    states: List[PhaseState]
    rhs_kind: RhsKind
    metadata: Dict[str, object] = field(default_factory=dict)

    def __len__(self):
        return len(self.states)

    @property
    def initial(self) -> PhaseState:
        return self.states[0]

    @property
    def final(self) -> PhaseState:
        return self.states[-1]

    def rows(self) -> np.ndarray:
        """One row per recorded step in CSV column order."""
        out = np.empty((len(self.states), 10))
        for n, (t, z) in enumerate(zip(self.times, self.states)):
            inv = invariants(z)
            out[n, 0] = t
            out[n, 1:7] = z.as_array()
            out[n, 7] = inv.H
            out[n, 8] = inv.Lvec[2]
            out[n, 9] = inv.kepler_residual
        return out

    def to_csv(self) -> str:
        buffer = io.StringIO()
        np.savetxt(buffer, self.rows(), fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
        return buffer.getvalue()

    def write_csv(self, out: str):
        write_text(self.to_csv(), out)


def integrate(
    z0: PhaseState,
    rhs_kind=RhsKind.HAMILTON,
    t_max: float = 2.0 * np.pi,
    rtol: float = INTEGRATOR.rtol,
    atol: float = None,
    method: str = INTEGRATOR.method,
) -> Trajectory:
    """
    Integrate one of the flow laws with an adaptive Runge-Kutta scheme.
    :param z0: initial state, valid for rhs_kind.
    :param rhs_kind: RhsKind or its string value.
    :param t_max: final time (>= 0).
    :param rtol: per-step relative tolerance.
    :param atol: per-step absolute tolerance; defaults to rtol times the configured factor.
    :param method: scipy.integrate.solve_ivp explicit Runge-Kutta method.
    :return: Trajectory with one entry per accepted step.
    :raises: DomainExit if the flow enters a guarded region, StepFailure if the
        error control cannot be met.
    """
    rhs_kind = RhsKind(rhs_kind)
    rhs = RHS[rhs_kind]
    if t_max < 0.0:
        raise ValueError(f"t_max must be non-negative, got {t_max}")
    if atol is None:
        atol = rtol * INTEGRATOR.atol_factor
    metadata = {"method": method, "rtol": rtol, "atol": atol, "t_max": t_max}

    # validates z0 for the chosen law before any stepping
    rhs(z0)
    if t_max == 0.0:
        return Trajectory(np.array([0.0]), [z0], rhs_kind, metadata)

    def fun(_t, y):
        return rhs(PhaseState.from_array(y))

    try:
        solution = solve_ivp(fun, (0.0, t_max), z0.as_array(), method=method, rtol=rtol, atol=atol)
    except PhaseSpaceError as e:
        logger.error(f"{rhs_kind.value} flow left its domain: {e}")
        raise DomainExit(f"{rhs_kind.value} flow left its domain: {e}") from e

    if solution.status != 0:
        logger.error(f"Integration failed: {solution.message}")
        raise StepFailure(f"Integration failed at t = {solution.t[-1]}: {solution.message}")

    states = [PhaseState.from_array(y) for y in solution.y.T]
    metadata["steps"] = len(states) - 1
    metadata["nfev"] = int(solution.nfev)
    logger.debug(f"{rhs_kind.value}: {len(states) - 1} steps, {solution.nfev} evaluations")
    return Trajectory(np.asarray(solution.t), states, rhs_kind, metadata)


def _drifts(traj: Trajectory) -> Dict[str, float]:
    samples = [invariants(z) for z in traj.states]
    reference = samples[0]

    def drift(get) -> float:
        base = np.asarray(get(reference))
        return float(max(np.max(np.abs(np.asarray(get(s)) - base)) for s in samples))

    out = {"H": drift(lambda s: s.H)}
    for i in range(3):
        out[f"L{i + 1}"] = drift(lambda s, i=i: s.Lvec[i])
        out[f"A{i + 1}"] = drift(lambda s, i=i: s.Avec[i])
    for i in range(2):
        out[f"R{i + 1}"] = drift(lambda s, i=i: s.Rvec[i])
        out[f"Lcal{i + 1}"] = drift(lambda s, i=i: s.Lcalvec[i])
    out["R3+Lcal3"] = drift(lambda s: s.Rvec[2] + s.Lcalvec[2])
    out["kepler_residual"] = float(max(abs(s.kepler_residual) for s in samples))
    return out


def conservation_report(traj: Trajectory, tolerance: float = TOLERANCES.drift) -> VerificationReport:
    """
    Maximum drift along a trajectory of H, each component of L and A, the five
    Nambu invariants, and the Kepler relation residual.
    """
    if len(traj) == 0:
        raise ValueError("conservation_report needs a nonempty trajectory")
    report = VerificationReport(test_name=f"conservation[{traj.rhs_kind.value}]", tolerance=tolerance)
    for name, value in _drifts(traj).items():
        report.record(name, value)
    report.notes.update({k: v for k, v in traj.metadata.items()})
    report.notes["points"] = len(traj)
    logger.info(f"Conservation over {len(traj)} points: max drift {report.max_residual:.3e}")
    return report


def closure_residual(traj: Trajectory) -> float:
    """Distance between the last and first state."""
    return float(np.max(np.abs(traj.final.as_array() - traj.initial.as_array())))


def time_reversal_check(
    z0: PhaseState,
    rhs_kind=RhsKind.HAMILTON,
    t_max: float = 1.0,
    rtol: float = INTEGRATOR.rtol,
    tolerance: float = TOLERANCES.reversal,
) -> VerificationReport:
    """
    Integrate forward, reverse the momenta, integrate again, and compare with
    the momentum-reversed initial state.
    """
    forward = integrate(z0, rhs_kind, t_max, rtol=rtol)
    backward = integrate(forward.final.reversed(), rhs_kind, t_max, rtol=rtol)
    report = VerificationReport(test_name=f"time_reversal[{RhsKind(rhs_kind).value}]", tolerance=tolerance)
    report.record(
        "return_distance",
        float(np.max(np.abs(backward.final.as_array() - z0.reversed().as_array()))),
    )
    return report


def compare_flows(z: PhaseState) -> Tuple[float, float]:
    """Relative discrepancy of the Nambu and alternative laws against Hamilton's."""
    reference = hamilton_rhs(z)
    return flow_residual(reference, nambu_rhs(z)), flow_residual(reference, alt_nambu_rhs(z))
