"""
Verification suites. Each suite returns VerificationReport objects; the CLI
turns them into JSON artifacts and exit codes.
"""
import logging
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from nambukepler.classical_dynamics import (
    RhsKind,
    alt_nambu_rhs,
    closure_residual,
    conservation_report,
    flow_residual,
    hamilton_rhs,
    integrate,
    nambu_rhs,
    orbital_period,
    time_reversal_check,
)
from nambukepler.cnb_engine import (
    cnb6_det,
    cnb6_pfaffian,
    hadamard_bound,
    log_gradient,
    poisson_algebra_residuals,
)
from nambukepler.config import THRESHOLDS, TOLERANCES, make_rng
from nambukepler.phase_space import (
    PhaseState,
    fd_gradient_oracle,
    invariant_gradients,
    invariants,
    sample_bound_state,
    scalar_invariant,
)
from nambukepler.qnb_engine import (
    Convention,
    anticommutator,
    argument_scale,
    disentangle_rate,
    entwined_evolution_check,
    generator_monomials,
    jordan_kurosh_solve,
    nonsingular_distance,
    qnb6_full,
    qnb6_strings,
    random_hermitean,
    random_operator,
    sector_expectation_check,
    select_symmetrization_convention,
    symmetrized_evolution_check,
)
from nambukepler.report import VerificationReport, relative_residual
from nambukepler.su2_rep import (
    RepSpec,
    algebra_residuals,
    balmer_levels,
    build_generators,
    casimir_check,
    hamiltonian_operator,
    prl_operator_identity_check,
    spectrum,
    spins_up_to,
)

logger = logging.getLogger(__name__)

CIRCULAR = PhaseState(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
ECCENTRIC = PhaseState(1.0, 0.0, 0.0, 0.5, 0.0, 0.0)

DEFAULT_SEED = 42
DEFAULT_POINTS = 100
DEFAULT_QNB_TRIALS = 20
DEFAULT_SPIN_SETS = ([Fraction(1, 2)], [Fraction(1)], [Fraction(0), Fraction(1, 2), Fraction(1)])
SELECTION_SPINS = [Fraction(0), Fraction(1, 2), Fraction(1)]
SUITE_ORBIT_RTOL = 1e-12


def _random_gradients(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(6, 6))


def _nambu_sextuples(z: PhaseState) -> List[np.ndarray]:
    inv = invariants(z)
    table = invariant_gradients(z)
    k = inv.Rvec[2] + inv.Lcalvec[2]
    rest = [table["R1"], table["R2"], table["Lcal1"], table["Lcal2"]]
    out = []
    for e in np.eye(6):
        out.append(np.array([e, log_gradient(table["R3"] + table["Lcal3"], k)] + rest))
        out.append(np.array([e, table["H"]] + rest))
    return out


def _det_vs_pfaffian(grads: np.ndarray) -> float:
    return relative_residual(abs(cnb6_det(grads) - cnb6_pfaffian(grads)), hadamard_bound(grads))


def cnb_equivalence_suite(
    points: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED, tolerance: float = TOLERANCES.bracket
) -> VerificationReport:
    """Jacobian determinant against Pfaffian resolution, on random and invariant sextuples."""
    rng = make_rng(seed)
    report = VerificationReport(test_name="cnb_det_vs_pfaffian", tolerance=tolerance, seed=seed, trials=points)
    for _ in range(points):
        report.record("random_sextuples", _det_vs_pfaffian(_random_gradients(rng)))
    for _ in range(points):
        z = sample_bound_state(rng)
        for grads in _nambu_sextuples(z):
            report.record("invariant_sextuples", _det_vs_pfaffian(grads))
    logger.info(f"CNB equivalence over {points} points: max residual {report.max_residual:.3e}")
    return report


def flow_equivalence_suite(
    points: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED, tolerance: float = TOLERANCES.flow
) -> VerificationReport:
    """Hamilton, Nambu and alternative right-hand sides agree pointwise."""
    rng = make_rng(seed)
    report = VerificationReport(test_name="flow_equivalence", tolerance=tolerance, seed=seed, trials=points)
    for _ in range(points):
        z = sample_bound_state(rng)
        reference = hamilton_rhs(z)
        nambu = nambu_rhs(z)
        alt = alt_nambu_rhs(z)
        report.record("nambu_vs_hamilton", flow_residual(reference, nambu))
        report.record("alt_vs_hamilton", flow_residual(reference, alt))
        report.record("nambu_vs_alt", flow_residual(alt, nambu))
    logger.info(f"Flow equivalence over {points} points: max residual {report.max_residual:.3e}")
    return report


def phase_space_suite(points: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED) -> List[VerificationReport]:
    """Invariant identities, Poisson algebra and analytic-vs-difference gradients."""
    rng = make_rng(seed)
    identities = VerificationReport(
        test_name="invariant_identities", tolerance=TOLERANCES.identity, seed=seed, trials=points
    )
    algebra = VerificationReport(test_name="poisson_algebra", tolerance=TOLERANCES.bracket, seed=seed, trials=points)
    gradients = VerificationReport(test_name="gradient_oracle", tolerance=TOLERANCES.gradient, seed=seed, trials=points)

    for _ in range(points):
        z = sample_bound_state(rng)
        inv = invariants(z)
        A, L, R, C = inv.Avec, inv.Lvec, inv.Rvec, inv.Lcalvec
        A2, L2, R2, C2 = A @ A, L @ L, R @ R, C @ C
        identities.record("A_dot_L", relative_residual(abs(A @ L), np.linalg.norm(A) * np.linalg.norm(L)))
        identities.record("H_from_A_L", relative_residual(abs(2 * inv.H * L2 - (A2 - 1)), A2 + 1 + abs(2 * inv.H) * L2))
        identities.record("R2_eq_Lcal2", relative_residual(abs(R2 - C2), R2 + C2))
        identities.record("H_from_R", relative_residual(abs(inv.H + 1 / (2 * R2)), abs(inv.H)))
        identities.record("kepler", relative_residual(abs(inv.kepler_residual), 1 + np.linalg.norm(A) + L2 / z.radius))
        chiral = np.max(np.abs(R - (L + inv.Dvec))) + np.max(np.abs(C - (L - inv.Dvec)))
        identities.record("chiral_sum", relative_residual(chiral, 1 + np.linalg.norm(L)))

        for name, value in poisson_algebra_residuals(z).items():
            algebra.record(name, value)

        table = invariant_gradients(z)
        for name in table.names():
            fd = fd_gradient_oracle(scalar_invariant(name), z)
            gradients.record(name, relative_residual(np.max(np.abs(fd - table[name])), np.max(np.abs(table[name]))))
    return [identities, algebra, gradients]


def orbit_suite(rtol: float = SUITE_ORBIT_RTOL) -> List[VerificationReport]:
    """Conservation, closure, flow agreement and time reversal over one period."""
    reports = []
    closure = VerificationReport(test_name="circular_closure", tolerance=TOLERANCES.closure)
    agreement = VerificationReport(test_name="flow_divergence", tolerance=TOLERANCES.reversal)
    period = orbital_period(ECCENTRIC)

    trajectories = {}
    for kind in RhsKind:
        circular = integrate(CIRCULAR, kind, 2 * np.pi, rtol=rtol)
        closure.record(kind.value, closure_residual(circular))
        eccentric = integrate(ECCENTRIC, kind, period, rtol=rtol)
        trajectories[kind] = eccentric
        report = conservation_report(eccentric)
        report.test_name = f"eccentric_conservation[{kind.value}]"
        report.notes["period"] = period
        report.notes["closure"] = closure_residual(eccentric)
        reports.append(report)

    reference = trajectories[RhsKind.HAMILTON].final.as_array()
    for kind in (RhsKind.NAMBU_LOG, RhsKind.NAMBU_ALT):
        divergence = np.max(np.abs(trajectories[kind].final.as_array() - reference))
        agreement.record(f"{kind.value}_final_state", float(divergence))

    reports.extend([closure, agreement])
    for kind in (RhsKind.HAMILTON, RhsKind.NAMBU_ALT):
        reports.append(time_reversal_check(ECCENTRIC, kind, period / 2, rtol=rtol))
    return reports


def spectrum_suite(smax=2, hbar: float = 1.0, tolerance: float = TOLERANCES.spectrum_match) -> VerificationReport:
    """Eigenvalues of the operator Hamiltonian against the closed-form Balmer levels."""
    rep = RepSpec.of(spins_up_to(smax), hbar)
    levels = balmer_levels(smax, hbar)
    computed = spectrum(hamiltonian_operator(rep))
    report = VerificationReport(test_name="balmer_spectrum", tolerance=tolerance, rep=rep.spin_values())
    report.notes["levels"] = levels
    report.notes["hbar"] = hbar

    if len(computed) != len(levels):
        report.record("level_count", float("inf"))
        return report
    for (energy, multiplicity), level in zip(computed, levels):
        key = f"s={level['s']}"
        report.record(key, relative_residual(abs(energy - level["energy"]), abs(level["energy"])))
        report.record(f"{key}:degeneracy", 0.0 if multiplicity == level["degeneracy"] else float("inf"))

    trace = float(np.trace(hamiltonian_operator(rep).matrix).real)
    expected_trace = sum(level["energy"] * level["degeneracy"] for level in levels)
    report.record("trace", relative_residual(abs(trace - expected_trace), abs(expected_trace)))
    return report


def algebra_suite(rep: RepSpec) -> List[VerificationReport]:
    """Chiral algebra closure, hermiticity, invariance of H, Casimirs and the PRL identity."""
    gens = build_generators(rep)
    H = hamiltonian_operator(rep)
    report = VerificationReport(test_name="chiral_algebra", tolerance=TOLERANCES.algebra, rep=rep.spin_values())
    scale = max(max(g.norm() for g in gens.values()), 1.0)
    for name, value in algebra_residuals(gens).items():
        report.record(name, relative_residual(value, scale**2))
    for name, g in gens.items():
        report.record(f"hermitean:{name}", relative_residual(g.hermiticity_defect(), scale))
        report.record(f"[H,{name}]", relative_residual((H @ g - g @ H).norm(), H.norm() * scale))
    report.record("hermitean:H", relative_residual(H.hermiticity_defect(), H.norm()))
    return [report, casimir_check(rep), prl_operator_identity_check(rep)]


def qnb_double_implementation_suite(
    trials: int = 50,
    seed: int = DEFAULT_SEED,
    dims: Sequence[int] = (2, 3, 4, 5, 6),
    tolerance: float = TOLERANCES.identity,
) -> VerificationReport:
    """720-term antisymmetrized product against the 90-term commutator strings."""
    rng = make_rng(seed)
    report = VerificationReport(
        test_name="qnb_full_vs_strings", tolerance=tolerance, seed=seed, trials=trials * len(dims)
    )
    for dim in dims:
        for _ in range(trials):
            ops = [random_operator(dim, rng) for _ in range(6)]
            diff = (qnb6_full(ops) - qnb6_strings(ops)).norm()
            report.record(f"dim={dim}", relative_residual(diff, argument_scale(ops)))
    report.notes["classical_limit_factor"] = "48/8 = 6"
    return report


def entwined_suite(
    spin_sets: Sequence[Sequence] = DEFAULT_SPIN_SETS,
    trials: int = DEFAULT_QNB_TRIALS,
    seed: int = DEFAULT_SEED,
    hbar: float = 1.0,
    tolerance: float = TOLERANCES.bracket,
) -> VerificationReport:
    """
    The entwined law for generator monomials (up to degree 2) and random
    hermitean operators; both populations are reported separately.
    """
    rng = make_rng(seed)
    report = VerificationReport(test_name="entwined_evolution", tolerance=tolerance, seed=seed, trials=trials)
    report.rep = [[float(s) for s in spins] for spins in spin_sets]
    for spins in spin_sets:
        rep = RepSpec.of(spins, hbar)
        label = ",".join(str(float(s)) for s in rep.spins)
        for _, f in generator_monomials(rep):
            report.record(f"[{label}] monomials", entwined_evolution_check(f, rep).residual)
        for _ in range(trials):
            f = random_hermitean(rep.dim, rng, hbar)
            check = entwined_evolution_check(f, rep)
            report.record(f"[{label}] random", check.residual)
            # both sides are anti-hermitean for hermitean f
            for side, op in (("lhs", check.lhs), ("rhs", check.rhs)):
                defect = (op + op.dagger()).norm()
                report.record(f"[{label}] antihermitean_{side}", relative_residual(defect, check.scale))
    return report


def symmetrized_suite(
    spins: Optional[Sequence] = None,
    trials: int = DEFAULT_QNB_TRIALS,
    seed: int = DEFAULT_SEED,
    hbar: float = 1.0,
    tolerance: float = TOLERANCES.bracket,
) -> VerificationReport:
    """
    Select the symmetrization convention on a mixed representation (a single
    block has df/dt = 0 and cannot tell them apart), then evaluate the
    selected convention on the requested spins.
    """
    rng = make_rng(seed)
    selection_rep = RepSpec.of(SELECTION_SPINS, hbar)
    target = RepSpec.of(spins if spins is not None else [Fraction(1, 2)], hbar)

    report = VerificationReport(
        test_name="symmetrized_evolution", tolerance=tolerance, seed=seed, trials=trials, rep=target.spin_values()
    )
    f = random_hermitean(selection_rep.dim, rng, hbar)
    selected, residuals = select_symmetrization_convention(f, selection_rep, tolerance)
    report.notes["selection_rep"] = selection_rep.spin_values()
    report.notes["selection_residuals"] = residuals
    if selected is None:
        report.record("convention_selection", float("inf"))
        return report

    report.convention_selected = selected.value
    for _ in range(trials):
        for rep in (selection_rep, target):
            f = random_hermitean(rep.dim, rng, hbar)
            label = ",".join(str(v) for v in rep.spin_values())
            report.record(f"[{label}]", symmetrized_evolution_check(f, rep, selected).residual)
    unselected = next(c for c in Convention if c is not selected)
    target_f = random_hermitean(target.dim, rng, hbar)
    report.notes["unselected_residual_on_target"] = symmetrized_evolution_check(target_f, target, unselected).residual
    return report


def jordan_kurosh_suite(
    spins: Optional[Sequence] = None,
    trials: int = DEFAULT_QNB_TRIALS,
    seed: int = DEFAULT_SEED,
    hbar: float = 1.0,
    strict: bool = False,
    tolerance: float = TOLERANCES.bracket,
) -> VerificationReport:
    """Round trip solve(K, K F + F K) = F on the nonsingular eigenpairs of K = R3 + Lcal3."""
    rng = make_rng(seed)
    rep = RepSpec.of(spins if spins is not None else [Fraction(1, 2)], hbar)
    gens = build_generators(rep)
    K = gens["R3"] + gens["Lcal3"]
    report = VerificationReport(
        test_name="jordan_kurosh_round_trip", tolerance=tolerance, seed=seed, trials=trials, rep=rep.spin_values()
    )
    singular = 0
    for _ in range(trials):
        F = random_hermitean(rep.dim, rng, hbar)
        solution = jordan_kurosh_solve(K, anticommutator(K, F), strict=strict)
        singular = solution.singular_pairs
        report.record("round_trip", relative_residual(nonsingular_distance(solution, F), max(F.norm(), 1.0)))
        # incompatibility is a squared weight
        bound = max((F.norm() * K.norm()) ** 2, 1.0)
        report.record("incompatibility", relative_residual(solution.incompatibility, bound))
    report.notes["singular_pairs"] = singular
    return report


def disentangle_suite(
    spins: Optional[Sequence] = None,
    trials: int = DEFAULT_QNB_TRIALS,
    seed: int = DEFAULT_SEED,
    hbar: float = 1.0,
    tolerance: float = TOLERANCES.bracket,
) -> VerificationReport:
    """Recover df/dt from the entwined law and compare with Heisenberg's rate."""
    rng = make_rng(seed)
    rep = RepSpec.of(spins if spins is not None else SELECTION_SPINS, hbar)
    H = hamiltonian_operator(rep)
    report = VerificationReport(
        test_name="disentangled_rate", tolerance=tolerance, seed=seed, trials=trials, rep=rep.spin_values()
    )
    for _ in range(trials):
        f = random_hermitean(rep.dim, rng, hbar)
        fdot, solution = disentangle_rate(f, rep)
        scale = max(fdot.norm(), solution.x.norm())
        floor = f.norm() * H.norm() / hbar
        if scale <= THRESHOLDS.vanishing_law * floor:
            scale = floor
        report.record("rate", relative_residual(nonsingular_distance(solution, fdot), scale))
    return report


def sector_suite(
    spins: Optional[Sequence] = None, trials: int = DEFAULT_QNB_TRIALS, seed: int = DEFAULT_SEED, hbar: float = 1.0
) -> VerificationReport:
    rng = make_rng(seed)
    rep = RepSpec.of(spins if spins is not None else SELECTION_SPINS, hbar)
    combined = VerificationReport(
        test_name="sector_expectation", tolerance=TOLERANCES.identity, seed=seed, trials=trials, rep=rep.spin_values()
    )
    ratios = []
    for _ in range(trials):
        result = sector_expectation_check(rep, random_hermitean(rep.dim, rng, hbar))
        combined.record("proportionality", result.residuals["proportionality"])
        ratios.extend(result.notes["ratios"])
    combined.notes["ratio_samples"] = len(ratios)
    combined.notes["max_ratio_error"] = max((abs(r["ratio"] - 2 * r["kappa"]) for r in ratios), default=0.0)
    return combined


def qnb_suites(
    spin_sets: Sequence[Sequence],
    trials: int = DEFAULT_QNB_TRIALS,
    seed: int = DEFAULT_SEED,
    strict: bool = False,
    qnb_trials: int = 50,
) -> List[VerificationReport]:
    """
    The quantum suite for a collection of spin lists; the direct sum of all
    given spins is included when there is more than one.
    """
    spin_sets = [list(s) for s in spin_sets]
    reports = [qnb_double_implementation_suite(qnb_trials, seed)]
    reports.append(entwined_suite(spin_sets, trials, seed))
    for spins in spin_sets:
        reports.extend(algebra_suite(RepSpec.of(spins)))
        reports.append(symmetrized_suite(spins, trials, seed))
        reports.append(jordan_kurosh_suite(spins, trials, seed, strict=strict))
        reports.append(sector_suite(spins, trials, seed))
    reports.append(disentangle_suite(None, trials, seed))
    return reports


def run_all(seed: int = DEFAULT_SEED) -> List[VerificationReport]:
    """Every suite with default settings, in acceptance order."""
    reports = [
        cnb_equivalence_suite(DEFAULT_POINTS, seed),
        flow_equivalence_suite(DEFAULT_POINTS, seed),
    ]
    reports.extend(phase_space_suite(DEFAULT_POINTS, seed))
    reports.extend(orbit_suite())
    reports.append(spectrum_suite(2, 1.0))
    reports.append(qnb_double_implementation_suite(50, seed))
    reports.append(entwined_suite(DEFAULT_SPIN_SETS, DEFAULT_QNB_TRIALS, seed))
    reports.append(symmetrized_suite([Fraction(1, 2)], DEFAULT_QNB_TRIALS, seed))
    reports.append(jordan_kurosh_suite([Fraction(1, 2)], DEFAULT_QNB_TRIALS, seed))
    reports.append(sector_suite(SELECTION_SPINS, DEFAULT_QNB_TRIALS, seed))
    reports.append(disentangle_suite(SELECTION_SPINS, DEFAULT_QNB_TRIALS, seed))
    for spins in DEFAULT_SPIN_SETS:
        reports.extend(algebra_suite(RepSpec.of(spins)))
    return reports
