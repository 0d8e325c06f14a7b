import numpy as np
import pytest

from nambukepler.classical_dynamics import (
    CSV_HEADER,
    RhsKind,
    alt_nambu_rhs,
    closure_residual,
    compare_flows,
    conservation_report,
    general_evolution,
    hamilton_rhs,
    hamiltonian_evolution,
    integrate,
    nambu_rhs,
    orbital_period,
    time_reversal_check,
)
from nambukepler.config import INTEGRATOR, make_rng
from nambukepler.exceptions import DegenerateInvariants, SingularPoint, ZeroAngularMomentum
from nambukepler.phase_space import PhaseState, invariants, sample_bound_state

CIRCULAR = PhaseState(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
ECCENTRIC = PhaseState(1.0, 0.0, 0.0, 0.5, 0.0, 0.0)

def test_hamilton_rhs_on_circular_orbit():
    assert np.allclose(hamilton_rhs(CIRCULAR), [0, -1, 1, 0, 0, 0])

def test_hamilton_rhs_at_singularity():
    with pytest.raises(SingularPoint):
        hamilton_rhs(PhaseState(0.0, 1.0, 0.0, 0.0, 0.0, 0.0))

@pytest.mark.parametrize("rhs", [nambu_rhs, alt_nambu_rhs])
def test_nambu_laws_reproduce_hamilton(rhs):
    assert np.allclose(rhs(CIRCULAR), [0, -1, 1, 0, 0, 0], atol=1e-12)
    assert np.allclose(rhs(ECCENTRIC), hamilton_rhs(ECCENTRIC), atol=1e-12)

def test_three_laws_agree_on_sampled_points():
    rng = make_rng(42)
    for _ in range(50):
        nambu_res, alt_res = compare_flows(sample_bound_state(rng))
        assert nambu_res < 1e-8
        assert alt_res < 1e-8

def test_nambu_rhs_rejects_zero_angular_momentum():
    with pytest.raises(ZeroAngularMomentum, match="L"):
        nambu_rhs(PhaseState(1.0, 0.0, 0.0, 0.0, 0.0, 0.0))

def test_nambu_rhs_rejects_retrograde_orbit():
    # L3 = -1 makes R3 + Lcal3 = -2, outside the domain of the logarithm
    with pytest.raises(DegenerateInvariants, match="R3 \\+ Lcal3"):
        nambu_rhs(PhaseState(1.0, 0.0, 0.0, -1.0, 0.0, 0.0))
    assert np.allclose(alt_nambu_rhs(PhaseState(1.0, 0.0, 0.0, -1.0, 0.0, 0.0)), [0, -1, -1, 0, 0, 0])

def test_alt_rhs_rejects_vanishing_product():
    # orbit in the xz plane: L3 = D3 = 0
    with pytest.raises(DegenerateInvariants, match="R3 Lcal3"):
        alt_nambu_rhs(PhaseState(1.0, 0.0, 0.0, 0.0, 0.0, 0.5))

def test_general_evolution_matches_poisson_bracket():
    e = np.eye(6)
    assert general_evolution(e[2], ECCENTRIC) == pytest.approx(0.5, abs=1e-12)   # dy/dt = py
    assert general_evolution(e[1], ECCENTRIC) == pytest.approx(-1.0, abs=1e-12)  # dpx/dt = -x / r^3
    rng = make_rng(8)
    for _ in range(10):
        z = sample_bound_state(rng)
        grad = rng.uniform(-1, 1, size=6)
        expected = hamiltonian_evolution(grad, z)
        assert general_evolution(grad, z) == pytest.approx(expected, abs=1e-9 * max(1.0, abs(expected)))

def test_orbital_period():
    assert orbital_period(CIRCULAR) == pytest.approx(2 * np.pi)
    assert orbital_period(ECCENTRIC) == pytest.approx(2 * np.pi * (4 / 7) ** 1.5)

def test_zero_time_gives_single_state():
    traj = integrate(CIRCULAR, RhsKind.NAMBU_LOG, 0.0)
    assert len(traj) == 1
    lines = traj.to_csv().strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2
    assert conservation_report(traj).passed

def test_negative_time_rejected():
    with pytest.raises(ValueError, match="non-negative"):
        integrate(CIRCULAR, "hamilton", -1.0)

def test_invalid_start_raises_before_stepping():
    with pytest.raises(ZeroAngularMomentum):
        integrate(PhaseState(1.0, 0.0, 0.0, 0.0, 0.0, 0.0), "nambu_log", 1.0)

@pytest.mark.parametrize("kind", list(RhsKind))
def test_circular_orbit_closes(kind):
    traj = integrate(CIRCULAR, kind, 2 * np.pi)
    assert traj.times[-1] == pytest.approx(2 * np.pi)
    assert closure_residual(traj) < 1e-6
    assert conservation_report(traj).passed

@pytest.mark.parametrize("kind", list(RhsKind))
def test_eccentric_orbit_conserves_invariants(kind):
    traj = integrate(ECCENTRIC, kind, orbital_period(ECCENTRIC), rtol=1e-12)
    report = conservation_report(traj)
    assert report.passed, report.failures()
    assert {"H", "L3", "A1", "R1", "Lcal2", "R3+Lcal3", "kepler_residual"} <= set(report.residuals)
    assert closure_residual(traj) < 1e-6

def test_nambu_trajectory_follows_hamilton():
    period = orbital_period(ECCENTRIC)
    reference = integrate(ECCENTRIC, RhsKind.HAMILTON, period, rtol=1e-12).final.as_array()
    nambu = integrate(ECCENTRIC, RhsKind.NAMBU_LOG, period, rtol=1e-12).final.as_array()
    assert np.max(np.abs(nambu - reference)) < 1e-5

@pytest.mark.parametrize("kind", [RhsKind.HAMILTON, RhsKind.NAMBU_ALT])
def test_time_reversal(kind):
    report = time_reversal_check(ECCENTRIC, kind, 1.0)
    assert report.passed
    assert report.residuals["return_distance"] < 1e-5

def test_trajectory_csv_columns(tmp_path):
    traj = integrate(ECCENTRIC, "hamilton", 0.5)
    path = tmp_path / "out" / "orbit.csv"
    traj.write_csv(str(path))
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape == (len(traj), 10)
    assert rows[0, 0] == 0.0
    assert np.allclose(rows[:, 7], invariants(ECCENTRIC).H, atol=1e-8)
    assert np.allclose(rows[:, 8], 0.5, atol=1e-8)
    assert traj.metadata["method"] == "DOP853"

@pytest.mark.parametrize("kind", list(RhsKind))
def test_nambu_invariants_drift_within_ten_times_tolerance(kind):
    traj = integrate(ECCENTRIC, kind, orbital_period(ECCENTRIC))
    assert traj.metadata["rtol"] == INTEGRATOR.rtol
    residuals = conservation_report(traj).residuals
    for name in ("R1", "R2", "Lcal1", "Lcal2", "R3+Lcal3"):
        assert residuals[name] < 10 * INTEGRATOR.rtol, name
