#!/usr/bin/env python3

import logging
import math
from contextlib import contextmanager

import click

from nambukepler import harness
from nambukepler.classical_dynamics import RhsKind, closure_residual, conservation_report, integrate
from nambukepler.config import INTEGRATOR, TOLERANCES
from nambukepler.exceptions import NambuError
from nambukepler.phase_space import PhaseState
from nambukepler.report import build_payload, dump_json, write_text
from nambukepler.su2_rep import balmer_levels, parse_spins, validate_spin

RHS_CHOICES = {
    'hamilton': RhsKind.HAMILTON,
    'nambu': RhsKind.NAMBU_LOG,
    'alt': RhsKind.NAMBU_ALT,
}


class UsageFailure(click.ClickException):
    """Invalid input, guarded domain or I/O problem: exit code 2."""

    exit_code = 2


@contextmanager
def exit_on_error():
    try:
        yield
    except NambuError as e:
        raise UsageFailure(f"{type(e).__name__}: {e}")
    except OSError as e:
        raise UsageFailure(f"I/O error: {e}")


def parse_state(ctx, param, value):
    if value is None:
        return None
    try:
        values = [float(v) for v in value.split(',')]
    except ValueError:
        raise click.BadParameter(f"expected six comma-separated numbers, got '{value}'")
    if len(values) != 6:
        raise click.BadParameter(f"expected x,px,y,py,z,pz (six numbers), got {len(values)}")
    return PhaseState.from_array(values)


def parse_spin_list(ctx, param, value):
    try:
        return parse_spins(value)
    except NambuError as e:
        raise UsageFailure(f"{type(e).__name__}: {e}")


def emit_reports(ctx, reports, command, out, include_toolchain=False):
    """Write the JSON artifact, echo one line per suite, exit 1 on any failure."""
    payload = build_payload(reports, command, include_toolchain=include_toolchain)
    with exit_on_error():
        write_text(dump_json(payload), out)
    for report in reports:
        mark = '✅' if report.passed else '❌'
        click.echo(f"{mark} {report.test_name}: max residual {report.max_residual:.3e} (tol {report.tolerance:g})", err=True)
    if not payload['pass']:
        click.echo(f"❌ {command}: verification failed, see {out}", err=True)
        ctx.exit(1)
    click.echo(f"✅ {command}: all checks passed", err=True)


@click.group(context_settings={'auto_envvar_prefix': 'NAMBUKEPLER'})
@click.option('--verbose', is_flag=True, help='Log per-trial residuals (DEBUG level)')
def main(verbose):
    """Classical and quantum Nambu mechanics of the Kepler problem, with verification suites."""
    logging.basicConfig(level=logging.INFO)
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@main.command()
@click.option('--z0', required=True, callback=parse_state, help='Initial state x,px,y,py,z,pz')
@click.option('--rhs', type=click.Choice(list(RHS_CHOICES)), default='hamilton', show_default=True,
              help='Flow law to integrate')
@click.option('--t-max', type=click.FloatRange(min=0.0), default=2 * math.pi, show_default=True,
              help='Final time')
@click.option('--tol', type=click.FloatRange(min=0.0, min_open=True), default=INTEGRATOR.rtol, show_default=True,
              help='Integrator relative tolerance')
@click.option('--drift-tol', type=float, default=TOLERANCES.drift, show_default=True,
              help='Allowed drift of the conserved quantities')
@click.option('--out', default='trajectory.csv', show_default=True, help="Trajectory CSV path ('-' for stdout)")
@click.option('--report', 'report_path', default=None, help='Optional JSON path for the conservation report')
@click.pass_context
def orbit(ctx, z0, rhs, t_max, tol, drift_tol, out, report_path):
    """Integrate one orbit and check that its invariants are conserved."""
    kind = RHS_CHOICES[rhs]
    click.echo(f"🔧 Integrating {kind.value} flow to t = {t_max:g}...", err=True)
    with exit_on_error():
        trajectory = integrate(z0, kind, t_max, rtol=tol)
        trajectory.write_csv(out)

    report = conservation_report(trajectory, tolerance=drift_tol)
    report.notes['closure'] = closure_residual(trajectory)
    click.echo(f"🧱 {len(trajectory)} states written to {out}; closure residual {report.notes['closure']:.3e}", err=True)
    if report_path:
        emit_reports(ctx, [report], 'orbit', report_path)
        return
    if not report.passed:
        click.echo(f"❌ Conservation failed for {', '.join(report.failures())}", err=True)
        ctx.exit(1)
    click.echo(f"✅ Max drift {report.max_residual:.3e} below {drift_tol:g}", err=True)


@main.command('verify-cnb')
@click.option('--points', type=click.IntRange(min=0), default=harness.DEFAULT_POINTS, show_default=True,
              help='Number of sampled points')
@click.option('--seed', type=click.IntRange(min=0), default=harness.DEFAULT_SEED, show_default=True, help='PCG64 seed')
@click.option('--tol', type=click.FloatRange(min=0.0), default=None,
              help='Tolerance for every residual (default: per-suite)')
@click.option('--out', default='cnb_report.json', show_default=True, help="JSON report path ('-' for stdout)")
@click.pass_context
def verify_cnb(ctx, points, seed, tol, out):
    """Determinant against Pfaffian, and the three flow laws against each other."""
    click.echo(f"🔧 Checking classical brackets on {points} points (seed {seed})...", err=True)
    overrides = {} if tol is None else {'tolerance': tol}
    with exit_on_error():
        cnb = harness.cnb_equivalence_suite(points, seed, **overrides)
        flow = harness.flow_equivalence_suite(points, seed, **overrides)
    emit_reports(ctx, [cnb, flow], 'verify-cnb', out)


@main.command()
@click.option('--smax', default='2', show_default=True, help='Largest spin (half-integer)')
@click.option('--hbar', type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True,
              help='Reduced Planck constant')
@click.option('--out', default='spectrum.json', show_default=True, help="JSON table path ('-' for stdout)")
@click.pass_context
def spectrum(ctx, smax, hbar, out):
    """Export the Balmer levels and check them against the operator Hamiltonian."""
    with exit_on_error():
        smax = validate_spin(smax)
        report = harness.spectrum_suite(smax, hbar)
        write_text(dump_json(balmer_levels(smax, hbar)), out)
    for level in report.notes['levels']:
        click.echo(f"  - s = {level['s']:g}: E = {level['energy']:.12g} x {level['degeneracy']}", err=True)
    if not report.passed:
        click.echo(f"❌ Spectrum mismatch: {', '.join(report.failures())}", err=True)
        ctx.exit(1)
    click.echo(f"✅ Spectrum matches the Balmer formula (max residual {report.max_residual:.3e})", err=True)


@main.command('verify-qnb')
@click.option('--spins', default='0.5', show_default=True, callback=parse_spin_list,
              help='Comma-separated spins, e.g. 0,0.5,1')
@click.option('--trials', type=click.IntRange(min=0), default=harness.DEFAULT_QNB_TRIALS, show_default=True,
              help='Random operators per check')
@click.option('--seed', type=click.IntRange(min=0), default=harness.DEFAULT_SEED, show_default=True, help='PCG64 seed')
@click.option('--strict', is_flag=True, help='Fail on incompatible Jordan-Kurosh right-hand sides')
@click.option('--out', default='qnb_report.json', show_default=True, help="JSON report path ('-' for stdout)")
@click.pass_context
def verify_qnb(ctx, spins, trials, seed, strict, out):
    """Quantum Nambu bracket identities and evolution laws on block-diagonal representations."""
    spin_sets = [[s] for s in spins]
    if len(spins) > 1:
        spin_sets.append(list(spins))
    click.echo(f"🔧 Checking quantum brackets for spins {[str(s) for s in spins]} ({trials} trials)...", err=True)
    with exit_on_error():
        reports = harness.qnb_suites(spin_sets, trials, seed, strict=strict, qnb_trials=trials)
    emit_reports(ctx, reports, 'verify-qnb', out)


@main.command()
@click.option('--out', default='report.json', show_default=True, help="JSON report path ('-' for stdout)")
@click.option('--seed', type=click.IntRange(min=0), default=harness.DEFAULT_SEED, show_default=True, help='PCG64 seed')
@click.pass_context
def report(ctx, out, seed):
    """Run every suite with default settings into one JSON report."""
    click.echo("🔧 Running all verification suites...", err=True)
    with exit_on_error():
        reports = harness.run_all(seed)
    emit_reports(ctx, reports, 'report', out, include_toolchain=True)


if __name__ == "__main__":
    main()
