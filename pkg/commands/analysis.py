"""Fixed-point, spectral and bifurcation commands."""
import logging

import click
import numpy as np

from commands.options import (
    EXIT_NOT_CONVERGED, EXIT_OK, bracket_option, emit_csv, emit_json, model_options,
    output_options, resolve_alpha, show_progress, solver_options,
)
from config import Config
from models.catalog import dawson
from services.bifurcation import dawson_audit, full_report
from services.gibbs import Observable, stationarity_residual
from services.selfconsistency import distinct_solutions, fixed_point_solver, scalar_starts
from services.spectral import crossing_scan
from utils.helpers import parse_bracket, write_text

logger = logging.getLogger(__name__)

STATIONARITY_TESTS = (Observable.polynomial(2), Observable.polynomial(4))
DEFAULT_STARTS = (-1.0, 0.0, 1.0)
DEFAULT_SOLVE_START = (0.5,)


def _fixed_point_payload(model, result):
    payload = result.to_dict()
    mu = result.measure
    payload['moments'] = {str(k): v for k, v in mu.moments((1, 2, 4)).items()}
    payload['stationarity'] = stationarity_residual(mu, model, STATIONARITY_TESTS)
    return payload


# ---------------------------------------------
# solve
# ---------------------------------------------
@click.command('solve')
@model_options
@click.option('--alpha', type=float, default=None)
@click.option('--sigma', type=float, default=None)
@click.option('--start', 'starts', type=float, multiple=True,
              help='r_k start value, repeatable (default 0.5).')
@solver_options
@output_options('json', 'csv')
def solve(model, grid, alpha, sigma, starts, tol, max_iter, output, fmt):
    """Solve the self-consistency equation at one alpha (or sigma)."""
    alpha, sigma = resolve_alpha(model, alpha, sigma)
    if model.is_finite_rank:
        results = [
            fixed_point_solver.solve_fixed_point(model, alpha, start, tol, max_iter, grid)
            for start in scalar_starts(model, starts or DEFAULT_SOLVE_START)
        ]
    else:
        results = [fixed_point_solver.solve_density_fixed_point(model, alpha, tol, max_iter, grid)]
    distinct = distinct_solutions(results, 10 * tol)

    if fmt == 'csv':
        results[0].measure.to_csv(output)
    else:
        emit_json('solve', {
            'command': 'solve',
            'model': model.name,
            'alpha': alpha,
            'sigma': sigma,
            'tol': tol,
            'results': [_fixed_point_payload(model, r) for r in results],
            'distinct': len(distinct),
            'dropped': sum(not r.converged for r in results),
        }, output)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


# ---------------------------------------------
# scan (number of stationary distributions per alpha)
# ---------------------------------------------
@click.command('scan')
@model_options
@click.option('--bracket', default=None, help='alpha range lo:hi.')
@click.option('--steps', type=int, default=11, show_default=True)
@click.option('--start', 'starts', type=float, multiple=True,
              help='r_k start values (default -1, 0, 1).')
@click.option('--sigma-bracket', default=None,
              help='Also bracket the critical sigma within lo:hi (scalar symmetric models).')
@click.option('--width', type=float, default=1e-4, show_default=True,
              help='Target width of the critical sigma bracket.')
@solver_options
@output_options('json', 'csv')
def scan(model, grid, bracket, steps, starts, sigma_bracket, width, tol, max_iter, output, fmt):
    """Count distinct fixed points along an alpha grid."""
    lo, hi = bracket_option(bracket)
    starts = starts or DEFAULT_STARTS
    alphas = np.linspace(lo, hi, steps)
    results = fixed_point_solver.phase_scan(model, alphas, scalar_starts(model, starts), tol,
                                            max_iter, grid, progress=show_progress())
    points = [{
        'alpha': r.alpha,
        'sigma': model.temperature.sigma_for_alpha(r.alpha),
        'count': len(r),
        'dropped': r.dropped,
        'meanfields': [s.meanfield.to_dict() for s in r],
    } for r in results]

    critical = None
    if sigma_bracket is not None:
        s_lo, s_hi = parse_bracket(sigma_bracket)
        found = fixed_point_solver.critical_sigma_scan(model, s_lo, s_hi, width=width)
        critical = {
            'sigma_bracket': list(found.sigma_bracket),
            'alpha_bracket': list(found.alpha_bracket),
            'width': found.width,
            'evaluations': found.evaluations,
        }

    if fmt == 'csv':
        emit_csv(['alpha', 'sigma', 'count'], [[p['alpha'], p['sigma'], p['count']] for p in points], output)
    else:
        emit_json('scan', {
            'command': 'scan',
            'model': model.name,
            'starts': list(starts),
            'points': points,
            'critical': critical,
        }, output)
    return EXIT_OK if all(p['count'] for p in points) else EXIT_NOT_CONVERGED


# ---------------------------------------------
# det2-scan
# ---------------------------------------------
@click.command('det2-scan')
@model_options
@click.option('--bracket', default=None, help='alpha range lo:hi.')
@click.option('--steps', type=int, default=21, show_default=True)
@output_options('json', 'csv')
def det2_scan(model, grid, bracket, steps, output, fmt):
    """det2 along the trivial branch and its sign changes."""
    lo, hi = bracket_option(bracket)
    result = crossing_scan(model, lo, hi, steps, grid, progress=show_progress())
    if fmt == 'csv':
        emit_csv(['alpha', 'det2', 'sign', 'min_abs_one_plus_kappa'], result.csv_rows(), output)
    else:
        samples = []
        for s in result.samples:
            sample = {'alpha': s.alpha, 'valid': s.valid, 'reason': s.reason}
            if s.valid:
                sample.update(det2=s.report.det2, sign=s.report.sign,
                              min_abs_one_plus_kappa=s.report.min_abs_one_plus_kappa)
            samples.append(sample)
        emit_json('det2-scan', {
            'command': 'det2-scan',
            'model': model.name,
            'brackets': [list(b) for b in result.brackets],
            'samples': samples,
        }, output)
    return EXIT_OK if all(s.valid for s in result.samples) else EXIT_NOT_CONVERGED


# ---------------------------------------------
# bifurcate
# ---------------------------------------------
@click.command('bifurcate')
@model_options
@click.option('--bracket', default=None, help='alpha range lo:hi containing one candidate.')
@click.option('--root-tol', type=float, default=Config.ROOT_TOL, show_default=True)
@output_options('json', 'text')
def bifurcate(model, grid, bracket, root_tol, output, fmt):
    """Locate alpha0 and test the finite-rank bifurcation conditions."""
    report = full_report(model, bracket_option(bracket), root_tol, grid)
    if fmt == 'text':
        write_text(output, report.summary())
    else:
        emit_json('bifurcate', report.to_dict(), output)
    return EXIT_OK


# ---------------------------------------------
# audit-dawson
# ---------------------------------------------
@click.command('audit-dawson')
@click.option('--beta', type=float, default=1.0, show_default=True)
@click.option('--grid-panels', type=int, default=None)
@output_options('json')
def audit_dawson(beta, grid_panels, output, fmt):
    """Closed-form identities of the Dawson model at its critical point."""
    audit = dawson_audit(beta, dawson(beta).grid(panels=grid_panels))
    emit_json('audit-dawson', audit.to_dict(), output)
    return EXIT_OK


COMMANDS = (solve, scan, det2_scan, bifurcate, audit_dawson)
