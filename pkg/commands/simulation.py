"""Particle-system command."""
import logging

import click

from commands.options import (
    EXIT_OK, emit_csv, emit_json, model_options, output_options, resolve_alpha, show_progress,
)
from config import Config
from services.particles import SimConfig, simulate

logger = logging.getLogger(__name__)


@click.command('simulate')
@model_options
@click.option('--alpha', type=float, default=None)
@click.option('--sigma', type=float, default=None)
@click.option('--particles', 'N', type=int, default=10_000, show_default=True)
@click.option('--dt', type=float, default=1e-3, show_default=True)
@click.option('--horizon', 'T', type=float, default=50.0, show_default=True)
@click.option('--burn-in', type=float, default=0.2, show_default=True, help='Fraction of the horizon.')
@click.option('--x0', type=float, default=0.0, show_default=True, help='Initial position of every particle.')
@click.option('--seed', type=int, default=Config.SEED, show_default=True)
@click.option('--batches', type=int, default=Config.MIN_BATCHES, show_default=True)
@click.option('--record-every', type=int, default=0,
              help='Record the first particles every k steps (CSV trajectory export).')
@output_options('json', 'csv')
def simulate_command(model, grid, alpha, sigma, N, dt, T, burn_in, x0, seed, batches,
                     record_every, output, fmt):
    """Euler-Maruyama run of the N-particle system."""
    alpha, sigma = resolve_alpha(model, alpha, sigma)
    cfg = SimConfig(model=model, sigma=sigma, N=N, dt=dt, T=T, burn_in=burn_in, seed=seed,
                    x0=x0, batches=batches, record_every=record_every)
    report = simulate(cfg, progress=show_progress())
    if fmt == 'csv':
        if report.trajectory is not None:
            report.trajectory_csv(output)
        else:
            edges, counts = report.histogram_edges, report.histogram_counts
            emit_csv(['bin_lo', 'bin_hi', 'count'],
                     ([float(edges[i]), float(edges[i + 1]), int(c)] for i, c in enumerate(counts)),
                     output)
    else:
        emit_json('simulate', report.to_dict(), output)
    return EXIT_OK


COMMANDS = (simulate_command,)
