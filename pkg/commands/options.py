"""Options and helpers shared by the command groups."""
import functools
import logging

import click

from config import Config
from models.catalog import CATALOG, catalog_lookup
from models.loader import load_model
from models.reports import SCHEMAS
from utils.errors import ArgumentError
from utils.helpers import dumps_json, parse_bracket, write_csv, write_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def model_options(f):
    """--model/--model-file plus the grid overrides."""
    @click.option('--model', 'model_name', type=click.Choice(sorted(CATALOG)), default=None,
                  help='Catalog model name.')
    @click.option('--model-file', type=click.Path(dir_okay=False), default=None,
                  help='JSON model document.')
    @click.option('--beta', type=float, default=None, help='Interaction strength for catalog models.')
    @click.option('--domain-L', 'domain_L', type=float, default=None, help='Truncation half-width.')
    @click.option('--grid-panels', type=int, default=None, help='Gauss-Legendre panels.')
    @functools.wraps(f)
    def wrapper(*args, model_name, model_file, beta, domain_L, grid_panels, **kwargs):
        model = resolve_model(model_name, model_file, beta, domain_L)
        kwargs['model'] = model
        kwargs['grid'] = model.grid(panels=grid_panels)
        return f(*args, **kwargs)
    return wrapper


def output_options(*formats):
    def decorator(f):
        f = click.option('--format', 'fmt', type=click.Choice(formats), default=formats[0],
                         show_default=True)(f)
        return click.option('--output', '-o', type=click.Path(dir_okay=False), default=None,
                            help='Output file (stdout when omitted).')(f)
    return decorator


def solver_options(f):
    f = click.option('--max-iter', type=int, default=Config.MAX_ITER, show_default=True)(f)
    return click.option('--tol', type=float, default=Config.TOL, show_default=True)(f)


def resolve_model(model_name, model_file, beta=None, domain_L=None):
    if (model_name is None) == (model_file is None):
        raise ArgumentError('give exactly one of --model or --model-file', 'args')
    if model_file is not None:
        model = load_model(model_file)
        if beta is not None:
            logger.warning('--beta is ignored for model documents; set "beta" in the file')
    else:
        model = catalog_lookup(model_name, beta)
    if domain_L is not None:
        model = model.with_domain(domain_L)
    return model


def resolve_alpha(model, alpha, sigma):
    """Exactly one of --alpha / --sigma; returns (alpha, sigma)."""
    if (alpha is None) == (sigma is None):
        raise ArgumentError('give exactly one of --alpha or --sigma', 'args')
    temperature = model.temperature
    if alpha is None:
        alpha = temperature.alpha_for_sigma(sigma)
    temperature.check_alpha(alpha)
    return alpha, temperature.sigma_for_alpha(alpha)


def bracket_option(text, name='--bracket'):
    if text is None:
        raise ArgumentError(f"{name} lo:hi is required", 'args')
    return parse_bracket(text)


def emit_json(command, payload, output):
    """Validate against the published schema, then write deterministically."""
    report = SCHEMAS[command].model_validate(payload)
    write_text(output, dumps_json(report))
    if output not in (None, '-'):
        logger.info(f"{command}: report written to {output}")
    return report


def emit_csv(header, rows, output):
    write_csv(output, header, rows)
    if output not in (None, '-'):
        logger.info(f"CSV written to {output}")


def show_progress():
    """Progress bars only on interactive runs (set by the entry group)."""
    ctx = click.get_current_context(silent=True)
    return bool(ctx and ctx.obj and ctx.obj.get('progress'))
