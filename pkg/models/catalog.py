"""
Built-in model catalog.

dawson              double-well with Curie-Weiss attraction, alpha = 2 beta / sigma^2
dawson-convolution  the same model through H(u) = -u^2/2 (full-density path)
xsin                quartic confinement with the x y - sin x sin y kernel, alpha = 2 / sigma^2
granular-sin        granular-media type convolution H(u) = (1 + u^2) sin u
vfp-dawson          kinetic Dawson model; stationary law is N(0, sigma^2/2) in y times the x-problem
singular-theta      drift |x|^(g-1) x mu(theta) with g < 1 (singular at the origin)
"""
import logging

import numpy as np

from models.model_spec import (
    DIMENSION_1D, DIMENSION_PRODUCT, BasisFunction, FiniteRankKernel, GeneralKernel,
    ModelSpec, TemperatureMap,
)
from utils.errors import ModelError
from utils.validators import Validators

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_RANGE = (1e-2, 1e2)

IDENTITY = BasisFunction('x', lambda x: np.asarray(x, dtype=float),
                         lambda x: np.ones_like(np.asarray(x, dtype=float)))
SINE = BasisFunction('sin(x)', np.sin, np.cos)


def _double_well(x):
    return x ** 4 / 4 - x ** 2 / 2


def _double_well_grad(x):
    return x ** 3 - x


def dawson(beta=1.0):
    beta = Validators.validate_positive('beta', beta)
    kernel = FiniteRankKernel(
        V1=BasisFunction('x^2/2', lambda x: x ** 2 / 2, lambda x: np.asarray(x, dtype=float)),
        k_basis=(IDENTITY,),
        G=[[-1.0]],
        K1=lambda y: y ** 2,
    )
    return ModelSpec(
        name='dawson',
        V0=_double_well,
        grad_V0=_double_well_grad,
        kernel=kernel,
        temperature=TemperatureMap.linear(1.0 / beta, DEFAULT_ALPHA_RANGE),
        domain_L=6.0,
        beta=beta,
        symmetric=True,
        description='dX = -(X^3 - X) dt - beta (X - E X) dt + sigma dB',
    )


def dawson_convolution(beta=1.0):
    beta = Validators.validate_positive('beta', beta)
    return ModelSpec(
        name='dawson-convolution',
        V0=_double_well,
        grad_V0=_double_well_grad,
        kernel=GeneralKernel(H=lambda u: -u ** 2 / 2, H_prime=lambda u: -u, name='-u^2/2'),
        temperature=TemperatureMap.linear(1.0 / beta, DEFAULT_ALPHA_RANGE),
        domain_L=6.0,
        beta=beta,
        symmetric=True,
        description='Dawson model written with the convolution kernel H(u) = -u^2/2',
    )


def xsin():
    kernel = FiniteRankKernel(
        k_basis=(IDENTITY, SINE),
        G=[[-2.0, 0.0], [0.0, 2.0]],
    )
    return ModelSpec(
        name='xsin',
        V0=lambda x: x ** 4 / 4 + x ** 2 / 2 - np.sin(x) ** 2,
        grad_V0=lambda x: x ** 3 + x - np.sin(2 * x),
        kernel=kernel,
        temperature=TemperatureMap.linear(1.0, DEFAULT_ALPHA_RANGE),
        domain_L=6.0,
        beta=2.0,
        symmetric=True,
        description='interaction (x-y)^2 - (sin x - sin y)^2, alpha = 2 / sigma^2',
    )


def granular_sin():
    def H(u):
        return (1 + u ** 2) * np.sin(u)

    def H_prime(u):
        return 2 * u * np.sin(u) + (1 + u ** 2) * np.cos(u)

    def V0(x):
        return x ** 4 - x ** 2 * np.sin(np.abs(x))

    def grad_V0(x):
        a = np.abs(x)
        return 4 * x ** 3 - 2 * x * np.sin(a) - x * a * np.cos(a)

    return ModelSpec(
        name='granular-sin',
        V0=V0,
        grad_V0=grad_V0,
        kernel=GeneralKernel(H=H, H_prime=H_prime, name='(1+u^2) sin u'),
        temperature=TemperatureMap.linear(1.0, DEFAULT_ALPHA_RANGE),
        domain_L=8.0,
        beta=1.0,
        symmetric=False,
        description='granular media: V0 = x^4 - x^2 sin|x|, H(u) = (1 + u^2) sin u',
    )


def vfp_dawson(beta=1.0):
    beta = Validators.validate_positive('beta', beta)
    temperature = TemperatureMap.linear(2.0 / beta, DEFAULT_ALPHA_RANGE)
    kernel = FiniteRankKernel(
        V1=BasisFunction('x^2', lambda x: x ** 2, lambda x: 2 * np.asarray(x, dtype=float)),
        k_basis=(IDENTITY,),
        G=[[-2.0]],
        K1=lambda z: z ** 2,
    )
    return ModelSpec(
        name='vfp-dawson',
        V0=_double_well,
        grad_V0=_double_well_grad,
        kernel=kernel,
        temperature=temperature,
        domain_L=6.0,
        beta=beta,
        dimension=DIMENSION_PRODUCT,
        symmetric=True,
        # y-marginal exp(-theta y^2 / 2): variance 1/theta = sigma^2 / 2
        y_marginal_variance=lambda alpha: 1.0 / temperature.theta(alpha),
        description='kinetic Dawson model, alpha = beta / sigma^2; solved on the x-marginal',
    )


def singular_theta(gamma=0.5, c2=1.0):
    if not 0 < gamma < 4:
        raise ModelError(f"gamma must lie in (0, 4), got {gamma}")

    def h(x):
        return np.sign(x) * np.abs(x) ** gamma

    def h_prime(x):
        a = np.abs(x)
        with np.errstate(divide='ignore'):
            return gamma * a ** (gamma - 1)

    kernel = FiniteRankKernel(
        k_basis=(BasisFunction(f"|x|^{gamma - 1:g} x", h, h_prime),),
        G=[[-1.0]],
        k_moment_basis=(IDENTITY,),
    )
    return ModelSpec(
        name='singular-theta',
        V0=lambda x: x ** 4 / 4 - c2 * x ** 2 / 2,
        grad_V0=lambda x: x ** 3 - c2 * x,
        kernel=kernel,
        temperature=TemperatureMap.linear(1.0, DEFAULT_ALPHA_RANGE),
        domain_L=6.0,
        beta=1.0,
        symmetric=True,
        description='drift |x|^(gamma-1) x mu(y), singular at 0 for gamma < 1',
    )


CATALOG = {
    'dawson': dawson,
    'dawson-convolution': dawson_convolution,
    'xsin': xsin,
    'granular-sin': granular_sin,
    'vfp-dawson': vfp_dawson,
    'singular-theta': singular_theta,
}

BETA_MODELS = {'dawson', 'dawson-convolution', 'vfp-dawson'}


def catalog_lookup(name, beta=None):
    """Fully wired catalog model; `beta` only applies to models with a free beta."""
    builder = CATALOG.get(name)
    if builder is None:
        raise ModelError(f"unknown model '{name}'; known: {', '.join(sorted(CATALOG))}", 'lookup')
    if beta is not None and name in BETA_MODELS:
        return builder(beta)
    if beta is not None:
        logger.warning(f"model '{name}' has a fixed beta; ignoring beta={beta}")
    return builder()


__all__ = ['CATALOG', 'catalog_lookup', 'DIMENSION_1D', 'DIMENSION_PRODUCT']
