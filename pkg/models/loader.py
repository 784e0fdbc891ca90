"""
User model documents.

    {
      "name": "dawson",
      "V0": "x^4/4 - x^2/2",
      "theta": {"kind": "linear", "slope": 1.0},
      "beta": 1.0,
      "V1": "x^2/2",
      "v_basis": [], "J": [],
      "k_basis": ["x"], "G": [[-1.0]],
      "domain_L": 6.0
    }

`theta` may also be {"kind": "expr", "body": "...", "deriv": "..."} in the
variable `alpha`. Gradients of V0, V1 and the basis functions are obtained by
symbolic differentiation.
"""
import json
import logging
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from models.model_spec import (
    ZERO, BasisFunction, FiniteRankKernel, ModelSpec, TemperatureMap,
)
from utils.errors import ModelParseError, ModelValidationError
from utils.expressions import parse_expression

logger = logging.getLogger(__name__)


class LinearTheta(BaseModel):
    model_config = ConfigDict(extra='forbid')
    kind: Literal['linear']
    slope: float = Field(gt=0)


class ExpressionTheta(BaseModel):
    model_config = ConfigDict(extra='forbid')
    kind: Literal['expr']
    body: str
    deriv: str


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra='forbid')

    name: str = Field(min_length=1)
    V0: str
    theta: Annotated[Union[LinearTheta, ExpressionTheta], Field(discriminator='kind')]
    beta: float = Field(default=1.0, gt=0)
    V1: Optional[str] = None
    v_basis: List[str] = []
    J: List[List[float]] = []
    k_basis: List[str] = []
    G: List[List[float]] = []
    K1: Optional[str] = None
    k_moment_basis: Optional[List[str]] = None
    domain_L: float = Field(gt=0)
    alpha_range: Tuple[float, float] = (1e-2, 1e2)
    symmetric: bool = False
    description: str = ''


def _pointer(loc, data):
    # pydantic inserts the discriminator tag of a union member into loc
    parts, node = [], data
    for part in loc:
        if isinstance(node, dict) and part not in node and node.get('kind') == part:
            continue
        parts.append(str(part))
        if isinstance(node, dict):
            node = node.get(part)
        elif isinstance(node, list) and isinstance(part, int) and part < len(node):
            node = node[part]
        else:
            node = None
    return '/' + '/'.join(parts) if parts else ''


def _basis(source, pointer):
    try:
        expr = parse_expression(source)
        return BasisFunction(expr.source, expr, expr.derivative())
    except ModelParseError as e:
        raise ModelParseError(e.message, pointer)


def _basis_list(sources, field):
    return tuple(_basis(s, f"/{field}/{i}") for i, s in enumerate(sources))


def _matrix(rows, size, field):
    if size == 0 and not rows:
        return np.zeros((0, 0))
    matrix = np.asarray(rows, dtype=float)
    if matrix.shape != (size, size):
        raise ModelValidationError(
            f"{field} has shape {matrix.shape}, expected ({size}, {size}) for its basis", 'load')
    return matrix


def _temperature(doc):
    theta = doc.theta
    if isinstance(theta, LinearTheta):
        return TemperatureMap.linear(theta.slope, doc.alpha_range)
    try:
        body = parse_expression(theta.body, variable='alpha')
    except ModelParseError as e:
        raise ModelParseError(e.message, '/theta/body')
    try:
        deriv = parse_expression(theta.deriv, variable='alpha')
    except ModelParseError as e:
        raise ModelParseError(e.message, '/theta/deriv')
    return TemperatureMap(theta=lambda a: float(body(a)), theta_prime=lambda a: float(deriv(a)),
                          alpha_range=tuple(doc.alpha_range))


def build_model(doc):
    """ModelSpec from a validated document."""
    try:
        V0 = parse_expression(doc.V0)
    except ModelParseError as e:
        raise ModelParseError(e.message, '/V0')

    v_basis = _basis_list(doc.v_basis, 'v_basis')
    k_basis = _basis_list(doc.k_basis, 'k_basis')
    k_moments = None
    if doc.k_moment_basis is not None:
        k_moments = _basis_list(doc.k_moment_basis, 'k_moment_basis')
    K1 = _basis(doc.K1, '/K1') if doc.K1 else None

    kernel = FiniteRankKernel(
        V1=_basis(doc.V1, '/V1') if doc.V1 else ZERO,
        v_basis=v_basis,
        J=_matrix(doc.J, len(v_basis), 'J'),
        k_basis=k_basis,
        G=_matrix(doc.G, len(k_basis), 'G'),
        K1=K1,
        k_moment_basis=k_moments,
    )
    return ModelSpec(
        name=doc.name,
        V0=V0,
        grad_V0=V0.derivative(),
        kernel=kernel,
        temperature=_temperature(doc),
        domain_L=doc.domain_L,
        beta=doc.beta,
        symmetric=doc.symmetric,
        description=doc.description,
    )


def parse_model(data):
    """ModelSpec from an already decoded JSON object."""
    try:
        doc = ModelDocument.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ModelParseError(first['msg'], _pointer(first['loc'], data))
    model = build_model(doc)
    logger.info(f"Loaded model '{model.name}' (l={model.l}, m={model.m})")
    return model


def load_model(path):
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except OSError as e:
        raise ModelParseError(f"cannot read model file {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ModelParseError(f"invalid JSON in {path}: {e.msg} (line {e.lineno})")
    return parse_model(data)
