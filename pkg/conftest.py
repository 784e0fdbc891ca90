import numpy as np
import pytest

from models.catalog import catalog_lookup
from models.model_spec import FiniteRankKernel, ModelSpec, TemperatureMap
from services.bifurcation import dawson_audit, full_report


def gaussian_model(**kernel):
    """V0 = x^2/2, theta(alpha) = alpha; with no kernel the map is N(0, 1/alpha)."""
    return ModelSpec(
        name='gaussian',
        V0=lambda x: x ** 2 / 2,
        grad_V0=lambda x: np.asarray(x, dtype=float),
        kernel=FiniteRankKernel(**kernel),
        temperature=TemperatureMap.linear(1.0, (1e-2, 1e2)),
        domain_L=10.0,
        symmetric=True,
    )


@pytest.fixture(scope='session')
def gaussian():
    return gaussian_model()


@pytest.fixture(scope='session')
def dawson():
    return catalog_lookup('dawson', beta=1.0)


@pytest.fixture(scope='session')
def xsin():
    return catalog_lookup('xsin')


@pytest.fixture(scope='session')
def dawson_grid(dawson):
    return dawson.grid()


@pytest.fixture(scope='session')
def xsin_grid(xsin):
    return xsin.grid()


@pytest.fixture(scope='session')
def xsin_report(xsin, xsin_grid):
    return full_report(xsin, (5.5, 6.5), q=xsin_grid)


@pytest.fixture(scope='session')
def dawson_report(dawson, dawson_grid):
    return full_report(dawson, (1.0, 3.0), q=dawson_grid)


@pytest.fixture(scope='session')
def dawson_audit_result():
    return dawson_audit(1.0)
