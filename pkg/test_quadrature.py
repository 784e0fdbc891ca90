import numpy as np
import pytest

from services.quadrature import build_grid, integrate
from utils.errors import ArgumentError, NumericError


def test_gaussian_integral():
    """Test exp(-x^2) integrates to sqrt(pi)"""
    q = build_grid(10.0)
    assert integrate(q, lambda x: np.exp(-x ** 2)) == pytest.approx(np.sqrt(np.pi), rel=1e-13)


def test_constant_integral():
    """Test the weights sum to the interval length"""
    q = build_grid(6.0, n=8, panels=12)
    assert integrate(q, 1.0) == pytest.approx(12.0, rel=1e-14)
    assert q.node_count == 96


def test_odd_integrand_cancels():
    """Test the grid is mirror symmetric"""
    q = build_grid(6.0)
    assert np.array_equal(q.nodes, -q.nodes[::-1])
    assert abs(integrate(q, lambda x: x ** 3 * np.exp(-x ** 2))) < 1e-14


def test_refinement_agrees():
    """Test doubling the panels leaves smooth integrals unchanged"""
    q = build_grid(8.0, panels=20)
    f = lambda x: np.cos(x) * np.exp(-x ** 2 / 4)
    assert integrate(q.refined(), f) == pytest.approx(integrate(q, f), abs=1e-13)


def test_vector_integrand():
    """Test rows of a stacked integrand are integrated separately"""
    q = build_grid(10.0)
    values = np.vstack([np.exp(-q.nodes ** 2), q.nodes ** 2 * np.exp(-q.nodes ** 2)])
    result = integrate(q, values)
    assert result.shape == (2,)
    assert result[1] == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-12)


def test_non_finite_integrand_names_node():
    """Test a non-finite value raises with its node"""
    q = build_grid(10.0)
    with pytest.raises(NumericError) as excinfo:
        integrate(q, lambda x: np.where(x > 5, np.inf, 1.0))
    assert excinfo.value.node > 5
    assert 'not finite' in str(excinfo.value)


def test_wrong_length_rejected():
    """Test node vectors of the wrong size"""
    q = build_grid(1.0, n=4, panels=2)
    with pytest.raises(ArgumentError):
        integrate(q, np.ones(5))


def test_invalid_grid_arguments():
    """Test grid argument validation"""
    with pytest.raises(ArgumentError):
        build_grid(-1.0)
    with pytest.raises(ArgumentError):
        build_grid(1.0, n=1)
    with pytest.raises(ArgumentError):
        build_grid(1.0, panels=0)
