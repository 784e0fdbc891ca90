import numpy as np
import pytest

from utils.errors import ModelParseError
from utils.expressions import parse_expression


def test_precedence():
    """Test operator precedence and associativity"""
    assert float(parse_expression('2^3^2')(0.0)) == 512.0
    assert float(parse_expression('-x^2')(3.0)) == -9.0
    assert float(parse_expression('1 - x/2*4')(1.0)) == -1.0
    assert float(parse_expression('(1 + x) * 2')(1.0)) == 4.0


def test_signed_exponent():
    """Test a sign directly after ^ binds to the exponent"""
    assert float(parse_expression('x^-2')(2.0)) == 0.25
    assert float(parse_expression('2^-x^2')(1.0)) == 0.5
    assert float(parse_expression('x^+3')(2.0)) == 8.0
    assert float(parse_expression('-2^-1')(0.0)) == -0.5
    f = parse_expression('x^-2')
    x = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(f.derivative()(x), -2 * x ** -3.0, rtol=1e-12)


def test_evaluates_on_arrays():
    """Test vectorized evaluation"""
    x = np.linspace(-2, 2, 9)
    f = parse_expression('x^4/4 - x^2/2')
    np.testing.assert_allclose(f(x), x ** 4 / 4 - x ** 2 / 2, rtol=0, atol=1e-15)


def test_functions():
    """Test the built-in functions"""
    x = np.array([-1.5, 0.3, 2.0])
    np.testing.assert_allclose(parse_expression('sin(x) + cos(x)')(x), np.sin(x) + np.cos(x))
    np.testing.assert_allclose(parse_expression('exp(-abs(x))')(x), np.exp(-np.abs(x)))


def test_symbolic_derivative():
    """Test derivatives against analytic values"""
    x = np.linspace(0.2, 3.0, 15)
    cases = [
        ('x^2 * sin(x)', 2 * x * np.sin(x) + x ** 2 * np.cos(x)),
        ('exp(-x^2/2)', -x * np.exp(-x ** 2 / 2)),
        ('1 / (1 + x^2)', -2 * x / (1 + x ** 2) ** 2),
        ('2^x', 2 ** x * np.log(2)),
        ('x^x', x ** x * (np.log(x) + 1)),
        ('abs(x) * x', 2 * np.abs(x)),
    ]
    for source, expected in cases:
        np.testing.assert_allclose(parse_expression(source).derivative()(x), expected, rtol=1e-12)


def test_alpha_variable():
    """Test expressions in alpha for temperature maps"""
    theta = parse_expression('alpha^2 + alpha', variable='alpha')
    assert float(theta(3.0)) == 12.0
    assert float(theta.derivative()(3.0)) == 7.0
    with pytest.raises(ModelParseError):
        parse_expression('x + 1', variable='alpha')


def test_unknown_names_rejected():
    """Test unknown functions and variables"""
    with pytest.raises(ModelParseError) as excinfo:
        parse_expression('tanh(x)')
    assert 'tanh' in str(excinfo.value)
    with pytest.raises(ModelParseError) as excinfo:
        parse_expression('x + y')
    assert "'y'" in str(excinfo.value)


def test_syntax_errors():
    """Test malformed and empty input"""
    for source in ('x +', '(x', '2 ** x', ''):
        with pytest.raises(ModelParseError):
            parse_expression(source)
    with pytest.raises(ModelParseError):
        parse_expression(None)
