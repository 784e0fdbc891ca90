from dataclasses import replace

import numpy as np
import pytest

from models.catalog import CATALOG, catalog_lookup
from services.gibbs import (
    MeanField, Observable, build_convolution_gibbs, build_gibbs, meanfield_of, moment, pi_project,
    stationarity_residual,
)
from services.selfconsistency import fixed_point_solver, scalar_starts
from utils.errors import ArgumentError, NumericError

STATIONARITY_TESTS = (Observable('x', lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
                      Observable.polynomial(2), Observable.polynomial(4))


def test_gaussian_measure(gaussian):
    """Test the kernel-free map is N(0, 1/alpha)"""
    mu = build_gibbs(gaussian, 2.0)
    assert mu.weights @ mu.density == pytest.approx(1.0, abs=1e-14)
    assert mu.moment(lambda x: x) == pytest.approx(0.0, abs=1e-14)
    assert mu.moment(lambda x: x ** 2) == pytest.approx(0.5, rel=1e-12)
    assert mu.moments((2, 4))[4] == pytest.approx(0.75, rel=1e-12)


def test_log_density_matches(dawson, dawson_grid):
    """Test the stored log-density and normalizer"""
    mu = build_gibbs(dawson, 2.0, MeanField([], [0.3]), dawson_grid)
    np.testing.assert_allclose(np.exp(mu.log_density), mu.density, rtol=1e-12)
    x = dawson_grid.nodes
    raw = -2.0 * dawson.V0(x) - 2.0 * (x ** 2 / 2 - 0.3 * x)
    np.testing.assert_allclose(raw - mu.log_norm, mu.log_density, atol=1e-10)


def test_density_tail_underflow(gaussian):
    """Test large alpha on a wide domain keeps a finite normalization"""
    mu = build_gibbs(gaussian, 99.0)
    assert np.min(mu.density) == 0.0
    assert np.all(np.isfinite(mu.log_density))
    assert np.all(mu.log_density > -np.inf)
    underflowed = mu.density == 0.0
    np.testing.assert_array_equal(np.exp(mu.log_density[underflowed]), 0.0)
    assert mu.moment(lambda x: x ** 2) == pytest.approx(1 / 99.0, rel=1e-9)


def test_scale_invariance(dawson, dawson_grid):
    """Test a constant shift of the potential leaves the measure unchanged"""
    mu = build_gibbs(dawson, 1.5, MeanField([], [0.2]), dawson_grid)
    lifted = replace(dawson, V0=lambda x: dawson.V0(x) + 100.0)
    shifted = build_gibbs(lifted, 1.5, MeanField([], [0.2]), dawson_grid)
    np.testing.assert_allclose(mu.density, shifted.density, rtol=1e-10)
    mirrored = build_gibbs(dawson, 1.5, MeanField([], [-0.2]), dawson_grid)
    np.testing.assert_allclose(mirrored.density, mu.density[dawson_grid.mirror_index()], rtol=1e-12)


def test_alpha_range_enforced(dawson):
    """Test alpha outside the model range"""
    with pytest.raises(ArgumentError):
        build_gibbs(dawson, 0.0)
    with pytest.raises(ArgumentError):
        build_gibbs(dawson, 1e3)


def test_meanfield_shape_checked(xsin):
    """Test a mean field of the wrong size"""
    with pytest.raises(ArgumentError):
        build_gibbs(xsin, 1.0, MeanField([], [0.1]))


def test_meanfield_is_read_only():
    """Test mean fields are immutable and finite"""
    mf = MeanField([0.5], [1.0, -2.0])
    with pytest.raises(ValueError):
        mf.r_k[0] = 3.0
    assert mf.flipped().r_k.tolist() == [-1.0, 2.0]
    assert mf.distance(mf.flipped()) == 4.0
    with pytest.raises(NumericError):
        MeanField([np.nan], [])


def test_pi_project_centers(xsin, xsin_grid):
    """Test projected functions have zero mean"""
    mu = build_gibbs(xsin, 3.0, MeanField([], [0.4, 0.1]), xsin_grid)
    centered = pi_project(mu, np.sin)
    assert moment(mu, centered) == pytest.approx(0.0, abs=1e-14)


def test_meanfield_of_uses_moment_basis():
    """Test the induced mean field reads k~ and not k"""
    model = catalog_lookup('singular-theta')
    mu = build_gibbs(model, 2.0, MeanField([], [0.5]))
    assert meanfield_of(model, mu).r_k[0] == pytest.approx(mu.moment(lambda x: x))


def test_stationarity_at_fixed_point(dawson, dawson_grid):
    """Test the generator residual vanishes at a fixed point"""
    result = fixed_point_solver.solve_fixed_point(dawson, 3.0, scalar_starts(dawson, [0.8])[0],
                                                  tol=1e-12, q=dawson_grid)
    assert result.converged
    residuals = stationarity_residual(result.measure, dawson, STATIONARITY_TESTS)
    assert max(abs(r) for r in residuals) < 1e-8


def test_stationarity_off_fixed_point(dawson, dawson_grid):
    """Test a measure built from a foreign mean field is not stationary"""
    mu = build_gibbs(dawson, 0.5, MeanField([], [0.5]), dawson_grid)
    residuals = stationarity_residual(mu, dawson, STATIONARITY_TESTS)
    assert abs(residuals[0]) > 1e-3


def test_stationarity_convolution(dawson_grid):
    """Test the residual for a convolution kernel at its fixed point"""
    model = catalog_lookup('dawson-convolution')
    result = fixed_point_solver.solve_density_fixed_point(model, 0.5, tol=1e-12, q=dawson_grid)
    residuals = stationarity_residual(result.measure, model, STATIONARITY_TESTS)
    assert max(abs(r) for r in residuals) < 1e-8


def test_stationarity_needs_derivatives(dawson):
    """Test observables without derivatives are refused"""
    mu = build_gibbs(dawson, 1.0)
    with pytest.raises(ArgumentError):
        stationarity_residual(mu, dawson, [Observable('x', lambda x: x)])


def test_density_csv(dawson, tmp_path):
    """Test the density export"""
    mu = build_gibbs(dawson, 1.0, q=dawson.grid(n=4, panels=2))
    path = tmp_path / 'density.csv'
    mu.to_csv(str(path))
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'x,density'
    assert len(lines) == 9


def _catalog_measure(model, alpha, q, level):
    if model.is_finite_rank:
        mf = MeanField(np.full(model.l, level), np.full(model.m, level))
        return build_gibbs(model, alpha, mf, q)
    return build_convolution_gibbs(model, alpha, build_gibbs(model, alpha, q=q).density, q)


@pytest.mark.parametrize('name', sorted(CATALOG))
def test_catalog_measures_normalized(name):
    """Test every catalog measure integrates to one with a finite log-density"""
    model = catalog_lookup(name)
    q = model.grid()
    for alpha in (0.5, 2.0):
        mu = _catalog_measure(model, alpha, q, 0.3)
        assert q.integrate(mu.density) == pytest.approx(1.0, abs=1e-10)
        assert np.all(mu.density >= 0)
        assert np.all(np.isfinite(mu.log_density))


@pytest.mark.parametrize('name', sorted(CATALOG))
def test_catalog_moments_grid_converged(name):
    """Test catalog moments are unchanged when the panels are doubled"""
    model = catalog_lookup(name)
    q = model.grid()
    # h is only Hoelder at 0, so its tilt converges algebraically
    level = 0.0 if name == 'singular-theta' else 0.3
    coarse = _catalog_measure(model, 1.0, q, level)
    fine = _catalog_measure(model, 1.0, q.refined(), level)
    for f in (lambda x: x, lambda x: x ** 2, lambda x: x ** 4, np.cos):
        assert fine.moment(f) == pytest.approx(coarse.moment(f), rel=1e-10, abs=1e-10)
    if model.is_finite_rank:
        np.testing.assert_allclose(meanfield_of(model, fine).as_vector(),
                                   meanfield_of(model, coarse).as_vector(), rtol=1e-10, atol=1e-10)
