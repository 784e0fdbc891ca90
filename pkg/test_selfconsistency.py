import numpy as np
import pytest

from models.catalog import catalog_lookup
from services.gibbs import MeanField
from services.selfconsistency import (
    FixedPointSolver, distinct_solutions, fixed_point_solver, scalar_starts, selfconsistency_map,
)
from utils.errors import ArgumentError, BracketError


def test_high_temperature_single_fixed_point(dawson, dawson_grid):
    """Test sigma = 2 leaves only the symmetric fixed point"""
    alpha = dawson.temperature.alpha_for_sigma(2.0)
    result = fixed_point_solver.multi_start_solve(dawson, alpha, scalar_starts(dawson, [-1, 0, 1]),
                                                  q=dawson_grid)
    assert len(result) == 1
    assert result.dropped == 0
    assert abs(result.solutions[0].meanfield.r_k[0]) < 1e-7


def test_low_temperature_three_fixed_points(dawson, dawson_grid):
    """Test sigma = 0.6 gives the symmetric point and a mirrored pair"""
    alpha = dawson.temperature.alpha_for_sigma(0.6)
    result = fixed_point_solver.multi_start_solve(dawson, alpha, scalar_starts(dawson, [-1, 0, 1]),
                                                  q=dawson_grid)
    assert len(result) == 3
    means = sorted(s.meanfield.r_k[0] for s in result)
    assert means[0] == pytest.approx(-means[2], abs=1e-7)
    assert means[1] == pytest.approx(0.0, abs=1e-7)
    assert means[2] > 0.5
    for s in result:
        mapped = selfconsistency_map(dawson, alpha, s.meanfield, dawson_grid)
        assert mapped.distance(s.meanfield) < 1e-8


def test_fixed_point_is_mirror_image(xsin, xsin_grid):
    """Test symmetric models map -r to the mirror of r's solution"""
    start = MeanField([], [0.6, 0.4])
    plus = fixed_point_solver.solve_fixed_point(xsin, 8.0, start, q=xsin_grid)
    minus = fixed_point_solver.solve_fixed_point(xsin, 8.0, start.flipped(), q=xsin_grid)
    assert plus.converged and minus.converged
    np.testing.assert_allclose(minus.meanfield.r_k, -plus.meanfield.r_k, atol=1e-7)


def test_residual_trace(dawson, dawson_grid):
    """Test the trace ends below the tolerance and the result reports it"""
    result = fixed_point_solver.solve_fixed_point(dawson, 5.0, scalar_starts(dawson, [0.3])[0],
                                                  tol=1e-10, q=dawson_grid)
    assert result.converged
    assert result.trace[-1] == result.residual_inf < 1e-10
    assert len(result.trace) == result.iterations + 1
    assert result.to_dict()['converged'] is True


def test_not_converged_flagged(dawson, dawson_grid):
    """Test an exhausted iteration budget is reported, not hidden"""
    result = fixed_point_solver.solve_fixed_point(dawson, 5.0, scalar_starts(dawson, [0.5])[0],
                                                  max_iter=1, q=dawson_grid)
    assert not result.converged
    assert result.iterations == 1
    assert result.residual_inf >= fixed_point_solver.tol


def test_distinct_solutions_drops_unconverged(dawson, dawson_grid):
    """Test deduplication keeps one of each converged point"""
    solver = FixedPointSolver(tol=1e-9)
    runs = [solver.solve_fixed_point(dawson, 5.0, s, q=dawson_grid)
            for s in scalar_starts(dawson, [0.4, 0.9])]
    runs.append(solver.solve_fixed_point(dawson, 5.0, scalar_starts(dawson, [0.4])[0], max_iter=0,
                                         q=dawson_grid))
    assert len(distinct_solutions(runs, 1e-7)) == 1


def test_trivial_branch_pins_k(xsin, xsin_grid):
    """Test the trivial branch keeps r_k at zero"""
    result = fixed_point_solver.solve_trivial_branch(xsin, 8.0, q=xsin_grid)
    assert result.converged
    assert result.meanfield.r_k.tolist() == [0.0, 0.0]
    assert result.iterations == 0


def test_convolution_matches_finite_rank(dawson, dawson_grid):
    """Test both Dawson kernels give the same stationary density"""
    finite = fixed_point_solver.solve_fixed_point(dawson, 0.5, scalar_starts(dawson, [0.5])[0],
                                                  tol=1e-12, q=dawson_grid)
    convolution = fixed_point_solver.solve_density_fixed_point(
        catalog_lookup('dawson-convolution'), 0.5, tol=1e-12, q=dawson_grid)
    assert finite.converged and convolution.converged
    np.testing.assert_allclose(convolution.measure.density, finite.measure.density, rtol=0, atol=1e-8)


def test_granular_density_fixed_point():
    """Test the granular-media convolution model converges at moderate alpha"""
    model = catalog_lookup('granular-sin')
    result = fixed_point_solver.solve_density_fixed_point(model, 0.1, tol=1e-9)
    assert result.converged
    assert result.measure.weights @ result.measure.density == pytest.approx(1.0, abs=1e-12)


def test_kernel_kind_checked(dawson):
    """Test each solver refuses the other kernel kind"""
    with pytest.raises(ArgumentError):
        fixed_point_solver.solve_fixed_point(catalog_lookup('dawson-convolution'), 1.0)
    with pytest.raises(ArgumentError):
        fixed_point_solver.solve_density_fixed_point(dawson, 1.0)
    with pytest.raises(ArgumentError):
        fixed_point_solver.multi_start_solve(dawson, 1.0, [])


def test_phase_scan_counts(dawson, dawson_grid):
    """Test the count of fixed points along alpha"""
    results = fixed_point_solver.phase_scan(dawson, [0.5, 5.0], scalar_starts(dawson, [-1, 0, 1]),
                                            q=dawson_grid)
    assert [len(r) for r in results] == [1, 3]


def test_critical_sigma_matches_audit(dawson, dawson_audit_result):
    """Test the critical sigma bracket agrees with the closed-form critical point"""
    found = fixed_point_solver.critical_sigma_scan(dawson, 0.5, 1.5, width=1e-5)
    assert found.width < 1e-5
    assert found.sigma == pytest.approx(dawson_audit_result.sigma0, abs=1e-4)
    assert found.alpha_bracket[0] < dawson_audit_result.alpha0 + 1e-3


def test_critical_sigma_requirements(xsin, dawson):
    """Test the scalar-model restriction and a bracket without a transition"""
    with pytest.raises(ArgumentError):
        fixed_point_solver.critical_sigma_scan(xsin, 0.5, 1.5)
    with pytest.raises(BracketError) as excinfo:
        fixed_point_solver.critical_sigma_scan(dawson, 1.5, 3.0, steps=5)
    assert excinfo.value.stage == 'scan'


def test_map_converged_in_grid(dawson, dawson_grid):
    """Test the self-consistency map is unchanged on a four times finer grid"""
    mf = MeanField([], [0.5])
    fine = dawson.grid(panels=4 * dawson_grid.panels)
    for alpha in (1.0, 3.0):
        coarse_value = selfconsistency_map(dawson, alpha, mf, dawson_grid)
        fine_value = selfconsistency_map(dawson, alpha, mf, fine)
        assert fine_value.distance(coarse_value) < 1e-9


@pytest.mark.parametrize('offset, count', [(-0.3, 1), (0.3, 3)])
def test_xsin_branches_around_critical_point(xsin, xsin_grid, xsin_report, offset, count):
    """Test xsin has only the trivial point below alpha0 and a mirrored pair above"""
    alpha = xsin_report.alpha0 + offset
    result = fixed_point_solver.multi_start_solve(xsin, alpha, scalar_starts(xsin, [-1, -0.5, 0, 0.5, 1]),
                                                  q=xsin_grid)
    assert result.dropped == 0
    assert len(result) == count
    by_first = sorted(result, key=lambda s: s.meanfield.r_k[0])
    np.testing.assert_allclose(by_first[len(by_first) // 2].meanfield.r_k, [0.0, 0.0], atol=1e-7)
    if count == 3:
        low, high = by_first[0].meanfield.r_k, by_first[-1].meanfield.r_k
        np.testing.assert_allclose(low, -high, atol=1e-7)
        assert np.max(np.abs(high)) > 1e-3


def test_singular_theta_fixed_points():
    """Test the drift singular at 0 still gives converged, mirrored fixed points"""
    model = catalog_lookup('singular-theta')
    q = model.grid()
    assert not np.any(q.nodes == 0.0)

    result = fixed_point_solver.multi_start_solve(model, 0.3, scalar_starts(model, [-0.5, 0.5]), q=q)
    assert len(result) == 1
    assert abs(result.solutions[0].meanfield.r_k[0]) < 1e-7

    plus, minus = (fixed_point_solver.solve_fixed_point(model, 4.0, s, q=q)
                   for s in scalar_starts(model, [0.5, -0.5]))
    assert plus.converged and minus.converged
    assert plus.meanfield.r_k[0] > 0.5
    assert minus.meanfield.r_k[0] == pytest.approx(-plus.meanfield.r_k[0], abs=1e-7)
    assert q.integrate(plus.measure.density) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.isfinite(plus.measure.log_density))
