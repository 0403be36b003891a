"""Transfer-matrix products, Lyapunov estimates, rotation numbers."""

import math
from fractions import Fraction

import numpy as np
import pytest

from qplab import (
    CocycleProduct,
    Frequency,
    FourierSeries,
    LyapunovEstimate,
    ModelParams,
    SL2Matrix,
    default_model,
    finite_lyapunov,
    finite_lyapunov_general,
    growth_bound_check,
    lyapunov_free,
    lyapunov_profile,
    lyapunov_scan,
    phase_grid,
    product,
    rotation_free,
    rotation_number,
    step_matrix,
)
from qplab.errors import DomainError

RNG = np.random.default_rng(20260814)


def _dense(params, theta, E, n):
    """Plain dense n-step product for oracle checks at tiny n."""
    m = np.eye(2)
    omega = params.omega_value
    for k in range(n):
        v = params.potential((theta + k * omega) % 1.0)
        m = np.array([[v - E, -1.0], [1.0, 0.0]]) @ m
    return m


# -- single-step matrices -------------------------------------------------------


def test_step_matrix_free_cases(free_model):
    a = step_matrix(free_model, 0.0, 2.0).as_array()
    np.testing.assert_allclose(a, [[0.0, -1.0], [1.0, 0.0]], atol=1e-15)
    b = step_matrix(free_model, 0.3, 0.0).as_array()
    np.testing.assert_allclose(b, [[2.0, -1.0], [1.0, 0.0]], atol=1e-15)


def test_step_matrix_quarter_frequency():
    cos = FourierSeries.from_modes({1: 1.0}, strip_h=1.0)
    params = ModelParams(cos, 1.0, Frequency.from_fraction(Fraction(1, 4)), validate=False)
    a = step_matrix(params, 0.0, 0.0).as_array()
    np.testing.assert_allclose(
        a, [[1.0 + math.exp(-1.0), -1.0], [1.0, 0.0]], rtol=1e-12
    )


def test_step_matrix_is_unimodular(golden):
    params = default_model(1.5, golden)
    for theta in RNG.uniform(0.0, 1.0, 10):
        assert step_matrix(params, float(theta), 0.7).det() == pytest.approx(1.0, abs=1e-12)


def test_sl2_validation():
    with pytest.raises(DomainError):
        SL2Matrix(1.0, 1.0, 0.0, 2.0)
    m = SL2Matrix(1.0, 1.0, 0.0, 2.0, unimodular_check=False)
    assert m.det() == pytest.approx(2.0)
    assert m.fro_norm() == pytest.approx(math.sqrt(6.0))


# -- renormalized products --------------------------------------------------------


def test_one_step_product_matches_step(golden):
    params = default_model(1.0, golden)
    prod = product(params, 0.2, 0.5, 1)
    direct = step_matrix(params, 0.2, 0.5).as_array()
    np.testing.assert_allclose(
        math.exp(prod.log_scale) * prod.matrix.as_array(), direct, rtol=1e-12
    )


def test_free_period_four_is_identity(free_model):
    # at V = 2, E = 2 the step matrix is a quarter rotation: A^4 = I
    prod = product(free_model, 0.0, 2.0, 4)
    full = math.exp(prod.log_scale) * prod.matrix.as_array()
    np.testing.assert_allclose(full, np.eye(2), atol=1e-12)


def test_product_matches_dense_oracle(golden):
    params = default_model(2.0, golden)
    for theta, E, n in [(0.0, 0.5, 7), (0.37, -1.0, 23), (0.9, 3.1, 50)]:
        prod = product(params, theta, E, n)
        dense = _dense(params, theta, E, n)
        got = math.exp(prod.log_scale) * prod.matrix.as_array()
        np.testing.assert_allclose(got, dense, rtol=1e-10, atol=1e-12)


def test_cocycle_splitting_identity(golden):
    # A^{a+b}(theta) = A^a(theta + b w) A^b(theta)
    params = default_model(1.0, golden)
    omega = params.omega_value
    for _ in range(100):
        theta = float(RNG.uniform(0.0, 1.0))
        E = float(RNG.uniform(-1.0, 5.0))
        a, b = int(RNG.integers(1, 40)), int(RNG.integers(1, 40))
        whole = product(params, theta, E, a + b)
        left = product(params, (theta + b * omega) % 1.0, E, a)
        right = product(params, theta, E, b)
        lhs = math.exp(whole.log_scale) * whole.matrix.as_array()
        rhs = (math.exp(left.log_scale) * left.matrix.as_array()) @ (
            math.exp(right.log_scale) * right.matrix.as_array()
        )
        scale = max(1.0, float(np.max(np.abs(lhs))))
        assert float(np.max(np.abs(lhs - rhs))) < 1e-8 * scale


def test_product_determinant_bookkeeping(golden):
    params = default_model(1.0, golden)
    # inside the band the product barely grows, so the determinant stays readable
    prod = product(params, 0.1, 2.0, 500)
    assert prod.det_residual() < 1e-9
    assert prod.true_det() == pytest.approx(1.0, rel=1e-9)
    assert prod.log_norm == pytest.approx(
        prod.log_scale + math.log(prod.matrix.fro_norm()), rel=1e-12
    )
    # once e^{2 log_scale} stops being representable the probe says so
    long = product(params, 0.1, -0.5, 5000)
    assert long.log_scale > 350.0
    assert long.true_det() is None
    assert long.det_residual() < 1e-9


def test_product_input_validation(golden):
    params = default_model(1.0, golden)
    with pytest.raises(DomainError):
        product(params, 0.0, 0.0, 0)


# -- Lyapunov estimates -------------------------------------------------------------


def test_free_lyapunov_closed_forms():
    assert lyapunov_free(2.0) == 0.0
    assert lyapunov_free(0.0) == 0.0
    assert lyapunov_free(4.0) == 0.0
    assert lyapunov_free(6.0) == pytest.approx(math.log(2.0 + math.sqrt(3.0)), rel=1e-12)
    assert lyapunov_free(-1.0) == pytest.approx(0.9624236501192069, rel=1e-12)


def test_finite_lyapunov_free_model(free_model):
    inside = finite_lyapunov(free_model, 2.0, n=20_000, phase_grid_size=8)
    assert inside.value < 0.01
    assert inside.stderr == 0.0  # every phase sees the same constant potential
    outside = finite_lyapunov(free_model, 6.0, n=20_000, phase_grid_size=8)
    assert outside.value == pytest.approx(lyapunov_free(6.0), abs=5e-3)
    mid = finite_lyapunov(free_model, float(RNG.uniform(0.5, 3.5)), n=20_000, phase_grid_size=8)
    assert mid.value < 0.02


def test_lyapunov_estimate_fields(free_model):
    est = finite_lyapunov(free_model, 6.0, n=1000, phase_grid_size=4)
    assert est.energy == 6.0
    assert est.n_steps == 1000
    assert est.n_phases == 4
    assert est.value >= 0.0
    with pytest.raises(DomainError):
        LyapunovEstimate(0.0, -0.1, 10, 4, 0.0)


def test_scan_agrees_with_single_energy(free_model):
    grid = [0.5, 2.0, 6.0]
    scanned = lyapunov_scan(free_model, grid, n=5000, phase_grid_size=8)
    assert [e.energy for e in scanned] == grid
    for est in scanned:
        single = finite_lyapunov(free_model, est.energy, n=5000, phase_grid_size=8)
        assert est.value == pytest.approx(single.value, rel=1e-12)


def test_profile_scales_converge(free_model):
    profile = lyapunov_profile(free_model, 6.0, [500, 1000, 2000, 4000], phase_grid_size=8)
    assert [e.n_steps for e in profile] == [500, 1000, 2000, 4000]
    target = lyapunov_free(6.0)
    for est in profile:
        assert est.value == pytest.approx(target, abs=5e-3)


def test_general_cocycle_diagonal(golden):
    fn = lambda th: np.tile(np.diag([2.0, 0.5]), (th.size, 1, 1))
    est = finite_lyapunov_general(fn, golden.value, n=1000, phase_grid_size=4)
    assert est.value == pytest.approx(math.log(2.0), abs=1e-12)
    assert est.stderr == 0.0


def test_phase_grid_layout():
    grid = phase_grid(8)
    assert grid.shape == (8,)
    assert np.all((grid >= 0.0) & (grid < 1.0))
    assert np.all(np.diff(grid) > 0.0)
    np.testing.assert_allclose(phase_grid(8), grid)  # deterministic
    with pytest.raises(DomainError):
        phase_grid(0)


# -- growth envelope -----------------------------------------------------------------


def test_growth_bound_moderate_coupling(golden):
    params = default_model(2.0, golden)
    report = growth_bound_check(
        params, E_samples=[0.0, 2.0, 7.0], theta_samples=[0.0, 0.3],
        n_samples=[500, 1000, 2000],
    )
    assert report.passed
    assert report.threshold == pytest.approx(21.0)
    assert report.max_ratio < report.threshold
    assert report.worst_energy in (0.0, 2.0, 7.0)
    assert report.worst_n in (500, 1000, 2000)


def test_growth_bound_free_model(free_model):
    report = growth_bound_check(
        free_model, E_samples=[0.0, 2.0, 4.0], theta_samples=[0.0],
        n_samples=[2000],
    )
    # at K = 0 the envelope falls back to 1 + log(2 + max|V - E|)
    assert report.threshold == pytest.approx(1.0 + math.log(4.0))
    assert report.passed


# -- rotation numbers ------------------------------------------------------------------


def test_rotation_free_closed_form():
    assert rotation_free(2.0) == pytest.approx(0.25)
    assert rotation_free(0.0) == 0.0
    assert rotation_free(4.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        rotation_free(5.0)


def test_rotation_number_free_model(free_model):
    for E in (0.0, 2.0, 4.0):
        rho = rotation_number(free_model, E, n=50_000)
        assert rho == pytest.approx(rotation_free(E), abs=1e-3)


def test_rotation_number_interior_grid(free_model):
    for E in (0.5, 1.0, 3.0):
        rho = rotation_number(free_model, E, n=50_000)
        assert rho == pytest.approx(rotation_free(E), abs=1e-3)
