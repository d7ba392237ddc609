import math

import numpy as np
import pytest

from cubesynth import (
    AffineConstraints,
    Box,
    ConditioningViolationError,
    ConfigurationError,
    Dataset,
    IndeterminateError,
    SolverError,
    draw_reduced_space,
    feasibility,
    fourier_of_dataset,
    project_affine,
    project_box,
    proximal_point,
    shrinkage_lambda,
    space_from_slots,
    uniform_weights,
)
from cubesynth.solver import _dykstra
from conftest import rand_dataset
from oracles import active_set_projection, kkt_projection, lp_feasible


def tiny_space(p, m, d, seed, min_sigma=0.3):
    """Redraw tiny reduced spaces until the Gram matrix is comfortably
    invertible (the formal conditioning bar is irrelevant at this scale)."""
    while True:
        rs = draw_reduced_space(p, m, d, seed)
        if rs.sigma_min >= min_sigma:
            return rs
        seed += 10_000


def small_instance(seed, p=3, m=6, d=1, n=24):
    rs = tiny_space(p, m, d, seed)
    b = fourier_of_dataset(rand_dataset(n, p, seed + 1), d)
    return AffineConstraints(rs, b)


class TestProjectAffine:
    def test_feasible_point_unchanged(self):
        A = small_instance(seed=2)
        witness = kkt_projection(A.space.design.astype(float), A.target, uniform_weights(6))
        assert np.allclose(project_affine(witness, A), witness, atol=1e-12)

    def test_idempotent(self):
        gen = np.random.Generator(np.random.Philox(8))
        A = small_instance(seed=3)
        for _ in range(10):
            z = gen.normal(size=6)
            once = project_affine(z, A)
            twice = project_affine(once, A)
            assert np.allclose(once, twice, atol=1e-12)

    def test_matches_kkt_oracle(self):
        gen = np.random.Generator(np.random.Philox(9))
        for seed in range(10):
            A = small_instance(seed=40 + seed, m=5)
            z = gen.normal(size=5)
            ours = project_affine(z, A)
            oracle = kkt_projection(A.space.design.astype(float), A.target, z)
            assert np.abs(ours - oracle).max() < 1e-10

    def test_residual_contract(self):
        gen = np.random.Generator(np.random.Philox(10))
        A = small_instance(seed=5)
        for _ in range(20):
            out = project_affine(gen.normal(size=6) * 100, A)
            assert A.residual(out) <= 1e-10 * max(1.0, np.abs(A.target).max())

    def test_singular_gram_rejected(self):
        slots = Dataset(np.tile([[1, -1, 1]], (5, 1)).astype(np.int8))
        rs = space_from_slots(slots, d=1)
        b = fourier_of_dataset(rand_dataset(10, 3, seed=1), 1)
        with pytest.raises(ConditioningViolationError):
            AffineConstraints(rs, b)

    def test_target_shape_checked(self):
        rs = tiny_space(3, 6, 1, seed=2)
        with pytest.raises(ConfigurationError):
            AffineConstraints(rs, np.ones(3))


class TestProjectBox:
    def test_inside_unchanged(self):
        box = Box(0.1, 0.9)
        z = np.array([0.2, 0.5, 0.8])
        assert np.array_equal(project_box(z, box), z)

    def test_zero_vector_clamps_to_floor(self):
        box = Box(0.01, 0.8)
        assert np.array_equal(project_box(np.zeros(4), box), np.full(4, 0.01))

    def test_mixed_coordinates(self):
        box = Box(0.25, 0.75)
        z = np.array([-1.0, 0.5, 2.0])
        assert np.array_equal(project_box(z, box), np.array([0.25, 0.5, 0.75]))

    def test_invalid_box(self):
        with pytest.raises(ConfigurationError):
            Box(0.0, 1.0)
        with pytest.raises(ConfigurationError):
            Box(0.5, 0.5)


class TestFeasibility:
    def test_uniform_target_is_feasible_with_uniform_witness(self):
        rs = tiny_space(3, 6, 1, seed=7)
        u = uniform_weights(6)
        A = AffineConstraints(rs, rs.design.astype(float).T @ u)
        result = feasibility(A, Box(0.05, 0.5))
        assert result.feasible
        assert np.allclose(result.witness, u, atol=1e-9)

    def test_mass_contradiction_infeasible(self):
        # every box point carries total mass >= 1.8, the target asks for 1
        A = small_instance(seed=11, m=6)
        result = feasibility(A, Box(0.9, 1.0))
        assert not result.feasible
        assert result.gap > 1e-3

    def test_verdicts_match_lp_oracle(self):
        gen = np.random.Generator(np.random.Philox(777))
        feasible_seen = infeasible_seen = 0
        for trial in range(100):
            rs = tiny_space(3, 6, 1, seed=50_000 + trial)
            n = int(gen.integers(5, 40))
            b = fourier_of_dataset(rand_dataset(n, 3, seed=trial), 1)
            A = AffineConstraints(rs, b)
            if trial % 2:
                lo, hi = float(gen.uniform(0.005, 0.1)), float(gen.uniform(0.15, 0.6))
            else:
                lo, hi = float(gen.uniform(0.001, 0.03)), float(gen.uniform(0.4, 1.2))
            ours = feasibility(A, Box(lo, hi))
            oracle = lp_feasible(rs.design.astype(float), b.coeffs, lo, hi)
            assert ours.feasible == oracle
            feasible_seen += oracle
            infeasible_seen += not oracle
        assert feasible_seen >= 10 and infeasible_seen >= 10

    def test_indeterminate_when_cap_too_small(self):
        A = small_instance(seed=13)
        with pytest.raises(IndeterminateError):
            feasibility(A, Box(0.9, 1.0), max_iterations=5)


class TestShrinkage:
    def test_zero_when_already_feasible(self):
        rs = tiny_space(3, 6, 1, seed=17)
        u = uniform_weights(6)
        A = AffineConstraints(rs, rs.design.astype(float).T @ u)
        lam, shrunk, result = shrinkage_lambda(A, Box(0.05, 0.5))
        assert lam == 0.0
        assert shrunk is A
        assert result.feasible

    def test_regular_density_needs_no_shrinkage(self):
        # uniform data in the regular regime: the box is reachable at once
        delta, Delta = 0.05, 4.0
        for seed in range(3):
            rs = draw_reduced_space(p=6, m=1024, d=2, seed=seed)
            b = fourier_of_dataset(rand_dataset(4000, 6, seed=100 + seed), 2)
            A = AffineConstraints(rs, b)
            m = 1024
            lam, _, _ = shrinkage_lambda(A, Box(2 * delta / m, (Delta - delta) / m))
            assert lam == 0.0

    def test_skewed_target_forces_shrinkage(self):
        # constant data has every coefficient 1; box-bounded weights cannot
        # reproduce that, so lambda is strictly positive and certified
        rs = tiny_space(4, 24, 1, seed=19, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        m = 24
        shrink = Box(2 * 0.05 / m, (4.0 - 0.05) / m)
        lam, shrunk, result = shrinkage_lambda(A, shrink)
        assert 0.0 < lam <= 1.0
        assert result.feasible
        # minimality within the bisection bracket: just below is infeasible
        below = max(lam - 2e-9, 0.0)
        if below > 0:
            assert not feasibility(A.shrunk(below), shrink).feasible

    def test_monotone_in_lambda(self):
        rs = tiny_space(4, 24, 1, seed=23, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        m = 24
        shrink = Box(2 * 0.05 / m, (4.0 - 0.05) / m)
        lam, _, _ = shrinkage_lambda(A, shrink)
        for step in (0.0, 0.05, 0.2, 0.5):
            probe = min(lam + step, 1.0)
            assert feasibility(A.shrunk(probe), shrink).feasible

    def test_uniform_outside_box_rejected(self):
        A = small_instance(seed=29)
        with pytest.raises(ConfigurationError):
            shrinkage_lambda(A, Box(0.5, 0.9))  # 1/m = 1/6 below the box


class TestProximalPoint:
    def test_uniform_feasible_returns_uniform(self):
        rs = tiny_space(3, 6, 1, seed=31)
        u = uniform_weights(6)
        A = AffineConstraints(rs, rs.design.astype(float).T @ u)
        h = proximal_point(A, Box(0.05, 0.5))
        assert np.allclose(h.weights, u, atol=1e-12)

    def test_binding_free_equals_affine_projection(self):
        # near-uniform data on a roomy box: no bound binds, so the answer
        # is the plain affine projection of u
        rs = draw_reduced_space(p=5, m=64, d=1, seed=37)
        b = fourier_of_dataset(rand_dataset(2000, 5, seed=38), 1)
        A = AffineConstraints(rs, b)
        wide = Box(1e-6, 10.0)
        affine_only = project_affine(uniform_weights(64), A)
        assert affine_only.min() > wide.lo and affine_only.max() < wide.hi
        h = proximal_point(A, wide)
        assert np.abs(h.weights - affine_only).max() < 1e-9

    def test_matches_active_set_oracle(self):
        gen = np.random.Generator(np.random.Philox(101))
        delta, Delta, m = 0.05, 4.0, 5
        for trial in range(20):
            rs = tiny_space(3, m, 1, seed=90_000 + trial)
            n = int(gen.integers(5, 40))
            b = fourier_of_dataset(rand_dataset(n, 3, seed=500 + trial), 1)
            A = AffineConstraints(rs, b)
            lam, shrunk, _ = shrinkage_lambda(A, Box(2 * delta / m, (Delta - delta) / m))
            h = proximal_point(shrunk, Box(delta / m, Delta / m))
            oracle = active_set_projection(
                rs.design.astype(float), shrunk.target, uniform_weights(m),
                delta / m, Delta / m,
            )
            assert oracle is not None
            assert np.abs(h.weights - oracle).max() < 1e-7

    def test_unique_regardless_of_projection_order(self):
        rs = tiny_space(4, 24, 1, seed=43, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        m = 24
        lam, shrunk, _ = shrinkage_lambda(A, Box(2 * 0.05 / m, 3.95 / m))
        box = Box(0.05 / m, 4.0 / m)
        h_default = proximal_point(shrunk, box)
        x, *_ = _dykstra(
            uniform_weights(m), shrunk, box.lo, box.hi,
            change_tol=1e-10 / m, residual_tol=1e-9, box_first=True,
        )
        assert np.abs(h_default.weights - x).max() < 1e-8

    def test_variational_inequality(self):
        # <u - h*, y - h*> <= tol for feasible y: h* is the true projection
        gen = np.random.Generator(np.random.Philox(99))
        rs = tiny_space(4, 12, 1, seed=47, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        m = 12
        lam, shrunk, _ = shrinkage_lambda(A, Box(2 * 0.05 / m, 3.95 / m))
        box = Box(0.05 / m, 4.0 / m)
        h = proximal_point(shrunk, box)
        u = uniform_weights(m)
        for _ in range(200):
            z = gen.normal(size=m) * 0.3 + 1.0 / m
            y, *_ = _dykstra(z, shrunk, box.lo, box.hi,
                             change_tol=1e-10 / m, residual_tol=1e-9)
            assert float((u - h.weights) @ (y - h.weights)) <= 1e-7

    def test_mass_and_box_invariants(self):
        delta, Delta, m = 0.05, 4.0, 24
        rs = tiny_space(4, m, 1, seed=53, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        lam, shrunk, _ = shrinkage_lambda(A, Box(2 * delta / m, (Delta - delta) / m))
        h = proximal_point(shrunk, Box(delta / m, Delta / m))
        assert h.mass_error <= 1e-9
        assert h.weights.min() >= delta / m - 1e-9
        assert h.weights.max() <= Delta / m + 1e-9

    def test_marginal_preservation_under_shrinkage(self):
        # M'h* = (1-lambda) b + lambda M'u within 1e-8
        delta, Delta, m = 0.05, 4.0, 24
        rs = tiny_space(4, m, 1, seed=59, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        lam, shrunk, _ = shrinkage_lambda(A, Box(2 * delta / m, (Delta - delta) / m))
        assert lam > 0.0
        h = proximal_point(shrunk, Box(delta / m, Delta / m))
        blend = (1 - lam) * b.coeffs + lam * A.uniform_image
        assert np.abs(rs.design.astype(float).T @ h.weights - blend).max() <= 1e-8

    def test_nonconvergence_raises(self):
        rs = tiny_space(4, 24, 1, seed=61, min_sigma=1.0)
        b = fourier_of_dataset(Dataset(np.ones((50, 4), dtype=np.int8)), 1)
        A = AffineConstraints(rs, b)
        m = 24
        lam, shrunk, _ = shrinkage_lambda(A, Box(2 * 0.05 / m, 3.95 / m))
        with pytest.raises(SolverError):
            proximal_point(shrunk, Box(0.05 / m, 4.0 / m), max_iterations=2)
