import math
from itertools import product

import numpy as np
import pytest

from quadflow.errors import ConstraintViolation
from quadflow.tensor import check_antisymmetry, QuadraticTensor
from quadflow.torus import (
    TorusField,
    build_torus_tensor,
    enumerate_lattice,
    eval_torus_field,
    psi_torus,
    psi_torus_jacobian,
    random_torus_field,
    torus_divergence_check,
    validate_torus_field,
)

TWO_PI = 2.0 * math.pi


def brute_ball_count(n, cutoff):
    """Independent enumeration oracle: scan the integer cube."""
    radius = int(math.floor(cutoff)) + 1
    count = 0
    for k in product(range(-radius, radius + 1), repeat=n):
        if sum(c * c for c in k) <= cutoff * cutoff + 1e-9:
            count += 1
    return count


class TestEnumerateLattice:
    def test_seven_points_in_unit_ball_of_z3(self):
        lat = enumerate_lattice(3, 1.0)
        assert lat.full_count == 7
        assert lat.full_count == brute_ball_count(3, 1.0)

    def test_cutoff_zero_keeps_only_origin(self):
        lat = enumerate_lattice(2, 0.0)
        assert lat.full_count == 1
        assert lat.representatives == ((0, 0),)

    def test_radius_sqrt2_in_z2(self):
        lat = enumerate_lattice(2, math.sqrt(2))
        assert lat.full_count == 9 == brute_ball_count(2, math.sqrt(2))
        reduced = enumerate_lattice(2, math.sqrt(2), zero_mean=True)
        assert reduced.size == 4
        assert not reduced.includes_zero

    def test_one_representative_per_antipodal_pair(self):
        lat = enumerate_lattice(3, 2.0, zero_mean=True)
        seen = set(lat.representatives)
        for k in seen:
            assert tuple(-c for c in k) not in seen
        assert 2 * lat.size + 1 == lat.full_count

    def test_deterministic_lexicographic_order(self):
        lat = enumerate_lattice(2, math.sqrt(2))
        assert list(lat.representatives) == sorted(lat.representatives)


class TestValidation:
    def test_abc_field_is_valid(self, abc):
        report = validate_torus_field(abc)
        assert report.valid
        assert report.max_reality_violation == 0.0

    def test_even_sine_pair_is_rejected(self):
        field = TorusField(2, {
            (1, 0): ((1.0, 0.0), (0.0, 0.0)),
            (-1, 0): ((1.0, 0.0), (0.0, 0.0)),
        })
        with pytest.raises(ConstraintViolation):
            validate_torus_field(field)

    def test_empty_field_is_valid(self):
        report = validate_torus_field(TorusField(2, {}))
        assert report.valid and report.n_terms == 0

    def test_cutoff_enforced_at_construction(self):
        with pytest.raises(ValueError):
            TorusField(2, {(2, 0): ((1.0, 0.0), (0.0, 0.0))}, cutoff=1.0)


class TestEvaluation:
    def test_abc_at_origin_is_one_one_one(self, abc):
        assert np.allclose(eval_torus_field(abc, np.zeros(3)), [1.0, 1.0, 1.0], atol=1e-15)

    def test_zero_field(self):
        field = TorusField(2, {})
        assert np.all(eval_torus_field(field, np.array([0.3, 0.7])) == 0.0)

    def test_single_sine_term(self):
        field = TorusField(2, {(1, 0): ((1.0, 0.0), (0.0, 0.0))})
        value = eval_torus_field(field, np.array([0.25, 0.0]))
        assert np.allclose(value, [1.0, 0.0], atol=1e-15)

    def test_matches_direct_sum_oracle(self, rng):
        field = random_torus_field(2, math.sqrt(2), rng)
        x = rng.random(2)
        expected = np.zeros(2)
        for k, (a, b) in field.coefficients.items():
            arg = TWO_PI * float(np.dot(k, x))
            expected += np.asarray(a) * math.sin(arg) + np.asarray(b) * math.cos(arg)
        assert np.allclose(eval_torus_field(field, x), expected, atol=1e-14)


class TestPsi:
    def test_circle_values(self):
        field = TorusField(1, {(1,): ((1.0,), (0.0,))})
        assert np.allclose(psi_torus(field, np.array([0.0])), [0.0, 1.0], atol=1e-15)
        assert np.allclose(psi_torus(field, np.array([0.25])), [1.0, 0.0], atol=1e-15)

    def test_jacobian_matches_finite_differences(self, abc, rng):
        x = rng.random(3)
        jac = psi_torus_jacobian(abc, x)
        step = 1e-6
        for l in range(3):
            delta = np.zeros(3)
            delta[l] = step
            fd = (psi_torus(abc, x + delta) - psi_torus(abc, x - delta)) / (2 * step)
            assert np.abs(jac[:, l] - fd).max() < 1e-8

    def test_injective_on_grid_when_cutoff_at_least_one(self):
        field = TorusField(2, {(1, 0): ((0.0, 1.0), (0.0, 0.0)),
                              (0, 1): ((1.0, 0.0), (0.0, 0.0))})
        grid = np.linspace(0.0, 1.0, 25, endpoint=False)
        pts = np.array([(a, b) for a in grid for b in grid])
        images = np.array([psi_torus(field, p) for p in pts])
        diff = pts[:, None, :] - pts[None, :, :]
        torus_dist = np.linalg.norm(np.minimum(np.abs(diff), 1 - np.abs(diff)), axis=2)
        image_dist = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=2)
        mask = torus_dist >= 1e-3
        assert image_dist[mask].min() > 1e-6


class TestTensor:
    def test_circle_sine_field_entries(self):
        field = TorusField(1, {(1,): ((1.0,), (0.0,))})
        tensor = build_torus_tensor(field)
        assert tensor.entry_dict() == {
            (0, 0, 1): TWO_PI,
            (1, 0, 0): -TWO_PI,
        }

    def test_zero_field_gives_empty_tensor(self):
        tensor = build_torus_tensor(TorusField(2, {}, cutoff=1.0))
        assert tensor.nnz == 0

    def test_abc_conjugacy_at_random_points(self, abc, abc_tensor, rng):
        for _ in range(100):
            x = rng.random(3)
            lhs = psi_torus_jacobian(abc, x) @ eval_torus_field(abc, x)
            rhs = abc_tensor.rhs(psi_torus(abc, x))
            assert np.abs(lhs - rhs).max() <= 1e-12

    def test_antisymmetry_exact_for_random_fields(self, rng):
        for n, cutoff in [(1, 1.0), (2, math.sqrt(2)), (3, 1.0), (2, 2.0)]:
            field = random_torus_field(n, cutoff, rng)
            tensor = build_torus_tensor(field)
            assert tensor.certified
            assert check_antisymmetry(tensor) == 0.0

    def test_antisymmetry_survives_refold_from_sparse_storage(self, rng):
        field = random_torus_field(2, math.sqrt(2), rng)
        tensor = build_torus_tensor(field)
        refolded = QuadraticTensor(tensor.d, tensor.entry_list())
        assert check_antisymmetry(refolded) == 0.0

    def test_conjugacy_residual_scales_with_coefficients(self, rng):
        for trial in range(10):
            n = int(rng.integers(1, 4))
            field = random_torus_field(n, 1.0, rng, amplitude=10.0 ** rng.integers(-2, 3))
            tensor = build_torus_tensor(field)
            size = max(np.abs(np.concatenate([np.concatenate(v) for v in
                                              field.coefficients.values()])).max(), 0.0)
            for _ in range(10):
                x = rng.random(n)
                lhs = psi_torus_jacobian(field, x) @ eval_torus_field(field, x)
                rhs = tensor.rhs(psi_torus(field, x))
                assert np.abs(lhs - rhs).max() <= 1e-12 * (1.0 + size)

    def test_field_lies_in_jacobian_column_space(self, rng):
        field = random_torus_field(2, math.sqrt(2), rng)
        tensor = build_torus_tensor(field)
        for _ in range(20):
            x = rng.random(2)
            jac = psi_torus_jacobian(field, x)
            v = tensor.rhs(psi_torus(field, x))
            coef, *_ = np.linalg.lstsq(jac, v, rcond=None)
            assert np.linalg.norm(jac @ coef - v) <= 1e-10

    def test_nonzero_mean_field_keeps_constant_coordinates(self):
        field = TorusField(1, {(0,): ((0.0,), (0.5,)),
                               (1,): ((1.0,), (0.0,))}, cutoff=1.0)
        lat = field.lattice()
        assert lat.includes_zero and lat.size == 2
        tensor = build_torus_tensor(field)
        psi0 = psi_torus(field, np.array([0.125]))
        assert psi0[0] == 0.0 and psi0[1] == 1.0  # frozen (q_0, p_0)
        rhs = tensor.rhs(psi0)
        assert rhs[0] == 0.0 and rhs[1] == 0.0
        lhs = psi_torus_jacobian(field, np.array([0.125])) @ eval_torus_field(field, np.array([0.125]))
        assert np.abs(lhs - rhs).max() <= 1e-12


class TestDivergence:
    def test_abc_is_divergence_free(self, abc):
        report = torus_divergence_check(abc)
        assert report.field_divergence_free
        assert report.tensor_divergence_free
        assert report.tensor_form_max == 0.0

    def test_circle_sine_field_is_not(self):
        field = TorusField(1, {(1,): ((1.0,), (0.0,))})
        report = torus_divergence_check(field)
        assert not report.field_divergence_free
        assert report.field_max_residual == pytest.approx(1.0)
        assert report.tensor_form_max > 1.0

    def test_zero_field_is_divergence_free(self):
        report = torus_divergence_check(TorusField(3, {}, cutoff=1.0))
        assert report.field_divergence_free and report.tensor_divergence_free

    def test_divergence_free_projection_kills_tensor_form(self, rng):
        for _ in range(5):
            field = random_torus_field(3, 1.0, rng, divergence_free=True)
            report = torus_divergence_check(field)
            assert report.field_divergence_free
            assert report.tensor_divergence_free


class TestCompletion:
    def test_completed_field_is_valid_and_doubles_each_pair(self, rng):
        partial = TorusField(2, {(1, 0): (rng.standard_normal(2), rng.standard_normal(2))})
        full = partial.completed()
        assert validate_torus_field(full).valid
        x = rng.random(2)
        # the antipodal partner contributes the same sin/cos values, so the
        # evaluated function doubles relative to representative-only storage
        assert np.allclose(eval_torus_field(full, x),
                           2.0 * eval_torus_field(partial, x), atol=1e-14)

    def test_completion_is_idempotent(self, abc):
        again = abc.completed()
        assert set(again.coefficients) == set(abc.coefficients)
        x = np.array([0.2, 0.4, 0.6])
        assert np.allclose(eval_torus_field(again, x), eval_torus_field(abc, x), atol=0)
