import math

import numpy as np
import pytest

from quadflow.diagnostics import (
    conjugacy_error,
    embed_state,
    lyapunov_max,
    occupied_box_count,
    poincare_section,
    scan_chaotic_ic,
    wrap_torus,
)
from quadflow.harmonics import build_sphere_tensor, killing_field
from quadflow.tensor import QuadraticTensor
from quadflow.torus import TorusField, build_torus_tensor


def make_rotation(basis, gens, theta):
    mu = gens.pairs.index((0, 1))
    weights = np.zeros(3)
    weights[mu] = 1.0
    field = killing_field(basis, gens, weights)
    return field, build_sphere_tensor(field, theta)


class TestConjugacy:
    def test_zero_field_error_vanishes(self):
        field = TorusField(2, {}, cutoff=1.0)
        tensor = build_torus_tensor(field)
        rep = conjugacy_error(field, tensor, np.array([0.3, 0.4]), 5.0)
        # both flows are frozen; only interpolation-weight rounding remains
        assert rep.sup_error <= 1e-14

    def test_abc_short_horizon(self, abc, abc_tensor):
        rep = conjugacy_error(abc, abc_tensor, np.array([0.1, 0.2, 0.3]), 5.0,
                              rtol=1e-10, atol=1e-10)
        assert rep.sup_error <= 1e-7

    def test_rotation_on_sphere(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        field, tensor = make_rotation(s2_basis_deg1, s2_gens, s2_theta_deg1)
        x0 = np.array([0.6, 0.0, 0.8])
        rep = conjugacy_error(field, tensor, x0, 20.0, rtol=1e-10, atol=1e-10)
        assert rep.sup_error <= 1e-8

    def test_error_monotone_in_tolerance(self, abc, abc_tensor):
        x0 = np.array([0.1, 0.2, 0.3])
        errors = [conjugacy_error(abc, abc_tensor, x0, 5.0, rtol=tol, atol=tol).sup_error
                  for tol in (1e-8, 1e-9, 1e-10)]
        assert errors[0] >= errors[1] >= errors[2]


class TestLyapunov:
    def test_rotation_is_non_chaotic(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        field, _ = make_rotation(s2_basis_deg1, s2_gens, s2_theta_deg1)
        x0 = np.array([0.6, 0.0, 0.8])
        res = lyapunov_max(field, x0, 150.0, seed=5)
        assert abs(res.estimate) <= 1e-3

    def test_deterministic_under_seed(self, abc):
        x0 = np.array([0.2, 0.3, 0.4])
        a = lyapunov_max(abc, x0, 50.0, seed=11)
        b = lyapunov_max(abc, x0, 50.0, seed=11)
        assert a.estimate == b.estimate
        assert np.array_equal(a.trace, b.trace)

    def test_linear_saddle_recovers_the_top_eigenvalue(self):
        # quadratic tensor with a frozen coordinate acting as a constant:
        # dy1/dt = 0.7 y1 y3, dy2/dt = -0.3 y2 y3, dy3/dt = 0 with y3 = 1
        t = QuadraticTensor(3, [(0, 0, 2, 0.7), (1, 1, 2, -0.3)])
        res = lyapunov_max(t, np.array([0.0, 0.0, 1.0]), 80.0, seed=2)
        assert res.estimate == pytest.approx(0.7, rel=1e-3)

    def test_scan_is_deterministic(self, abc):
        a = scan_chaotic_ic(abc, count=3, t_scan=30.0, seed=9)
        b = scan_chaotic_ic(abc, count=3, t_scan=30.0, seed=9)
        assert np.array_equal(a.best_x0, b.best_x0)
        assert a.best_estimate == b.best_estimate


class TestPoincare:
    def test_planar_rotation_hits_two_points(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        field, _ = make_rotation(s2_basis_deg1, s2_gens, s2_theta_deg1)
        x0 = np.array([0.8, 0.0, 0.6])
        section = poincare_section(field, x0, 40.0, normal=np.array([0.0, 1.0, 0.0]),
                                   offset=0.0)
        assert len(section.times) >= 10
        # crossings accumulate on at most two points of the circle
        clusters = []
        for p in section.points:
            for c in clusters:
                if np.linalg.norm(p - c) < 1e-6:
                    break
            else:
                clusters.append(p)
        assert len(clusters) <= 2

    def test_zero_field_has_no_crossings(self):
        field = TorusField(2, {}, cutoff=1.0)
        section = poincare_section(field, np.array([0.3, 0.4]), 5.0,
                                   normal=np.array([1.0, 0.0]), offset=0.6)
        assert len(section.times) == 0

    def test_direction_filter(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        field, _ = make_rotation(s2_basis_deg1, s2_gens, s2_theta_deg1)
        x0 = np.array([0.8, 0.0, 0.6])
        both = poincare_section(field, x0, 40.0, np.array([0.0, 1.0, 0.0]))
        up = poincare_section(field, x0, 40.0, np.array([0.0, 1.0, 0.0]), direction=1)
        assert 0 < len(up.times) < len(both.times)

    def test_crossings_lie_on_the_plane(self, abc):
        normal = np.array([0.0, 0.0, 1.0])
        section = poincare_section(abc, np.array([0.1, 0.2, 0.3]), 30.0, normal,
                                   offset=0.0, rtol=1e-9, atol=1e-9)
        assert len(section.times) > 0
        wrapped = wrap_torus(section.points)
        residual = np.minimum(wrapped[:, 2], 1.0 - wrapped[:, 2])
        assert residual.max() <= 1e-6

    def test_torus_levels_counted_once_per_winding(self):
        # constant drift field crosses x2 = 0.5 once per unit of winding
        field = TorusField(2, {(0, 0): ((0.0, 0.0), (0.0, 1.0))}, cutoff=1.0)
        section = poincare_section(field, np.array([0.0, 0.0]), 4.6,
                                   normal=np.array([0.0, 1.0]), offset=0.5,
                                   rtol=1e-10, atol=1e-10)
        assert len(section.times) == 5
        assert np.allclose(sorted(section.times), [0.5, 1.5, 2.5, 3.5, 4.5], atol=1e-8)


def test_occupied_box_count():
    line = np.stack([np.linspace(0, 0.999, 200), np.full(200, 0.5)], axis=1)
    cloud = np.random.default_rng(0).random((200, 2))
    assert occupied_box_count(line, bins=16) == 16
    assert occupied_box_count(cloud, bins=16) > 3 * occupied_box_count(line, bins=16)
    assert occupied_box_count(np.empty((0, 2)), bins=16) == 0
