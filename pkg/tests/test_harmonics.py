import math

import numpy as np
import pytest

from quadflow.errors import (
    BadAngles,
    DegreeOverflow,
    ExpansionResidual,
    NotTangent,
    OffSphere,
)
from quadflow.harmonics import (
    HarmonicBasis,
    SphereField,
    billiard_field,
    build_sphere_tensor,
    decompose_sphere_field,
    drop_constant_index,
    generator_span_rank,
    harmonic_basis,
    harmonic_dimension,
    harmonic_dimension_report,
    killing_field,
    psi_sphere,
    psi_sphere_jacobian,
    random_sphere_field,
    reconstruction_residual,
    so_generators,
    so_torus_total_dimension,
    sphere_divergence_check,
    sphere_moment,
    theta_coefficients,
)
from quadflow.polynomials import Polynomial, PolynomialField
from quadflow.tensor import check_antisymmetry
from quadflow.integrate import integrate_quadratic


def quadrature_moment_s2(exponents, n_theta=60, n_phi=120):
    """Independent quadrature oracle on S^2: Gauss-Legendre x trapezoid."""
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    total = 0.0
    for u, w in zip(nodes, weights):
        r = math.sqrt(1 - u * u)
        x = r * np.cos(phi)
        y = r * np.sin(phi)
        vals = (x ** exponents[0]) * (y ** exponents[1]) * (u ** exponents[2])
        total += w * vals.sum() * (2 * math.pi / n_phi)
    return total


class TestMoments:
    def test_area_of_s2(self):
        assert sphere_moment((0, 0, 0)) == pytest.approx(4 * math.pi, rel=1e-14)

    def test_quadratic_moment(self):
        assert sphere_moment((2, 0, 0)) == pytest.approx(4 * math.pi / 3, rel=1e-14)

    def test_odd_moments_vanish(self):
        assert sphere_moment((1, 2, 0)) == 0.0
        assert sphere_moment((0, 3, 2)) == 0.0

    def test_against_quadrature_oracle(self):
        for e in [(2, 2, 0), (4, 0, 0), (2, 2, 2), (0, 0, 6)]:
            assert sphere_moment(e) == pytest.approx(quadrature_moment_s2(e), rel=1e-10)

    def test_circle_moments(self):
        assert sphere_moment((0, 0)) == pytest.approx(2 * math.pi, rel=1e-14)
        assert sphere_moment((2, 0)) == pytest.approx(math.pi, rel=1e-14)


class TestDimensions:
    def test_s3_cumulative_three_is_thirty(self):
        assert harmonic_dimension(3, 3, "cumulative") == 30

    def test_constants_per_degree(self):
        assert harmonic_dimension(2, 0, "per-degree") == 1

    def test_s2_counts(self):
        assert harmonic_dimension(2, 1, "cumulative") == 4
        assert harmonic_dimension(2, 2, "per-degree") == 5

    def test_per_degree_matches_kernel_dimension_oracle(self):
        from quadflow.harmonics import _harmonic_vectors

        for n in (1, 2, 3):
            for j in range(5):
                _, vectors = _harmonic_vectors(n + 1, j)
                assert len(vectors) == harmonic_dimension(n, j, "per-degree")

    def test_printed_closed_form_disagrees_and_is_reported(self):
        report = harmonic_dimension_report(2, 1)
        assert report.direct == 4
        assert not report.matches

    def test_so_torus_total(self):
        assert so_torus_total_dimension(30) == 465
        assert so_torus_total_dimension(6) == 21


class TestGenerators:
    def test_counts(self):
        assert so_generators(2).m == 3
        assert so_generators(1).m == 1
        assert so_generators(3).m == 6

    def test_circle_generator_is_rotation(self):
        gens = so_generators(1)
        x = np.array([0.6, 0.8])
        h = gens.evaluate(x)[0]
        assert np.allclose(np.abs(h), [0.8, 0.6])
        assert h @ x == pytest.approx(0.0, abs=1e-15)

    def test_span_rank_on_s3(self):
        assert generator_span_rank(so_generators(3), np.array([1.0, 0, 0, 0])) == 3

    def test_span_rank_at_random_points(self, rng):
        gens = so_generators(2)
        for _ in range(10):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            assert generator_span_rank(gens, x) == 2


class TestHarmonicBasis:
    def test_s2_degree_one_values(self, s2_basis_deg1):
        basis = s2_basis_deg1
        assert basis.size == 4
        assert basis.degrees == (0, 1, 1, 1)
        const = 1.0 / math.sqrt(4 * math.pi)
        lin = math.sqrt(3.0 / (4 * math.pi))
        assert basis.elements[0].terms[(0, 0, 0)] == pytest.approx(const, rel=1e-14)
        for idx, var in ((1, (1, 0, 0)), (2, (0, 1, 0)), (3, (0, 0, 1))):
            assert basis.elements[idx].terms[var] == pytest.approx(lin, rel=1e-14)

    def test_circle_basis_spans_constant_and_waves(self):
        basis = harmonic_basis(1, 1)
        assert basis.size == 3
        phi = 0.7
        x = np.array([math.cos(phi), math.sin(phi)])
        vals = basis.eval_all(x)
        assert vals[0] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
        assert vals[1] == pytest.approx(math.cos(phi) / math.sqrt(math.pi), rel=1e-13)
        assert vals[2] == pytest.approx(math.sin(phi) / math.sqrt(math.pi), rel=1e-13)

    def test_gram_matrix_is_identity(self, s2_basis_deg2):
        gram = s2_basis_deg2.gram_matrix()
        assert np.abs(gram - np.eye(s2_basis_deg2.size)).max() <= 1e-10

    def test_gram_identity_for_s3(self):
        basis = harmonic_basis(3, 2)
        assert np.abs(basis.gram_matrix() - np.eye(basis.size)).max() <= 1e-10

    def test_every_element_is_harmonic_exactly(self, s2_basis_deg2):
        for raw in s2_basis_deg2.raw:
            assert raw.laplacian().is_zero()

    def test_degree_ordering(self):
        basis = harmonic_basis(2, 3)
        assert list(basis.degrees) == sorted(basis.degrees)
        assert basis.size == harmonic_dimension(2, 3, "cumulative")

    def test_content_hash_is_stable(self, s2_basis_deg1):
        again = harmonic_basis(2, 1)
        assert again.content_hash() == s2_basis_deg1.content_hash()

    def test_desk_scale_guard(self):
        with pytest.raises(ValueError):
            harmonic_basis(9, 1)
        with pytest.raises(ValueError):
            harmonic_basis(2, 9)


class TestTheta:
    def test_exact_antisymmetry(self, s2_theta_deg2):
        v = s2_theta_deg2.values
        assert np.abs(v + v.transpose(0, 2, 1)).max() == 0.0

    def test_diagonal_vanishes(self, s2_theta_deg2):
        v = s2_theta_deg2.values
        assert np.abs(np.einsum("mbb->mb", v)).max() == 0.0

    def test_degree_blocks_are_exact(self, s2_basis_deg2, s2_theta_deg2):
        degrees = s2_basis_deg2.degrees
        v = s2_theta_deg2.values
        for b in range(len(degrees)):
            for g in range(len(degrees)):
                if degrees[b] != degrees[g]:
                    assert np.abs(v[:, b, g]).max() == 0.0

    def test_z_rotation_moves_x_to_minus_y(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        # generator rotating the (x1, x2) plane: h = (x2, -x1, 0)
        mu = s2_gens.pairs.index((0, 1))
        v = s2_theta_deg1.values[mu]
        # h(Y_x) = x2 * dY_x/dx1 = Y_y up to the shared normalization
        assert v[1, 2] == pytest.approx(1.0, abs=1e-14)
        assert v[2, 1] == pytest.approx(-1.0, abs=1e-14)

    def test_expansion_identity_at_random_points(self, s2_basis_deg2, s2_gens,
                                                 s2_theta_deg2, rng):
        basis, gens, theta = s2_basis_deg2, s2_gens, s2_theta_deg2
        for _ in range(10):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            vals = basis.eval_all(x)
            hx = gens.evaluate(x)
            for mu in range(gens.m):
                for b in range(basis.size):
                    grad = np.array([basis.elements[b].diff(i)(x) for i in range(3)])
                    lhs = grad @ hx[mu]
                    rhs = theta.values[mu, b] @ vals
                    assert abs(lhs - rhs) <= 1e-10

    def test_corrupted_basis_raises_expansion_residual(self, s2_gens):
        basis = harmonic_basis(2, 1)
        broken = HarmonicBasis(basis.n, basis.max_degree, basis.degrees,
                               basis.raw, basis.self_ip)
        elements = list(broken.elements)
        elements[2] = elements[2] + Polynomial.constant(3, 0.37)
        broken.elements = tuple(elements)
        with pytest.raises(ExpansionResidual):
            theta_coefficients(broken, s2_gens, verify=True)


class TestDecomposition:
    def test_generator_decomposes_onto_the_constant(self, s2_basis_deg1, s2_gens):
        field = decompose_sphere_field(s2_gens.field(0), s2_basis_deg1, s2_gens)
        c = field.coefficients
        assert c[0, 0] == pytest.approx(math.sqrt(4 * math.pi), rel=1e-10)
        mask = np.ones_like(c, dtype=bool)
        mask[0, 0] = False
        assert np.abs(c[mask]).max() <= 1e-10

    def test_zero_field_gives_zero_coefficients(self, s2_basis_deg1, s2_gens):
        zero = PolynomialField([Polynomial.zero(3) for _ in range(3)])
        field = decompose_sphere_field(zero, s2_basis_deg1, s2_gens)
        assert np.abs(field.coefficients).max() == 0.0

    def test_radial_field_is_rejected(self, s2_basis_deg1, s2_gens):
        radial = PolynomialField([Polynomial.variable(3, i) for i in range(3)])
        with pytest.raises(NotTangent):
            decompose_sphere_field(radial, s2_basis_deg1, s2_gens)

    def test_degree_overflow(self, s2_basis_deg1, s2_gens, s2_basis_deg2):
        # degree-3 tangent field cannot fit harmonics up to degree 1
        x3 = Polynomial.variable(3, 2)
        steep = PolynomialField([
            -(x3 * x3) * Polynomial.variable(3, 0),
            -(x3 * x3) * Polynomial.variable(3, 1),
            x3 - (x3 * x3) * Polynomial.variable(3, 2),
        ])
        with pytest.raises(DegreeOverflow):
            decompose_sphere_field(steep, s2_basis_deg1, s2_gens)
        ok = decompose_sphere_field(steep, s2_basis_deg2, s2_gens)
        assert reconstruction_residual(ok, steep) <= 1e-9

    def test_random_synthetic_fields_reconstruct(self, s2_basis_deg2, s2_gens, rng):
        synthetic = random_sphere_field(s2_basis_deg2, s2_gens, rng)
        target = synthetic.to_polynomial_field()
        recovered = decompose_sphere_field(target, s2_basis_deg2, s2_gens)
        assert reconstruction_residual(recovered, target) <= 1e-9


class TestPsiSphere:
    def test_north_pole_values(self, s2_basis_deg1):
        vals = psi_sphere(s2_basis_deg1, np.array([0.0, 0.0, 1.0]))
        assert vals[0] == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-14)
        assert vals[1] == 0.0 and vals[2] == 0.0
        assert vals[3] == pytest.approx(math.sqrt(3 / (4 * math.pi)), rel=1e-14)

    def test_norm_is_constant_on_the_sphere(self, s2_basis_deg2, rng):
        basis = s2_basis_deg2
        expected = basis.size / basis.area
        for _ in range(100):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            vals = psi_sphere(basis, x)
            assert vals @ vals == pytest.approx(expected, abs=1e-10)

    def test_jacobian_matches_finite_differences(self, s2_basis_deg2, rng):
        x = rng.standard_normal(3)
        x /= np.linalg.norm(x)
        jac = psi_sphere_jacobian(s2_basis_deg2, x)
        h = 1e-6
        for l in range(3):
            dx = np.zeros(3)
            dx[l] = h
            fd = (s2_basis_deg2.eval_all(x + dx) - s2_basis_deg2.eval_all(x - dx)) / (2 * h)
            assert np.abs(jac[:, l] - fd).max() <= 1e-8

    def test_off_sphere_rejected(self, s2_basis_deg1):
        with pytest.raises(OffSphere):
            psi_sphere(s2_basis_deg1, np.array([0.0, 0.0, 1.1]))

    def test_drop_constant_variant(self, s2_basis_deg1):
        x = np.array([0.0, 1.0, 0.0])
        full = psi_sphere(s2_basis_deg1, x)
        dropped = psi_sphere(s2_basis_deg1, x, drop_constant=True)
        assert np.allclose(dropped, full[1:], atol=0)


class TestSphereTensor:
    def test_rotation_fixed_point_at_pole(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        mu = s2_gens.pairs.index((0, 1))
        weights = np.zeros(3)
        weights[mu] = 1.0
        rot = killing_field(s2_basis_deg1, s2_gens, weights)
        tensor = build_sphere_tensor(rot, s2_theta_deg1)
        pole = np.array([0.0, 0.0, 1.0])
        assert np.abs(rot(pole)).max() == 0.0
        assert np.abs(tensor.rhs(psi_sphere(s2_basis_deg1, pole))).max() == 0.0

    def test_rotation_trajectories_are_circles(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        mu = s2_gens.pairs.index((0, 1))
        weights = np.zeros(3)
        weights[mu] = 1.0
        rot = killing_field(s2_basis_deg1, s2_gens, weights)
        tensor = build_sphere_tensor(rot, s2_theta_deg1)
        x0 = np.array([0.8, 0.0, 0.6])
        y0 = psi_sphere(s2_basis_deg1, x0)
        traj = integrate_quadratic(tensor, y0, 2 * math.pi, rtol=1e-11, atol=1e-11)
        # period 2 pi: the orbit closes
        assert np.abs(traj.final_state - y0).max() <= 1e-8
        # the third coordinate of x (captured by the z harmonic) stays fixed
        z_idx = 3
        assert np.abs(traj.y[:, z_idx] - y0[z_idx]).max() <= 1e-9

    def test_zero_field_zero_tensor(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        zero = SphereField(s2_basis_deg1, s2_gens, np.zeros((3, 4)))
        assert build_sphere_tensor(zero, s2_theta_deg1).nnz == 0

    def test_random_killing_conjugacy(self, s2_basis_deg1, s2_gens, s2_theta_deg1, rng):
        field = killing_field(s2_basis_deg1, s2_gens, rng.standard_normal(3))
        tensor = build_sphere_tensor(field, s2_theta_deg1)
        for _ in range(100):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            lhs = psi_sphere_jacobian(s2_basis_deg1, x) @ field(x)
            rhs = tensor.rhs(psi_sphere(s2_basis_deg1, x))
            assert np.abs(lhs - rhs).max() <= 1e-10

    def test_random_field_conjugacy_and_antisymmetry(self, s2_basis_deg2, s2_gens,
                                                     s2_theta_deg2, rng):
        field = random_sphere_field(s2_basis_deg2, s2_gens, rng)
        tensor = build_sphere_tensor(field, s2_theta_deg2)
        assert check_antisymmetry(tensor) == 0.0
        for _ in range(50):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            lhs = psi_sphere_jacobian(s2_basis_deg2, x) @ field(x)
            rhs = tensor.rhs(psi_sphere(s2_basis_deg2, x))
            assert np.abs(lhs - rhs).max() <= 1e-9

    def test_drop_constant_index(self, s2_basis_deg1, s2_gens, s2_theta_deg1, rng):
        c = np.zeros((3, 4))
        c[:, 1:] = rng.standard_normal((3, 3))
        field = SphereField(s2_basis_deg1, s2_gens, c)
        assert field.has_zero_mean()
        tensor = build_sphere_tensor(field, s2_theta_deg1)
        reduced = drop_constant_index(tensor)
        assert reduced.d == tensor.d - 1
        for _ in range(20):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            full = tensor.rhs(psi_sphere(s2_basis_deg1, x))
            small = reduced.rhs(psi_sphere(s2_basis_deg1, x, drop_constant=True))
            assert np.allclose(full[1:], small, atol=1e-12)


class TestSphereDivergence:
    def test_killing_fields_are_divergence_free(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        for mu in range(3):
            weights = np.zeros(3)
            weights[mu] = 1.0
            field = killing_field(s2_basis_deg1, s2_gens, weights)
            report = sphere_divergence_check(field, s2_theta_deg1)
            assert report.divergence_free
            assert report.tensor_divergence_free

    def test_gradient_like_field_fails(self, s2_basis_deg2, s2_gens, s2_theta_deg2):
        x3 = Polynomial.variable(3, 2)
        grad = PolynomialField([
            -(x3 * x3) * Polynomial.variable(3, 0),
            -(x3 * x3) * Polynomial.variable(3, 1),
            x3 - (x3 * x3) * Polynomial.variable(3, 2),
        ])
        field = decompose_sphere_field(grad, s2_basis_deg2, s2_gens)
        assert not sphere_divergence_check(field, s2_theta_deg2).divergence_free

    def test_zero_field_passes(self, s2_basis_deg1, s2_gens, s2_theta_deg1):
        zero = SphereField(s2_basis_deg1, s2_gens, np.zeros((3, 4)))
        assert sphere_divergence_check(zero, s2_theta_deg1).divergence_free


class TestBilliard:
    def test_equilateral_tangency(self):
        u, v = billiard_field(math.pi / 3, math.pi / 3, math.pi / 3)
        assert u.degree() == 4 and v.degree() == 4
        assert u.sphere_tangency_residual() <= 1e-12
        assert v.sphere_tangency_residual() <= 1e-12

    def test_decomposes_at_degree_three(self):
        u, v = billiard_field(math.pi / 3, math.pi / 3, math.pi / 3)
        basis = harmonic_basis(3, 3)
        gens = so_generators(3)
        assert basis.size == 30
        for field in (u, v):
            sf = decompose_sphere_field(field, basis, gens)
            assert reconstruction_residual(sf, field) <= 1e-9

    def test_scalene_angles_decompose(self):
        angles = (0.4 * math.pi, 0.35 * math.pi, 0.25 * math.pi)
        u, v = billiard_field(*angles)
        basis = harmonic_basis(3, 3)
        gens = so_generators(3)
        sf = decompose_sphere_field(u, basis, gens)
        assert reconstruction_residual(sf, u) <= 1e-9

    def test_degenerate_angles_rejected(self):
        with pytest.raises(BadAngles):
            billiard_field(math.pi / 2, math.pi / 2, 0.0)
        with pytest.raises(BadAngles):
            billiard_field(1.0, 1.0, 1.0)
