"""
Tests for device smearing, stochastic and s-ordered quantization, the
Wigner operator and the covariance defects.
"""

import numpy as np
import pytest

from csquant import coherent as cs
from csquant import hilbert
from csquant import quantize as qz
from csquant.errors import (
    GridMismatchError, NumericalDegradation, PreconditionError
)
from csquant.phase_space import build_sphere_grid


def abs2(q, p):
    return (q ** 2 + p ** 2) / 2


# ═══════════════════════════════════════════════════════════════════
# Devices and smearing
# ═══════════════════════════════════════════════════════════════════


class TestDevice:

    def test_constructors(self):
        assert qz.DeviceFunction.delta().kind == 'delta'
        assert qz.DeviceFunction.gaussian(0.2).pointwise
        assert not qz.DeviceFunction.s_ordered(0.).pointwise
        with pytest.raises(PreconditionError):
            qz.DeviceFunction.gaussian(0.)

    def test_sphere_table_normalized(self, sphere_grid):
        E = qz.device_matrix(qz.DeviceFunction.gaussian(0.4), sphere_grid)
        np.testing.assert_allclose(sphere_grid.weights @ E, 1., atol=1e-12)

    def test_rows(self, sphere_grid):
        eta = qz.DeviceFunction.gaussian(0.4)
        full = qz.device_matrix(eta, sphere_grid)
        np.testing.assert_allclose(
            qz.device_matrix(eta, sphere_grid, rows=slice(3, 9)), full[3:9],
            atol=1e-14
        )

    def test_plane_preserves_constants_and_linear(self, plane_grid):
        eta = qz.DeviceFunction.gaussian(0.4)
        mask = plane_grid.interior(0.5)
        one = qz.smear(plane_grid.constant(1.), eta)
        q = plane_grid.sample(lambda q, p: q)
        assert (one - 1.).max_abs(mask) <= 1e-6
        assert (qz.smear(q, eta) - q).max_abs(mask) <= 1e-6

    def test_smeared_tag(self, sphere_grid):
        eta = qz.DeviceFunction.gaussian(0.4)
        f = qz.smear(sphere_grid.sample(lambda t, p: np.cos(t)), eta)
        assert f.smeared_by is eta
        assert qz.smear(f, eta) is f

    def test_off_grid_targets(self, sphere_grid):
        eta = qz.DeviceFunction.gaussian(0.4)
        f = sphere_grid.sample(lambda t, p: np.cos(t))
        on = qz.smear(f, eta).values
        i = 20
        off = qz.smear(
            f, eta, targets=(sphere_grid.chart[0][i], sphere_grid.chart[1][i])
        )
        assert abs(off[0] - on[i]) <= 1e-12

    def test_refusals(self, sphere_grid):
        f = sphere_grid.constant(1.)
        with pytest.raises(PreconditionError):
            qz.smear(f, qz.DeviceFunction.delta(), targets=([0.1], [0.2]))
        with pytest.raises(PreconditionError):
            qz.smear(f, qz.DeviceFunction.s_ordered(0.))

    def test_custom_kernel(self, sphere_grid):
        flat = qz.DeviceFunction.custom(lambda x, z: 1. + 0 * x[0] * z[0])
        E = qz.device_matrix(flat, sphere_grid)
        assert E.shape == (sphere_grid.size, sphere_grid.size)
        assert np.all(E == 1)

    def test_outcome_density_mass(self, sphere_sys, sphere_grid):
        rho = hilbert.random_density(5, seed=6)
        w = cs.husimi_function(sphere_sys, sphere_grid, rho)
        mu = qz.outcome_density(w, qz.DeviceFunction.gaussian(0.5))
        assert abs(mu.integrate() - 1) <= 1e-10

    def test_eta_at_plane_mass(self, plane_grid):
        eta_z = qz.eta_at(qz.DeviceFunction.gaussian(0.5), plane_grid, 0.3 + 0.1j)
        assert abs(eta_z.integrate() - 1) <= 1e-6


# ═══════════════════════════════════════════════════════════════════
# Stochastic and device quantization
# ═══════════════════════════════════════════════════════════════════


class TestQuantize:

    def test_positive_function_positive_operator(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) ** 2)
        M = qz.quantize_stochastic(sphere_sys, sphere_grid, f)
        assert np.linalg.eigvalsh(M).min() >= -1e-12
        rho = hilbert.random_density(5, seed=3)
        assert np.trace(rho @ M).real >= -1e-12

    def test_constant_is_resolution(self, sphere_sys, sphere_grid):
        M = qz.quantize_stochastic(sphere_sys, sphere_grid, sphere_grid.constant(1.))
        np.testing.assert_allclose(M, np.eye(5), atol=1e-10)

    def test_hermitian_for_real(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.sin(t) * np.cos(p) + np.cos(t) ** 3)
        M = qz.quantize_stochastic(sphere_sys, sphere_grid, f)
        np.testing.assert_allclose(M, M.conj().T, atol=1e-14)

    def test_grid_mismatch(self, sphere_sys, sphere_grid):
        other = build_sphere_grid(2, 6, 10)
        with pytest.raises(GridMismatchError):
            qz.quantize_stochastic(sphere_sys, sphere_grid, other.constant(1.))

    def test_delta_device(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t))
        np.testing.assert_allclose(
            qz.quantize_eta(sphere_sys, sphere_grid, f, qz.DeviceFunction.delta()),
            qz.quantize_stochastic(sphere_sys, sphere_grid, f), atol=1e-15
        )

    def test_multiplication_operators(self, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t))
        psi = sphere_grid.sample(lambda t, p: np.exp(1j * p))
        np.testing.assert_allclose(
            qz.pi_of_f(f)(psi).values, f.values * psi.values
        )
        eta = qz.DeviceFunction.gaussian(0.3)
        np.testing.assert_allclose(
            qz.pi_eta(f, eta)(psi).values,
            qz.smear(f, eta).values * psi.values
        )

    def test_m_eta_z_trace(self, plane_sys, plane_grid):
        M = qz.m_eta_z(plane_sys, plane_grid, qz.DeviceFunction.gaussian(0.5), 0.2j)
        assert abs(np.trace(M) - 1) <= 1e-4


# ═══════════════════════════════════════════════════════════════════
# Orderings
# ═══════════════════════════════════════════════════════════════════


class TestOrderings:

    @pytest.mark.parametrize('s,shift', [(-1., 1.), (0., 0.5), (1., 0.)])
    def test_ladder(self, plane_sys, plane_grid, s, shift):
        f = plane_grid.sample(abs2)
        M = qz.quantize_ordered(plane_sys, plane_grid, f, s)
        expected = np.diag(np.arange(12) + shift)
        assert hilbert.defect_norm(M, expected, 8) <= 1e-5

    @pytest.mark.parametrize('s', [0., 0.5, 1.])
    def test_linear_is_ordering_free(self, plane_sys, plane_grid, s):
        q = plane_grid.sample(lambda q, p: q)
        A = qz.quantize_ordered(plane_sys, plane_grid, q, -1.)
        M = qz.quantize_ordered(plane_sys, plane_grid, q, s)
        assert hilbert.defect_norm(M, A, 8) <= 1e-6

    def test_weyl_alias(self, plane_sys, plane_grid):
        f = plane_grid.sample(abs2)
        np.testing.assert_allclose(
            qz.quantize_weyl(plane_sys, plane_grid, f),
            qz.quantize_eta(plane_sys, plane_grid, f, qz.DeviceFunction.s_ordered(0.))
        )

    def test_sphere_refused(self, sphere_sys, sphere_grid):
        with pytest.raises(PreconditionError):
            qz.quantize_ordered(sphere_sys, sphere_grid, sphere_grid.constant(1.), 0.)

    def test_kernel_endpoints(self):
        sys = cs.CoherentStateSystem.plane(8)
        z = 0.4 - 0.3j
        np.testing.assert_allclose(
            qz.ordered_kernel(8, z, -1.), cs.cs_projector(sys, z), atol=1e-13
        )
        np.testing.assert_allclose(
            qz.ordered_kernel(8, z, 0.), qz.wigner_operator(sys, z), atol=1e-10
        )
        with pytest.raises(PreconditionError):
            qz.ordered_kernel(8, z, 1.)

    def test_transfer_polynomial(self):
        A = np.diag(np.arange(20) + 1.).astype(complex)
        out = qz.ordering_transfer(A, -1., watch=8)
        assert hilbert.defect_norm(out, np.diag(np.arange(20.)), 8) <= 1e-12

    def test_transfer_not_converged(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
        with pytest.raises(NumericalDegradation):
            qz.ordering_transfer(A, 0.5, tol=1e-12, max_order=3)

    def test_symbol_coefficients(self, plane_grid):
        f = plane_grid.sample(lambda q, p: abs2(q, p) + q)
        C = qz.symbol_coefficients(plane_grid, f, 12)
        expected = np.zeros((12, 12), dtype=complex)
        # q = (z + conj(z)) / sqrt 2
        expected[1, 1] = 1
        expected[0, 1] = expected[1, 0] = 1 / np.sqrt(2)
        np.testing.assert_allclose(C, expected, atol=1e-8)

    def test_intermediate_order(self, plane_sys, plane_grid):
        f = plane_grid.sample(abs2)
        M = qz.quantize_ordered(plane_sys, plane_grid, f, 0.5)
        expected = np.diag(np.arange(12) + 0.25)
        assert hilbert.defect_norm(M, expected) <= 1e-7

    def test_normal_order_of_quartic(self, plane_sys, plane_grid):
        # the normal symbol conj(z)^2 z^2 is a^dagger^2 a^2
        f = plane_grid.sample(lambda q, p: abs2(q, p) ** 2)
        M = qz.quantize_ordered(plane_sys, plane_grid, f, 1.)
        n = np.arange(12)
        expected = np.diag(n * (n - 1)).astype(complex)
        assert hilbert.defect_norm(M, expected) <= 1e-6

    def test_non_polynomial_warns(self, plane_sys, plane_grid):
        f = plane_grid.sample(lambda q, p: np.exp(-abs2(q, p)))
        with pytest.warns(UserWarning, match='not a polynomial'):
            M = qz.quantize_ordered(plane_sys, plane_grid, f, 1.)
        assert np.all(np.isfinite(M))


class TestWigner:

    def test_vacuum(self):
        sys = cs.CoherentStateSystem.plane(8)
        vac = hilbert.pure_density(hilbert.fock_state(8, 0))
        assert abs(qz.wigner_function(sys, vac, 0j) - 2) <= 1e-10
        assert abs(qz.wigner_function(sys, vac, 0.5) - 2 * np.exp(-0.5)) <= 1e-10

    def test_first_excited_is_negative(self):
        sys = cs.CoherentStateSystem.plane(8)
        one = hilbert.pure_density(hilbert.fock_state(8, 1))
        assert abs(qz.wigner_function(sys, one, 0j) + 2) <= 1e-10
        # 2 (4|z|^2 - 1) exp(-2|z|^2)
        z = 0.3 - 0.2j
        expected = 2 * (4 * abs(z) ** 2 - 1) * np.exp(-2 * abs(z) ** 2)
        assert abs(qz.wigner_function(sys, one, z) - expected) <= 1e-10

    def test_weyl_not_positive(self, plane_sys, fine_plane_grid):
        # exp(-a|z|^2) has <1|M_w|1> = 2 (2 - a) / (a + 2)^2
        f = fine_plane_grid.sample(lambda q, p: np.exp(-8 * abs2(q, p)))
        M = qz.quantize_weyl(plane_sys, fine_plane_grid, f)
        assert abs(M[1, 1] + 0.12) <= 1e-3
        assert np.linalg.eigvalsh(M).min() < -1e-3
        A = qz.quantize_stochastic(plane_sys, fine_plane_grid, f)
        assert np.linalg.eigvalsh(A).min() >= -1e-12

    def test_parity_matches_integral(self):
        sys = cs.CoherentStateSystem.plane(8)
        z = 0.3 + 0.2j
        assert hilbert.defect_norm(
            qz.wigner_operator(sys, z),
            qz.wigner_operator(sys, z, method='integral')
        ) <= 1e-4

    def test_quasi_probability(self, plane_sys, plane_grid):
        rho = hilbert.random_density(12, seed=9, levels=4)
        Q = qz.quasi_probability(plane_sys, plane_grid, rho, -1.)
        np.testing.assert_allclose(
            Q.values, cs.husimi_function(plane_sys, plane_grid, rho).values,
            atol=1e-12
        )
        W = qz.quasi_probability(plane_sys, plane_grid, rho, 0.)
        assert abs(W.integrate() - 1) <= 1e-8


# ═══════════════════════════════════════════════════════════════════
# Covariance
# ═══════════════════════════════════════════════════════════════════


class TestCovariance:

    def test_plane_quantize(self, plane_sys, plane_grid):
        defect = qz.covariance_defect_quantize(
            plane_sys, plane_grid, lambda q, p: q ** 2 + p, 0.4 + 0.2j
        )
        assert defect <= 1e-4

    def test_sphere_quantize_samples(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) + np.sin(t) * np.sin(p))
        defect = qz.covariance_defect_quantize(
            sphere_sys, sphere_grid, f, (np.pi, 0.)
        )
        assert defect <= 1e-10

    def test_sphere_device(self, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) ** 2 * np.cos(p))
        defect = qz.covariance_defect_device(
            sphere_grid, f, qz.DeviceFunction.gaussian(0.4),
            (0., 2 * np.pi * 3 / 14)
        )
        assert defect <= 1e-10

    def test_sphere_multiplication(self, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) + np.sin(t) * np.cos(p))
        psi = sphere_grid.sample(lambda t, p: 1 + 0.3j * np.sin(t) * np.sin(p))
        defect = qz.covariance_defect_multiplication(
            sphere_grid, f, (np.pi, 0.), psi, qz.DeviceFunction.gaussian(0.4)
        )
        assert defect <= 1e-10

    def test_samples_need_node_action(self, plane_sys, plane_grid):
        f = plane_grid.sample(abs2)
        with pytest.raises(PreconditionError):
            qz.covariance_defect_quantize(plane_sys, plane_grid, f, 0.37 + 0.1j)


class TestRegions:

    def test_eta_region(self, sphere_grid):
        from csquant.measure import Region
        eta = qz.DeviceFunction.gaussian(0.4)
        cap = Region.cap(sphere_grid, (0.4, 1.), 0.8)
        np.testing.assert_allclose(
            qz.eta_region(eta, cap).values,
            qz.smear(cap.indicator(), eta).values
        )
        psi = sphere_grid.sample(lambda t, p: np.cos(t) + 0j)
        np.testing.assert_allclose(
            qz.pi_eta_region(eta, cap)(psi).values,
            qz.eta_region(eta, cap).values * psi.values
        )

    def test_region_operator_covariance(self, sphere_grid):
        from csquant.measure import Region
        eta = qz.DeviceFunction.gaussian(0.4)
        cap = Region.cap(sphere_grid, (0.4, 1.), 0.8)
        psi = sphere_grid.sample(lambda t, p: 1 + 0.5 * np.sin(t) * np.sin(p))
        defect = qz.covariance_defect_multiplication(
            sphere_grid, cap.indicator(), (np.pi, 0.), psi, eta
        )
        assert defect <= 1e-10
