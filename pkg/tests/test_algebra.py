"""
Tests for star products, the classical limit, eta brackets, the
transformation law and the quantized generators Q(f).
"""

import numpy as np
import pytest

from csquant import algebra as al
from csquant import hilbert
from csquant import measure as ms
from csquant import quantize as qz
from csquant.errors import GridMismatchError, PreconditionError
from csquant.phase_space import HamiltonianField, poisson_bracket


def nx(t, p):
    return np.sin(t) * np.cos(p)


def nz(t, p):
    return np.cos(t)


# ═══════════════════════════════════════════════════════════════════
# Reports
# ═══════════════════════════════════════════════════════════════════


class TestReports:

    def test_identity_and_witness(self):
        ok = al.make_report('same', 1., 1. + 1e-9, 1e-6)
        assert ok.passed and not ok.witness
        wit = al.make_report('differ', np.eye(2), np.zeros((2, 2)), 1e-3,
                             witness=True)
        assert wit.passed and wit.defect == 1

    def test_masked_functions(self, sphere_grid):
        f = sphere_grid.constant(1.)
        g = sphere_grid.sample(nz)
        mask = np.zeros(sphere_grid.size, dtype=bool)
        assert al.make_report('masked', f, g, 0., mask=mask).defect == 0

    def test_frame(self):
        reports = [
            al.make_report('a', 0., 0., 1., extra=np.float64(2.)),
            al.make_report('b', 0., 3., 1.),
        ]
        df = al.reports_frame(reports)
        assert list(df['label']) == ['a', 'b']
        assert list(df['passed']) == [True, False]
        assert df['extra'][0] == 2.

    def test_to_dict(self):
        rep = al.make_report('x', 0., 1e-9, 1e-6, extra=np.float64(2.))
        d = rep.to_dict()
        assert d['label'] == 'x' and d['passed'] is True
        assert type(d['extra']) is float


# ═══════════════════════════════════════════════════════════════════
# Star products
# ═══════════════════════════════════════════════════════════════════


class TestStar:

    @pytest.fixture(scope='class')
    def pair(self, sphere_grid):
        return (
            sphere_grid.sample(lambda t, p: np.cos(t) ** 2),
            sphere_grid.sample(nx),
        )

    def test_beta(self, sphere_sys):
        x, z = (0.4, 1.), (1.3, 2.)
        assert abs(al.beta_kernel(sphere_sys, x, x) - 1) <= 1e-12
        assert abs(
            al.beta_kernel(sphere_sys, x, z) - al.beta_kernel(sphere_sys, z, x)
        ) <= 1e-14

    def test_homomorphism(self, sphere_sys, sphere_grid, pair):
        f, g = pair
        ops = al.star_product_operators(sphere_sys, sphere_grid, f, g)
        fg = al.star_product_functions(sphere_sys, sphere_grid, f, g)
        hom = qz.quantize_stochastic(sphere_sys, sphere_grid, fg)
        assert hilbert.defect_norm(hom, ops) <= 1e-10

    def test_trace_identity(self, sphere_sys, sphere_grid, pair):
        f, g = pair
        rho = hilbert.random_density(5, seed=3)
        ops = al.star_product_operators(sphere_sys, sphere_grid, f, g)
        inner = ms.instrument_f(sphere_sys, sphere_grid, rho, g)
        outer = ms.instrument_f(sphere_sys, sphere_grid, inner, f)
        assert abs(np.trace(rho @ ops) - np.trace(outer)) <= 1e-10

    def test_not_commutative(self, sphere_sys, sphere_grid, pair):
        f, g = pair
        fg = al.star_product_operators(sphere_sys, sphere_grid, f, g)
        gf = al.star_product_operators(sphere_sys, sphere_grid, g, f)
        assert hilbert.defect_norm(fg, gf) > 1e-3

    def test_device_tags(self, sphere_sys, sphere_grid, pair):
        f, g = pair
        eta = qz.DeviceFunction.gaussian(0.4)
        fg = al.star_product_functions(sphere_sys, sphere_grid, f, g, eta)
        assert fg.smeared_by is eta
        c = al.star_c_product(f, g, eta)
        np.testing.assert_allclose(
            c.values, (qz.smear(f, eta) * qz.smear(g, eta)).values
        )

    def test_grids_must_match(self, sphere_sys, sphere_grid, plane_grid):
        with pytest.raises(GridMismatchError):
            al.star_c_product(sphere_grid.constant(1.), plane_grid.constant(1.))


class TestClassicalLimit:

    def test_sweep_decreases(self):
        sweep = al.classical_limit_sweep(nz, nz, js=(2, 4, 8, 16))
        assert list(sweep.columns) == ['j', 'defect']
        assert np.all(np.diff(sweep['defect'].values) < 0)
        assert 0.7 <= al.fit_exponent(sweep['j'], sweep['defect']) <= 1.3

    def test_fit_exponent(self):
        j = np.array([2., 4., 8.])
        assert abs(al.fit_exponent(j, 3 / j ** 2) - 2) <= 1e-12


# ═══════════════════════════════════════════════════════════════════
# Brackets, fields and the transformation law
# ═══════════════════════════════════════════════════════════════════


class TestBrackets:

    def test_eta_bracket_delta(self, sphere_grid):
        f = sphere_grid.sample(nx)
        g = sphere_grid.sample(nz)
        np.testing.assert_allclose(
            al.eta_poisson_bracket(f, g).values,
            poisson_bracket(g, f).values, atol=1e-14
        )

    def test_lifted_field(self, sphere_grid):
        g = sphere_grid.sample(nz)
        psi = sphere_grid.sample(nx)
        np.testing.assert_allclose(
            al.lift_X(g)(psi).values, poisson_bracket(g, psi).values,
            atol=1e-12
        )
        eta = qz.DeviceFunction.gaussian(0.4)
        X = al.lift_X_eta(g, eta)
        assert isinstance(X, HamiltonianField)
        assert X.label == 'X_eta(g)'

    def test_transformation_law_order(self, sphere_grid):
        f = sphere_grid.sample(nx)
        g = sphere_grid.sample(nz)
        psi = sphere_grid.sample(lambda t, p: 1 + 0.3 * nx(t, p))
        assert al.transformation_law_defect(f, g, 1e-2, psi=psi) <= 1e-4
        d1 = al.transformation_law_defect(f, g, 1e-2, psi=psi, order=1)
        d2 = al.transformation_law_defect(f, g, 5e-3, psi=psi, order=1)
        assert 3.9 <= d1 / d2 <= 4.1


class TestGenerators:

    def test_rotation_generator_keeps_subspace(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(nz)
        assert al.leak(sphere_sys, sphere_grid, f) <= 1e-8
        Q = al.Q_of(sphere_sys, sphere_grid, f)
        np.testing.assert_allclose(Q, -Q.conj().T, atol=1e-8)
        assert np.abs(Q - np.diag(np.diag(Q))).max() <= 1e-8

    def test_quadratic_generator_leaks(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) ** 2)
        assert al.leak(sphere_sys, sphere_grid, f) > 1e-3

    def test_commutator_identities(self, sphere_sys, sphere_grid):
        rep = al.q_commutator_defect(
            sphere_sys, sphere_grid, sphere_grid.sample(nz),
            sphere_grid.sample(nx)
        )
        assert rep.asserted
        assert rep.details['qq_asserted'] and rep.details['qm_asserted']
        assert rep.passed

    def test_compatibility(self, sphere_sys, sphere_grid):
        eta = qz.DeviceFunction.gaussian(0.4)
        res = al.compatibility_defect(
            sphere_sys, sphere_grid, eta, (0.8, 0.2), n_pairs=5
        )
        assert len(res.table) == 5
        assert res.defect >= 0 and res.residual >= 0
        with pytest.raises(PreconditionError):
            al.compatibility_defect(
                sphere_sys, sphere_grid, qz.DeviceFunction.delta(), (0.8, 0.2)
            )
