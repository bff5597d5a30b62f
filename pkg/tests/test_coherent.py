"""
Tests for coherent vectors, the reproducing kernel, embedded states,
projector sums and the compression onto the embedded subspace.
"""

import numpy as np
import pytest

from csquant import coherent as cs
from csquant import hilbert
from csquant.errors import (
    DimensionMismatchError, GridMismatchError, IllConditionedError,
    PreconditionError
)
from csquant.phase_space import (
    build_plane_grid, build_sphere_grid, MultiplicationOperator
)


# ═══════════════════════════════════════════════════════════════════
# Coherent vectors and the kernel
# ═══════════════════════════════════════════════════════════════════


class TestVectors:

    def test_plane_origin_is_vacuum(self):
        sys = cs.CoherentStateSystem.plane(10)
        np.testing.assert_allclose(cs.cs_vector(sys, 0j), sys.fiducial)

    def test_plane_amplitude(self):
        sys = cs.CoherentStateSystem.plane(40)
        v = cs.cs_vector(sys, 1 + 0j)
        assert abs(v[2] - np.exp(-0.5) / np.sqrt(2)) <= 1e-10
        assert abs(np.linalg.norm(v) - 1) <= 1e-12

    def test_sphere_pole_is_highest_weight(self, sphere_sys):
        hw = hilbert.highest_weight(2)
        np.testing.assert_allclose(
            cs.cs_vector(sphere_sys, (0., 0.)), hw, atol=1e-15
        )
        # away from phi = 0 the pole vector carries the phase exp(-i j phi)
        np.testing.assert_allclose(
            cs.cs_vector(sphere_sys, (0., 1.3)), np.exp(-2j * 1.3) * hw,
            atol=1e-14
        )

    @pytest.mark.parametrize('j', [0.5, 1, 2.5])
    def test_sphere_vector_is_rotated_highest_weight(self, j):
        sys = cs.CoherentStateSystem.sphere(j)
        v = cs.cs_vector(sys, (1.1, 0.4))
        U = cs.group_unitary(sys, (1.1, 0.4))
        np.testing.assert_allclose(
            U @ hilbert.highest_weight(j), v, atol=1e-12
        )

    def test_points_array(self, sphere_sys):
        pts = np.array([[0.3, 0.1], [2.0, 4.0]])
        V = cs.cs_vectors(sphere_sys, pts)
        assert V.shape == (5, 2)
        np.testing.assert_allclose(V[:, 1], cs.cs_vector(sphere_sys, (2.0, 4.0)))

    def test_with_dim(self, plane_sys, sphere_sys):
        assert plane_sys.with_dim(30).dim == 30
        with pytest.raises(PreconditionError):
            sphere_sys.with_dim(7)


class TestKernel:

    def test_diagonal(self, sphere_sys):
        assert abs(cs.kernel(sphere_sys, (0.8, 2.), (0.8, 2.)) - 1) <= 1e-12

    def test_plane_overlap(self):
        sys = cs.CoherentStateSystem.plane(40)
        assert abs(abs(cs.kernel(sys, 0j, 1 + 0j)) ** 2 - np.exp(-1)) <= 1e-10

    def test_hermitian_symmetry(self, sphere_sys):
        x, y = (0.4, 1.0), (2.1, -0.7)
        assert abs(
            cs.kernel(sphere_sys, x, y) - np.conj(cs.kernel(sphere_sys, y, x))
        ) <= 1e-14

    def test_matrix(self, sphere_sys, sphere_grid):
        K = cs.kernel_matrix(sphere_sys, sphere_grid)
        assert K.diagonal_defect() <= 1e-12
        assert K.hermitian_defect() <= 1e-12
        assert K.weighted_min_eigenvalue() >= -1e-10
        assert sphere_grid.grid_id in K.to_json()

    def test_plane_matrix_is_positive(self, plane_sys):
        grid = build_plane_grid(4., 16, 24)
        K = cs.kernel_matrix(plane_sys, grid)
        assert K.hermitian_defect() <= 1e-12
        assert K.weighted_min_eigenvalue() >= -1e-10
        # the nonzero weighted spectrum is that of the projector sum
        sw = np.sqrt(grid.weights)
        top = np.linalg.eigvalsh(sw[:, None] * K.values * sw[None, :])[-12:]
        roi = np.linalg.eigvalsh(cs.resolution_of_identity(plane_sys, grid))
        np.testing.assert_allclose(top, roi, atol=1e-10)

    def test_fault_breaks_diagonal(self, sphere_sys, sphere_grid):
        K = cs.kernel_matrix(sphere_sys.faulted(1.01), sphere_grid)
        assert abs(K.diagonal_defect() - 0.0201) <= 1e-10


# ═══════════════════════════════════════════════════════════════════
# Embedded states and the reproducing projection
# ═══════════════════════════════════════════════════════════════════


class TestEmbedding:

    def test_reproduces_coherent_function(self, plane_sys, plane_grid):
        psi = cs.embed_state(plane_sys, plane_grid, cs.cs_vector(plane_sys, 0.5 + 0j))
        out = cs.apply_P0(plane_sys, plane_grid, psi)
        assert (out - psi).max_abs() <= 1e-6

    def test_norm(self, plane_sys, plane_grid):
        v = cs.cs_vector(plane_sys, 0.3 - 0.2j)
        assert abs(cs.embed_state(plane_sys, plane_grid, v).norm() - 1) <= 1e-6

    def test_idempotent_and_self_adjoint(self, sphere_sys, sphere_grid):
        rng = np.random.default_rng(4)
        psi1 = sphere_grid.sample(
            lambda t, p: rng.normal(size=t.shape) + 1j * rng.normal(size=t.shape),
            spin_weight=2
        )
        psi2 = sphere_grid.sample(lambda t, p: np.cos(t) + np.exp(1j * p), 2)
        P1 = cs.apply_P0(sphere_sys, sphere_grid, psi1)
        P11 = cs.apply_P0(sphere_sys, sphere_grid, P1)
        assert (P11 - P1).max_abs() <= 1e-10
        lhs = psi1.inner(cs.apply_P0(sphere_sys, sphere_grid, psi2))
        rhs = P1.inner(psi2)
        assert abs(lhs - rhs) <= 1e-10

    def test_dimension_mismatch(self, plane_sys, plane_grid):
        with pytest.raises(DimensionMismatchError):
            cs.embed_state(plane_sys, plane_grid, np.ones(5))

    def test_grid_mismatch(self, sphere_sys, plane_grid):
        with pytest.raises(GridMismatchError):
            sphere_sys.vectors(plane_grid)
        with pytest.raises(GridMismatchError):
            sphere_sys.vectors(build_sphere_grid(1, 4, 6))


# ═══════════════════════════════════════════════════════════════════
# Projectors and the resolution of identity
# ═══════════════════════════════════════════════════════════════════


class TestProjectors:

    def test_projector(self, plane_sys):
        M = cs.cs_projector(plane_sys, 0.5 + 0.5j)
        np.testing.assert_allclose(M @ M, M, atol=1e-12)
        assert abs(np.trace(M) - 1) <= 1e-12

    def test_sphere_resolution_exact(self):
        sys = cs.CoherentStateSystem.sphere(1)
        grid = build_sphere_grid(1, 4, 6)
        assert hilbert.defect_norm(
            cs.resolution_of_identity(sys, grid), np.eye(3)
        ) <= 1e-12

    def test_plane_resolution(self, plane_sys, fine_plane_grid):
        I = cs.resolution_of_identity(plane_sys, fine_plane_grid)
        assert hilbert.defect_norm(I, np.eye(12), 8) <= 1e-6

    @pytest.mark.filterwarnings('ignore:.*vacuum normalization')
    def test_plane_resolution_converges_with_radius(self, plane_sys):
        defects = [
            hilbert.defect_norm(
                cs.resolution_of_identity(plane_sys, build_plane_grid(R, 40, 64)),
                np.eye(12), 8
            )
            for R in (3., 4., 5., 6.)
        ]
        assert all(a > b for a, b in zip(defects, defects[1:]))
        # the missing mass of level 7 beyond R = 3 is P(Poisson(9) <= 7)
        assert 0.2 <= defects[0] <= 0.4

    def test_faulted_resolution(self, sphere_sys, sphere_grid):
        I = cs.resolution_of_identity(sphere_sys.faulted(1.01), sphere_grid)
        assert hilbert.defect_norm(I, np.eye(5)) > 1e-2

    def test_plane_covariance(self):
        work = cs.CoherentStateSystem.plane(40)
        alpha, z = 0.3 - 0.2j, 0.4 + 0.1j
        U = cs.group_unitary(work, alpha)
        lhs = hilbert.conjugate_by(U, cs.cs_projector(work, z))
        rhs = cs.cs_projector(work, z + alpha)
        assert hilbert.defect_norm(lhs, rhs, 8) <= 1e-7

    def test_husimi(self, sphere_sys, sphere_grid):
        rho = hilbert.random_density(5, seed=2)
        h = cs.husimi_function(sphere_sys, sphere_grid, rho)
        i = 17
        x = (sphere_grid.chart[0][i], sphere_grid.chart[1][i])
        assert abs(h.values[i] - cs.husimi(sphere_sys, rho, x)) <= 1e-12
        assert abs(h.integrate() - 1) <= 1e-10
        with pytest.raises(DimensionMismatchError):
            cs.husimi(sphere_sys, np.eye(3) / 3, x)


# ═══════════════════════════════════════════════════════════════════
# Compression
# ═══════════════════════════════════════════════════════════════════


class TestCompression:

    def test_basis_orthonormal(self, sphere_sys, sphere_grid):
        B, cond = cs.h0_basis(sphere_sys, sphere_grid)
        G = B.conj().T @ (sphere_grid.weights[:, None] * B)
        np.testing.assert_allclose(G, np.eye(5), atol=1e-10)
        assert cond <= 1 + 1e-8

    def test_identity(self, sphere_sys, sphere_grid):
        C = cs.compress(sphere_sys, sphere_grid, lambda psi: psi)
        np.testing.assert_allclose(C, np.eye(5), atol=1e-10)

    def test_multiplication_matches_projector_sum(self, sphere_sys, sphere_grid):
        f = sphere_grid.sample(lambda t, p: np.cos(t) ** 2 + np.sin(t) * np.cos(p))
        C = cs.compress(sphere_sys, sphere_grid, MultiplicationOperator(f))
        M = cs.projector_sum(sphere_sys, sphere_grid, f.values)
        assert hilbert.defect_norm(C, M) <= 1e-10

    def test_ill_conditioned(self):
        sys = cs.CoherentStateSystem.sphere(1)
        with pytest.raises(IllConditionedError):
            cs.h0_basis(sys, build_sphere_grid(1, 4, 6), max_condition=0.5)
