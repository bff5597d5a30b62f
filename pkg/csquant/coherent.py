__all__ = [
    'CoherentStateSystem', 'Kernel', 'cs_vector', 'cs_vectors', 'kernel',
    'kernel_matrix', 'apply_P0', 'embed_state', 'embedded_basis',
    'cs_projector', 'resolution_of_identity', 'husimi', 'husimi_function',
    'group_unitary', 'compress', 'h0_basis', 'projector_sum'
]
__doc__ = """
# Coherent-state systems

Glauber states on the plane (truncated Fock space of dimension N) and
spin-j states on the sphere (dimension 2j+1).

    <n|z> = exp(-|z|^2 / 2) z^n / sqrt(n!)
    <j,m|theta,phi> = sqrt(C(2j, j+m)) cos(theta/2)^(j+m) sin(theta/2)^(j-m)
                      exp(-i phi m)

The second is rotation(j, theta, phi) applied to |j, j>. For a grid, the
columns V[:, i] = |omega_{x_i}> are built once per grid and cached, and
everything grid-sized is done through V without forming the node kernel:

    embed:      Psi(x_i) = <omega_{x_i}|v>          -> V^dagger v
    P0:         (P0 Psi)_i = sum_j w_j K_ij Psi_j   -> V^dagger (V (w Psi))
    M(f):       sum_i w_i f_i |omega_i><omega_i|    -> V diag(w f) V^dagger
"""

import threading
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import hilbert
from .errors import (
    DimensionMismatchError, GridMismatchError, IllConditionedError,
    PreconditionError
)
from .phase_space import GridFunction, to_complex, to_chart


@dataclass(eq=False)
class CoherentStateSystem:
    """
    Coherent-state family over a phase space.

    Attributes
    ----------
    kind : str
        'plane' or 'sphere'
    dim : int
        Hilbert dimension (N on the plane, 2j+1 on the sphere)
    j : float
        Spin (sphere only)
    amplitude_scale : float
        Multiplies every coherent vector; 1 except for fault injection
    """
    kind: str
    dim: int
    j: float = None
    amplitude_scale: float = 1.
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def plane(cls, N):
        hilbert.annihilation_op(N)
        return cls('plane', int(N))

    @classmethod
    def sphere(cls, j):
        Jz = hilbert.spin_operators(j)[2]
        return cls('sphere', Jz.shape[0], Jz[0, 0].real)

    def with_dim(self, dim):
        """Plane system with another truncation (working dimensions)."""
        if self.kind != 'plane':
            raise PreconditionError('only plane systems change dimension')
        return CoherentStateSystem(
            'plane', int(dim), amplitude_scale=self.amplitude_scale
        )

    def faulted(self, scale):
        return replace(
            self, amplitude_scale=scale, _cache={}, _lock=threading.Lock()
        )

    @property
    def fiducial(self):
        return hilbert.fock_state(self.dim, 0)

    def amplitudes(self, c1, c2):
        """
        Coherent vectors for chart coordinates; columns are states.

        Arguments
        ---------
        c1, c2 : array-like
            (q, p) on the plane, (theta, phi) on the sphere

        Returns
        -------
        V : np.ndarray
            dim x npoints complex
        """
        c1 = np.atleast_1d(np.asarray(c1, dtype=float))
        c2 = np.atleast_1d(np.asarray(c2, dtype=float))
        if self.kind == 'plane':
            z = (c1 + 1j * c2) / np.sqrt(2)
            V = np.empty((self.dim, z.size), dtype=complex)
            V[0] = np.exp(-np.abs(z) ** 2 / 2)
            for n in range(1, self.dim):
                V[n] = V[n - 1] * z / np.sqrt(n)
        else:
            j = self.j
            m = j - np.arange(self.dim)
            logc = 0.5 * (
                gammaln(2 * j + 1) - gammaln(j + m + 1) - gammaln(j - m + 1)
            )
            c = np.cos(c1 / 2)[None, :]
            s = np.sin(c1 / 2)[None, :]
            jm = (j + m)[:, None]
            km = (j - m)[:, None]
            V = (
                np.exp(logc)[:, None] * c ** jm * s ** km
                * np.exp(-1j * m[:, None] * c2[None, :])
            )
        return self.amplitude_scale * V

    def vectors(self, grid):
        """Cached dim x nodes matrix of coherent vectors on a grid."""
        if grid.kind != self.kind:
            raise GridMismatchError(f'{self.kind} system on {grid.kind} grid')
        if self.kind == 'sphere' and grid.j != self.j:
            raise GridMismatchError(f'spin {self.j:g} on grid {grid.grid_id}')
        key = grid.grid_id
        V = self._cache.get(key)
        if V is None:
            with self._lock:
                V = self._cache.get(key)
                if V is None:
                    V = self.amplitudes(*grid.chart)
                    V.setflags(write=False)
                    self._cache[key] = V
        return V

    @property
    def section_weight(self):
        """Spin weight of embedded functions <omega_x|v>."""
        return self.j if self.kind == 'sphere' else 0.


def cs_vector(sys, x):
    """|omega_x> for z (or (q, p)) on the plane, (theta, phi) on the sphere."""
    return sys.amplitudes(*to_chart(sys.kind, x))[:, 0]


def cs_vectors(sys, points):
    """Coherent vectors for an (npoints, 2) array of chart coordinates."""
    points = np.asarray(points, dtype=float)
    return sys.amplitudes(points[:, 0], points[:, 1])


def kernel(sys, x, y):
    """K(x, y) = <omega_x|omega_y>"""
    return complex(np.vdot(cs_vector(sys, x), cs_vector(sys, y)))


@dataclass(eq=False)
class Kernel:
    """
    Node kernel K(x_i, x_j) on a grid; small grids only.
    """
    grid: object
    values: np.ndarray = field(repr=False)

    def diagonal_defect(self):
        return float(np.abs(np.diag(self.values) - 1).max())

    def weighted_min_eigenvalue(self):
        sw = np.sqrt(self.grid.weights)
        A = sw[:, None] * self.values * sw[None, :]
        return float(np.linalg.eigvalsh((A + A.conj().T) / 2).min())

    def hermitian_defect(self):
        return float(np.abs(self.values - self.values.conj().T).max())

    def to_json(self):
        return {self.grid.grid_id: hilbert.operator_to_json(self.values)}


def kernel_matrix(sys, grid):
    V = sys.vectors(grid)
    return Kernel(grid, V.conj().T @ V)


def _check_state(sys, v):
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != sys.dim:
        raise DimensionMismatchError(f'vector dim {v.shape[0]} != {sys.dim}')
    return v


def _check_grid(sys, grid, psi=None):
    if psi is not None and not grid.same_as(psi.grid):
        raise GridMismatchError(f'{psi.grid.grid_id} != {grid.grid_id}')
    return sys.vectors(grid)


def embed_state(sys, grid, v):
    """Psi(x_i) = <omega_{x_i}|v>"""
    v = _check_state(sys, v)
    V = _check_grid(sys, grid)
    return GridFunction(grid, V.conj().T @ v, spin_weight=sys.section_weight)


def embedded_basis(sys, grid):
    """nodes x dim matrix E whose columns embed the basis states."""
    return _check_grid(sys, grid).conj().T


def apply_P0(sys, grid, psi):
    """(P0 Psi)(x_i) = sum_j w_j K(x_i, x_j) Psi(x_j)"""
    V = _check_grid(sys, grid, psi)
    out = V.conj().T @ (V @ (grid.weights * psi.values))
    return GridFunction(grid, out, spin_weight=sys.section_weight)


def cs_projector(sys, x):
    """M_x = |omega_x><omega_x|"""
    v = cs_vector(sys, x)
    return np.outer(v, v.conj())


def projector_sum(sys, grid, values):
    """sum_i w_i values_i M_{x_i} = V diag(w values) V^dagger"""
    V = sys.vectors(grid)
    return (V * (grid.weights * values)[None, :]) @ V.conj().T


def resolution_of_identity(sys, grid):
    """sum_i w_i M_{x_i}"""
    return projector_sum(sys, grid, np.ones(grid.size))


def husimi(sys, rho, x):
    """Tr(rho M_x) = <omega_x|rho|omega_x>"""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (sys.dim, sys.dim):
        raise DimensionMismatchError(f'rho {rho.shape} vs dim {sys.dim}')
    v = cs_vector(sys, x)
    return float(np.vdot(v, rho @ v).real)


def husimi_function(sys, grid, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (sys.dim, sys.dim):
        raise DimensionMismatchError(f'rho {rho.shape} vs dim {sys.dim}')
    V = sys.vectors(grid)
    h = np.einsum('ni,nm,mi->i', V.conj(), rho, V).real
    return GridFunction(grid, h)


def group_unitary(sys, param, dim=None):
    """
    W(a): displacement D(alpha) from exact matrix elements (plane, any
    working dimension) or rotation(j, theta, phi) (sphere).
    """
    if sys.kind == 'plane':
        return hilbert.displacement_exact(dim or sys.dim, to_complex(param))
    return hilbert.rotation(sys.j, *param)


def h0_basis(sys, grid, verbose=0, max_condition=1e8):
    """
    Orthonormal basis B = E G^-1/2 of the embedded subspace in the weighted
    inner product, with G = E^dagger W E the Gram matrix.

    Returns
    -------
    B : np.ndarray
        nodes x dim
    condition : float
        Condition number of G

    Raises
    ------
    IllConditionedError
        when cond(G) exceeds max_condition
    """
    key = ('h0', grid.grid_id)
    cached = sys._cache.get(key)
    if cached is not None:
        return cached
    E = embedded_basis(sys, grid)
    G = E.conj().T @ (grid.weights[:, None] * E)
    lam, U = np.linalg.eigh((G + G.conj().T) / 2)
    cond = np.inf if lam.min() <= 0 else lam.max() / lam.min()
    if verbose > 0:
        print(f'{grid.grid_id}: Gram condition {cond:.3e}', flush=True)
    if not cond <= max_condition:
        raise IllConditionedError(f'Gram condition {cond:.3e} > {max_condition:g}')
    if cond > 1e4:
        warnings.warn(f'Gram condition {cond:.3e}; compressions lose digits')
    B = E @ ((U / np.sqrt(lam)[None, :]) @ U.conj().T)
    with sys._lock:
        sys._cache[key] = (B, cond)
    return B, cond


def compress(sys, grid, op, verbose=0):
    """
    Compression of a grid operator onto the embedded subspace,
    C = B^dagger W op(B), expressed in the basis-state coordinates.

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
    op : callable
        GridFunction -> GridFunction (GridOperator or plain function)

    Returns
    -------
    C : np.ndarray
        dim x dim complex
    """
    B, _ = h0_basis(sys, grid, verbose=verbose)
    sw = sys.section_weight
    cols = [
        op(GridFunction(grid, B[:, k], spin_weight=sw)).values
        for k in range(B.shape[1])
    ]
    OB = np.column_stack(cols)
    return B.conj().T @ (grid.weights[:, None] * OB)
