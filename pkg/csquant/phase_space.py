__all__ = [
    'QuadratureGrid', 'GridFunction', 'GridOperator', 'MultiplicationOperator',
    'HamiltonianField', 'Flagged', 'build_plane_grid', 'build_sphere_grid',
    'to_complex', 'to_chart', 'act', 'rotation_matrix', 'derivatives',
    'chart_gradient', 'poisson_bracket', 'hamiltonian_field_apply',
    'divergence_defect', 'rk4_dtau_bound', 'liouville_step',
    'classical_schrodinger_step', 'evolve', 'canonical_flow_path',
    'canonical_flow_point', 'classical_mean', 'state_mean'
]
__doc__ = """
# Phase spaces, quadrature and classical flows

---
    plane: z = (q + i p) / sqrt(2), measure d^2z / pi, {q, p} = 1
    sphere: (theta, phi), measure (2j+1)/(4 pi) sin(theta) dtheta dphi,
            symplectic form j sin(theta) dtheta ^ dphi
---

Grids are polar (plane) or Gauss-Legendre x uniform (sphere) products.
Values are stored flat with the first axis (radius or theta) slow and the
angle fast, so `values.reshape(grid.shape)` gives the tensor layout.

Derivatives default to spectral collocation: Lagrange differentiation on
the Gauss-Legendre radial panels, FFT along periodic angles and, on the
sphere, trigonometric differentiation along the great circle through both
poles. `scheme='central'` gives second-order central differences.

Poisson bracket sign: {f, g} = f_q g_p - f_p g_q and X(g) f = {g, f}, so
that f + dtau {f, g} = f - dtau X(g) f.

Example
-------

    from csquant import phase_space as ps
    grid = ps.build_plane_grid(6., 80, 80)
    q = grid.sample(lambda q, p: q)
    p = grid.sample(lambda q, p: p)
    print(abs(ps.poisson_bracket(q, p).values - 1).max() < 1e-10)
    # True
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Any

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from .errors import (
    InvalidDimensionError, InvalidSpinError, GridMismatchError,
    PreconditionError, TrajectoryLeftDomainError
)

SQRT2 = np.sqrt(2.)


class Flagged(NamedTuple):
    """Value with a normalization flag for soft precondition failures."""
    value: Any
    normalized: bool


def to_complex(x):
    """Plane point as complex z; accepts z or a (q, p) pair."""
    if np.iscomplexobj(x) or np.isscalar(x):
        return complex(x)
    q, p = x
    return complex(q, p) / SQRT2


def to_chart(kind, x):
    """Chart coordinates (q, p) or (theta, phi) of a point."""
    if kind == 'plane':
        z = to_complex(x)
        return (SQRT2 * z.real, SQRT2 * z.imag)
    theta, phi = x
    return (float(theta), float(phi) % (2 * np.pi))


def rotation_matrix(theta, phi):
    """R = Rz(phi) Ry(theta); R maps the north pole to (theta, phi)."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    Ry = np.array([[ct, 0, st], [0, 1, 0], [-st, 0, ct]])
    Rz = np.array([[cp, -sp, 0], [sp, cp, 0], [0, 0, 1]])
    return Rz @ Ry


def _unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def _angles(n):
    theta = np.arccos(np.clip(n[2], -1, 1))
    phi = np.mod(np.arctan2(n[1], n[0]), 2 * np.pi)
    return theta, phi


def act(kind, param, c1, c2, inverse=False):
    """
    Group action on chart coordinates.

    Arguments
    ---------
    kind : str
        'plane' (translation z -> z + alpha) or 'sphere'
        (rotation n -> R n, R = Rz(phi) Ry(theta))
    param : complex or (theta, phi)
        Group element
    c1, c2 : array-like
        Chart coordinates
    inverse : bool
        Apply a^-1 instead of a

    Returns
    -------
    c1, c2 : np.ndarray
        Transformed chart coordinates
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if kind == 'plane':
        alpha = to_complex(param)
        sign = -1 if inverse else 1
        z = (c1 + 1j * c2) / SQRT2 + sign * alpha
        return SQRT2 * z.real, SQRT2 * z.imag
    R = rotation_matrix(*param)
    if inverse:
        R = R.T
    n = _unit_vectors(c1.ravel(), c2.ravel())
    theta, phi = _angles(R @ n)
    return theta.reshape(c1.shape), phi.reshape(c1.shape)


def _gl_differentiation(x):
    """Lagrange differentiation matrix on ascending Gauss-Legendre nodes."""
    n = x.size
    _, lam = np.polynomial.legendre.leggauss(n)
    w = (-1.) ** np.arange(n) * np.sqrt((1 - x ** 2) * lam)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _great_circle_differentiation(theta):
    """
    Differentiation matrix on psi = (theta, -theta) for 2 pi periodic
    functions; basis exp(i k psi), |k| < N/2, plus sin(N psi / 2).

    The nodes come in pairs +-theta, so the data holds N/2 even and N/2
    odd constraints; the extra column must be odd to keep V invertible.
    """
    psi = np.concatenate([theta, -theta])
    N = psi.size
    k = np.arange(-(N // 2 - 1), N // 2)
    V = np.exp(1j * np.outer(psi, k))
    Vd = V * (1j * k)[None, :]
    V = np.column_stack([V, np.sin(N * psi / 2)])
    Vd = np.column_stack([Vd, (N / 2) * np.cos(N * psi / 2)])
    D = np.linalg.solve(V.T, Vd.T).T
    return D.real


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """
    Product quadrature for the invariant measure of a phase space.

    Attributes
    ----------
    kind : str
        'plane' or 'sphere'
    param : float
        Cutoff radius R (plane) or spin j (sphere)
    axis1 : np.ndarray
        Radii about `center` (plane) or polar angles (sphere), ascending
    axis2 : np.ndarray
        Uniform angles 2 pi k / n
    weights : np.ndarray
        Flat node weights in units of the invariant measure
    center : complex
        Polar-grid center (plane only)
    panels : tuple
        Radial panel edges (plane only)
    grid_id : str
        Deterministic identifier, used as a cache key
    """
    kind: str
    param: float
    axis1: np.ndarray = field(repr=False)
    axis2: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    center: complex = 0j
    panels: tuple = ()
    grid_id: str = ''

    @property
    def shape(self):
        return (self.axis1.size, self.axis2.size)

    @property
    def size(self):
        return self.weights.size

    @property
    def R(self):
        return self.param

    @property
    def j(self):
        return self.param

    @cached_property
    def mesh(self):
        a1, a2 = np.meshgrid(self.axis1, self.axis2, indexing='ij')
        return a1.ravel(), a2.ravel()

    @cached_property
    def z(self):
        if self.kind != 'plane':
            raise PreconditionError('complex coordinate only on the plane')
        r, t = self.mesh
        return self.center + r * np.exp(1j * t)

    @cached_property
    def chart(self):
        if self.kind == 'plane':
            return SQRT2 * self.z.real, SQRT2 * self.z.imag
        return self.mesh

    @cached_property
    def unit_vectors(self):
        return _unit_vectors(*self.mesh)

    def sample(self, func, spin_weight=0.):
        """GridFunction of func(c1, c2) evaluated on chart coordinates."""
        values = np.broadcast_to(
            np.asarray(func(*self.chart), dtype=complex), (self.size,)
        )
        return GridFunction(self, values.copy(), spin_weight=spin_weight)

    def constant(self, value):
        return GridFunction(self, np.full(self.size, value, dtype=complex))

    def integrate(self, values):
        return complex(np.sum(self.weights * np.asarray(values)))

    def interior(self, frac=0.7):
        """Node mask away from the plane cutoff; all nodes on the sphere."""
        if self.kind == 'plane':
            return self.mesh[0] <= frac * self.R
        return np.ones(self.size, dtype=bool)

    def contains(self, c1, c2):
        if self.kind == 'plane':
            z = (np.asarray(c1) + 1j * np.asarray(c2)) / SQRT2
            return np.abs(z - self.center) <= self.R
        return np.ones(np.shape(c1), dtype=bool)

    def node_permutation(self, param, inverse=True):
        """
        Index map perm with x[perm[i]] = a^-1 x[i] (or a x[i] when
        inverse is False) if the action preserves the node set, else None.
        """
        c1, c2 = act(self.kind, param, *self.chart, inverse=inverse)
        if self.kind == 'plane':
            z = (c1 + 1j * c2) / SQRT2 - self.center
            a1, a2 = np.abs(z), np.mod(np.angle(z), 2 * np.pi)
        else:
            a1, a2 = c1, c2
        i1 = np.clip(np.searchsorted(self.axis1, a1), 1, self.axis1.size - 1)
        i1 = np.where(
            np.abs(self.axis1[i1 - 1] - a1) < np.abs(self.axis1[i1] - a1),
            i1 - 1, i1
        )
        step = 2 * np.pi / self.axis2.size
        i2 = np.mod(np.rint(a2 / step).astype(int), self.axis2.size)
        d2 = np.abs(np.angle(np.exp(1j * (a2 - self.axis2[i2]))))
        tol = 1e-9
        if np.any(np.abs(self.axis1[i1] - a1) > tol) or np.any(d2 > tol):
            return None
        return i1 * self.axis2.size + i2

    @cached_property
    def axis1_differentiation(self):
        """Spectral derivative matrix along the first axis."""
        if self.kind == 'sphere':
            return _great_circle_differentiation(self.axis1)
        D = np.zeros((self.axis1.size, self.axis1.size))
        start = 0
        for a, b in zip(self.panels[:-1], self.panels[1:]):
            n = np.sum((self.axis1 >= a) & (self.axis1 < b))
            x = (2 * self.axis1[start:start + n] - (a + b)) / (b - a)
            D[start:start + n, start:start + n] = (
                _gl_differentiation(x) * 2 / (b - a)
            )
            start += n
        return D

    @cached_property
    def axis1_spectral_radius(self):
        D = self.axis1_differentiation
        if self.kind == 'sphere':
            return self.axis1.size
        return float(np.abs(np.linalg.eigvals(D)).max())

    def same_as(self, other):
        return self is other or self.grid_id == other.grid_id


def build_plane_grid(R, n_radial, n_angular, center=0j, breaks=()):
    """
    Polar product rule for d^2z / pi on the disk |z - center| <= R.

    Arguments
    ---------
    R : float
        Cutoff radius (> 0)
    n_radial : int
        Gauss-Legendre nodes per radial panel (>= 8)
    n_angular : int
        Trapezoid nodes in angle (>= 8)
    center : complex
        Grid center
    breaks : sequence of float
        Extra radial panel edges in (0, R); disks of these radii about the
        center are integrated without indicator error.

    Returns
    -------
    grid : QuadratureGrid
        Weights w_r r 2 / n_angular, summing to R^2.
    """
    if not R > 0:
        raise InvalidDimensionError(f'R must be > 0; got {R}')
    if n_radial < 8 or n_angular < 8:
        raise InvalidDimensionError(
            f'need n_radial, n_angular >= 8; got {n_radial}, {n_angular}'
        )
    center = complex(center)
    edges = sorted(set([0.] + [float(b) for b in breaks] + [float(R)]))
    if edges[0] < 0 or edges[-1] > R:
        raise InvalidDimensionError(f'breaks must lie in (0, R); got {breaks}')
    x, wx = np.polynomial.legendre.leggauss(int(n_radial))
    r = []
    wr = []
    for a, b in zip(edges[:-1], edges[1:]):
        r.append((b - a) / 2 * x + (a + b) / 2)
        wr.append((b - a) / 2 * wx)
    r = np.concatenate(r)
    wr = np.concatenate(wr)
    t = 2 * np.pi * np.arange(n_angular) / n_angular
    weights = np.repeat(wr * r * 2 / n_angular, n_angular)
    gid = (
        f'plane:R={R:g}:nr={n_radial}:na={n_angular}'
        f':c={center.real:g},{center.imag:g}:b={",".join(map(str, edges))}'
    )
    grid = QuadratureGrid(
        'plane', float(R), r, t, weights, center, tuple(edges), gid
    )
    total = weights.sum()
    if abs(total - R ** 2) > 1e-10 * R ** 2:
        raise InvalidDimensionError(f'weights sum {total} != R^2')
    vac = np.sum(weights * np.exp(-np.abs(grid.z - center) ** 2))
    if abs(vac - 1) > 1e-8:
        warnings.warn(
            f'{gid}: vacuum normalization {vac:.10f}; R too small for 1e-8'
        )
    return grid


def build_sphere_grid(j, n_theta, n_phi):
    """
    Gauss-Legendre in cos(theta) times uniform phi, scaled so the weights
    sum to 2j+1.

    Arguments
    ---------
    j : float
        Spin; 2j a positive integer
    n_theta : int
        Gauss-Legendre nodes (>= 2j+2)
    n_phi : int
        Uniform azimuth nodes; even and >= 4j+2

    Returns
    -------
    grid : QuadratureGrid
    """
    twoj = 2 * j
    if twoj <= 0 or abs(twoj - round(twoj)) > 1e-12:
        raise InvalidSpinError(f'2j must be a positive integer; got j={j}')
    j = round(twoj) / 2
    if n_theta < 2 * j + 2 or n_phi < 4 * j + 2 or n_phi % 2:
        raise InvalidDimensionError(
            f'j={j:g} needs n_theta >= {2 * j + 2:g} and even'
            f' n_phi >= {4 * j + 2:g}; got {n_theta}, {n_phi}'
        )
    x, wx = np.polynomial.legendre.leggauss(int(n_theta))
    order = np.argsort(-x)
    theta = np.arccos(x[order])
    wt = wx[order]
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    weights = np.repeat(
        wt * (2 * np.pi / n_phi) * (2 * j + 1) / (4 * np.pi), n_phi
    )
    gid = f'sphere:j={j:g}:nt={n_theta}:np={n_phi}'
    return QuadratureGrid('sphere', j, theta, phi, weights, 0j, (), gid)


def _combine_weight(a, b):
    return a if b == 0 else b if a == 0 else a


@dataclass(eq=False)
class GridFunction:
    """
    Complex samples of a function (or spin-weighted section) on grid nodes.

    Attributes
    ----------
    grid : QuadratureGrid
    values : np.ndarray
        Flat complex values, one per node
    smeared_by : DeviceFunction or None
        Set when the values already are the device representative f_eta
    spin_weight : float
        Gauge weight of sphere sections; coherent-state functions carry j,
        their conjugates -j, ordinary functions 0
    """
    grid: QuadratureGrid
    values: np.ndarray = field(repr=False)
    smeared_by: Any = None
    spin_weight: float = 0.

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.size != self.grid.size:
            raise GridMismatchError(
                f'{self.values.size} values for {self.grid.size} nodes'
            )

    @property
    def field(self):
        return self.values.reshape(self.grid.shape)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if not self.grid.same_as(other.grid):
                raise GridMismatchError(
                    f'{self.grid.grid_id} != {other.grid.grid_id}'
                )
            return other.values, other.smeared_by, other.spin_weight
        return other, self.smeared_by, 0.

    def _linear(self, values, tag, weight):
        keep = tag if tag is self.smeared_by else None
        return GridFunction(
            self.grid, values, keep, _combine_weight(self.spin_weight, weight)
        )

    def __add__(self, other):
        v, tag, sw = self._other(other)
        return self._linear(self.values + v, tag, sw)

    __radd__ = __add__

    def __sub__(self, other):
        v, tag, sw = self._other(other)
        return self._linear(self.values - v, tag, sw)

    def __rsub__(self, other):
        v, tag, sw = self._other(other)
        return self._linear(v - self.values, tag, sw)

    def __neg__(self):
        return GridFunction(
            self.grid, -self.values, self.smeared_by, self.spin_weight
        )

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            v, _, sw = self._other(other)
            return GridFunction(
                self.grid, self.values * v, None, self.spin_weight + sw
            )
        return GridFunction(
            self.grid, self.values * other, self.smeared_by, self.spin_weight
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GridFunction):
            v, _, sw = self._other(other)
            return GridFunction(
                self.grid, self.values / v, None, self.spin_weight - sw
            )
        return GridFunction(
            self.grid, self.values / other, self.smeared_by, self.spin_weight
        )

    def conj(self):
        return GridFunction(
            self.grid, self.values.conj(), self.smeared_by, -self.spin_weight
        )

    def tagged(self, eta):
        return GridFunction(self.grid, self.values, eta, self.spin_weight)

    def integrate(self):
        return self.grid.integrate(self.values)

    def inner(self, other):
        """<self|other> = sum_i w_i conj(self_i) other_i"""
        v, _, _ = self._other(other)
        return self.grid.integrate(self.values.conj() * v)

    def norm(self):
        return float(np.sqrt(self.inner(self).real))

    def max_abs(self, mask=None):
        v = self.values if mask is None else self.values[mask]
        return float(np.abs(v).max()) if v.size else 0.

    def to_dataframe(self):
        c1, c2 = self.grid.chart
        return pd.DataFrame(dict(
            coord1=c1, coord2=c2, weight=self.grid.weights,
            re=self.values.real, im=self.values.imag
        ))

    def to_csv(self, path):
        self.to_dataframe().to_csv(path, index=False)
        return path


class GridOperator:
    """
    Linear map on GridFunctions of one grid.

    Operators compose with @, add, subtract and scale; `commutator` gives
    A @ B - B @ A.
    """
    def __init__(self, grid, action, label='op'):
        self.grid = grid
        self.action = action
        self.label = label

    def __call__(self, psi):
        if not self.grid.same_as(psi.grid):
            raise GridMismatchError(
                f'{self.label}: {psi.grid.grid_id} != {self.grid.grid_id}'
            )
        return self.action(psi)

    def __matmul__(self, other):
        return GridOperator(
            self.grid, lambda psi: self(other(psi)),
            f'{self.label} @ {other.label}'
        )

    def __add__(self, other):
        return GridOperator(
            self.grid, lambda psi: self(psi) + other(psi),
            f'{self.label} + {other.label}'
        )

    def __sub__(self, other):
        return GridOperator(
            self.grid, lambda psi: self(psi) - other(psi),
            f'{self.label} - {other.label}'
        )

    def __neg__(self):
        return GridOperator(self.grid, lambda psi: -self(psi), f'-{self.label}')

    def __mul__(self, scalar):
        return GridOperator(
            self.grid, lambda psi: scalar * self(psi), f'{scalar}*{self.label}'
        )

    __rmul__ = __mul__

    def commutator(self, other):
        return (self @ other) - (other @ self)


class MultiplicationOperator(GridOperator):
    """(Pi(f) psi)(x) = f(x) psi(x)"""
    def __init__(self, symbol, label=None):
        self.symbol = symbol
        super().__init__(
            symbol.grid, lambda psi: symbol * psi, label or 'Pi(f)'
        )

    def __matmul__(self, other):
        if isinstance(other, MultiplicationOperator):
            return MultiplicationOperator(
                self.symbol * other.symbol, f'{self.label} {other.label}'
            )
        return super().__matmul__(other)


class HamiltonianField(GridOperator):
    """X(g) psi = {g, psi}"""
    def __init__(self, generator, scheme='spectral', label=None):
        self.generator = generator
        self.scheme = scheme
        rhs = _bracket_with(generator, scheme)
        super().__init__(generator.grid, rhs, label or 'X(g)')


def _axis_derivatives(values, grid, scheme, spin_weight=0.):
    F = values.reshape(grid.shape)
    n1, n2 = grid.shape
    if scheme == 'spectral':
        k = np.fft.fftfreq(n2, 1. / n2)
        if n2 % 2 == 0:
            k[n2 // 2] = 0
        if grid.kind == 'sphere' and spin_weight:
            # half-integer weights are antiperiodic in phi until unwound
            wind = np.exp(-1j * spin_weight * grid.axis2)[None, :]
            G = F * wind
            dG = np.fft.ifft(1j * k[None, :] * np.fft.fft(G, axis=1), axis=1)
            d2 = (dG + 1j * spin_weight * G) / wind
        else:
            d2 = np.fft.ifft(1j * k[None, :] * np.fft.fft(F, axis=1), axis=1)
        D = grid.axis1_differentiation
        if grid.kind == 'plane':
            d1 = D @ F
        else:
            s = spin_weight
            back = np.exp(-1j * np.pi * s) * np.roll(F, -(n2 // 2), axis=1)
            psi = np.concatenate([grid.axis1, -grid.axis1])
            gauge = np.exp(1j * s * psi)[:, None]
            G = gauge * np.concatenate([F, back], axis=0)
            dF = (D @ G - 1j * s * G) / gauge
            d1 = dF[:n1]
    elif scheme == 'central':
        h = 2 * np.pi / n2
        d2 = (np.roll(F, -1, axis=1) - np.roll(F, 1, axis=1)) / (2 * h)
        d1 = np.gradient(F, grid.axis1, axis=0, edge_order=2)
    else:
        raise ValueError(f'unknown scheme {scheme}')
    return d1.ravel(), d2.ravel()


def derivatives(f, scheme='spectral'):
    """
    Derivatives of f along the grid axes: (d/dr, d/dangle) about the grid
    center on the plane, (d/dtheta, d/dphi) on the sphere.
    """
    return _axis_derivatives(f.values, f.grid, scheme, f.spin_weight)


def chart_gradient(f, scheme='spectral'):
    """(df/dq, df/dp) on the plane; (df/dtheta, df/dphi) on the sphere."""
    d1, d2 = derivatives(f, scheme)
    grid = f.grid
    if grid.kind == 'sphere':
        return d1, d2
    r, t = grid.mesh
    c, s = np.cos(t), np.sin(t)
    fq = (c * d1 - s / r * d2) / SQRT2
    fp = (s * d1 + c / r * d2) / SQRT2
    return fq, fp


def _bracket_factor(grid):
    if grid.kind == 'plane':
        return 1. / (2 * grid.mesh[0])
    return 1. / (grid.j * np.sin(grid.mesh[0]))


def _check_grids(*fs):
    g0 = fs[0].grid
    for f in fs[1:]:
        if not g0.same_as(f.grid):
            raise GridMismatchError(f'{g0.grid_id} != {f.grid.grid_id}')
    return g0


def _bracket_with(g, scheme):
    """psi -> {g, psi} with the derivatives of g computed once."""
    g1, g2 = derivatives(g, scheme)
    fac = _bracket_factor(g.grid)

    def rhs(psi):
        _check_grids(g, psi)
        p1, p2 = derivatives(psi, scheme)
        return GridFunction(
            g.grid, (g1 * p2 - g2 * p1) * fac,
            spin_weight=psi.spin_weight + g.spin_weight
        )
    return rhs


def poisson_bracket(f, g, scheme='spectral'):
    """
    {f, g}: (f_r g_t - f_t g_r) / (2 r) in polar plane coordinates and
    (f_theta g_phi - f_phi g_theta) / (j sin theta) on the sphere.

    Arguments
    ---------
    f, g : GridFunction
        Samples on one grid
    scheme : str
        'spectral' (default) or 'central'

    Returns
    -------
    bracket : GridFunction
    """
    grid = _check_grids(f, g)
    f1, f2 = derivatives(f, scheme)
    g1, g2 = derivatives(g, scheme)
    return GridFunction(
        grid, (f1 * g2 - f2 * g1) * _bracket_factor(grid),
        spin_weight=f.spin_weight + g.spin_weight
    )


def hamiltonian_field_apply(g, f, scheme='spectral'):
    """X(g) f = -{f, g}"""
    return -poisson_bracket(f, g, scheme)


def divergence_defect(g, scheme='spectral', frac=0.7):
    """
    Largest interior |div| of the Hamiltonian velocity of g.

    In grid axes (r, angle) about the center, or (theta, phi), the velocity
    is fac (g_2, -g_1) with fac the bracket factor, and the invariant
    density is 1 / fac up to a constant, so div = fac (d_1 g_2 - d_2 g_1)
    with the mixed derivatives taken in both orders.
    """
    grid = g.grid
    mask = grid.interior(frac)
    g1, g2 = derivatives(g, scheme)
    d12 = _axis_derivatives(g2, grid, scheme)[0]
    d21 = _axis_derivatives(g1, grid, scheme)[1]
    div = (d12 - d21) * _bracket_factor(grid)
    return float(np.abs(div[mask]).max())


def rk4_dtau_bound(g, scheme='spectral'):
    """
    Step bound dtau * (|v1| rho1 + |v2| rho2) <= 2.8, with v the axis
    velocities of the flow of g and rho the derivative spectral radii;
    2.8 is the RK4 stability limit on the imaginary axis.
    """
    grid = g.grid
    g1, g2 = derivatives(g, scheme)
    fac = np.abs(_bracket_factor(grid))
    v1 = np.abs(g2 * fac).max()
    v2 = np.abs(g1 * fac).max()
    rate = v1 * grid.axis1_spectral_radius + v2 * (grid.shape[1] / 2)
    return np.inf if rate == 0 else 2.8 / rate


def _rk4(rhs, y, dtau):
    k1 = rhs(y)
    k2 = rhs(y + (dtau / 2) * k1)
    k3 = rhs(y + (dtau / 2) * k2)
    k4 = rhs(y + dtau * k3)
    return y + (dtau / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_step(g, dtau, scheme):
    bound = rk4_dtau_bound(g, scheme)
    if abs(dtau) > bound:
        warnings.warn(f'dtau={dtau:g} exceeds RK4 estimate {bound:.3g}')


def liouville_step(w, g, dtau, scheme='spectral'):
    """
    One RK4 step of dw/dtau = X(g) w.

    Arguments
    ---------
    w : GridFunction
        Phase-space density
    g : GridFunction
        Generator (Hamiltonian)
    dtau : float
        Step; a warning is issued above rk4_dtau_bound(g)

    Returns
    -------
    w : GridFunction
    """
    _check_grids(w, g)
    _check_step(g, dtau, scheme)
    return _rk4(_bracket_with(g, scheme), w, dtau)


def classical_schrodinger_step(psi, g, dtau, scheme='spectral'):
    """One RK4 step of dPsi/dtau = X(g) Psi; |Psi|^2 then obeys Liouville."""
    _check_grids(psi, g)
    _check_step(g, dtau, scheme)
    return _rk4(_bracket_with(g, scheme), psi, dtau)


def evolve(u, g, dtau, steps, scheme='spectral', callback=None, verbose=0):
    """
    Repeated RK4 steps of du/dtau = X(g) u; callback(k, u) is called at
    k = 0..steps.
    """
    _check_grids(u, g)
    _check_step(g, dtau, scheme)
    rhs = _bracket_with(g, scheme)
    if callback is not None:
        callback(0, u)
    for k in range(1, steps + 1):
        u = _rk4(rhs, u, dtau)
        if callback is not None:
            callback(k, u)
        if verbose > 0 and k % max(1, steps // 10) == 0:
            print(f'step {k}/{steps}', flush=True)
    return u


def _closure_velocity(grid, g, h=1e-3):
    def d(c1, c2, axis):
        if axis == 0:
            f = [g(c1 + s * h, c2) for s in (-2, -1, 1, 2)]
        else:
            f = [g(c1, c2 + s * h) for s in (-2, -1, 1, 2)]
        return np.real(f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)

    def velocity(c1, c2):
        g1, g2 = d(c1, c2, 0), d(c1, c2, 1)
        if grid.kind == 'plane':
            return np.array([g2, -g1])
        sj = grid.j * np.sin(c1)
        return np.array([g2 / sj, -g1 / sj])
    return velocity


def _interpolated_velocity(g):
    grid = g.grid
    if grid.kind == 'plane':
        gq, gp = chart_gradient(g)
        comps = [gp.real, -gq.real]
    else:
        g1, g2 = derivatives(g)
        sj = grid.j * np.sin(grid.mesh[0])
        comps = [(g2 / sj).real, (-g1 / sj).real]
    a2 = grid.axis2
    pad = np.concatenate([a2[-3:] - 2 * np.pi, a2, a2[:3] + 2 * np.pi])
    interps = []
    for c in comps:
        F = c.reshape(grid.shape)
        F = np.concatenate([F[:, -3:], F, F[:, :3]], axis=1)
        interps.append(RegularGridInterpolator(
            (grid.axis1, pad), F, method='cubic',
            bounds_error=False, fill_value=None
        ))

    def velocity(c1, c2):
        if grid.kind == 'plane':
            z = complex(c1, c2) / SQRT2 - grid.center
            pt = (abs(z), np.mod(np.angle(z), 2 * np.pi))
        else:
            pt = (c1, np.mod(c2, 2 * np.pi))
        return np.array([float(f([pt])[0]) for f in interps])
    return velocity


def _check_domain(grid, y):
    if grid.kind == 'plane':
        z = complex(*y) / SQRT2
        if abs(z - grid.center) > grid.R:
            raise TrajectoryLeftDomainError(
                f'|z - center| = {abs(z - grid.center):.4g} > R = {grid.R:g}'
            )
    elif not (0 < y[0] < np.pi) or np.sin(y[0]) < 1e-8:
        raise TrajectoryLeftDomainError(f'theta = {y[0]:.6g} at a chart pole')


def canonical_flow_path(grid, x, g, tau, dtau):
    """
    RK4 trajectory of dx^i/dtau = omega^ij d_j g through chart coordinates.

    Arguments
    ---------
    grid : QuadratureGrid
        Supplies the manifold and its chart domain
    x : PhasePoint
        Start: complex z or (q, p) on the plane, (theta, phi) on the sphere
    g : callable or GridFunction
        g(c1, c2) on chart coordinates, or samples interpolated cubically
    tau : float
        Total flow time
    dtau : float
        Nominal step; the last step is shortened to land on tau

    Returns
    -------
    path : np.ndarray
        (nsteps + 1, 2) chart coordinates

    Raises
    ------
    TrajectoryLeftDomainError
        when the path leaves the grid disk or reaches a pole
    """
    if isinstance(g, GridFunction):
        velocity = _interpolated_velocity(g)
    else:
        velocity = _closure_velocity(grid, g)
    y = np.array(to_chart(grid.kind, x), dtype=float)
    _check_domain(grid, y)
    nsteps = int(np.ceil(abs(tau) / abs(dtau) - 1e-12)) if tau else 0
    h = tau / nsteps if nsteps else 0.
    path = [y.copy()]

    def rhs(v):
        return velocity(*v)

    for _ in range(nsteps):
        y = _rk4(rhs, y, h)
        _check_domain(grid, y)
        path.append(y.copy())
    path = np.array(path)
    if grid.kind == 'sphere':
        path[:, 1] = np.mod(path[:, 1], 2 * np.pi)
    return path


def canonical_flow_point(grid, x, g, tau, dtau):
    """End point of canonical_flow_path as a chart tuple."""
    end = canonical_flow_path(grid, x, g, tau, dtau)[-1]
    return (float(end[0]), float(end[1]))


def classical_mean(rho_diag, f, tol=1e-6):
    """
    <f> = integral f(x) rho(x, x) dx.

    Returns
    -------
    result : Flagged
        value (complex) and whether rho_diag was a normalized nonnegative
        density within tol; a warning is issued when it was not
    """
    _check_grids(rho_diag, f)
    mass = rho_diag.integrate()
    nonneg = rho_diag.values.real.min() >= -tol
    ok = bool(abs(mass - 1) <= tol and nonneg)
    if not ok:
        warnings.warn(f'density mass {mass.real:.8f}; mean not normalized')
    return Flagged((f * rho_diag).integrate(), ok)


def state_mean(psi, f):
    """<f>_Psi = <Psi|Pi(f) Psi>"""
    return psi.inner(f * psi)
