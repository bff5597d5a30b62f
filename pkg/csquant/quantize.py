__all__ = [
    'DeviceFunction', 'OrderingRule', 'device_matrix', 'smear', 'outcome_density', 'eta_at',
    'eta_region', 'pi_of_f', 'pi_eta', 'pi_eta_region', 'quantize_stochastic',
    'quantize_eta', 'm_eta_z', 'ordered_kernel', 'quantize_ordered',
    'ordering_transfer', 'symbol_coefficients', 'quantize_weyl',
    'wigner_operator', 'wigner_function',
    'quasi_probability', 'covariance_defect_quantize',
    'covariance_defect_device', 'covariance_defect_multiplication'
]
__doc__ = """
# Quantization maps

Device functions eta smear classical observables,

    f_eta(x_b) = sum_a w_a f(z_a) E[a, b],   E[a, b] = eta_{z_a}(x_b),

normalized so that sum_a w_a E[a, b] = 1. The stochastic (antinormal)
quantization is M(f) = sum_i w_i f_i |omega_i><omega_i| and the device
quantization is M_eta(f) = M(f_eta).

On the plane the s-ordered family is also available. For s <= 0 the
operator kernel

    T_s(z) = integral d^2alpha/pi exp(z conj(alpha) - conj(z) alpha
             + s |alpha|^2 / 2) D(alpha)
           = c D(z) (1 - c)^N D(z)^dagger,         c = 2 / (1 - s)

has closed-form Fock elements (s = -1 is |z><z|, s = 0 is the Wigner
operator 2 D(z) P D(z)^dagger). For s > 0 the kernel is too singular for
quadrature. Instead f is fitted on the grid by a polynomial

    f(z) = sum_{p, q < N} C[p, q] conj(z)^p z^q,

its normal-ordered coefficients are exp((1 - s)/2 d_z d_zbar) C, and the
Fock elements follow from <m| a^dagger^p a^q |n> = sqrt(m! n!) / t!,
t = m - p = n - q. This is exact for polynomial observables of bidegree
below N; other observables are replaced by their least-squares part, with
a warning.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from scipy.special import gammaln

from . import hilbert
from .coherent import projector_sum, group_unitary
from .errors import (
    DimensionMismatchError, GridMismatchError, NumericalDegradation,
    PreconditionError
)
from .phase_space import (
    GridFunction, MultiplicationOperator, build_plane_grid, act, to_complex,
    to_chart, SQRT2
)
from .workers import chunk_slices, parallel_map


@dataclass(frozen=True)
class DeviceFunction:
    """
    Measuring-device kernel eta_z(x).

    Attributes
    ----------
    kind : str
        'delta', 'gaussian', 's_ordered' or 'custom'
    sigma : float
        Gaussian width; per real coordinate of z on the plane, geodesic
        radians on the sphere
    s : float
        Ordering parameter of the s_ordered kind
    kernel : callable
        custom kind: kernel(x, z) -> eta_z(x), x and z chart-coordinate
        pairs of broadcastable arrays
    covariant : bool
        Whether eta_{a z}(a x) = eta_z(x) holds for the group action
    """
    kind: str = 'delta'
    sigma: float = None
    s: float = None
    kernel: Callable = field(default=None, compare=False, repr=False)
    covariant: bool = True

    @classmethod
    def delta(cls):
        return cls('delta')

    @classmethod
    def gaussian(cls, sigma):
        if not sigma > 0:
            raise PreconditionError(f'sigma must be > 0; got {sigma}')
        return cls('gaussian', sigma=float(sigma))

    @classmethod
    def s_ordered(cls, s):
        return cls('s_ordered', s=float(s), covariant=True)

    @classmethod
    def custom(cls, kernel, covariant=False):
        return cls('custom', kernel=kernel, covariant=covariant)

    @property
    def pointwise(self):
        return self.kind in ('gaussian', 'custom')

    def _raw(self, kind, src, tgt):
        if self.kind == 'custom':
            x = (np.asarray(tgt[0])[None, :], np.asarray(tgt[1])[None, :])
            z = (np.asarray(src[0])[:, None], np.asarray(src[1])[:, None])
            return np.broadcast_to(
                np.asarray(self.kernel(x, z), dtype=complex),
                (np.size(src[0]), np.size(tgt[0]))
            )
        s2 = 2 * self.sigma ** 2
        if kind == 'plane':
            zs = (np.asarray(src[0]) + 1j * np.asarray(src[1])) / SQRT2
            zt = (np.asarray(tgt[0]) + 1j * np.asarray(tgt[1])) / SQRT2
            d2 = np.abs(zs[:, None] - zt[None, :]) ** 2
            return np.exp(-d2 / s2) / s2
        ns = _unit(*src)
        nt = _unit(*tgt)
        ang = np.arccos(np.clip(ns.T @ nt, -1, 1))
        return np.exp(-ang ** 2 / s2)

    def table(self, grid, targets=None, sources=None):
        """
        E[a, b] = eta_{z_a}(x_b) for sources z_a (grid nodes by default)
        and targets x_b (grid nodes by default).

        The sphere gaussian is renormalized on the grid so that
        sum_a w_a E[a, b] = 1 for every target.
        """
        if not self.pointwise:
            raise PreconditionError(f'{self.kind} device has no pointwise kernel')
        src = grid.chart if sources is None else sources
        tgt = grid.chart if targets is None else targets
        E = self._raw(grid.kind, src, tgt)
        if self.kind == 'gaussian' and grid.kind == 'sphere':
            full = E if sources is None else self._raw(grid.kind, grid.chart, tgt)
            E = E / (grid.weights @ full)[None, :]
        return E


def _unit(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


@dataclass(frozen=True)
class OrderingRule:
    """s-ordering label; s = -1 antinormal, 0 Weyl, +1 normal."""
    s: float

    @classmethod
    def from_label(cls, label):
        named = {'antinormal': -1., 'weyl': 0., 'normal': 1.}
        if label in named:
            return cls(named[label])
        return cls(float(label))

    @property
    def label(self):
        return {-1.: 'antinormal', 0.: 'weyl', 1.: 'normal'}.get(
            self.s, f's={self.s:g}'
        )


def device_matrix(eta, grid, rows=None):
    """Rows `rows` (slice or index array) of the node table E[a, b]."""
    if rows is None:
        return eta.table(grid)
    c1, c2 = grid.chart
    return eta.table(grid, sources=(c1[rows], c2[rows]))


def _targets_of(grid, targets):
    if targets is None:
        return grid.chart, grid.size
    t1, t2 = (np.atleast_1d(np.asarray(t, dtype=float)) for t in targets)
    return (t1, t2), t1.size


def smear(f, eta, targets=None, chunk=512, verbose=0):
    """
    f_eta(x) = integral dz f(z) eta_z(x) by quadrature.

    Arguments
    ---------
    f : GridFunction
    eta : DeviceFunction or None
        None and the delta kind return f unchanged
    targets : (c1, c2) arrays
        Evaluate at off-grid chart points instead of the nodes; an array
        is returned in that case
    chunk : int
        Targets per block of the device table

    Returns
    -------
    f_eta : GridFunction tagged with eta, or np.ndarray for targets
    """
    if eta is None or eta.kind == 'delta':
        if targets is not None:
            raise PreconditionError('delta device smears on grid nodes only')
        return f.tagged(eta) if eta is not None else f
    if targets is None and f.smeared_by is eta:
        return f
    if eta.kind == 's_ordered':
        raise PreconditionError('s-ordered device acts through quantize_eta')
    grid = f.grid
    (t1, t2), n = _targets_of(grid, targets)
    wf = grid.weights * f.values

    def block(sl):
        return wf @ eta.table(grid, targets=(t1[sl], t2[sl]))

    parts = parallel_map(block, chunk_slices(n, chunk), verbose=verbose)
    out = np.concatenate(parts) if parts else np.zeros(0, dtype=complex)
    if targets is not None:
        return out
    return GridFunction(grid, out, smeared_by=eta)


def outcome_density(w, eta, chunk=512, verbose=0):
    """
    Density of recorded outcomes for a state density w,
    mu_w(dx) / dx = integral dz w(z) eta_x(z) = sum_b w_b w(x_b) E[x, b].
    """
    if eta is None or eta.kind == 'delta':
        return GridFunction(w.grid, w.values)
    grid = w.grid
    ww = grid.weights * w.values
    t1, t2 = grid.chart

    def block(sl):
        return eta.table(grid, targets=(t1[sl], t2[sl])) @ ww[sl]

    parts = parallel_map(block, chunk_slices(grid.size, chunk), verbose=verbose)
    return GridFunction(grid, np.sum(parts, axis=0))


def eta_at(eta, grid, z):
    """x -> eta_z(x) on the grid nodes for one point z."""
    c1, c2 = to_chart(grid.kind, z)
    E = eta.table(grid, sources=(np.array([c1]), np.array([c2])))
    return GridFunction(grid, E[0])


def eta_region(eta, delta):
    """eta_Delta(z) = integral over Delta of eta; the smeared indicator."""
    return smear(delta.indicator(), eta)


def pi_of_f(f):
    """(Pi(f) Psi)(z) = f(z) Psi(z)"""
    return MultiplicationOperator(f, 'Pi(f)')


def pi_eta(f, eta):
    return MultiplicationOperator(smear(f, eta), 'Pi_eta(f)')


def pi_eta_region(eta, delta):
    return MultiplicationOperator(eta_region(eta, delta), 'Pi_eta(Delta)')


def _check_grid(grid, f):
    if not grid.same_as(f.grid):
        raise GridMismatchError(f'{f.grid.grid_id} != {grid.grid_id}')


def quantize_stochastic(sys, grid, f):
    """
    M(f) = sum_i w_i f(x_i) M_{x_i}

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
    f : GridFunction

    Returns
    -------
    M : np.ndarray
        dim x dim; Hermitian for real f
    """
    _check_grid(grid, f)
    return projector_sum(sys, grid, f.values)


def quantize_eta(sys, grid, f, eta):
    """M_eta(f) = M(f_eta); s_ordered devices use quantize_ordered."""
    if eta is not None and eta.kind == 's_ordered':
        return quantize_ordered(sys, grid, f, eta.s)
    return quantize_stochastic(sys, grid, smear(f, eta))


def m_eta_z(sys, grid, eta, z):
    """M_{eta_z} = integral dx eta_z(x) M_x"""
    return quantize_stochastic(sys, grid, eta_at(eta, grid, z))


def _powers(z, c, dim):
    """P[k, i] = (c z_i)^k / k!"""
    P = np.empty((dim, z.size), dtype=complex)
    P[0] = 1
    for k in range(1, dim):
        P[k] = P[k - 1] * (c * z) / k
    return P


def _sqrt_factorials(dim):
    return np.exp(0.5 * gammaln(np.arange(dim) + 1))


def _ordered_from_moments(S, c):
    """c sqrt(m! n!) sum_t (1-c)^t / t! S[m-t, n-t]"""
    dim = S.shape[0]
    M = np.zeros_like(S)
    coef = 1.
    for t in range(dim):
        if t:
            coef *= (1 - c) / t
        if coef == 0:
            break
        M[t:, t:] += coef * S[:dim - t, :dim - t]
    sf = _sqrt_factorials(dim)
    return c * sf[:, None] * sf[None, :] * M


def _check_plane(sys):
    if sys.kind != 'plane':
        raise PreconditionError('s-ordered quantization is plane only')


def ordered_kernel(dim, z, s):
    """Fock block of T_s(z), s < 1."""
    if not s < 1:
        raise PreconditionError(f'closed-form kernel needs s < 1; got {s}')
    c = 2 / (1 - s)
    z = np.atleast_1d(complex(to_complex(z)))
    P = _powers(z, c, dim)
    S = np.outer(P[:, 0], P[:, 0].conj()) * np.exp(-c * abs(z[0]) ** 2)
    return _ordered_from_moments(S, c)


def _lindblad_like(A):
    """L(A) = -[a, [a^dagger, A]] of the untruncated ladder operators."""
    K = A.shape[0]
    m = np.arange(K)
    out = -(m[:, None] + m[None, :] + 1) * A
    up = np.sqrt(np.outer(m[:-1] + 1, m[:-1] + 1))
    out[:-1, :-1] += up * A[1:, 1:]
    dn = np.sqrt(np.outer(m[1:], m[1:]))
    out[1:, 1:] += dn * A[:-1, :-1]
    return out


def ordering_transfer(A, t, watch=None, tol=1e-9, max_order=40):
    """
    exp(t L) A by its Taylor series, L(A) = -[a, [a^dagger, A]].

    The series stops once a term is below tol (relative to A) on the
    top-left watch x watch block. exp(-(s - r)/2 L) takes r-ordered to
    s-ordered for untruncated operators; for truncated matrices with t > 0
    the series is a backward heat flow and amplifies the edge levels.

    Raises
    ------
    NumericalDegradation
        when max_order terms do not converge
    """
    A = np.asarray(A, dtype=complex)
    watch = A.shape[0] if watch is None else watch
    scale = max(1., np.abs(A[:watch, :watch]).max())
    out = A.copy()
    term = A
    for k in range(1, max_order + 1):
        term = (t / k) * _lindblad_like(term)
        out += term
        if np.abs(term[:watch, :watch]).max() <= tol * scale:
            return out
    raise NumericalDegradation(
        f'ordering transfer not converged after {max_order} terms'
    )


def _power_coefficients(series, size):
    """Ascending u-power coefficients of a Legendre series on u in [0, 1]."""
    out = np.zeros(size, dtype=complex)
    for part, unit in ((series.real, 1.), (series.imag, 1j)):
        conv = Legendre(part, domain=[0, 1]).convert(kind=Polynomial)
        out[:conv.coef.size] += unit * conv.coef[:size]
    return out


def symbol_coefficients(grid, f, dim, rtol=1e-8):
    """
    C[p, q] of the weighted least-squares polynomial
    sum C[p, q] conj(z)^p z^q, p, q < dim, through the samples of f.

    Each angular mode k = q - p is fitted as |z|^|k| e^{ik arg z} times a
    Legendre series in u = |z|^2 / rho^2, rho the largest node radius.

    Arguments
    ---------
    grid : QuadratureGrid
        Plane grid
    f : GridFunction
    dim : int
    rtol : float
        Relative weighted residual above which a warning is issued

    Returns
    -------
    C : np.ndarray
        dim x dim complex
    """
    z = grid.z
    rho = np.abs(z).max()
    r = np.abs(z) / rho
    x = 2 * r ** 2 - 1
    e = np.exp(1j * np.angle(z))
    blocks, modes = [], []
    for k in range(-(dim - 1), dim):
        a = abs(k)
        vander = np.polynomial.legendre.legvander(x, dim - 1 - a)
        blocks.append(vander * (r ** a * e ** k)[:, None])
        modes.append((k, dim - a))
    V = np.concatenate(blocks, axis=1)
    sw = np.sqrt(grid.weights)
    b = f.values * sw
    sol = np.linalg.lstsq(V * sw[:, None], b, rcond=None)[0]
    resid = np.linalg.norm(V @ sol * sw - b)
    if resid > rtol * max(np.linalg.norm(b), 1e-300):
        warnings.warn(
            f'observable is not a polynomial of bidegree < {dim}'
            f' (relative residual {resid / np.linalg.norm(b):.2e});'
            ' using its least-squares part'
        )
    C = np.zeros((dim, dim), dtype=complex)
    start = 0
    for k, size in modes:
        a = abs(k)
        pw = _power_coefficients(sol[start:start + size], size)
        start += size
        j = np.arange(size)
        vals = pw / rho ** (2 * j + a)
        if k >= 0:
            C[j, j + a] = vals
        else:
            C[j + a, j] = vals
    return C


def _normal_from_symbol(C, s):
    """N = exp((1 - s)/2 d_z d_zbar) C on coefficient arrays."""
    dim = C.shape[0]
    lf = gammaln(np.arange(dim) + 1)
    h = (1 - s) / 2
    N = C.copy()
    if h == 0:
        return N
    for t in range(1, dim):
        p = np.arange(dim - t)
        fac = np.exp(
            lf[p + t][:, None] + lf[p + t][None, :] - lf[t]
            - lf[p][:, None] - lf[p][None, :]
        )
        N[:dim - t, :dim - t] += h ** t * fac * C[t:, t:]
    return N


def _fock_from_normal(N):
    """<m|A|n> = sqrt(m! n!) sum_t N[m-t, n-t] / t!"""
    dim = N.shape[0]
    M = np.zeros_like(N)
    coef = 1.
    for t in range(dim):
        if t:
            coef /= t
        M[t:, t:] += coef * N[:dim - t, :dim - t]
    sf = _sqrt_factorials(dim)
    return sf[:, None] * sf[None, :] * M


def quantize_ordered(sys, grid, f, s):
    """
    s-ordered quantization of f on the plane.

    Arguments
    ---------
    sys : CoherentStateSystem
        Plane system
    grid : QuadratureGrid
    f : GridFunction
    s : float
        -1 antinormal, 0 Weyl, +1 normal; s > 0 goes through
        symbol_coefficients

    Returns
    -------
    M_s : np.ndarray
    """
    _check_plane(sys)
    _check_grid(grid, f)
    if s == -1:
        return quantize_stochastic(sys, grid, f)
    if s <= 0:
        c = 2 / (1 - s)
        z = grid.z
        P = _powers(z, c, sys.dim)
        g = grid.weights * f.values * np.exp(-c * np.abs(z) ** 2)
        S = (P * g[None, :]) @ P.conj().T
        return _ordered_from_moments(S, c) * sys.amplitude_scale ** 2
    C = symbol_coefficients(grid, f, sys.dim)
    M = _fock_from_normal(_normal_from_symbol(C, s))
    return M * sys.amplitude_scale ** 2


def quantize_weyl(sys, grid, f):
    """M_w(f) = integral dmu f(z) W(z)"""
    return quantize_ordered(sys, grid, f, 0.)


def _alpha_grid(dim):
    return build_plane_grid(np.sqrt(4 * dim + 40), 96, 96)


def wigner_operator(sys, z, alpha_grid=None, method='parity'):
    """
    Wigner operator W(z) truncated to the system dimension.

    Arguments
    ---------
    sys : CoherentStateSystem
        Plane system
    z : complex
        Phase-space point
    alpha_grid : QuadratureGrid
        Grid for the 'integral' method; by default a polar grid of radius
        sqrt(4 dim + 40), wide enough for the D(alpha) elements to decay
    method : str
        'parity': 2 D(z) P D(z)^dagger from exact displacement elements;
        'integral': literal sum over alpha of
        exp(z conj(alpha) - conj(z) alpha) D(alpha)
    """
    _check_plane(sys)
    z = to_complex(z)
    dim = sys.dim
    if method == 'parity':
        K = dim + int(abs(z) ** 2 + 12 * abs(z)) + 30
        Dz = hilbert.displacement_elements(z, dim, K)
        return 2 * (Dz * (-1.) ** np.arange(K)[None, :]) @ Dz.conj().T
    if method != 'integral':
        raise ValueError(f'unknown method {method}')
    agrid = alpha_grid or _alpha_grid(dim)
    alpha = agrid.z
    phase = np.exp(z * alpha.conj() - np.conj(z) * alpha)
    W = np.zeros((dim, dim), dtype=complex)
    for wa, ph, a in zip(agrid.weights, phase, alpha):
        W += wa * ph * hilbert.displacement_elements(a, dim, dim)
    return W


def wigner_function(sys, rho, z):
    """Tr(rho W(z)) by the parity route."""
    rho = hilbert.as_density(rho, herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-8)
    if rho.shape[0] != sys.dim:
        raise DimensionMismatchError(f'rho {rho.shape} vs {sys.dim}')
    return float(np.trace(rho @ wigner_operator(sys, z)).real)


def quasi_probability(sys, grid, rho, s):
    """
    Tr(rho T_s(z_i)) on the grid nodes: Husimi (s = -1) or Wigner (s = 0)
    and everything between.
    """
    _check_plane(sys)
    rho = np.asarray(rho, dtype=complex)
    c = 2 / (1 - s)
    z = grid.z
    dim = sys.dim
    P = _powers(z, c, dim)
    sf = _sqrt_factorials(dim)
    out = np.zeros(z.size, dtype=complex)
    coef = 1.
    for t in range(dim):
        if t:
            coef *= (1 - c) / t
        if coef == 0:
            break
        Q = np.zeros_like(P)
        Q[t:] = sf[t:, None] * P[:dim - t]
        out += coef * np.einsum('ni,nm,mi->i', Q.conj(), rho, Q)
    out *= c * np.exp(-c * np.abs(z) ** 2)
    return GridFunction(grid, out.real)


def _translated(grid, f, param):
    if isinstance(f, GridFunction):
        perm = grid.node_permutation(param, inverse=True)
        if perm is None:
            raise PreconditionError(
                'grid samples need a node-preserving action; pass a closure'
            )
        return f, GridFunction(grid, f.values[perm])

    def moved(c1, c2):
        return f(*act(grid.kind, param, c1, c2, inverse=True))
    return grid.sample(f), grid.sample(moved)


def covariance_defect_quantize(sys, grid, f, group_param, eta=None,
                               block=None, margin=24):
    """
    defect_norm(W(a) M_eta(f) W(a)^dagger, M_eta(L_a f)), L_a f(x) = f(a^-1 x).

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
    f : callable or GridFunction
        Closures are re-evaluated at a^-1 x; grid samples need an action
        that maps the node set onto itself
    group_param : complex or (theta, phi)
        Translation alpha or rotation angles
    eta : DeviceFunction
    block : int
        Compared block; sys.dim // 2 on the plane, full on the sphere
    margin : int
        Extra working levels for the plane conjugation

    Returns
    -------
    defect : float
    """
    f0, f1 = _translated(grid, f, group_param)
    if sys.kind == 'plane':
        work = sys.with_dim(sys.dim + margin)
        U = group_unitary(work, group_param)
        block = sys.dim // 2 if block is None else block
    else:
        work = sys
        U = group_unitary(sys, group_param)
    A = quantize_eta(work, grid, f0, eta)
    B = quantize_eta(work, grid, f1, eta)
    return hilbert.defect_norm(hilbert.conjugate_by(U, A), B, block)


def covariance_defect_device(grid, f, eta, group_param, frac=0.7):
    """
    Device covariance on functions: max over interior nodes of
    |(L_a f)_eta(x) - f_eta(a^-1 x)|.
    """
    f0, f1 = _translated(grid, f, group_param)
    lhs = smear(f1, eta).values
    targets = act(grid.kind, group_param, *grid.chart, inverse=True)
    rhs = smear(f0, eta, targets=targets)
    mask = grid.interior(frac)
    return float(np.abs(lhs - rhs)[mask].max())


def covariance_defect_multiplication(grid, f, group_param, psi, eta=None):
    """
    L_a Pi_eta(f) L_a^-1 psi versus Pi_eta(L_a f) psi for a node-preserving
    action, L_a acting on grid functions by permutation.
    """
    perm = grid.node_permutation(group_param, inverse=True)
    back = grid.node_permutation(group_param, inverse=False)
    if perm is None or back is None:
        raise PreconditionError('action does not preserve the grid nodes')
    op = pi_eta(f, eta)
    lhs = op(GridFunction(grid, psi.values[back])).values[perm]
    f_moved = GridFunction(grid, f.values[perm])
    rhs = pi_eta(f_moved, eta)(psi).values
    return float(np.abs(lhs - rhs).max())
