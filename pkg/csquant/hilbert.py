__all__ = [
    'annihilation_op', 'creation_op', 'number_op', 'parity_op', 'fock_state',
    'displacement', 'displacement_elements', 'displacement_exact',
    'spin_operators', 'rotation', 'highest_weight', 'adjoint', 'commutator',
    'conjugate_by', 'defect_norm', 'frobenius_defect', 'as_density',
    'random_density', 'pure_density', 'operator_to_json', 'operator_from_json'
]
__doc__ = """
# Dense operator algebra

Operators are square complex numpy arrays and states are complex vectors.
Two bases are provided:

* truncated Fock space, index n = 0..dim-1
* spin-j space, index k = 0..2j with magnetic number m = j - k

Example
-------

    import numpy as np
    from csquant import hilbert
    a = hilbert.annihilation_op(30)
    D = hilbert.displacement(30, 1.0)
    print(abs(D[0, 0] - 0.6065306597126334) < 1e-8)
    # True
    ad = hilbert.adjoint(a)
    print(hilbert.defect_norm(hilbert.commutator(a, ad), np.eye(30), 29) < 1e-12)
    # True
"""

import json
import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln, eval_genlaguerre

from .errors import (
    InvalidDimensionError, InvalidSpinError, DimensionMismatchError,
    PreconditionError
)


def _check_dim(dim, minimum=2):
    if int(dim) != dim or dim < minimum:
        raise InvalidDimensionError(
            f'dimension must be an integer >= {minimum}; got {dim}'
        )
    return int(dim)


def _check_same(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionMismatchError(f'{A.shape} != {B.shape}')
    return A, B


def annihilation_op(dim):
    """
    Truncated annihilation operator with <n-1|a|n> = sqrt(n).

    Arguments
    ---------
    dim : int
        Number of Fock states kept (>= 2)

    Returns
    -------
    a : np.ndarray
        dim x dim complex matrix
    """
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def creation_op(dim):
    return adjoint(annihilation_op(dim))


def number_op(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim)).astype(complex)


def parity_op(dim):
    dim = _check_dim(dim)
    return np.diag((-1.) ** np.arange(dim)).astype(complex)


def fock_state(dim, n):
    dim = _check_dim(dim, 1)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f'level {n} outside 0..{dim - 1}')
    v = np.zeros(dim, dtype=complex)
    v[n] = 1
    return v


def displacement(dim, alpha):
    """
    D(alpha) = exp(alpha a^dagger - conj(alpha) a) of the truncated ladder
    operators. Only the top-left block is unitary; see displacement_exact
    for the truncation-free matrix elements.
    """
    a = annihilation_op(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def displacement_elements(alpha, rows, cols=None):
    """
    Exact matrix elements <m|D(alpha)|k> of the untruncated displacement,
    m < rows and k < cols, from the associated Laguerre closed form.

    Arguments
    ---------
    alpha : complex
        Displacement amplitude
    rows, cols : int
        Block shape; cols defaults to rows

    Returns
    -------
    D : np.ndarray
        rows x cols complex block
    """
    cols = rows if cols is None else cols
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    out = np.zeros((rows, cols), dtype=complex)
    if x == 0:
        n = min(rows, cols)
        out[np.arange(n), np.arange(n)] = 1
        return out
    m, k = np.meshgrid(np.arange(rows), np.arange(cols), indexing='ij')
    lo = np.minimum(m, k)
    hi = np.maximum(m, k)
    diff = hi - lo
    logmag = (
        0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
        + diff * np.log(abs(alpha)) - x / 2
    )
    lag = eval_genlaguerre(lo, diff, x)
    # m >= k carries alpha^(m-k); m < k carries (-conj(alpha))^(k-m)
    phase = np.where(
        m >= k,
        np.exp(1j * diff * np.angle(alpha)),
        np.exp(1j * diff * np.angle(-np.conj(alpha)))
    )
    out[:] = np.exp(logmag) * lag * phase
    return out


def displacement_exact(dim, alpha):
    dim = _check_dim(dim)
    return displacement_elements(alpha, dim, dim)


def _check_spin(j):
    twoj = 2 * j
    if not np.isfinite(twoj) or twoj <= 0 or abs(twoj - round(twoj)) > 1e-12:
        raise InvalidSpinError(f'2j must be a positive integer; got j={j}')
    return round(twoj) / 2


def spin_operators(j):
    """
    Spin-j generators (Jx, Jy, Jz) in the basis m = j, j-1, ..., -j.

    Arguments
    ---------
    j : float
        Half-integer spin, 2j a positive integer

    Returns
    -------
    Jx, Jy, Jz : np.ndarray
        (2j+1) x (2j+1) complex matrices with [Jx, Jy] = i Jz
    """
    j = _check_spin(j)
    m = j - np.arange(int(2 * j) + 1)
    # J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> sits one index up
    Jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    Jm = Jp.conj().T
    Jx = (Jp + Jm) / 2
    Jy = (Jp - Jm) / 2j
    Jz = np.diag(m).astype(complex)
    return Jx, Jy, Jz


def rotation(j, theta, phi):
    """
    exp(-i phi Jz) exp(-i theta Jy); the Jy exponential goes through the
    Hermitian eigendecomposition so the result is unitary to rounding.
    """
    _, Jy, Jz = spin_operators(j)
    lam, U = np.linalg.eigh(Jy)
    Ry = (U * np.exp(-1j * theta * lam)) @ U.conj().T
    return np.exp(-1j * phi * np.diag(Jz).real)[:, None] * Ry


def highest_weight(j):
    j = _check_spin(j)
    return fock_state(int(2 * j) + 1, 0)


def adjoint(A):
    return np.asarray(A).conj().T


def commutator(A, B):
    A, B = _check_same(A, B)
    return A @ B - B @ A


def conjugate_by(U, A):
    """U A U^dagger"""
    U, A = _check_same(U, A)
    return U @ A @ U.conj().T


def defect_norm(A, B, block=None):
    """
    Maximum entrywise |A - B| over the top-left block x block corner
    (whole matrix when block is None).
    """
    A, B = _check_same(A, B)
    if block is not None:
        if block > A.shape[0]:
            raise DimensionMismatchError(f'block {block} > dim {A.shape[0]}')
        A = A[:block, :block]
        B = B[:block, :block]
    if A.size == 0:
        return 0.
    return float(np.max(np.abs(A - B)))


def frobenius_defect(A, B, block=None):
    A, B = _check_same(A, B)
    if block is not None:
        A = A[:block, :block]
        B = B[:block, :block]
    return float(np.linalg.norm(A - B))


def as_density(rho, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-10):
    """
    Validate a density matrix and return it as a complex array.

    Raises
    ------
    PreconditionError
        when rho is not Hermitian, not unit trace or not positive
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatchError(f'density must be square; got {rho.shape}')
    if not np.all(np.isfinite(rho)):
        raise PreconditionError('density has non-finite entries')
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise PreconditionError(f'density not Hermitian ({herm:.2e})')
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise PreconditionError(f'density trace {tr.real:.12f} != 1')
    lmin = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lmin < -psd_tol:
        raise PreconditionError(f'density has eigenvalue {lmin:.2e}')
    return rho


def pure_density(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density(dim, seed=0, rank=None, levels=None):
    """
    Random density matrix rho = G G^dagger / Tr from a complex Ginibre G.

    Arguments
    ---------
    dim : int
        Hilbert dimension
    seed : int
        Seed for numpy.random.default_rng
    rank : int
        Columns of G (defaults to dim)
    levels : int
        If given, only the lowest `levels` basis states are populated; used
        to keep plane states away from the truncation edge.
    """
    rng = np.random.default_rng(seed)
    levels = dim if levels is None else min(levels, dim)
    rank = levels if rank is None else rank
    G = rng.normal(size=(levels, rank)) + 1j * rng.normal(size=(levels, rank))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:levels, :levels] = G @ G.conj().T
    rho /= np.trace(rho).real
    return (rho + rho.conj().T) / 2


def operator_to_json(A):
    A = np.asarray(A, dtype=complex)
    return {'dim': int(A.shape[0]), 're': A.real.tolist(), 'im': A.imag.tolist()}


def operator_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    A = np.array(obj['re'], dtype=float) + 1j * np.array(obj['im'], dtype=float)
    if A.shape != (obj['dim'], obj['dim']):
        raise DimensionMismatchError(f'dim {obj["dim"]} vs entries {A.shape}')
    return A
