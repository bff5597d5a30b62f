__all__ = [
    'StarReport', 'make_report', 'reports_frame', 'beta_kernel',
    'star_product_functions', 'star_product_operators', 'star_c_product',
    'classical_limit_sweep', 'fit_exponent', 'eta_poisson_bracket', 'lift_X',
    'lift_X_eta', 'transformation_law_defect', 'Q_of', 'leak',
    'Compatibility', 'compatibility_defect', 'q_commutator_defect'
]
__doc__ = """
# Star products, brackets and quantized generators

---
    beta(x, z)      = |<omega_x|omega_z>|^2
    (f * g)_eta(z)  = integral dx f_eta(x) g_eta(z) beta(x, z)
    (f *c g)_eta    = f_eta g_eta
    {g *, f}_eta    = {g_eta, f_eta}
    X_eta(g)        = X(g_eta)
    Q_eta(f)        = P0 X(f_eta) P0
---

Function-valued products return the eta-representative, tagged with the
device, so feeding a result back into another product does not smear it
a second time.

Q(f) is assembled by compressing X(f_eta) onto the embedded subspace; the
commutator identities

    [Q_eta(f), Q_eta(g)] = Q_eta({f *, g})
    [Q_eta(f), M_eta(g)] = M_eta({f *, g})

need X of the generator to keep the embedded subspace invariant. `leak`
measures how far that fails, and q_commutator_defect only asserts an
identity when its premise holds.
"""

import warnings
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
import pandas as pd

from . import hilbert
from .coherent import (
    CoherentStateSystem, projector_sum, compress, h0_basis, kernel
)
from .errors import GridMismatchError, PreconditionError
from .phase_space import (
    GridFunction, HamiltonianField, MultiplicationOperator,
    build_sphere_grid, poisson_bracket
)
from .quantize import smear, eta_at
from .workers import chunk_slices, parallel_map


@dataclass
class StarReport:
    """
    Outcome of one identity check.

    `passed` is defect <= tolerance, except for witnesses of a failing
    identity (non-commutativity, non-associativity) where it is
    defect > tolerance. `asserted` is False when a premise did not hold
    and the defect is reported only.
    """
    label: str
    lhs: Any = field(repr=False)
    rhs: Any = field(repr=False)
    defect: float
    tolerance: float
    passed: bool
    asserted: bool = True
    witness: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = dict(
            label=self.label, defect=float(self.defect),
            tolerance=float(self.tolerance), passed=bool(self.passed),
            asserted=bool(self.asserted), witness=bool(self.witness)
        )
        out.update({k: _plain(v) for k, v in self.details.items()})
        return out


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _difference(lhs, rhs, block=None, mask=None):
    if isinstance(lhs, GridFunction):
        d = np.abs(lhs.values - rhs.values)
        if mask is not None:
            d = d[mask]
        return float(d.max()) if d.size else 0.
    if np.isscalar(lhs) or np.ndim(lhs) == 0:
        return float(abs(lhs - rhs))
    return hilbert.defect_norm(lhs, rhs, block)


def make_report(label, lhs, rhs, tolerance, block=None, mask=None,
                witness=False, asserted=True, **details):
    """StarReport comparing two operators, grid functions or scalars."""
    defect = _difference(lhs, rhs, block, mask)
    passed = defect > tolerance if witness else defect <= tolerance
    return StarReport(
        label, lhs, rhs, defect, tolerance, bool(passed), asserted, witness,
        details
    )


def reports_frame(reports):
    """One row per report; the pass/fail table of the verify command."""
    return pd.DataFrame([r.to_dict() for r in reports])


def beta_kernel(sys, x, z):
    """beta(x, z) = |K(x, z)|^2"""
    return abs(kernel(sys, x, z)) ** 2


def _same_grid(*fs):
    g0 = fs[0].grid
    for f in fs[1:]:
        if not g0.same_as(f.grid):
            raise GridMismatchError(f'{g0.grid_id} != {f.grid.grid_id}')
    return g0


def _berezin(sys, grid, values):
    """z -> <omega_z| M(values) |omega_z> on the nodes."""
    V = sys.vectors(grid)
    M = projector_sum(sys, grid, values)
    return np.einsum('ni,nm,mi->i', V.conj(), M, V)


def star_product_functions(sys, grid, f, g, eta=None):
    """
    (f * g)_eta(z) = g_eta(z) <omega_z| M(f_eta) |omega_z>

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
    f, g : GridFunction
    eta : DeviceFunction

    Returns
    -------
    fg : GridFunction
        eta-representative of f * g, tagged with eta
    """
    _same_grid(f, g)
    fe = smear(f, eta)
    ge = smear(g, eta)
    return GridFunction(grid, ge.values * _berezin(sys, grid, fe.values), eta)


def star_product_operators(sys, grid, f, g, eta=None, chunk=256, verbose=0):
    """
    M_eta(f) * M_eta(g) = sum_x sum_z w_x w_z f_eta(x) g_eta(z) beta(x, z) M_z

    The double sum is taken literally, tiling the z nodes over workers.
    """
    _same_grid(f, g)
    fe = smear(f, eta)
    ge = smear(g, eta)
    V = sys.vectors(grid)
    a = grid.weights * fe.values

    def tile(sl):
        beta = np.abs(V.conj().T @ V[:, sl]) ** 2
        return a @ beta

    h = np.concatenate(
        parallel_map(tile, chunk_slices(grid.size, chunk), verbose=verbose)
    )
    return projector_sum(sys, grid, ge.values * h)


def star_c_product(f, g, eta=None):
    """(f *c g)_eta = f_eta g_eta"""
    _same_grid(f, g)
    return (smear(f, eta) * smear(g, eta)).tagged(eta)


def classical_limit_sweep(f, g, eta=None, js=(2, 4, 8, 16, 32), verbose=0):
    """
    sup_z |(f * g)_eta(z) - (f *c g)_eta(z)| along a family of spins.

    Arguments
    ---------
    f, g : callable
        f(theta, phi), sampled on a (2j+2) x (4j+2) grid for each j
    eta : DeviceFunction
    js : sequence of float

    Returns
    -------
    sweep : pandas.DataFrame
        columns j, defect
    """
    rows = []
    for j in js:
        sys = CoherentStateSystem.sphere(j)
        jj = int(np.ceil(j))
        grid = build_sphere_grid(j, 2 * jj + 2, 4 * jj + 2)
        fs = grid.sample(f)
        gs = grid.sample(g)
        star = star_product_functions(sys, grid, fs, gs, eta)
        cl = star_c_product(fs, gs, eta)
        defect = float(np.abs(star.values - cl.values).max())
        rows.append(dict(j=j, defect=defect))
        if verbose > 0:
            print(f'j={j:g}: classical-limit defect {defect:.3e}', flush=True)
    return pd.DataFrame(rows)


def fit_exponent(params, defects):
    """p in defect ~ C param^-p by least squares in log-log."""
    slope, _ = np.polyfit(np.log(params), np.log(defects), 1)
    return -slope


def eta_poisson_bracket(f, g, eta=None, scheme='spectral'):
    """{g *, f}_eta = {g_eta, f_eta}, tagged with eta."""
    _same_grid(f, g)
    return poisson_bracket(smear(g, eta), smear(f, eta), scheme).tagged(eta)


def lift_X(g, scheme='spectral'):
    """X(g) psi = {g, psi}"""
    return HamiltonianField(g, scheme)


def lift_X_eta(g, eta, scheme='spectral'):
    return HamiltonianField(smear(g, eta), scheme, 'X_eta(g)')


def _taylor_flow(X, u, dtau, order):
    out = u
    term = u
    for k in range(1, order + 1):
        term = (dtau / k) * X(term)
        out = out + term
    return out


def _default_state(grid):
    if grid.kind == 'plane':
        return grid.sample(lambda q, p: np.exp(-((q - 0.7) ** 2 + p ** 2) / 4))
    return grid.sample(lambda t, p: np.exp(np.sin(t) * np.cos(p)))


def transformation_law_defect(f, g, dtau, psi=None, order=4, frac=0.7,
                              scheme='spectral'):
    """
    Interior max of |e^{dtau X} Pi(f) e^{-dtau X} psi - Pi(e^{dtau X} f) psi|,
    X = X(g), with the exponentials truncated at Taylor order `order`.

    The exact flow satisfies the law identically; the truncation leaves
    an O(dtau^(order+1)) residue, so order 1 halves to a quarter.
    """
    grid = _same_grid(f, g)
    psi = _default_state(grid) if psi is None else psi
    X = HamiltonianField(g, scheme)
    back = _taylor_flow(X, psi, -dtau, order)
    lhs = _taylor_flow(X, f * back, dtau, order)
    rhs = _taylor_flow(X, f, dtau, order) * psi
    d = np.abs(lhs.values - rhs.values)[grid.interior(frac)]
    return float(d.max())


def Q_of(sys, grid, f, eta=None, scheme='spectral', verbose=0):
    """
    Q_eta(f) = P0 X(f_eta) P0 in basis-state coordinates.

    Returns
    -------
    Q : np.ndarray
        dim x dim; anti-Hermitian up to quadrature error for real f
    """
    if not grid.same_as(f.grid):
        raise GridMismatchError(f'{f.grid.grid_id} != {grid.grid_id}')
    X = HamiltonianField(smear(f, eta), scheme)
    return compress(sys, grid, X, verbose=verbose)


def leak(sys, grid, u, scheme='spectral'):
    """
    max_k ||(1 - P0) X(u) b_k|| over the orthonormal embedded basis b_k;
    zero when X(u) keeps the embedded subspace invariant.
    """
    B, _ = h0_basis(sys, grid)
    X = HamiltonianField(u, scheme)
    w = grid.weights
    worst = 0.
    for k in range(B.shape[1]):
        y = X(GridFunction(grid, B[:, k], spin_weight=sys.section_weight)).values
        r = y - B @ (B.conj().T @ (w * y))
        worst = max(worst, float(np.sqrt(np.sum(w * np.abs(r) ** 2))))
    return worst


class Compatibility(NamedTuple):
    """
    defect: leak of X(eta_x) out of the embedded subspace
    residual: largest coordinate residual over the sampled node pairs
    table: pandas.DataFrame with columns a, b, residual
    """
    defect: float
    residual: float
    table: Any


def compatibility_defect(sys, grid, eta, x, n_pairs=16, seed=0,
                         scheme='spectral'):
    """
    How far X(eta_x) P0 = P0 X(eta_x) fails for one outcome x.

    Besides the leak, the coordinate residual

        R(a, b) = {eta_x, K(., y_b)}(x_a) + {eta_x, K(x_a, .)}(y_b)

    is evaluated on n_pairs random node pairs (seeded).

    Raises
    ------
    PreconditionError
        for the delta device, which has no smooth eta_x
    """
    if eta is None or not eta.pointwise:
        kind = 'delta' if eta is None else eta.kind
        raise PreconditionError(f'{kind} device has no smooth eta_x')
    ex = eta_at(eta, grid, x)
    defect = leak(sys, grid, ex, scheme)
    rng = np.random.Generator(np.random.PCG64(seed))
    a_idx = rng.choice(grid.size, size=min(n_pairs, grid.size), replace=False)
    b_idx = rng.choice(grid.size, size=min(n_pairs, grid.size), replace=False)
    V = sys.vectors(grid)
    sw = sys.section_weight
    rows = []
    for a, b in zip(a_idx, b_idx):
        # K(., y_b) has the weight of an embedded state, K(x_a, .) its conjugate
        k_y = GridFunction(grid, V.conj().T @ V[:, b], spin_weight=sw)
        k_x = GridFunction(grid, V[:, a].conj() @ V, spin_weight=-sw)
        r = (
            poisson_bracket(ex, k_y, scheme).values[a]
            + poisson_bracket(ex, k_x, scheme).values[b]
        )
        rows.append(dict(a=int(a), b=int(b), residual=float(abs(r))))
    table = pd.DataFrame(rows)
    return Compatibility(defect, float(table['residual'].max()), table)


def q_commutator_defect(sys, grid, f, g, eta=None, tolerance=1e-4,
                        premise_tolerance=1e-3, scheme='spectral', verbose=0):
    """
    Both commutator identities for Q_eta, in the orthonormal embedded frame.

    The first needs X(f_eta) or X(g_eta) to keep the embedded subspace,
    the second needs X(f_eta) to; each is asserted only when the measured
    leak is below premise_tolerance.

    Returns
    -------
    report : StarReport
        defect is the larger of the two asserted defects (of both when
        neither is asserted); details hold each defect and premise
    """
    _same_grid(f, g)
    fe = smear(f, eta)
    ge = smear(g, eta)
    Qf = Q_of(sys, grid, fe, eta, scheme, verbose)
    Qg = Q_of(sys, grid, ge, eta, scheme, verbose)
    fg = eta_poisson_bracket(g, f, eta, scheme)
    Qfg = Q_of(sys, grid, fg, eta, scheme, verbose)
    Mg = compress(sys, grid, MultiplicationOperator(ge))
    Mfg = compress(sys, grid, MultiplicationOperator(fg))
    d_qq = hilbert.defect_norm(hilbert.commutator(Qf, Qg), Qfg)
    d_qm = hilbert.defect_norm(hilbert.commutator(Qf, Mg), Mfg)
    leak_f = leak(sys, grid, fe, scheme)
    leak_g = leak(sys, grid, ge, scheme)
    ok_qq = min(leak_f, leak_g) <= premise_tolerance
    ok_qm = leak_f <= premise_tolerance
    asserted = [d for d, ok in ((d_qq, ok_qq), (d_qm, ok_qm)) if ok]
    defect = max(asserted) if asserted else max(d_qq, d_qm)
    if not asserted:
        warnings.warn(
            f'commutator premise fails (leak {min(leak_f, leak_g):.2e}); '
            'defects reported only'
        )
    return StarReport(
        'Q commutator', hilbert.commutator(Qf, Qg), Qfg, defect, tolerance,
        bool(defect <= tolerance), bool(asserted), False,
        dict(
            qq_defect=d_qq, qm_defect=d_qm, leak_f=leak_f, leak_g=leak_g,
            qq_asserted=bool(ok_qq), qm_asserted=bool(ok_qm)
        )
    )
