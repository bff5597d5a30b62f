__all__ = ['SuiteContext', 'run_suite', 'PLANE_CHECKS', 'SPHERE_CHECKS']
__doc__ = """
# Identity suite

Each check builds the two sides of one identity on the configured system
and grid and returns StarReports. Witness checks pass when an identity is
shown to fail (CSS measures are not projective, the star product is
neither commutative nor associative). A check whose precondition fails,
for example a classical instrument built on a kernel without unit
diagonal, is reported as failed under its own label.

Example
-------

    from csquant.config import from_dict
    from csquant.verify import run_suite
    from csquant.algebra import reports_frame
    cfg = from_dict({'system': {'kind': 'sphere', 'j': 2}})
    reports = run_suite(cfg)
    print(reports_frame(reports)['passed'].all())
    # True
"""

from dataclasses import dataclass

import numpy as np

from . import algebra, coherent, hilbert, measure, quantize
from .errors import PreconditionError
from .phase_space import (
    GridFunction, build_plane_grid, poisson_bracket, HamiltonianField,
    MultiplicationOperator, canonical_flow_point, liouville_step,
    classical_schrodinger_step, divergence_defect, to_chart
)


@dataclass
class SuiteContext:
    sys: object
    grid: object
    eta: object
    tol: object
    seed: int = 0
    verbose: int = 0

    @property
    def kind(self):
        return self.sys.kind

    def sample(self, expr):
        return self.grid.sample(expr)

    def state(self, levels=None):
        """Seeded random density; plane states stay in the low levels."""
        if self.kind == 'plane':
            levels = levels or max(2, self.sys.dim // 2)
        return hilbert.random_density(self.sys.dim, self.seed, levels=levels)

    def unit_vector(self, levels=None):
        rng = np.random.default_rng(self.seed + 1)
        n = self.sys.dim if self.kind == 'sphere' else min(
            levels or 6, self.sys.dim
        )
        v = np.zeros(self.sys.dim, dtype=complex)
        v[:n] = rng.normal(size=n) + 1j * rng.normal(size=n)
        return v / np.linalg.norm(v)


def _report(label, lhs, rhs, tol, **kw):
    return algebra.make_report(label, lhs, rhs, tol, **kw)


def _plane_interior(ctx, radius):
    z = ctx.grid.z - ctx.grid.center
    return np.abs(z) <= radius


# ═══ coherent states ═══════════════════════════════════════════════════════

def check_resolution(ctx):
    roi = coherent.resolution_of_identity(ctx.sys, ctx.grid)
    eye = np.eye(ctx.sys.dim)
    if ctx.kind == 'plane':
        block = min(8, ctx.sys.dim)
        return [_report('resolution of identity', roi, eye, ctx.tol.roi_plane,
                        block=block)]
    return [_report('resolution of identity', roi, eye, ctx.tol.roi_sphere)]


def check_kernel(ctx):
    V = ctx.sys.vectors(ctx.grid)
    diag = np.sum(np.abs(V) ** 2, axis=0)
    if ctx.kind == 'plane':
        # the truncated plane kernel has unit diagonal only near the center
        mask = _plane_interior(ctx, 1.)
        tol = ctx.tol.kernel_plane
    else:
        mask = np.ones(ctx.grid.size, dtype=bool)
        tol = ctx.tol.kernel_sphere
    ones = np.ones(int(mask.sum()))
    out = [_report('kernel diagonal', diag[mask], ones, tol)]
    psi = coherent.embed_state(ctx.sys, ctx.grid, ctx.unit_vector())
    out.append(_report(
        'kernel reproduction', coherent.apply_P0(ctx.sys, ctx.grid, psi), psi,
        tol, mask=mask if ctx.kind == 'plane' else None
    ))
    if ctx.kind == 'sphere':
        K = coherent.kernel_matrix(ctx.sys, ctx.grid)
        lam = K.weighted_min_eigenvalue()
        out.append(_report('kernel positivity', min(lam, 0.), 0., tol))
        out.append(_report('kernel hermiticity', K.hermitian_defect(), 0., tol))
    return out


# ═══ measures and instruments ══════════════════════════════════════════════

def _regions(ctx):
    grid = ctx.grid
    if ctx.kind == 'plane':
        c = grid.center
        return (
            measure.Region.disk(grid, c + 0.3, 1.5),
            measure.Region.half_plane(grid, 0.4, c.real * np.cos(0.4)
                                      + c.imag * np.sin(0.4)),
        )
    return (
        measure.Region.cap(grid, (0.6, 0.4), 1.0),
        measure.Region.half_plane(grid, 0.4, 0.),
    )


def check_covariance(ctx):
    sys, grid = ctx.sys, ctx.grid
    d1, _ = _regions(ctx)
    if ctx.kind == 'plane':
        alpha = 0.4 + 0.2j
        f = lambda q, p: q ** 2 + p
        d_f = quantize.covariance_defect_quantize(sys, grid, f, alpha, ctx.eta)
        return [_report('covariance M(f)', d_f, 0., ctx.tol.covariance_plane)]
    param = (np.pi, 0.)
    U = coherent.group_unitary(sys, param)
    lhs = hilbert.conjugate_by(U, measure.css_measure(sys, grid, d1))
    rhs = measure.css_measure(sys, grid, d1.moved(param))
    f = lambda t, p: np.cos(t) + np.sin(t) ** 2 * np.cos(p) * np.sin(p)
    d_f = quantize.covariance_defect_quantize(
        sys, grid, f, (0.7, 0.3), ctx.eta
    )
    psi = ctx.sample(lambda t, p: np.exp(np.sin(t) * np.cos(p)))
    fs = ctx.sample(f)
    d_pi = quantize.covariance_defect_multiplication(grid, fs, param, psi)
    return [
        _report('covariance M(Delta)', lhs, rhs, ctx.tol.covariance_sphere),
        _report('covariance M(f)', d_f, 0., ctx.tol.covariance_sphere),
        _report('covariance Pi(f)', d_pi, 0., ctx.tol.covariance_sphere),
    ]


def check_projectivity(ctx):
    d1, d2 = _regions(ctx)
    psi = ctx.sample(lambda a, b: np.cos(a) + 1j * np.sin(b) + 2)
    lhs = (measure.spectral_measure(d1) @ measure.spectral_measure(d2))(psi)
    rhs = measure.spectral_measure(d1 & d2)(psi)
    M = measure.css_measure(ctx.sys, ctx.grid, d2)
    return [
        _report('spectral projectivity', lhs, rhs, 1e-14),
        _report('CSS measure not projective', M @ M, M, 1e-2, witness=True),
    ]


def check_compression(ctx):
    d1, _ = _regions(ctx)
    lhs = measure.compress_spectral(ctx.sys, ctx.grid, d1)
    rhs = measure.css_measure(ctx.sys, ctx.grid, d1)
    return [_report('compressed spectral measure', lhs, rhs, 1e-5)]


def check_instruments(ctx):
    sys, grid = ctx.sys, ctx.grid
    rho = ctx.state()
    every = measure.Region.everything(grid)
    tr = np.trace(measure.instrument_region(sys, grid, rho, every)).real
    f = ctx.sample(
        (lambda q, p: np.exp(-(q ** 2 + p ** 2) / 4)) if ctx.kind == 'plane'
        else (lambda t, p: np.cos(t) + 0.5)
    )
    lhs = np.trace(measure.instrument_f(sys, grid, rho, f))
    rhs = np.trace(rho @ quantize.quantize_stochastic(sys, grid, f))
    out = [
        _report('instrument trace', tr, 1., ctx.tol.instrument_trace),
        _report('instrument trace identity', lhs, rhs, ctx.tol.trace_identity),
    ]
    if ctx.kind == 'plane':
        disk_grid = build_plane_grid(grid.R, 40, 64, 0j, (1.,))
        vac = hilbert.pure_density(sys.fiducial)
        p = measure.holevo_probability(
            sys, disk_grid, vac, measure.Region.disk(disk_grid, 0j, 1.)
        )
        out.append(_report(
            'disk probability', p, 1 - np.exp(-1), ctx.tol.disk_probability
        ))
    return out


def check_classical_instrument(ctx):
    sys, grid = ctx.sys, ctx.grid
    rho = ctx.state()
    hus = coherent.husimi_function(sys, grid, rho)
    K = coherent.kernel_matrix(sys, grid)
    f = ctx.sample(lambda t, p: np.cos(t) + 0.5)
    try:
        ecl = measure.classical_instrument(hus, f, K)
        one = measure.classical_instrument(hus, grid.constant(1.), K)
    except PreconditionError as e:
        return [_failed('classical instrument', e)]
    lhs = coherent.compress(sys, grid, ecl)
    rhs = measure.instrument_f(sys, grid, rho, f)
    return [
        _report('classical instrument trace', one.trace(), 1.,
                ctx.tol.instrument_trace),
        _report('classical instrument', lhs, rhs, 1e-5),
    ]


def _failed(label, err):
    return algebra.StarReport(
        label, None, None, np.inf, 0., False, True, False, dict(error=str(err))
    )


# ═══ quantization ══════════════════════════════════════════════════════════

def check_orderings(ctx):
    sys, grid = ctx.sys, ctx.grid
    block = min(8, sys.dim)
    n = np.arange(block)
    abs2 = ctx.sample(lambda q, p: (q ** 2 + p ** 2) / 2)
    q = ctx.sample(lambda q, p: q)
    out = []
    for s, expected in ((-1, n + 1.), (0, n + 0.5), (1, n + 0.)):
        M = quantize.quantize_ordered(sys, grid, abs2, s)
        out.append(_report(
            f'ordering s={s:+d} of |z|^2', M[:block, :block], np.diag(expected),
            ctx.tol.ordering
        ))
    Ms = [quantize.quantize_ordered(sys, grid, q, s) for s in (-1, 0, 1)]
    for s, M in zip((0, 1), Ms[1:]):
        out.append(_report(
            f'ordering s={s:+d} of q', M, Ms[0], ctx.tol.linear_ordering,
            block=block
        ))
    return out


def check_wigner(ctx):
    small = coherent.CoherentStateSystem.plane(8)
    z = 0.3 + 0.2j
    parity = quantize.wigner_operator(small, z)
    literal = quantize.wigner_operator(small, z, method='integral')
    vac = hilbert.pure_density(hilbert.fock_state(8, 0))
    w0 = quantize.wigner_function(small, vac, 0j)
    dim = ctx.sys.dim
    W = quantize.quasi_probability(
        ctx.sys, ctx.grid, hilbert.pure_density(hilbert.fock_state(dim, 0)), 0.
    )
    return [
        _report('Wigner parity vs integral', parity, literal, ctx.tol.wigner),
        _report('vacuum Wigner at origin', w0, 2., ctx.tol.wigner),
        _report('Wigner normalization', W.integrate().real, 1., ctx.tol.wigner),
    ]


# ═══ star products ═════════════════════════════════════════════════════════

def _pair_fg(ctx):
    if ctx.kind == 'plane':
        return (
            ctx.sample(lambda q, p: (q ** 2 + p ** 2) / 2),
            ctx.sample(lambda q, p: q),
        )
    return (
        ctx.sample(lambda t, p: np.cos(t) ** 2),
        ctx.sample(lambda t, p: np.sin(t) * np.cos(p)),
    )


def check_star(ctx):
    sys, grid, eta = ctx.sys, ctx.grid, ctx.eta
    f, g = _pair_fg(ctx)
    rho = ctx.state()
    fg_ops = algebra.star_product_operators(sys, grid, f, g, eta)
    gf_ops = algebra.star_product_operators(sys, grid, g, f, eta)
    inner = measure.instrument_f(sys, grid, rho, quantize.smear(g, eta))
    outer = measure.instrument_f(sys, grid, inner, quantize.smear(f, eta))
    fg = algebra.star_product_functions(sys, grid, f, g, eta)
    hom = quantize.quantize_stochastic(sys, grid, fg)
    one = grid.constant(1.)
    if ctx.kind == 'plane':
        a = ctx.sample(lambda q, p: (q ** 2 + p ** 2) / 2)
        mask = ctx.grid.interior(0.4)
    else:
        a = ctx.sample(lambda t, p: np.cos(t))
        mask = None
    left = algebra.star_product_functions(
        sys, grid, algebra.star_product_functions(sys, grid, a, one), one
    )
    right = algebra.star_product_functions(
        sys, grid, a, algebra.star_product_functions(sys, grid, one, one)
    )
    return [
        _report('star trace identity', np.trace(rho @ fg_ops),
                np.trace(outer), ctx.tol.star_trace),
        _report('star homomorphism', hom, fg_ops, ctx.tol.homomorphism),
        _report('star not commutative', fg_ops, gf_ops, ctx.tol.witness,
                witness=True),
        _report('star not associative', left, right, ctx.tol.witness,
                mask=mask, witness=True),
    ]


def check_classical_limit(ctx):
    sweep = algebra.classical_limit_sweep(
        lambda t, p: np.cos(t), lambda t, p: np.cos(t), verbose=ctx.verbose - 1
    )
    d = sweep['defect'].values
    rising = float(np.max(np.diff(d), initial=-np.inf))
    p = algebra.fit_exponent(sweep['j'].values, d)
    return [
        _report('classical limit decreasing', max(rising, 0.), 0., 0.),
        _report('classical limit exponent', p, 1., 0.3),
    ]


# ═══ brackets and generators ═══════════════════════════════════════════════

def _bracket_funcs(ctx):
    if ctx.kind == 'plane':
        return (
            ctx.sample(lambda q, p: q ** 2 / 2),
            ctx.sample(lambda q, p: p ** 2 / 2),
            ctx.sample(lambda q, p: np.exp(-((q - 0.5) ** 2 + p ** 2) / 2)),
            ctx.grid.interior(0.5),
        )
    return (
        ctx.sample(lambda t, p: np.cos(t)),
        ctx.sample(lambda t, p: np.sin(t) * np.cos(p)),
        coherent.embed_state(ctx.sys, ctx.grid, ctx.unit_vector()),
        None,
    )


def check_brackets(ctx):
    g, f, psi, mask = _bracket_funcs(ctx)
    tol = ctx.tol.bracket
    gf = poisson_bracket(g, f)
    Xg, Xf = HamiltonianField(g), HamiltonianField(f)
    lhs = Xg.commutator(Xf)(psi)
    rhs = HamiltonianField(gf)(psi)
    mixed = Xg.commutator(MultiplicationOperator(f))(psi)
    out = [
        _report('bracket antisymmetry', gf, -poisson_bracket(f, g), 1e-12),
        _report('field commutator', lhs, rhs, tol, mask=mask),
        _report('field-multiplication commutator', mixed, gf * psi, tol,
                mask=mask),
    ]
    if ctx.kind == 'plane':
        q = ctx.sample(lambda q, p: q)
        p = ctx.sample(lambda q, p: p)
        out.append(_report('canonical bracket', poisson_bracket(q, p),
                           ctx.grid.constant(1.), tol, mask=mask))
        h = ctx.sample(lambda q, p: (q ** 2 + p ** 2) / 2)
        out.append(_report('divergence free', divergence_defect(h, frac=0.5),
                           0., tol))
    else:
        nx = ctx.sample(lambda t, p: np.sin(t) * np.cos(p))
        ny = ctx.sample(lambda t, p: np.sin(t) * np.sin(p))
        nz = ctx.sample(lambda t, p: np.cos(t))
        out.append(_report('canonical bracket', poisson_bracket(nx, ny),
                           nz / ctx.sys.j, tol))
    if ctx.eta is not None and ctx.eta.pointwise:
        ef = quantize.smear(f, ctx.eta)
        bracket = algebra.eta_poisson_bracket(f, g, ctx.eta)
        lhs = algebra.lift_X_eta(g, ctx.eta).commutator(
            MultiplicationOperator(ef)
        )(psi)
        out.append(_report('eta field-multiplication commutator', lhs,
                           MultiplicationOperator(bracket)(psi), tol,
                           mask=mask))
    return out


def check_transformation_law(ctx):
    g, f, psi, _ = _bracket_funcs(ctx)
    frac = 0.5 if ctx.kind == 'plane' else 1.
    d = algebra.transformation_law_defect(f, g, 1e-2, psi=psi, frac=frac)
    return [_report('transformation law', d, 0., 1e-4)]


def check_q_commutator(ctx):
    if ctx.kind == 'plane':
        f = ctx.sample(lambda q, p: (q ** 2 + p ** 2) / 2)
        g = ctx.sample(lambda q, p: q)
    else:
        f = ctx.sample(lambda t, p: np.cos(t))
        g = ctx.sample(lambda t, p: np.sin(t) * np.cos(p))
    rep = algebra.q_commutator_defect(
        ctx.sys, ctx.grid, f, g, ctx.eta, ctx.tol.commutator,
        ctx.tol.premise, verbose=ctx.verbose - 1
    )
    return [rep]


# ═══ flows ═════════════════════════════════════════════════════════════════

def check_flows(ctx):
    grid = ctx.grid
    tol = ctx.tol
    if ctx.kind == 'plane':
        h = lambda q, p: (q ** 2 + p ** 2) / 2
        start = to_chart('plane', grid.center + 0.7 + 0.4j)
        period = 2 * np.pi
    else:
        h = lambda t, p: np.cos(t)
        start = (1.1, 0.3)
        period = 2 * np.pi * ctx.sys.j
    end = canonical_flow_point(grid, start, h, period, 1e-3)
    if ctx.kind == 'sphere':
        close = abs(np.exp(1j * end[1]) - np.exp(1j * start[1])) + abs(
            end[0] - start[0]
        )
    else:
        close = float(np.hypot(end[0] - start[0], end[1] - start[1]))
    g = grid.sample(h) if ctx.kind == 'sphere' else grid.sample(
        lambda q, p: ((q - np.sqrt(2) * grid.center.real) ** 2
                      + (p - np.sqrt(2) * grid.center.imag) ** 2) / 2
    )
    if ctx.kind == 'sphere':
        g = g + 0.3 * grid.sample(lambda t, p: np.sin(t) * np.cos(p))
    w = coherent.husimi_function(ctx.sys, grid, ctx.state(levels=4))
    if ctx.kind == 'plane':
        psi = grid.sample(
            lambda q, p: np.exp(-((q - 1) ** 2 + p ** 2) / 4 + 0.3j * q)
        )
    else:
        psi = grid.sample(
            lambda t, p: 1 + 0.3 * np.sin(t) * np.cos(p) + 0.2j * np.cos(t)
        )
    m0 = w.integrate().real
    for _ in range(100):
        w = liouville_step(w, g, 0.01)
    step_psi = classical_schrodinger_step(psi, g, 0.01)
    step_w = liouville_step(
        GridFunction(grid, np.abs(psi.values) ** 2), g, 0.01
    )
    mask = grid.interior(0.7)
    return [
        _report('orbit closure', close, 0., tol.flow),
        _report('Liouville mass', w.integrate().real, m0, tol.mass),
        _report('Schrodinger-Liouville consistency',
                GridFunction(grid, np.abs(step_psi.values) ** 2), step_w,
                1e-5, mask=mask),
    ]


PLANE_CHECKS = (
    check_resolution, check_kernel, check_covariance, check_projectivity,
    check_compression, check_instruments, check_orderings, check_wigner,
    check_star, check_brackets, check_transformation_law, check_q_commutator,
    check_flows,
)
SPHERE_CHECKS = (
    check_resolution, check_kernel, check_covariance, check_projectivity,
    check_compression, check_instruments, check_classical_instrument,
    check_star, check_classical_limit, check_brackets,
    check_transformation_law, check_q_commutator, check_flows,
)


def run_suite(cfg, verbose=0):
    """
    Run every check for the configured system.

    Arguments
    ---------
    cfg : RunConfig
    verbose : int

    Returns
    -------
    reports : list of StarReport
    """
    sys = cfg.system.build_system()
    if 'kernel' in cfg.verify.faults:
        sys = sys.faulted(1.01)
    grid = cfg.system.build_grid()
    ctx = SuiteContext(
        sys, grid, cfg.device.build(), cfg.tolerances, cfg.verify.seed, verbose
    )
    checks = PLANE_CHECKS if sys.kind == 'plane' else SPHERE_CHECKS
    reports = []
    for check in checks:
        if verbose > 0:
            print(f'{check.__name__}', flush=True)
        try:
            out = check(ctx)
        except PreconditionError as e:
            out = [_failed(check.__name__.replace('check_', ''), e)]
        reports.extend(out)
        if verbose > 0:
            for r in out:
                flag = 'ok' if r.passed else 'FAIL'
                print(f'  {flag:4s} {r.label}: {r.defect:.3e}', flush=True)
    return reports
