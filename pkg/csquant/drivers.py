__all__ = [
    'cmd_verify', 'cmd_orderings', 'cmd_measure_sim', 'cmd_evolve', 'run',
    'COMMANDS', 'EXIT_PASS', 'EXIT_FAIL', 'EXIT_CONFIG', 'EXIT_NUMERIC'
]

import json
import os

import numpy as np

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _write_json(path, obj):
    with open(path, 'w') as jf:
        json.dump(obj, jf, indent=2, sort_keys=True)
        jf.write('\n')
    return path


def _header(cfg, command):
    return dict(command=command, config_hash=cfg.hash, config=cfg.to_dict())


def cmd_verify(cfg, outdir, verbose=0):
    """
    Run the identity suite for the configured system.

    Arguments
    ---------
    cfg : RunConfig
    outdir : str
        Receives verify.json (header, summary and every report) and
        verify.csv (the pass/fail table)
    verbose : int

    Returns
    -------
    code : int
        EXIT_PASS when every asserted identity holds, else EXIT_FAIL

    Example
    -------

.. code-block:: python

    from csquant.config import load_config
    from csquant.defs import verify_sphere_path
    from csquant.drivers import cmd_verify
    code = cmd_verify(load_config(verify_sphere_path), 'out')
    print(code)
    # 0
    """
    from .algebra import reports_frame
    from .verify import run_suite

    reports = run_suite(cfg, verbose=verbose)
    failed = [r.label for r in reports if r.asserted and not r.passed]
    unasserted = [r.label for r in reports if not r.asserted]
    os.makedirs(outdir, exist_ok=True)
    frame = reports_frame(reports)
    frame.to_csv(os.path.join(outdir, 'verify.csv'), index=False)
    out = _header(cfg, 'verify')
    out.update(
        passed=not failed, failed=failed, unasserted=unasserted,
        reports=[r.to_dict() for r in reports]
    )
    _write_json(os.path.join(outdir, 'verify.json'), out)
    cols = ['label', 'defect', 'tolerance', 'passed', 'asserted']
    print(frame[cols].to_string(index=False), flush=True)
    if unasserted:
        print('premise failed, not asserted: ' + ', '.join(unasserted),
              flush=True)
    if failed:
        print('failed: ' + ', '.join(failed), flush=True)
        return EXIT_FAIL
    return EXIT_PASS


def cmd_orderings(cfg, outdir, verbose=0):
    """
    Diagonals of the antinormal, Weyl and normal quantizations of the
    configured observable on a plane system.

    Writes orderings.csv with columns n, antinormal, weyl, normal and,
    when `expected` is configured, expected_<ordering> (the closed form at
    s = -1, 0, 1); orderings.json holds the header, the largest deviation
    from the closed form and the spread between orderings on the rows.

    Returns
    -------
    code : int
        EXIT_FAIL when a closed form is configured and missed by more than
        tolerances.ordering
    """
    from .errors import ConfigError
    from .expressions import parse
    from .hilbert import defect_norm
    from .quantize import OrderingRule, quantize_ordered
    import pandas as pd

    oc = cfg.orderings
    sys = cfg.system.build_system()
    if sys.kind != 'plane':
        raise ConfigError('orderings needs a plane system')
    grid = cfg.system.build_grid()
    f = grid.sample(parse(oc.observable).on_chart('plane'))
    rows = min(oc.rows or max(1, 2 * sys.dim // 3), sys.dim)
    n = np.arange(rows)
    table = dict(n=n)
    mats = {}
    for s in (-1., 0., 1.):
        label = OrderingRule(s).label
        if verbose > 0:
            print(f'quantizing {oc.observable} ({label})', flush=True)
        mats[label] = quantize_ordered(sys, grid, f, s)
        table[label] = np.diag(mats[label])[:rows].real
    deviation = None
    if oc.expected is not None:
        expr = parse(oc.expected)
        deviation = 0.
        for s in (-1., 0., 1.):
            label = OrderingRule(s).label
            value = np.broadcast_to(
                expr(n=n.astype(float), s=s), n.shape
            ).real
            table[f'expected_{label}'] = value
            deviation = max(
                deviation, float(np.abs(table[label] - value).max())
            )
    os.makedirs(outdir, exist_ok=True)
    pd.DataFrame(table).to_csv(
        os.path.join(outdir, 'orderings.csv'), index=False
    )
    ref = mats['antinormal']
    spread = {
        k: defect_norm(M, ref, rows) for k, M in mats.items() if k != 'antinormal'
    }
    passed = deviation is None or deviation <= cfg.tolerances.ordering
    out = _header(cfg, 'orderings')
    out.update(
        rows=int(rows), expected_deviation=deviation, spread=spread,
        passed=bool(passed)
    )
    _write_json(os.path.join(outdir, 'orderings.json'), out)
    if verbose > 0:
        print(pd.DataFrame(table).to_string(index=False), flush=True)
    return EXIT_PASS if passed else EXIT_FAIL


def _measure_state(sys, state):
    from .coherent import cs_vector
    from .hilbert import fock_state, pure_density, random_density

    kind = state['kind']
    if kind == 'coherent':
        return pure_density(cs_vector(sys, tuple(state['point'])))
    if kind == 'fock':
        return pure_density(fock_state(sys.dim, int(state.get('n', 0))))
    return random_density(
        sys.dim, int(state.get('seed', 0)), levels=state.get('levels')
    )


def _region_probability(sys, grid, rho, entry):
    """
    Tr(rho M(Delta)) for a disk or cap by a quadrature fitted to its edge,
    and the region used to count outcomes.
    """
    from .coherent import group_unitary
    from .measure import Region, holevo_probability
    from .phase_space import SQRT2, build_plane_grid

    if entry['kind'] == 'disk':
        center = complex(*entry['center']) / SQRT2
        radius = float(entry['radius'])
        R = max(grid.R + abs(center - grid.center), 1.5 * radius)
        fine = build_plane_grid(R, 40, 64, center, (radius,))
        region = Region.disk(fine, center, radius)
        return holevo_probability(sys, fine, rho, region), region
    t0, p0 = entry['axis']
    angle = float(entry['angle'])
    region = Region.cap(grid, (t0, p0), angle)
    # rotate the cap axis to the north pole
    U = group_unitary(sys, (t0, p0))
    rot = U.conj().T @ rho @ U
    nx = int(np.ceil(2 * sys.j)) + 2
    nphi = int(np.ceil(4 * sys.j)) + 6
    xg, wg = np.polynomial.legendre.leggauss(nx)
    lo = np.cos(min(angle, np.pi))
    half = (1 - lo) / 2
    theta = np.arccos(half * xg + (1 + lo) / 2)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    T, P = np.meshgrid(theta, phi, indexing='ij')
    V = sys.amplitudes(T.ravel(), P.ravel())
    hus = np.einsum('ni,nm,mi->i', V.conj(), rot, V).real.reshape(T.shape)
    w = np.outer(half * wg, np.full(nphi, 2 * np.pi / nphi))
    p = (2 * sys.j + 1) / (4 * np.pi) * float(np.sum(w * hus))
    return p, region


def cmd_measure_sim(cfg, outdir, verbose=0):
    """
    Sample measurement outcomes and compare region frequencies with
    Tr(rho M(Delta)) by a binomial z-score.

    Writes outcomes.csv and outcomes.json (the record), measure.json (the
    header and per-region summary) and, for a non-empty region list,
    regions.csv.

    Returns
    -------
    code : int
        EXIT_FAIL when a region misses by more than tolerances.sigmas
        binomial standard deviations
    """
    from .measure import sample_outcomes
    import pandas as pd

    mc = cfg.measure
    sys = cfg.system.build_system()
    grid = cfg.system.build_grid()
    rho = _measure_state(sys, mc.state)
    record = sample_outcomes(
        sys, grid, rho, mc.n, seed=mc.seed, batch=mc.batch, verbose=verbose
    )
    paths = list(record.write(outdir, 'outcomes'))
    rows = []
    for k, entry in enumerate(mc.regions):
        p, region = _region_probability(sys, grid, rho, entry)
        freq = record.frequency(region)
        sigma = np.sqrt(max(p * (1 - p), 0.) / record.n)
        if sigma > 0:
            zscore = (freq - p) / sigma
        else:
            zscore = 0. if freq == p else np.inf
        rows.append(dict(
            region=k, label=region.label, probability=p, frequency=freq,
            sigma=sigma, zscore=zscore,
            passed=bool(abs(zscore) <= cfg.tolerances.sigmas)
        ))
        if verbose > 0:
            print(
                f'{region.label}: p={p:.6f} freq={freq:.6f} z={zscore:+.2f}',
                flush=True
            )
    out = _header(cfg, 'measure-sim')
    out.update(record.metadata())
    out['regions'] = rows
    out['passed'] = all(r['passed'] for r in rows)
    if rows:
        path = os.path.join(outdir, 'regions.csv')
        pd.DataFrame(rows).to_csv(path, index=False)
        paths.append(path)
    paths.append(_write_json(os.path.join(outdir, 'measure.json'), out))
    print('\n'.join(paths), flush=True)
    return EXIT_PASS if out['passed'] else EXIT_FAIL


def _trajectory(grid, g, f, u0, mode, dtau, steps, scheme, verbose=0):
    from .phase_space import evolve, state_mean

    rows = []

    def record(k, u):
        if mode == 'liouville':
            rows.append((
                k * dtau, u.integrate().real, (g * u).integrate().real,
                (f * u).integrate().real
            ))
        else:
            rows.append((
                k * dtau, u.inner(u).real, state_mean(u, g).real,
                state_mean(u, f).real
            ))

    u = evolve(u0, g, dtau, steps, scheme, record, verbose)
    return np.array(rows), u


def cmd_evolve(cfg, outdir, verbose=0):
    """
    Liouville or classical-Schrodinger evolution under the configured
    generator.

    The time series (mass, energy and the observable mean per step, plus
    the flowed chart point when one is configured) is an xarray Dataset
    over tau written to evolve.csv. evolve.json holds the header, the
    drifts of mass and energy, the return defect of the mean and, with
    richardson on, the ratio of successive final-state differences for
    dtau, dtau/2 and dtau/4 (about 16 for a fourth-order integrator).

    Returns
    -------
    code : int
        EXIT_FAIL when the mass drift exceeds tolerances.mass or the
        energy drift exceeds tolerances.flow

    Raises
    ------
    TrajectoryLeftDomainError
        when the flowed point leaves the chart domain
    """
    from .expressions import parse
    from .phase_space import canonical_flow_path
    import xarray as xr

    ec = cfg.evolve
    grid = cfg.system.build_grid()
    kind = grid.kind
    gfunc = parse(ec.generator).on_chart(kind)
    g = grid.sample(gfunc)
    f = grid.sample(parse(ec.observable).on_chart(kind))
    u0 = grid.sample(parse(ec.initial).on_chart(kind))
    if ec.normalize:
        if ec.mode == 'liouville':
            u0 = u0 / u0.integrate().real
        else:
            u0 = u0 / u0.norm()

    def run_at(dtau, steps, vb):
        return _trajectory(
            grid, g, f, u0, ec.mode, dtau, steps, ec.scheme, vb
        )

    series, u1 = run_at(ec.dtau, ec.steps, verbose)
    ds = xr.Dataset(
        dict(
            mass=('tau', series[:, 1]), energy=('tau', series[:, 2]),
            mean=('tau', series[:, 3])
        ),
        coords=dict(tau=series[:, 0]),
        attrs=dict(
            generator=ec.generator, observable=ec.observable, mode=ec.mode
        )
    )
    if ec.point is not None:
        path = canonical_flow_path(
            grid, tuple(ec.point), gfunc, ec.dtau * ec.steps, ec.dtau
        )
        ds['point_c1'] = ('tau', path[:, 0])
        ds['point_c2'] = ('tau', path[:, 1])
    os.makedirs(outdir, exist_ok=True)
    csvpath = os.path.join(outdir, 'evolve.csv')
    ds.to_dataframe().to_csv(csvpath)
    out = _header(cfg, 'evolve')
    out.update(
        steps=int(ec.steps), dtau=float(ec.dtau),
        mass_drift=float(np.abs(ds['mass'] - ds['mass'][0]).max()),
        energy_drift=float(np.abs(ds['energy'] - ds['energy'][0]).max()),
        return_defect=float(abs(ds['mean'][-1] - ds['mean'][0])),
    )
    if ec.richardson:
        _, u2 = run_at(ec.dtau / 2, 2 * ec.steps, verbose - 1)
        _, u4 = run_at(ec.dtau / 4, 4 * ec.steps, verbose - 1)
        e1 = float(np.abs(u1.values - u2.values).max())
        e2 = float(np.abs(u2.values - u4.values).max())
        out['richardson_ratio'] = e1 / e2 if e2 > 0 else None
    tol = cfg.tolerances
    limits = dict(mass_drift=tol.mass, energy_drift=tol.flow)
    failed = [k for k, t in limits.items() if not out[k] <= t]
    out.update(passed=not failed, failed=failed)
    jsonpath = _write_json(os.path.join(outdir, 'evolve.json'), out)
    print('\n'.join([csvpath, jsonpath]), flush=True)
    if failed:
        print('failed: ' + ', '.join(failed), flush=True)
        return EXIT_FAIL
    return EXIT_PASS


COMMANDS = {
    'verify': cmd_verify,
    'orderings': cmd_orderings,
    'measure-sim': cmd_measure_sim,
    'evolve': cmd_evolve,
}


def run(command, config, outdir, verbose=0):
    """
    Load `config` (a path, or a RunConfig), run `command` and map errors to
    exit codes: 2 for configuration errors and failed preconditions (every
    ValueError subclass in csquant.errors), 3 for numerical degradation.
    """
    from .config import RunConfig, load_config
    from .errors import (
        ConfigError, DimensionMismatchError, GridMismatchError,
        InvalidDimensionError, InvalidSpinError, NumericalDegradation,
        PreconditionError
    )
    usage = (
        ConfigError, DimensionMismatchError, GridMismatchError,
        InvalidDimensionError, InvalidSpinError, PreconditionError
    )

    try:
        cfg = config if isinstance(config, RunConfig) else load_config(config)
        return COMMANDS[command](cfg, outdir, verbose=verbose)
    except usage as e:
        print(f'{type(e).__name__}: {e}', flush=True)
        return EXIT_CONFIG
    except NumericalDegradation as e:
        print(f'{type(e).__name__}: {e}', flush=True)
        return EXIT_NUMERIC
