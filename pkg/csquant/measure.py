__all__ = [
    'Region', 'MeasurementRecord', 'css_measure', 'spectral_measure',
    'compress_spectral', 'instrument_region', 'instrument_f',
    'holevo_probability', 'device_outcome_density',
    'device_outcome_distribution', 'device_mean', 'outcome_mean',
    'ClassicalInstrumentOutput', 'classical_instrument', 'sample_outcomes'
]
__doc__ = """
# Measures, instruments and outcome statistics

Regions are node subsets of one grid, kept together with the predicate
that produced them so moved regions are re-evaluated rather than
permuted. On a grid the coherent-state measure is

    M(Delta) = sum_{i in Delta} w_i |omega_i><omega_i|

and the spectral measure is multiplication by the indicator of Delta.

Example
-------

    from csquant import coherent, hilbert, measure, phase_space as ps
    sys = coherent.CoherentStateSystem.plane(20)
    grid = ps.build_plane_grid(7., 40, 64, breaks=(1.,))
    disk = measure.Region.disk(grid, 0j, 1.)
    rho = hilbert.pure_density(sys.fiducial)
    print(measure.holevo_probability(sys, grid, rho, disk))
    # 0.6321205588...
"""

import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from . import hilbert
from .coherent import projector_sum, husimi_function, compress
from .errors import (
    GridMismatchError, PreconditionError, SamplingInefficiencyError
)
from .phase_space import (
    GridFunction, GridOperator, MultiplicationOperator, Flagged, act, SQRT2
)
from .quantize import outcome_density, smear


@dataclass(eq=False)
class Region:
    """
    Node subset Delta of a grid.

    Attributes
    ----------
    grid : QuadratureGrid
    mask : np.ndarray
        Boolean per node
    predicate : callable
        predicate(c1, c2) -> bool array on chart coordinates; None for
        regions given only by their nodes
    label : str
    """
    grid: object
    mask: np.ndarray = field(repr=False)
    predicate: Callable = field(default=None, repr=False)
    label: str = ''

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        if self.mask.size != self.grid.size:
            raise GridMismatchError(
                f'{self.mask.size} flags for {self.grid.size} nodes'
            )

    @classmethod
    def from_predicate(cls, grid, predicate, label='region'):
        mask = np.broadcast_to(predicate(*grid.chart), (grid.size,))
        return cls(grid, mask, predicate, label)

    @classmethod
    def everything(cls, grid):
        return cls.from_predicate(
            grid, lambda c1, c2: np.ones(np.shape(c1), dtype=bool), 'X'
        )

    @classmethod
    def empty(cls, grid):
        return cls.from_predicate(
            grid, lambda c1, c2: np.zeros(np.shape(c1), dtype=bool), 'empty'
        )

    @classmethod
    def disk(cls, grid, center, radius):
        """|z - center| <= radius on the plane (z units)."""
        center = complex(center)

        def inside(c1, c2):
            z = (np.asarray(c1) + 1j * np.asarray(c2)) / SQRT2
            # nodes on the edge of a break panel count as inside
            return np.abs(z - center) <= radius * (1 + 1e-12)
        return cls.from_predicate(grid, inside, f'disk({center:g},{radius:g})')

    @classmethod
    def cap(cls, grid, axis, angle):
        """Geodesic cap of half-angle `angle` about axis=(theta, phi)."""
        t0, p0 = axis
        n0 = np.array([
            np.sin(t0) * np.cos(p0), np.sin(t0) * np.sin(p0), np.cos(t0)
        ])
        cmin = np.cos(angle)

        def inside(theta, phi):
            theta = np.asarray(theta)
            phi = np.asarray(phi)
            c = (
                n0[0] * np.sin(theta) * np.cos(phi)
                + n0[1] * np.sin(theta) * np.sin(phi)
                + n0[2] * np.cos(theta)
            )
            return c >= cmin - 1e-12
        return cls.from_predicate(grid, inside, f'cap({t0:g},{p0:g},{angle:g})')

    @classmethod
    def half_plane(cls, grid, direction=0., offset=0.):
        """
        Re(z exp(-i direction)) >= offset on the plane; on the sphere the
        hemisphere n . (cos direction, sin direction, 0) >= offset.
        """
        if grid.kind == 'plane':
            def inside(c1, c2):
                z = (np.asarray(c1) + 1j * np.asarray(c2)) / SQRT2
                return (z * np.exp(-1j * direction)).real >= offset
        else:
            def inside(theta, phi):
                return (
                    np.sin(theta) * np.cos(np.asarray(phi) - direction)
                    >= offset
                )
        return cls.from_predicate(grid, inside, f'half({direction:g},{offset:g})')

    def _combine(self, other, op, sym):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError(
                f'{self.grid.grid_id} != {other.grid.grid_id}'
            )
        pred = None
        if self.predicate is not None and other.predicate is not None:
            def pred(c1, c2):
                return op(self.predicate(c1, c2), other.predicate(c1, c2))
        return Region(
            self.grid, op(self.mask, other.mask), pred,
            f'({self.label} {sym} {other.label})'
        )

    def __and__(self, other):
        return self._combine(other, np.logical_and, '&')

    def __or__(self, other):
        return self._combine(other, np.logical_or, '|')

    def __invert__(self):
        pred = None
        if self.predicate is not None:
            def pred(c1, c2):
                return np.logical_not(self.predicate(c1, c2))
        return Region(self.grid, ~self.mask, pred, f'~{self.label}')

    def moved(self, param):
        """a.Delta: the predicate re-evaluated at a^-1 x."""
        if self.predicate is None:
            perm = self.grid.node_permutation(param, inverse=True)
            if perm is None:
                raise PreconditionError(
                    'node-only region moved by a non-preserving action'
                )
            return Region(self.grid, self.mask[perm], None, f'a.{self.label}')
        kind = self.grid.kind

        def pred(c1, c2):
            return self.predicate(*act(kind, param, c1, c2, inverse=True))
        return Region.from_predicate(self.grid, pred, f'a.{self.label}')

    def contains(self, c1, c2):
        if self.predicate is None:
            raise PreconditionError(f'{self.label} has no predicate')
        return np.asarray(self.predicate(c1, c2), dtype=bool)

    def indicator(self):
        return GridFunction(self.grid, self.mask.astype(float))

    @property
    def volume(self):
        return float(self.grid.weights[self.mask].sum())


def _check_region(grid, delta):
    if not grid.same_as(delta.grid):
        raise GridMismatchError(f'{delta.grid.grid_id} != {grid.grid_id}')


def css_measure(sys, grid, delta):
    """M(Delta) = sum_{i in Delta} w_i M_{x_i}"""
    _check_region(grid, delta)
    return projector_sum(sys, grid, delta.mask.astype(float))


def spectral_measure(delta):
    """Pi(Delta): multiplication by the indicator of Delta."""
    return MultiplicationOperator(delta.indicator(), f'Pi({delta.label})')


def compress_spectral(sys, grid, delta, verbose=0):
    """P0 Pi(Delta) P0 on the embedded subspace, in basis-state coordinates."""
    _check_region(grid, delta)
    return compress(sys, grid, spectral_measure(delta), verbose=verbose)


def instrument_f(sys, grid, rho, f):
    """
    E_f(rho) = sum_i w_i f(x_i) Tr(M_{x_i} rho) M_{x_i}

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
    rho : np.ndarray
        dim x dim density matrix
    f : GridFunction

    Returns
    -------
    out : np.ndarray
        Unnormalized post-measurement operator
    """
    if not grid.same_as(f.grid):
        raise GridMismatchError(f'{f.grid.grid_id} != {grid.grid_id}')
    hus = husimi_function(sys, grid, rho)
    return projector_sum(sys, grid, f.values * hus.values)


def instrument_region(sys, grid, rho, delta):
    _check_region(grid, delta)
    return instrument_f(sys, grid, rho, delta.indicator())


def holevo_probability(sys, grid, rho, delta):
    """w_rho(Delta) = Tr(rho M(Delta)) as the node sum of the Husimi function."""
    _check_region(grid, delta)
    hus = husimi_function(sys, grid, rho)
    return float(np.sum(grid.weights[delta.mask] * hus.values.real[delta.mask]))


def _normalized(w, tol):
    mass = w.integrate()
    ok = bool(abs(mass - 1) <= tol and w.values.real.min() >= -tol)
    if not ok:
        warnings.warn(f'outcome density input has mass {mass.real:.8f}')
    return ok


def device_outcome_density(w, eta, verbose=0):
    """x -> integral dz w(z) eta_x(z)"""
    return outcome_density(w, eta, verbose=verbose)


def device_outcome_distribution(w, eta, delta, tol=1e-6, verbose=0):
    """
    mu_w(Delta) = integral dz w(z) eta_Delta(z).

    Returns
    -------
    result : Flagged
        probability and whether w was a normalized density within tol
    """
    _check_region(w.grid, delta)
    ok = _normalized(w, tol)
    dens = outcome_density(w, eta, verbose=verbose)
    grid = w.grid
    p = np.sum(grid.weights[delta.mask] * dens.values[delta.mask]).real
    return Flagged(float(p), ok)


def outcome_mean(w, f, eta, verbose=0):
    """integral f(x) mu_w(dx)"""
    dens = outcome_density(w, eta, verbose=verbose)
    return (f * dens).integrate()


def device_mean(w, f, eta, tol=1e-6, verbose=0):
    """<f_eta>_w; equals outcome_mean(w, f, eta)."""
    ok = _normalized(w, tol)
    return Flagged((smear(f, eta, verbose=verbose) * w).integrate(), ok)


class ClassicalInstrumentOutput(GridOperator):
    """
    E_f(rho) on grid functions,
    (E psi)(y) = f(y) w(y) sum_z w_z K(y, z) psi(z).
    """
    def __init__(self, diagonal, kernel):
        self.diagonal = diagonal
        self.kernel = kernel
        grid = diagonal.grid
        K = kernel.values

        def action(psi):
            return GridFunction(
                grid, diagonal.values * (K @ (grid.weights * psi.values)),
                spin_weight=psi.spin_weight
            )
        super().__init__(grid, action, 'E_cl(f)')

    def trace(self):
        """sum_y w_y E(y, y); K(y, y) = 1 leaves the diagonal integral."""
        return complex(np.sum(
            self.grid.weights * self.diagonal.values * np.diag(self.kernel.values)
        ))


def classical_instrument(w_density, f, kernel, tol=1e-10):
    """
    Classical instrument for a state with diagonal w_density = rho(x, x).

    Raises
    ------
    PreconditionError
        when the kernel lacks a unit diagonal; without it Tr Pi_x != 1
    """
    if not kernel.grid.same_as(w_density.grid):
        raise GridMismatchError(
            f'{kernel.grid.grid_id} != {w_density.grid.grid_id}'
        )
    defect = kernel.diagonal_defect()
    if defect > tol:
        raise PreconditionError(f'kernel diagonal off by {defect:.2e}')
    return ClassicalInstrumentOutput(f * w_density, kernel)


@dataclass
class MeasurementRecord:
    """
    Outcomes drawn from Tr(rho M_x).

    Attributes
    ----------
    outcomes : np.ndarray
        n x 2 chart coordinates
    seed : int
    acceptance_rate : float
    envelope : float
        Rejection constant (1.1 x largest node Husimi value)
    kind : str
    proposal : str
    """
    outcomes: np.ndarray = field(repr=False)
    seed: int
    acceptance_rate: float
    envelope: float
    kind: str
    proposal: str = ''

    @property
    def n(self):
        return self.outcomes.shape[0]

    def z(self):
        if self.kind != 'plane':
            raise PreconditionError('complex outcomes only on the plane')
        return (self.outcomes[:, 0] + 1j * self.outcomes[:, 1]) / SQRT2

    def frequency(self, region):
        return float(np.mean(region.contains(*self.outcomes.T)))

    def to_dataframe(self):
        return pd.DataFrame(dict(
            index=np.arange(self.n), coord1=self.outcomes[:, 0],
            coord2=self.outcomes[:, 1]
        ))

    def metadata(self):
        return dict(
            seed=int(self.seed), n=int(self.n),
            acceptance_rate=float(self.acceptance_rate),
            envelope=float(self.envelope), kind=self.kind,
            proposal=self.proposal
        )

    def write(self, outdir, stem='outcomes'):
        """Write <stem>.csv and <stem>.json; returns both paths."""
        os.makedirs(outdir, exist_ok=True)
        csvpath = os.path.join(outdir, stem + '.csv')
        jsonpath = os.path.join(outdir, stem + '.json')
        self.to_dataframe().to_csv(csvpath, index=False)
        with open(jsonpath, 'w') as jf:
            json.dump(self.metadata(), jf, indent=2)
        return csvpath, jsonpath


def _propose(rng, grid, m):
    u = rng.random(m)
    v = rng.random(m)
    if grid.kind == 'plane':
        z = grid.center + grid.R * np.sqrt(u) * np.exp(2j * np.pi * v)
        return SQRT2 * z.real, SQRT2 * z.imag
    return np.arccos(1 - 2 * u), 2 * np.pi * v


def sample_outcomes(sys, grid, rho, n, seed=0, batch=4096,
                    min_acceptance=1e-4, verbose=0):
    """
    Rejection sampling of measurement outcomes with density Tr(rho M_x).

    Proposals are uniform in the measure over the grid's bounding region
    (the disk |z - center| <= R or the whole sphere); a proposal x is kept
    with probability husimi(x) / envelope.

    Arguments
    ---------
    sys : CoherentStateSystem
    grid : QuadratureGrid
        Supplies the proposal region and the envelope
    rho : np.ndarray
        Density matrix
    n : int
        Outcomes wanted (>= 1)
    seed : int
        PCG64 seed; records are reproducible per seed
    batch : int
        Proposals per round

    Returns
    -------
    record : MeasurementRecord

    Raises
    ------
    SamplingInefficiencyError
        when the acceptance rate falls below min_acceptance
    """
    if n < 1:
        raise PreconditionError(f'need n >= 1; got {n}')
    rho = hilbert.as_density(rho, herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-8)
    envelope = 1.1 * float(husimi_function(sys, grid, rho).values.real.max())
    if not envelope > 0:
        raise SamplingInefficiencyError('Husimi function vanishes on the grid')
    rng = np.random.Generator(np.random.PCG64(seed))
    kept = []
    nkept = 0
    proposed = 0
    limit = max(10 * batch, int(np.ceil(n / min_acceptance)))
    while nkept < n:
        c1, c2 = _propose(rng, grid, batch)
        V = sys.amplitudes(c1, c2)
        hus = np.einsum('ni,nm,mi->i', V.conj(), rho, V).real
        accept = rng.random(batch) * envelope < hus
        if np.any(hus > envelope):
            warnings.warn('Husimi value above the sampling envelope')
        take = np.flatnonzero(accept)[:n - nkept]
        # proposals after the last needed acceptance are never consumed
        proposed += int(take[-1]) + 1 if nkept + take.size == n else batch
        kept.append(np.column_stack([c1[take], c2[take]]))
        nkept += take.size
        if proposed >= limit and nkept / proposed < min_acceptance:
            raise SamplingInefficiencyError(
                f'acceptance {nkept / proposed:.2e} after {proposed} proposals'
            )
    rate = nkept / proposed
    if verbose > 0:
        print(f'sampled {n} outcomes; acceptance {rate:.4f}', flush=True)
    proposal = 'uniform-disk' if grid.kind == 'plane' else 'uniform-sphere'
    return MeasurementRecord(
        np.concatenate(kept), seed, rate, envelope, grid.kind, proposal
    )
