__all__ = [
    'SystemConfig', 'DeviceConfig', 'Tolerances', 'VerifyConfig',
    'OrderingsConfig', 'MeasureConfig', 'EvolveConfig', 'RunConfig',
    'load_config', 'from_dict', 'config_hash'
]
__doc__ = """
# Run configurations

A run is described by one JSON document,

    {
      "system": {"kind": "sphere", "j": 2},
      "device": {"kind": "delta"},
      "tolerances": {"homomorphism": 1e-5},
      "verify": {"faults": []}
    }

Every section is a dataclass below; keys that are not fields raise
ConfigError, as do missing required fields and ill-typed values.
Commands read their own section (verify, orderings, measure, evolve) and
fall back on its defaults when it is absent.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .coherent import CoherentStateSystem
from .errors import ConfigError
from .expressions import parse
from .phase_space import build_plane_grid, build_sphere_grid
from .quantize import DeviceFunction


_MISSING = dataclasses.MISSING


def _section(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f'{where} must be an object; got {type(data).__name__}')
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f'{where}: unknown keys {", ".join(unknown)}')
    kwargs = {}
    for name, f in names.items():
        if name in data:
            kwargs[name] = data[name]
        elif f.default is _MISSING and f.default_factory is _MISSING:
            raise ConfigError(f'{where}.{name} is required')
    try:
        obj = cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{where}: {e}')
    obj.validate(where)
    return obj


def _number(value, where, kind=float, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'{where} must be a number; got {value!r}')
    if kind is int and int(value) != value:
        raise ConfigError(f'{where} must be an integer; got {value!r}')
    if minimum is not None and value < minimum:
        raise ConfigError(f'{where} must be >= {minimum}; got {value!r}')
    return kind(value)


def _pair(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f'{where} must be a pair; got {value!r}')
    return [_number(v, where) for v in value]


@dataclass
class SystemConfig:
    """
    kind : 'plane' or 'sphere'
    N, R, n_radial, n_angular, center, breaks : plane truncation and grid
    j, n_theta, n_phi : sphere spin and grid (defaults 2j+4 and 4j+6)
    """
    kind: str
    N: int = 12
    R: float = 6.
    n_radial: int = 40
    n_angular: int = 64
    center: List[float] = field(default_factory=lambda: [0., 0.])
    breaks: List[float] = field(default_factory=list)
    j: float = 2.
    n_theta: Optional[int] = None
    n_phi: Optional[int] = None

    def validate(self, where):
        if self.kind not in ('plane', 'sphere'):
            raise ConfigError(f'{where}.kind must be plane or sphere')
        self.N = _number(self.N, f'{where}.N', int, 2)
        self.R = _number(self.R, f'{where}.R', float, 0)
        self.n_radial = _number(self.n_radial, f'{where}.n_radial', int, 8)
        self.n_angular = _number(self.n_angular, f'{where}.n_angular', int, 8)
        self.center = _pair(self.center, f'{where}.center')
        self.breaks = [_number(b, f'{where}.breaks') for b in self.breaks]
        self.j = _number(self.j, f'{where}.j', float, 0.5)
        if self.n_theta is not None:
            self.n_theta = _number(self.n_theta, f'{where}.n_theta', int, 2)
        if self.n_phi is not None:
            self.n_phi = _number(self.n_phi, f'{where}.n_phi', int, 2)

    def build_system(self):
        if self.kind == 'plane':
            return CoherentStateSystem.plane(self.N)
        return CoherentStateSystem.sphere(self.j)

    def build_grid(self):
        if self.kind == 'plane':
            center = complex(*self.center) / np.sqrt(2)
            return build_plane_grid(
                self.R, self.n_radial, self.n_angular, center, self.breaks
            )
        twoj = int(round(2 * self.j))
        n_theta = self.n_theta or twoj + 4
        n_phi = self.n_phi or 2 * twoj + 6
        return build_sphere_grid(self.j, n_theta, n_phi)


@dataclass
class DeviceConfig:
    kind: str = 'delta'
    sigma: Optional[float] = None
    s: Optional[float] = None

    def validate(self, where):
        if self.kind not in ('delta', 'gaussian', 's_ordered'):
            raise ConfigError(
                f'{where}.kind must be delta, gaussian or s_ordered'
            )
        if self.kind == 'gaussian':
            if self.sigma is None:
                raise ConfigError(f'{where}.sigma is required for gaussian')
            self.sigma = _number(self.sigma, f'{where}.sigma', float, 1e-12)
        if self.kind == 's_ordered':
            if self.s is None:
                raise ConfigError(f'{where}.s is required for s_ordered')
            self.s = _number(self.s, f'{where}.s')

    def build(self):
        if self.kind == 'gaussian':
            return DeviceFunction.gaussian(self.sigma)
        if self.kind == 's_ordered':
            return DeviceFunction.s_ordered(self.s)
        return None


@dataclass
class Tolerances:
    roi_plane: float = 1e-6
    roi_sphere: float = 1e-10
    kernel_plane: float = 1e-6
    kernel_sphere: float = 1e-10
    covariance_plane: float = 1e-4
    covariance_sphere: float = 1e-8
    ordering: float = 1e-5
    linear_ordering: float = 1e-6
    wigner: float = 1e-4
    instrument_trace: float = 1e-6
    trace_identity: float = 1e-8
    disk_probability: float = 1e-4
    star_trace: float = 1e-6
    homomorphism: float = 1e-5
    witness: float = 1e-3
    bracket: float = 5e-4
    commutator: float = 1e-4
    premise: float = 1e-3
    flow: float = 1e-6
    mass: float = 1e-6
    sigmas: float = 4.

    def validate(self, where):
        for f in dataclasses.fields(self):
            setattr(self, f.name, _number(
                getattr(self, f.name), f'{where}.{f.name}', float, 0
            ))


@dataclass
class VerifyConfig:
    """faults: names of injected faults; 'kernel' scales every CS vector."""
    faults: List[str] = field(default_factory=list)
    seed: int = 0

    def validate(self, where):
        bad = [f for f in self.faults if f not in ('kernel',)]
        if bad:
            raise ConfigError(f'{where}.faults: unknown {", ".join(bad)}')
        self.seed = _number(self.seed, f'{where}.seed', int, 0)


@dataclass
class OrderingsConfig:
    """
    observable : plane chart expression
    expected : optional closed form of the diagonal in n and s
    rows : tabulated Fock levels; default 2N/3
    """
    observable: str = 'abs2(z)'
    expected: Optional[str] = None
    rows: Optional[int] = None

    def validate(self, where):
        parse(self.observable).check_kind('plane')
        if self.expected is not None:
            names = parse(self.expected).names
            if set(names) - {'n', 's'}:
                raise ConfigError(f'{where}.expected may only use n and s')
        if self.rows is not None:
            self.rows = _number(self.rows, f'{where}.rows', int, 1)


@dataclass
class MeasureConfig:
    """
    state: {"kind": "coherent", "point": [c1, c2]}, {"kind": "fock",
        "n": n} or {"kind": "random", "seed": s, "levels": k}
    regions: [{"kind": "disk", "center": [c1, c2], "radius": r}, ...];
        sphere regions use {"kind": "cap", "axis": [theta, phi], "angle": a}
    """
    state: dict = field(default_factory=lambda: {'kind': 'coherent', 'point': [0., 0.]})
    n: int = 100000
    seed: int = 0
    batch: int = 4096
    regions: list = field(default_factory=list)

    def validate(self, where):
        if not isinstance(self.state, dict):
            raise ConfigError(f'{where}.state must be an object')
        kind = self.state.get('kind')
        allowed = {
            'coherent': {'kind', 'point'}, 'fock': {'kind', 'n'},
            'random': {'kind', 'seed', 'levels'}
        }
        if kind not in allowed:
            raise ConfigError(f'{where}.state.kind must be coherent, fock or random')
        extra = set(self.state) - allowed[kind]
        if extra:
            raise ConfigError(f'{where}.state: unknown keys {", ".join(sorted(extra))}')
        if kind == 'coherent':
            self.state['point'] = _pair(self.state.get('point', [0., 0.]), f'{where}.state.point')
        self.n = _number(self.n, f'{where}.n', int, 1)
        self.seed = _number(self.seed, f'{where}.seed', int, 0)
        self.batch = _number(self.batch, f'{where}.batch', int, 1)
        for k, reg in enumerate(self.regions):
            rw = f'{where}.regions[{k}]'
            if not isinstance(reg, dict) or reg.get('kind') not in ('disk', 'cap'):
                raise ConfigError(f'{rw} must be a disk or cap object')
            keys = (
                {'kind', 'center', 'radius'} if reg['kind'] == 'disk'
                else {'kind', 'axis', 'angle'}
            )
            if set(reg) != keys:
                raise ConfigError(f'{rw} needs exactly {", ".join(sorted(keys))}')


@dataclass
class EvolveConfig:
    """
    generator, observable : chart expressions
    initial : chart expression for the initial density (Liouville) or
        amplitude (classical Schrodinger)
    point : chart point followed along the canonical flow
    richardson : also run dtau/2 and dtau/4 and record the error ratio
    """
    generator: str = '(q^2 + p^2)/2'
    observable: str = 'q'
    initial: str = 'exp(-((q - 1)^2 + p^2))'
    mode: str = 'liouville'
    dtau: float = 0.01
    steps: int = 100
    scheme: str = 'spectral'
    point: Optional[List[float]] = None
    normalize: bool = True
    richardson: bool = True

    def validate(self, where):
        if self.mode not in ('liouville', 'schrodinger'):
            raise ConfigError(f'{where}.mode must be liouville or schrodinger')
        if self.scheme not in ('spectral', 'central'):
            raise ConfigError(f'{where}.scheme must be spectral or central')
        for name in ('generator', 'observable', 'initial'):
            parse(getattr(self, name))
        self.dtau = _number(self.dtau, f'{where}.dtau')
        self.steps = _number(self.steps, f'{where}.steps', int, 1)
        if self.point is not None:
            self.point = _pair(self.point, f'{where}.point')
        for name in ('normalize', 'richardson'):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f'{where}.{name} must be true or false')


@dataclass
class RunConfig:
    system: SystemConfig
    device: DeviceConfig = field(default_factory=DeviceConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    orderings: OrderingsConfig = field(default_factory=OrderingsConfig)
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def hash(self):
        return config_hash(self)


_SECTIONS = {
    'system': SystemConfig, 'device': DeviceConfig, 'tolerances': Tolerances,
    'verify': VerifyConfig, 'orderings': OrderingsConfig,
    'measure': MeasureConfig, 'evolve': EvolveConfig,
}


def from_dict(data):
    """RunConfig from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError('configuration must be a JSON object')
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f'unknown sections {", ".join(unknown)}')
    if 'system' not in data:
        raise ConfigError('system is required')
    kwargs = {
        name: _section(cls, data[name], name)
        for name, cls in _SECTIONS.items() if name in data
    }
    return RunConfig(**kwargs)


def load_config(path):
    try:
        with open(path, 'r') as jf:
            data = json.load(jf)
    except OSError as e:
        raise ConfigError(f'cannot read {path}: {e}')
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path} is not JSON: {e}')
    return from_dict(data)


def config_hash(cfg):
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    text = json.dumps(cfg.to_dict(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()
