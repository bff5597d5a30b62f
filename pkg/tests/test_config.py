"""
Tests for observable expressions and run configurations.
"""

import json

import numpy as np
import pytest

from csquant import config
from csquant.errors import ConfigError
from csquant.expressions import parse


# ═══════════════════════════════════════════════════════════════════
# Expressions
# ═══════════════════════════════════════════════════════════════════


class TestExpressions:

    def test_names_and_plane_value(self):
        f = parse('abs2(z) + 2*q')
        assert f.names == ('q', 'z')
        assert abs(f.on_chart('plane')(0., 1.) - 0.5) <= 1e-15

    def test_precedence(self):
        assert parse('-2^2')() == -4
        assert parse('2^3^2')() == 512
        assert parse('1 - 2 - 3')() == -4
        assert parse('8/2/2')() == 2

    def test_constants(self):
        assert parse('i*i')() == -1
        assert abs(parse('cos(pi)')() + 1) <= 1e-15
        assert parse('pi').names == ()

    def test_ordering_variables(self):
        f = parse('n + (1 - s)/2')
        np.testing.assert_allclose(
            f(n=np.arange(3), s=-1.), [1., 2., 3.]
        )

    def test_sphere_chart(self):
        f = parse('nz^2 + nx*ny').on_chart('sphere')
        t, p = np.array([0.3, 1.2]), np.array([0.4, 2.])
        expected = np.cos(t) ** 2 + np.sin(t) ** 2 * np.cos(p) * np.sin(p)
        np.testing.assert_allclose(f(t, p), expected, atol=1e-15)

    def test_broadcast_constant(self):
        f = parse('3').on_chart('plane')
        assert f(np.zeros(4), np.zeros(4)).shape == (4,)

    @pytest.mark.parametrize('text', [
        '', 'q +', 'foo(q)', 'w', '(q', 'q)', 'q $ p', '2 3'
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse(text)

    def test_wrong_chart(self):
        with pytest.raises(ConfigError):
            parse('nz + q').on_chart('plane')
        with pytest.raises(ConfigError):
            parse('n + 1')(s=1)


# ═══════════════════════════════════════════════════════════════════
# Configurations
# ═══════════════════════════════════════════════════════════════════


class TestConfig:

    def test_defaults(self):
        cfg = config.from_dict({'system': {'kind': 'sphere', 'j': 1.5}})
        grid = cfg.system.build_grid()
        assert grid.shape == (7, 12)
        assert cfg.system.build_system().dim == 4
        assert cfg.device.build() is None
        assert cfg.tolerances.sigmas == 4.

    def test_plane_grid_center(self):
        cfg = config.from_dict({'system': {
            'kind': 'plane', 'N': 10, 'R': 5., 'center': [1., 0.]
        }})
        grid = cfg.system.build_grid()
        assert abs(grid.center - 1 / np.sqrt(2)) <= 1e-15
        assert cfg.system.build_system().dim == 10

    def test_devices(self):
        g = config.from_dict({
            'system': {'kind': 'sphere'},
            'device': {'kind': 'gaussian', 'sigma': 0.3}
        }).device.build()
        assert g.kind == 'gaussian' and g.sigma == 0.3
        s = config.from_dict({
            'system': {'kind': 'plane'},
            'device': {'kind': 's_ordered', 's': 0}
        }).device.build()
        assert s.s == 0.

    @pytest.mark.parametrize('data', [
        [],
        {},
        {'system': {'kind': 'torus'}},
        {'system': {'kind': 'plane', 'N': 1}},
        {'system': {'kind': 'plane', 'N': 2.5}},
        {'system': {'kind': 'plane', 'M': 3}},
        {'system': {'kind': 'plane'}, 'extra': {}},
        {'system': {'kind': 'plane'}, 'device': {'kind': 'gaussian'}},
        {'system': {'kind': 'plane'}, 'tolerances': {'flow': -1}},
        {'system': {'kind': 'plane'}, 'tolerances': {'flow': True}},
        {'system': {'kind': 'plane'}, 'verify': {'faults': ['grid']}},
        {'system': {'kind': 'plane'}, 'orderings': {'observable': 'nz'}},
        {'system': {'kind': 'plane'}, 'orderings': {'expected': 'n + q'}},
        {'system': {'kind': 'plane'}, 'measure': {'state': {'kind': 'cat'}}},
        {'system': {'kind': 'plane'}, 'measure': {'state': 'vacuum'}},
        {'system': {'kind': 'plane'},
         'measure': {'regions': [{'kind': 'disk', 'radius': 1.}]}},
        {'system': {'kind': 'plane'}, 'evolve': {'mode': 'heat'}},
        {'system': {'kind': 'plane'}, 'evolve': {'generator': 'q +'}},
        {'system': {'kind': 'plane'}, 'evolve': {'richardson': 1}},
        {'system': {'kind': 'plane'}, 'evolve': {'point': [1.]}},
    ])
    def test_rejects(self, data):
        with pytest.raises(ConfigError):
            config.from_dict(data)

    def test_hash(self):
        a = config.from_dict({'system': {'kind': 'plane'}})
        b = config.from_dict({'system': {'kind': 'plane', 'N': 12}})
        c = config.from_dict({'system': {'kind': 'plane', 'N': 14}})
        assert a.hash == b.hash
        assert a.hash != c.hash
        assert len(a.hash) == 64

    def test_load(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({
            'system': {'kind': 'sphere', 'j': 1},
            'evolve': {'generator': 'nz', 'observable': 'nx', 'initial': '1'}
        }))
        cfg = config.load_config(str(path))
        assert cfg.evolve.generator == 'nz'
        bad = tmp_path / 'bad.json'
        bad.write_text('{"system":')
        with pytest.raises(ConfigError):
            config.load_config(str(bad))
        with pytest.raises(ConfigError):
            config.load_config(str(tmp_path / 'missing.json'))

    @pytest.mark.parametrize('name', [
        'verify_sphere_path', 'verify_plane_path', 'orderings_path',
        'measure_sim_path', 'evolve_path'
    ])
    def test_shipped_configs(self, name):
        from csquant import defs
        cfg = config.load_config(getattr(defs, name))
        assert cfg.system.kind in ('plane', 'sphere')
