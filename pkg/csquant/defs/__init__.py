__all__ = [
    'defroot', 'defpaths', 'verify_sphere_path', 'verify_plane_path',
    'orderings_path', 'measure_sim_path', 'evolve_path'
]
import os
from glob import glob


defroot = os.path.realpath(os.path.dirname(__file__))
defpaths = tuple(sorted(glob(os.path.join(defroot, '*.json'))))
verify_sphere_path = [p for p in defpaths if p.endswith('verify_sphere.json')][0]
verify_plane_path = [p for p in defpaths if p.endswith('verify_plane.json')][0]
orderings_path = [p for p in defpaths if p.endswith('orderings.json')][0]
measure_sim_path = [p for p in defpaths if p.endswith('measure_sim.json')][0]
evolve_path = [p for p in defpaths if p.endswith('evolve.json')][0]
