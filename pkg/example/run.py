import numpy as np
from csquant import defs
from csquant.coherent import CoherentStateSystem, resolution_of_identity
from csquant.drivers import run
from csquant.hilbert import defect_norm, fock_state, pure_density
from csquant.measure import Region, holevo_probability
from csquant.phase_space import build_plane_grid, build_sphere_grid
from csquant.quantize import quantize_ordered


# Library: the resolution of identity is exact on the sphere grid
sphere = CoherentStateSystem.sphere(2)
sgrid = build_sphere_grid(2, 8, 14)
print('sphere RoI defect', defect_norm(resolution_of_identity(sphere, sgrid), np.eye(5)))

# Library: |z|^2 in the three orderings
plane = CoherentStateSystem.plane(12)
pgrid = build_plane_grid(6., 40, 64, breaks=(1.,))
f = pgrid.sample(lambda q, p: (q ** 2 + p ** 2) / 2)
for s in (-1., 0., 1.):
    M = quantize_ordered(plane, pgrid, f, s)
    print(f's={s:+.0f}', np.round(np.diag(M).real[:4], 6))

# Library: the vacuum lands in the unit disk with probability 1 - exp(-1)
vac = pure_density(fock_state(12, 0))
p = holevo_probability(plane, pgrid, vac, Region.disk(pgrid, 0j, 1.))
print('disk probability', p, 1 - np.exp(-1))

# Batch commands with the shipped configurations
codes = {
    'verify': run('verify', defs.verify_sphere_path, 'out/verify', verbose=1),
    'orderings': run('orderings', defs.orderings_path, 'out/orderings'),
    'measure-sim': run('measure-sim', defs.measure_sim_path, 'out/measure'),
    'evolve': run('evolve', defs.evolve_path, 'out/evolve'),
}
print(codes)
