__all__ = [
    'hilbert', 'phase_space', 'coherent', 'quantize', 'measure', 'algebra',
    'config', 'drivers', 'errors'
]
__doc__ = """
Overview
--------

Coherent-state quantization on the plane (Heisenberg-Weyl, truncated Fock
space) and on the sphere (SU(2), spin j). Functions on a phase-space
quadrature grid are quantized through coherent-state projectors,
smoothed by measurement devices, composed by star products and moved by
canonical flows; every identity between these objects can be checked
numerically by the verify suite.

Examples
--------

Within Python:

.. code-block:: python

    from csquant.coherent import CoherentStateSystem, resolution_of_identity
    from csquant.phase_space import build_sphere_grid
    from csquant.hilbert import defect_norm
    import numpy as np
    sys = CoherentStateSystem.sphere(2)
    grid = build_sphere_grid(2, 8, 14)
    print(defect_norm(resolution_of_identity(sys, grid), np.eye(5)) < 1e-10)
    # True

As a script:

.. code-block:: bash

    $ python -m csquant verify --config csquant/defs/verify_sphere.json --out out
"""
from . import errors
from . import hilbert
from . import phase_space
from . import coherent
from . import quantize
from . import measure
from . import algebra
from . import config
from . import drivers

__version__ = '0.1.0'
