__all__ = ['n_jobs', 'chunk_slices', 'parallel_map']
__doc__ = """
Worker pool for node-parallel accumulation.

The worker count comes from the CSQUANT_WORKERS environment variable
(default 1, i.e. run in the calling thread). Work is dispatched with
joblib on threads because the kernels are numpy calls that release the
GIL; results come back in submission order, so reductions are
deterministic for any worker count.
"""

import os

from joblib import Parallel, delayed

from .errors import ConfigError


def n_jobs():
    raw = os.environ.get('CSQUANT_WORKERS', '1')
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f'CSQUANT_WORKERS must be an integer; got {raw!r}')
    return n if n != 0 else 1


def chunk_slices(n, size):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def parallel_map(func, items, jobs=None, verbose=0):
    """
    [func(item) for item in items], possibly on several threads.

    Arguments
    ---------
    func : callable
    items : iterable
    jobs : int
        Worker count; defaults to n_jobs()
    verbose : int
        joblib progress is shown when verbose > 1
    """
    jobs = n_jobs() if jobs is None else jobs
    items = list(items)
    if jobs == 1 or len(items) < 2:
        return [func(item) for item in items]
    return Parallel(n_jobs=jobs, prefer='threads', verbose=10 * (verbose > 1))(
        delayed(func)(item) for item in items
    )
