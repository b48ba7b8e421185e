"""Backend selection for the distance kernels.

The compiled extension is used when it was built; otherwise the pure-Python
implementation is used.  Set ``GREEDY_PEERING_PURE_PYTHON=1`` to force the
fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_bfs_multi = _pykernels.bfs_multi

if os.environ.get("GREEDY_PEERING_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        _bfs_multi = _ckernels.bfs_multi
        BACKEND = "cython"


def bfs_multi(indptr, indices, n, sources, excluded=-1):
    sources = np.ascontiguousarray(sources, dtype=np.int32)
    return _bfs_multi(indptr, indices, int(n), sources, int(excluded))
