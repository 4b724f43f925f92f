"""Candidate-enumeration kernels for the output-transformer search.

A candidate transformer is a subset of the ``n`` possible (input, output)
pairs, encoded as a bitmask with bit ``k`` standing for pair ``k``.  Both
backends walk candidates by increasing size, and lexicographically by pair
index within a size, returning the first mask that satisfies:

* totality: ``mask & row`` is nonzero for every row mask,
* injectivity: ``mask & col`` has at most one bit for every column mask,
* correctness: ``mask & need`` is nonzero for every need mask.

The compiled backend is used when it imports and ``n <= 63``; set
``REFINERY_PURE=1`` to force the Python one.
"""

from __future__ import annotations

import os

from refinery._kernels._pysearch import BUDGET, FOUND, NONE
from refinery._kernels._pysearch import first_passing as py_first_passing

__all__ = ["BACKEND", "BUDGET", "FOUND", "NONE", "first_passing", "py_first_passing"]

try:
    if os.environ.get("REFINERY_PURE") == "1":
        raise ImportError("pure backend requested")
    from refinery._kernels._csearch import first_passing as c_first_passing
except ImportError:
    c_first_passing = None

BACKEND = "cython" if c_first_passing is not None else "python"
MAX_COMPILED_PAIRS = 63


def first_passing(n, row_masks, col_masks, need_masks, budget, kmin=0, kmax=None):
    """Return ``(status, mask, examined)``; see the module docstring."""
    if kmax is None:
        kmax = n
    if c_first_passing is not None and n <= MAX_COMPILED_PAIRS:
        return c_first_passing(n, row_masks, col_masks, need_masks, budget, kmin, kmax)
    return py_first_passing(n, row_masks, col_masks, need_masks, budget, kmin, kmax)
