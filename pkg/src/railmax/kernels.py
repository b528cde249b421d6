"""Kernel backend selection.

The compiled extension (railmax._ckernels, Cython) is preferred when it
imported cleanly; the pure-Python twin is the fallback and the reference
semantics. Set RAILMAX_PURE=1 to force the fallback, e.g. for differential
testing or when debugging.
"""

import os

from . import _kernels_py as _py

if os.environ.get("RAILMAX_PURE"):
    _impl = _py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py

BACKEND = _impl.BACKEND

lex_less = _impl.lex_less
component_labels = _impl.component_labels
mask_score = _impl.mask_score
mask_length = _impl.mask_length
ticket_costs = _impl.ticket_costs
cheapest_path = _impl.cheapest_path
knapsack_bound = _impl.knapsack_bound
brute_force_best = _impl.brute_force_best
knapsack_exact = _impl.knapsack_exact
search_best = _impl.search_best
