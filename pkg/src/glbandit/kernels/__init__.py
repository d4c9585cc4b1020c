"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension ``glbandit.kernels._core`` is picked at import time
when available; otherwise the numpy implementation in ``_reference`` is used.
``backend`` names the active implementation.
"""

from . import _reference

try:
    from . import _core as _impl
except ImportError:  # extension not built; run on the numpy fallback
    _impl = _reference

backend = _impl.NAME

rank_one_update = _impl.rank_one_update
quad_forms = _impl.quad_forms
ucb_scores = _impl.ucb_scores
quad_scores = _impl.quad_scores


def available_backends():
    """Map backend name -> module, for parity tests and benchmarks."""
    out = {_reference.NAME: _reference}
    if _impl is not _reference:
        out[_impl.NAME] = _impl
    return out
