"""Neighbor-search kernels: compiled extension with pure numpy fallback.

The compiled Cython kernel is preferred when the extension built; otherwise
the numpy implementation (identical contract) is selected at import time.
``BACKEND`` names the active choice.
"""

from . import neighbors_np

try:  # pragma: no cover - exercised only when the extension is built
    from . import _neighbors as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "numpy"

radius_query = _compiled.radius_query if _compiled is not None else neighbors_np.radius_query


def available_backends() -> dict:
    """Backend name -> radius_query callable, for benchmarks and tests."""
    out = {"numpy": neighbors_np.radius_query}
    if _compiled is not None:
        out["compiled"] = _compiled.radius_query
    return out
