"""Backend selection for the numeric kernels.

Prefers the compiled extension when it imported cleanly, falling back to
the pure-Python implementation otherwise. Set ``COMOVE_PURE_PYTHON=1``
to force the fallback (useful for debugging and for the equivalence
tests). Both backends are bit-identical by construction, so the choice
only affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("COMOVE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

hy_sum = _impl.hy_sum
pair_cost = _impl.pair_cost
anneal_level = _impl.anneal_level
pattern_polish = _impl.pattern_polish
jacobi_sweeps = _impl.jacobi_sweeps


def available_backends():
    """Return the importable kernel modules keyed by backend name."""
    out = {_kernels_py.BACKEND: _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out[_kernels.BACKEND] = _kernels
    return out
