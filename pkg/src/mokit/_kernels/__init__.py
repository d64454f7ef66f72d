"""Distance-kernel backend selection.

The compiled Cython extension is preferred when it importable; otherwise the
vectorized numpy fallback is used. Setting MOKIT_PURE_PYTHON=1 forces the
fallback. Both backends implement the same arithmetic and expose:

  segseg_distances(a0, a1, b0, b1)                 (..., 3) -> (...)
  capsule_pair_distances(starts, ends, radii, pair_a, pair_b)
                                                   (F, B, 3) -> (F, P)
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

if os.environ.get("MOKIT_PURE_PYTHON"):
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "python"


def segseg_distances(a0, a1, b0, b1) -> np.ndarray:
    a0 = np.asarray(a0, dtype=float)
    shape = a0.shape[:-1]
    flat = lambda x: np.asarray(x, dtype=float).reshape(-1, 3)
    out = _impl.segseg_distances(flat(a0), flat(a1), flat(b0), flat(b1))
    return np.asarray(out).reshape(shape)


def capsule_pair_distances(starts, ends, radii, pair_a, pair_b) -> np.ndarray:
    return np.asarray(_impl.capsule_pair_distances(starts, ends, radii, pair_a, pair_b))
