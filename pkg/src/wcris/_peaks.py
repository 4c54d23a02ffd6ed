"""Backend selection for the peak-search kernel.

The compiled extension is preferred when it imported cleanly; setting the
environment variable WCRIS_PURE_PYTHON=1 before import forces the numpy
fallback.  Both backends implement the identical search, so swapping them
changes speed, not results (beyond ~1e-13 rounding).
"""

import os
from functools import lru_cache

import numpy as np

from . import _peaks_np
from ._peaks_np import GRID_PER_MODE

if os.environ.get("WCRIS_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _peaks_np
    BACKEND = "python"
else:
    try:
        from . import _peaks_cy as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _peaks_np
        BACKEND = "python"


@lru_cache(maxsize=8)
def sine_table(n_modes):
    """sin(n * u_j) on the uniform phase grid, shape (n_modes, 64*n_modes)."""
    n_grid = GRID_PER_MODE * n_modes
    u = 2.0 * np.pi * np.arange(n_grid) / n_grid
    n = np.arange(1, n_modes + 1)
    return np.ascontiguousarray(np.sin(n[:, None] * u[None, :]))


def peak_amplitudes(amps):
    """max_u sum_n amps[m, n] sin(n u) for each row m of a (M, N) array."""
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    if amps.ndim != 2 or amps.shape[1] < 1:
        raise ValueError("expected a (rows, modes) amplitude matrix")
    return _impl.peak_amplitudes(amps, sine_table(amps.shape[1]))
