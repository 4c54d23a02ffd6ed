"""Pure-numpy peak search for rectified standing-wave superpositions.

Reference implementation of the kernel contract: for each row of spatial
amplitudes a[m, :], find

    max over u in [0, 2*pi) of  sum_n a[m, n] * sin(n * u),  n = 1..N

The search samples a uniform phase grid (64 points per harmonic) and then
shrinks the bracket around the grid maximum with golden-section iterations
down to a width of TOL_FRAC * 2*pi.  The returned value is the larger of
the grid maximum and the refined maximum, so it can never undershoot the
sampled grid.
"""

import numpy as np

GRID_PER_MODE = 64
TOL_FRAC = 1e-9

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _row_values(amps, modes, u):
    """Evaluate sum_n amps[m, n] * sin(modes[n] * u[m]), one u per row."""
    return np.einsum("mn,mn->m", amps, np.sin(u[:, None] * modes[None, :]))


def refine_iterations(n_grid):
    """Golden-section steps needed to shrink a 2-cell bracket to tolerance."""
    width = 2.0 * (2.0 * np.pi / n_grid)
    tol = TOL_FRAC * 2.0 * np.pi
    return max(int(np.ceil(np.log(tol / width) / np.log(_INVPHI))), 0)


def peak_amplitudes(amps, table):
    """Peak of the temporal mode superposition, one value per row.

    Parameters
    ----------
    amps : (M, N) float64 array
        Per-element spatial amplitude of each temporal harmonic.
    table : (N, T) float64 array
        sin(n * u_j) sampled on the uniform phase grid u_j = 2*pi*j/T,
        with T = GRID_PER_MODE * N.
    """
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    n_rows, n_modes = amps.shape
    n_grid = table.shape[1]

    vals = amps @ table
    j_star = np.argmax(vals, axis=1)
    grid_max = vals[np.arange(n_rows), j_star]

    # Bracket one grid cell either side of the sampled maximum.  The
    # summand is 2*pi periodic so a bracket crossing 0 or 2*pi is fine.
    du = 2.0 * np.pi / n_grid
    a = (j_star - 1) * du
    b = (j_star + 1) * du

    modes = np.arange(1, n_modes + 1, dtype=np.float64)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _row_values(amps, modes, c)
    fd = _row_values(amps, modes, d)
    for _ in range(refine_iterations(n_grid)):
        keep_low = fc > fd
        b = np.where(keep_low, d, b)
        a = np.where(keep_low, a, c)
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        # Golden ratio: the surviving interior point is reused, only the
        # fresh one is evaluated.
        f_new = _row_values(amps, modes, np.where(keep_low, c, d))
        fc, fd = np.where(keep_low, f_new, fd), np.where(keep_low, fc, f_new)

    return np.maximum(grid_max, np.maximum(fc, fd))
