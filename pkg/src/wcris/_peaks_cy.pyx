# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled peak search for rectified standing-wave superpositions.

Same contract and search procedure as ``_peaks_np``: evaluate the mode
superposition on the uniform phase grid, bracket the grid argmax, then
golden-section the bracket.  The dense grid product goes through BLAS
exactly as in the fallback (so grid values are bit-identical across
backends); the scan and the refinement, which dominate the fallback's
runtime, run here as straight C loops.
"""

import numpy as np

from wcris._peaks_np import refine_iterations

cimport numpy as cnp

cnp.import_array()

cdef extern from "math.h" nogil:
    void sincos(double x, double* s, double* c)

cdef double TWO_PI = 6.283185307179586476925286766559
cdef double INVPHI = 0.61803398874989484820458683436564


cdef double _mode_sum(const double* amps, Py_ssize_t n_modes, double u) noexcept nogil:
    """sum_n amps[n-1] * sin(n*u) via the sine addition recurrence."""
    cdef double s_cur, cos_u
    sincos(u, &s_cur, &cos_u)
    cdef double s_prev = 0.0          # sin(0)
    cdef double two_c = 2.0 * cos_u
    cdef double acc = amps[0] * s_cur
    cdef double s_next
    cdef Py_ssize_t n
    for n in range(1, n_modes):
        s_next = two_c * s_cur - s_prev
        s_prev = s_cur
        s_cur = s_next
        acc += amps[n] * s_cur
    return acc


def _refine_rows(const double[:, ::1] amps, const double[:, ::1] vals):
    """Grid argmax plus golden-section refinement, one peak per row."""
    cdef Py_ssize_t n_rows = amps.shape[0]
    cdef Py_ssize_t n_modes = amps.shape[1]
    cdef Py_ssize_t n_grid = vals.shape[1]
    cdef int n_iter = refine_iterations(n_grid)

    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double du = TWO_PI / n_grid
    cdef const double* vrow
    cdef Py_ssize_t m, j, j_star
    cdef double grid_max, a, b, c, d, fc, fd, best
    cdef int it

    with nogil:
        for m in range(n_rows):
            vrow = &vals[m, 0]
            j_star = 0
            grid_max = vrow[0]
            for j in range(1, n_grid):
                if vrow[j] > grid_max:
                    grid_max = vrow[j]
                    j_star = j

            # Bracket one grid cell either side of the sampled maximum;
            # the summand is 2*pi periodic so wrapping brackets are fine.
            a = (j_star - 1) * du
            b = (j_star + 1) * du
            c = b - INVPHI * (b - a)
            d = a + INVPHI * (b - a)
            fc = _mode_sum(&amps[m, 0], n_modes, c)
            fd = _mode_sum(&amps[m, 0], n_modes, d)
            for it in range(n_iter):
                if fc > fd:
                    b = d
                    d = c
                    fd = fc
                    c = b - INVPHI * (b - a)
                    fc = _mode_sum(&amps[m, 0], n_modes, c)
                else:
                    a = c
                    c = d
                    fc = fd
                    d = a + INVPHI * (b - a)
                    fd = _mode_sum(&amps[m, 0], n_modes, d)

            best = grid_max
            if fc > best:
                best = fc
            if fd > best:
                best = fd
            out[m] = best

    return out_arr


def peak_amplitudes(amps, table):
    """Peak of the temporal mode superposition, one value per row."""
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    table = np.asarray(table, dtype=np.float64)
    if table.shape[0] != amps.shape[1]:
        raise ValueError("sine table does not match mode count")
    vals = np.ascontiguousarray(amps @ table)
    return _refine_rows(amps, vals)
