# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Bloch sweep over the retarded-time grid, one detuning node per row.

Each step is classical RK4 applied in the frame co-rotating with the detuning,
c2 = b2 * exp(-i delta s), so the free precession is exact and only the
field coupling is approximated. The field is linearly interpolated at the
half step.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, cos, sin

cnp.import_array()


cdef inline double complex _conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef inline double _normdev(double complex a, double complex b) noexcept nogil:
    return fabs(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag - 1.0)


cdef double _sweep_node(
    const double complex[::1] omega,
    double h,
    double delta,
    double complex c1,
    double complex c2,
    double complex[::1] out,
) noexcept nogil:
    cdef Py_ssize_t n = omega.shape[0]
    cdef Py_ssize_t j
    cdef double complex om0, om1, omm, k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, ta, tb
    cdef double complex e1 = cos(0.5 * delta * h) - 1j * sin(0.5 * delta * h)
    cdef double complex e2 = cos(delta * h) - 1j * sin(delta * h)
    cdef double complex e1c = _conj(e1)
    cdef double complex e2c = _conj(e2)
    cdef double complex hi = 0.5j
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double dev, worst = _normdev(c1, c2)

    out[0] = c1 * _conj(c2)
    for j in range(n - 1):
        om0 = hi * omega[j]
        om1 = hi * omega[j + 1]
        omm = 0.5 * (om0 + om1)

        # i*conj(om)/2 == -conj(i*om/2)
        k1a = om0 * c2
        k1b = -_conj(om0) * c1
        ta = c1 + h2 * k1a
        tb = c2 + h2 * k1b
        k2a = omm * tb * e1
        k2b = -_conj(omm) * ta * e1c
        ta = c1 + h2 * k2a
        tb = c2 + h2 * k2b
        k3a = omm * tb * e1
        k3b = -_conj(omm) * ta * e1c
        ta = c1 + h * k3a
        tb = c2 + h * k3b
        k4a = om1 * tb * e2
        k4b = -_conj(om1) * ta * e2c

        c1 = c1 + h6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        c2 = (c2 + h6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)) * e2
        out[j + 1] = c1 * _conj(c2)

        dev = _normdev(c1, c2)
        if not isfinite(dev):
            return dev
        if dev > worst:
            worst = dev
    return worst


def coherence_rows(
    const double complex[::1] omega,
    double d_xi,
    const double[::1] deltas,
    const double complex[::1] c1_init,
    const double complex[::1] c2_init,
    double complex[:, ::1] rows,
    Py_ssize_t start=0,
    Py_ssize_t stop=-1,
):
    """Fill ``rows[i, :]`` with c1*conj(c2) along the grid for nodes start..stop-1.

    Returns the largest norm deviation seen (NaN/inf if the sweep blew up).
    Releases the GIL, so disjoint node ranges can run on separate threads.
    """
    if stop < 0:
        stop = deltas.shape[0]
    cdef Py_ssize_t i
    cdef double worst = 0.0, dev
    with nogil:
        for i in range(start, stop):
            dev = _sweep_node(omega, d_xi, deltas[i], c1_init[i], c2_init[i], rows[i])
            if not isfinite(dev):
                worst = dev
                break
            if dev > worst:
                worst = dev
    return worst


def weighted_sum(const double complex[:, ::1] rows, const double[::1] weights):
    """Sum rows with weights in ascending node order (bit-stable reduction)."""
    cdef Py_ssize_t n_nodes = rows.shape[0], n = rows.shape[1], i, j
    out = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] acc = out
    cdef double w
    with nogil:
        for i in range(n_nodes):
            w = weights[i]
            for j in range(n):
                acc[j] = acc[j] + w * rows[i, j]
    return out
