"""Pure-NumPy fallback for the compiled Bloch sweep.

Same arithmetic as ``_kernels.pyx`` (RK4 in the detuning-rotating frame) but
vectorised across detuning nodes with a Python loop over the retarded-time
grid, so it is much slower on long grids.
"""

import numpy as np


def rk4_step(c1, c2, om0, om1, delta, h):
    """One RK4 step of the Bloch amplitudes in the detuning-rotating frame.

    ``om0``/``om1`` are the field at the start and end of the step; the half
    step uses their mean. Broadcasts over detuning nodes.
    """
    h2 = 0.5 * h
    e1 = np.cos(0.5 * delta * h) - 1j * np.sin(0.5 * delta * h)
    e2 = np.cos(delta * h) - 1j * np.sin(delta * h)
    return _rk4(c1, c2, 0.5j * om0, 0.5j * om1, h, h2, e1, e2, np.conj(e1), np.conj(e2))


def _rk4(c1, c2, om0, om1, h, h2, e1, e2, e1c, e2c):
    # om0/om1 arrive pre-multiplied by i/2; i*conj(om)/2 == -conj(i*om/2)
    omm = 0.5 * (om0 + om1)
    k1a = om0 * c2
    k1b = -np.conj(om0) * c1
    ta = c1 + h2 * k1a
    tb = c2 + h2 * k1b
    k2a = omm * tb * e1
    k2b = -np.conj(omm) * ta * e1c
    ta = c1 + h2 * k2a
    tb = c2 + h2 * k2b
    k3a = omm * tb * e1
    k3b = -np.conj(omm) * ta * e1c
    ta = c1 + h * k3a
    tb = c2 + h * k3b
    k4a = om1 * tb * e2
    k4b = -np.conj(om1) * ta * e2c
    h6 = h / 6.0
    c1 = c1 + h6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    c2 = (c2 + h6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)) * e2
    return c1, c2


def coherence_rows(omega, d_xi, deltas, c1_init, c2_init, rows, start=0, stop=-1):
    if stop < 0:
        stop = len(deltas)
    sl = slice(start, stop)
    delta = np.asarray(deltas[sl], dtype=float)
    c1 = np.array(c1_init[sl], dtype=complex)
    c2 = np.array(c2_init[sl], dtype=complex)
    out = rows[sl]
    h = d_xi
    h2 = 0.5 * h
    e1 = np.cos(0.5 * delta * h) - 1j * np.sin(0.5 * delta * h)
    e2 = np.cos(delta * h) - 1j * np.sin(delta * h)
    e1c = np.conj(e1)
    e2c = np.conj(e2)
    worst = float(np.max(np.abs(np.abs(c1) ** 2 + np.abs(c2) ** 2 - 1.0), initial=0.0))
    out[:, 0] = c1 * np.conj(c2)
    half_i_omega = 0.5j * np.asarray(omega)
    for j in range(len(omega) - 1):
        c1, c2 = _rk4(c1, c2, half_i_omega[j], half_i_omega[j + 1], h, h2, e1, e2, e1c, e2c)
        out[:, j + 1] = c1 * np.conj(c2)
        dev = np.abs(np.abs(c1) ** 2 + np.abs(c2) ** 2 - 1.0)
        if not np.all(np.isfinite(dev)):
            return float("nan")
        worst = max(worst, float(dev.max(initial=0.0)))
    return worst


def weighted_sum(rows, weights):
    out = np.zeros(rows.shape[1], dtype=complex)
    for i in range(rows.shape[0]):
        out += weights[i] * rows[i]
    return out
