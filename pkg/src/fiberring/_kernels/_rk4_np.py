"""Pure numpy/scipy RK4 stepper, reference implementation for the compiled core."""

import numpy as np


def rk4_propagate(packed, psi, t0, dt, nsteps):
    """Advance psi by nsteps fixed RK4 steps under i dpsi/dt = H(t) psi."""
    mats = packed.mats
    freqs = packed.freqs

    def rhs(t, x):
        y = np.zeros_like(x)
        for m, w in zip(mats, freqs):
            if w == 0.0:
                y += m.dot(x)
            else:
                y += np.exp(1j * w * t) * m.dot(x)
        return -1j * y

    psi = psi.copy()
    half = 0.5 * dt
    for step in range(nsteps):
        t = t0 + step * dt
        k1 = rhs(t, psi)
        k2 = rhs(t + half, psi + half * k1)
        k3 = rhs(t + half, psi + half * k2)
        k4 = rhs(t + dt, psi + dt * k3)
        psi += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return psi
