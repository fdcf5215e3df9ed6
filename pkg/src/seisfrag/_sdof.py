"""Central-difference stepping for linear single-DOF systems.

The explicit scheme u'' -> (u[k+1] - 2u[k] + u[k-1])/dt^2 and
u' -> (u[k+1] - u[k-1])/(2 dt) turns the oscillator into a second-order IIR
recurrence, which scipy's lfilter evaluates in C.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter, lfiltic


def linear_sdof_displacement(
    forcing: np.ndarray,
    dt: float,
    omega: float,
    zeta: float,
    n_extra: int = 0,
) -> tuple[np.ndarray, float]:
    """Solve u'' + 2*zeta*omega*u' + omega^2*u = forcing from rest.

    Parameters
    ----------
    forcing : array sampled on the uniform grid with step dt
    n_extra : number of trailing zero-forcing steps appended, useful when the
        caller forms a central derivative at the final forcing sample.

    Returns
    -------
    u : displacement, length len(forcing) + n_extra
    u_m1 : the fictitious displacement at t = -dt implied by the startup
        (needed for a central derivative at t = 0)
    """
    f = np.asarray(forcing, dtype=float)
    if n_extra:
        f = np.concatenate([f, np.zeros(n_extra)])
    n = f.size

    c1 = 1.0 / dt**2 + zeta * omega / dt
    c2 = 2.0 / dt**2 - omega**2
    c3 = 1.0 / dt**2 - zeta * omega / dt

    # startup from zero displacement/velocity: u''(0) = f[0]
    u_m1 = 0.5 * dt**2 * f[0]
    u = np.empty(n)
    u[0] = 0.0
    if n == 1:
        return u, u_m1
    u[1] = (f[0] + c2 * 0.0 - c3 * u_m1) / c1
    if n == 2:
        return u, u_m1

    b = np.array([0.0, 1.0 / c1])
    a = np.array([1.0, -c2 / c1, c3 / c1])
    zi = lfiltic(b, a, y=[u[1], u[0]], x=[f[1], f[0]])
    u[2:], _ = lfilter(b, a, f[2:], zi=zi)
    return u, u_m1
