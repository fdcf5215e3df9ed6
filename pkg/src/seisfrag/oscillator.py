"""Elastoplastic single-DOF oscillator and its linear twin.

Both systems are integrated with the same explicit central-difference scheme;
the nonlinear restoring force is a bilinear law with kinematic hardening
(radial return on the 1-D force, one back-stress).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._sdof import linear_sdof_displacement
from .ground_motion import Signal

STEPS_PER_PERIOD = 40  # integration resolution relative to the natural period
BLOWUP_MULTIPLE = 1e6  # |z| beyond this many yield displacements means instability


class TimeStepError(RuntimeError):
    """The explicit integration diverged (time step too large for this system)."""


@dataclass(frozen=True)
class StructureConfig:
    """Oscillator definition: frequency, damping, yield point, hardening."""

    f_l: float  # natural frequency, Hz
    yield_y: float  # yield displacement, m
    beta: float = 0.02  # damping ratio
    hardening_ratio: float = 0.2  # post-yield / elastic stiffness
    threshold_multiple: float = 2.0  # failure threshold in units of yield_y

    def __post_init__(self):
        if self.f_l <= 0 or self.yield_y <= 0:
            raise ValueError(f"frequency and yield displacement must be positive: {self}")
        if not 0 < self.beta < 1:
            raise ValueError(f"damping ratio must lie in (0, 1): {self}")
        if not 0 <= self.hardening_ratio < 1:
            raise ValueError(f"hardening ratio must lie in [0, 1): {self}")
        if self.threshold_multiple <= 1:
            raise ValueError(f"threshold multiple must exceed 1: {self}")

    @property
    def omega_l(self) -> float:
        return 2.0 * math.pi * self.f_l

    @property
    def threshold(self) -> float:
        return self.threshold_multiple * self.yield_y


# presets with yield displacements giving roughly one third inelastic signals
PRESETS = {
    "2.5": StructureConfig(f_l=2.5, yield_y=9e-3),
    "5": StructureConfig(f_l=5.0, yield_y=5e-3),
    "10": StructureConfig(f_l=10.0, yield_y=1e-3),
}


@dataclass(frozen=True)
class ResponseSummary:
    max_nonlinear: float  # Z, m
    max_linear: float  # L, m
    label: int  # +1 if Z exceeds the threshold, else -1


def _integration_grid(signal: Signal, omega: float) -> tuple[float, np.ndarray]:
    """Forcing -signal resampled onto a grid fine enough for stable stepping."""
    period = 2.0 * math.pi / omega
    n_sub = max(1, math.ceil(signal.dt / (period / STEPS_PER_PERIOD) - 1e-9))
    dt = signal.dt / n_sub
    n = (signal.samples.size - 1) * n_sub + 1
    if n_sub == 1:
        forcing = -signal.samples
    else:
        t_fine = np.arange(n) * dt
        forcing = -np.interp(t_fine, signal.times, signal.samples)
    return dt, forcing


def solve_linear(signal: Signal, cfg: StructureConfig) -> Signal:
    """Relative displacement of the linear twin, from rest."""
    omega = cfg.omega_l
    dt, forcing = _integration_grid(signal, omega)
    u, _ = linear_sdof_displacement(forcing, dt, omega, cfg.beta)
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_MULTIPLE * cfg.yield_y:
        raise TimeStepError(f"linear response diverged for dt={dt}")
    return Signal(dt=dt, samples=u)


def bilinear_force(z: float, eps_p: float, cfg: StructureConfig) -> tuple[float, float]:
    """Restoring force and updated plastic displacement for displacement z.

    Radial return on the 1-D bilinear law: elastic stiffness omega_l^2 (unit
    mass), yield force omega_l^2 * yield_y, back-stress H * eps_p with the
    hardening modulus H chosen so the post-yield tangent is
    hardening_ratio * elastic.
    """
    e = cfg.omega_l**2
    sig_y = e * cfg.yield_y
    a = cfg.hardening_ratio
    h = a * e / (1.0 - a)
    sig_trial = e * (z - eps_p)
    xi = sig_trial - h * eps_p
    if abs(xi) <= sig_y:
        return sig_trial, eps_p
    dgamma = (abs(xi) - sig_y) / (e + h)
    sign = 1.0 if xi > 0 else -1.0
    eps_p = eps_p + dgamma * sign
    return e * (z - eps_p), eps_p


def solve_nonlinear(signal: Signal, cfg: StructureConfig) -> Signal:
    """Relative displacement of the elastoplastic system, from rest."""
    omega = cfg.omega_l
    dt, forcing = _integration_grid(signal, omega)
    n = forcing.size

    e = omega**2
    sig_y = e * cfg.yield_y
    a = cfg.hardening_ratio
    h_mod = a * e / (1.0 - a)
    denom = e + h_mod

    c1 = 1.0 / dt**2 + cfg.beta * omega / dt
    c3 = 1.0 / dt**2 - cfg.beta * omega / dt
    two_over = 2.0 / dt**2
    inv_c1 = 1.0 / c1
    blowup = BLOWUP_MULTIPLE * cfg.yield_y

    out = np.empty(n)
    f0 = forcing[0]
    z_prev = 0.5 * dt**2 * f0  # startup: z(-dt) from zero initial conditions
    z = 0.0
    eps_p = 0.0
    for k in range(n - 1):
        out[k] = z
        sig_trial = e * (z - eps_p)
        xi = sig_trial - h_mod * eps_p
        if xi > sig_y:
            eps_p += (xi - sig_y) / denom
            restoring = e * (z - eps_p)
        elif xi < -sig_y:
            eps_p -= (-xi - sig_y) / denom
            restoring = e * (z - eps_p)
        else:
            restoring = sig_trial
        z_next = (forcing[k] - restoring + two_over * z - c3 * z_prev) * inv_c1
        if abs(z_next) > blowup:
            raise TimeStepError(f"nonlinear response diverged at step {k} (dt={dt})")
        z_prev = z
        z = z_next
    out[n - 1] = z
    if not math.isfinite(z):
        raise TimeStepError(f"nonlinear response diverged (dt={dt})")
    return Signal(dt=dt, samples=out)


def summarize(signal: Signal, cfg: StructureConfig) -> ResponseSummary:
    """Peak linear and nonlinear responses plus the exceedance label.

    When the linear peak stays at or below the yield displacement the
    elastoplastic system never leaves the elastic branch, so Z equals L
    exactly and the nonlinear run is skipped.
    """
    lin = solve_linear(signal, cfg)
    l_max = float(np.max(np.abs(lin.samples)))
    if l_max <= cfg.yield_y:
        z_max = l_max
    else:
        nl = solve_nonlinear(signal, cfg)
        z_max = float(np.max(np.abs(nl.samples)))
    label = 1 if z_max > cfg.threshold else -1
    return ResponseSummary(max_nonlinear=z_max, max_linear=l_max, label=label)


def response_spectrum(signal: Signal, frequencies, beta: float = 0.02) -> np.ndarray:
    """Peak linear displacement per natural frequency (spectral displacement)."""
    out = np.empty(len(frequencies))
    for i, f_l in enumerate(frequencies):
        omega = 2.0 * math.pi * float(f_l)
        dt, forcing = _integration_grid(signal, omega)
        u, _ = linear_sdof_displacement(forcing, dt, omega, beta)
        out[i] = np.max(np.abs(u))
    return out
