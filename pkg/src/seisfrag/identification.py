"""Identify envelope and filter parameters from a target accelerogram.

The envelope comes from matching cumulative energy, the filter frequencies
from matching the expected cumulative count of zero-level up-crossings, and
the filter damping from matching simulated counts of positive minima and
negative maxima over a candidate grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize

from .ground_motion import (
    PARAM_NAMES,
    FilterParams,
    GroundMotionParams,
    ModulationParams,
    Signal,
    modulating_q,
    unit_variance_process,
)
from .rng import stream

ENERGY_ONSET_FRACTION = 1e-12

# fixed multi-start jitter patterns (multiplicative, applied to the heuristic start)
_MOD_START_PATTERNS = (
    (1.0, 1.0, 1.0, 1.0, 1.0),
    (1.4, 0.5, 1.0, 0.6, 1.4),
    (0.7, 2.0, 0.7, 1.5, 0.8),
    (1.2, 1.0, 1.4, 0.9, 1.1),
    (0.9, 1.5, 0.8, 1.3, 0.7),
)
_FREQ_START_PATTERNS = ((1.0, 1.0), (1.5, 0.7), (0.7, 1.5), (2.0, 1.0), (1.0, 2.0))


def count_upcrossings(samples: np.ndarray) -> np.ndarray:
    """Cumulative count of zero-level up-crossings (sample k <= 0 < sample k+1)."""
    s = np.asarray(samples, dtype=float)
    crossings = (s[:-1] <= 0) & (s[1:] > 0)
    return np.concatenate([[0], np.cumsum(crossings)])


def count_irregular_extrema(samples: np.ndarray) -> np.ndarray:
    """Cumulative count of positive minima plus negative maxima.

    Three-point local extremum tests; the count is a bandwidth indicator (a
    narrow-band process has almost none).
    """
    s = np.asarray(samples, dtype=float)
    out = np.zeros(s.size)
    if s.size < 3:
        return out
    left, mid, right = s[:-2], s[1:-1], s[2:]
    neg_max = (mid > left) & (mid > right) & (mid < 0)
    pos_min = (mid < left) & (mid < right) & (mid > 0)
    out[1:-1] = neg_max | pos_min
    return np.cumsum(out)


@dataclass(frozen=True)
class TargetRecord:
    """A target accelerogram with the three matched series."""

    signal: Signal
    cumulative_energy: np.ndarray
    upcrossing_count: np.ndarray
    extrema_count: np.ndarray

    @classmethod
    def from_signal(cls, sig: Signal) -> "TargetRecord":
        energy = cumulative_trapezoid(sig.samples**2, dx=sig.dt, initial=0.0)
        return cls(
            signal=sig,
            cumulative_energy=energy,
            upcrossing_count=count_upcrossings(sig.samples),
            extrema_count=count_irregular_extrema(sig.samples),
        )

    @property
    def times(self) -> np.ndarray:
        return self.signal.times

    @property
    def duration(self) -> float:
        return self.signal.duration


@dataclass(frozen=True)
class IdentificationConfig:
    damping_grid: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    sim_replicates: int = 20
    # discretization adjustment r in [0.75, 1]; 0.98 matches the measured
    # up-crossing deficit of records sampled at 100 Hz in our frequency band
    adjustment_factor: float = 0.98
    seed: int = 0
    eval_nodes: int = 48  # coarse time grid for count matching
    quad_dt: float = 0.05  # pulse spacing in the rate quadrature
    n_starts: int = 5
    max_iter: int = 400

    def __post_init__(self):
        if not self.damping_grid:
            raise ValueError("damping grid must be non-empty")
        if any(not 0 < z < 1 for z in self.damping_grid):
            raise ValueError("damping candidates must lie in (0, 1)")
        if self.sim_replicates < 1:
            raise ValueError("need at least one simulation replicate")
        if not 0 < self.adjustment_factor <= 1:
            raise ValueError("adjustment factor must lie in (0, 1]")


@dataclass(frozen=True)
class ModulationFit:
    params: ModulationParams
    objective: float
    converged: bool


@dataclass(frozen=True)
class FrequencyFit:
    omega0: float
    omega_n: float
    objective: float
    converged: bool


@dataclass(frozen=True)
class DampingFit:
    zeta_f: float
    frequency_fit: FrequencyFit
    mismatches: tuple  # per damping-grid candidate


@dataclass(frozen=True)
class IdentificationResult:
    params: GroundMotionParams  # t0 retained in the modulation block
    converged: bool


# ---------------------------------------------------------------------------
# modulation (envelope) identification
# ---------------------------------------------------------------------------


def _quantile_time(t: np.ndarray, series: np.ndarray, fraction: float) -> float:
    """First time the normalized monotone series exceeds the fraction."""
    idx = int(np.searchsorted(series, fraction * series[-1]))
    return float(t[min(idx, t.size - 1)])


def fit_modulation(record: TargetRecord, config: IdentificationConfig | None = None) -> ModulationFit:
    """Envelope parameters minimizing the integrated squared energy mismatch.

    The onset delay t0 is read off the first energy arrival; the remaining
    five parameters are optimized unconstrained after a log/ordering
    reparameterization, from several deterministic starts.
    """
    config = config or IdentificationConfig()
    t = record.times
    e_a = record.cumulative_energy
    if e_a.size < 10:
        raise ValueError("record energy series too short to fit an envelope")
    total = float(e_a[-1])
    if total <= 0:
        raise ValueError("record has zero energy")

    onset = int(np.argmax(e_a > ENERGY_ONSET_FRACTION * total))
    t0 = float(t[max(onset - 1, 0)])

    def unpack(u):
        a1, a2, a3 = math.exp(u[0]), math.exp(u[1]), math.exp(u[2])
        t1 = t0 + math.exp(u[3])
        t2 = t1 + math.exp(u[4])
        return ModulationParams(alpha1=a1, alpha2=a2, alpha3=a3, t1=t1, t2=t2, t0=t0)

    def objective(u):
        if np.any(np.abs(u) > 50):
            return 1e30
        m = unpack(u)
        q2 = modulating_q(t, m) ** 2
        e_s = cumulative_trapezoid(q2, t, initial=0.0)
        return float(np.trapezoid((e_s - e_a) ** 2, t))

    t15 = _quantile_time(t, e_a, 0.15)
    t85 = _quantile_time(t, e_a, 0.85)
    rise = max(t15 - t0, 0.3)
    plateau = max(t85 - t15, 0.5)
    a1_guess = math.sqrt(0.7 * total / plateau)
    base = np.array([a1_guess, 0.5, 1.0, rise, plateau])

    best = None
    converged = False
    for pattern in _MOD_START_PATTERNS[: config.n_starts]:
        u0 = np.log(base * np.asarray(pattern))
        res = minimize(
            objective,
            u0,
            method="Nelder-Mead",
            options={"maxiter": config.max_iter * 5, "xatol": 1e-6, "fatol": 1e-12},
        )
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)
    return ModulationFit(params=unpack(best.x), objective=float(best.fun), converged=converged)


# ---------------------------------------------------------------------------
# filter frequency identification via up-crossing counts
# ---------------------------------------------------------------------------


def _rate_at_times(
    ts: np.ndarray, filt: FilterParams, quad_dt: float, ramp_duration: float
) -> np.ndarray:
    """Mean zero-level up-crossing rate of the normalized process at times ts.

    Rate = sigma_dy / (2 pi) where sigma_dy is the standard deviation of the
    time derivative of the normalized process; all integrals discretized on
    the pulse grid. The requested spacing is tightened so the fastest
    oscillation of the impulse response keeps at least 16 nodes per period.
    """
    ts = np.asarray(ts, dtype=float)
    zf = filt.zeta_f
    omega_max = max(filt.omega0, filt.omega_n)
    omega_min = min(filt.omega0, filt.omega_n)
    # midpoint rule; h_dot^2 oscillates at twice the filter frequency, so keep
    # at least 32 nodes per period of the fastest component
    quad_dt = min(quad_dt, 2.0 * math.pi / (32.0 * omega_max))
    # pulses older than the e^-8 envelope cutoff contribute nothing
    memory = min(8.0 / (zf * omega_min), float(np.max(ts)))
    lags = (np.arange(int(math.ceil(memory / quad_dt))) + 0.5) * quad_dt

    taus = ts[:, None] - lags[None, :]
    active = taus >= 0
    taus = np.where(active, taus, 0.0)
    omegas = filt.omega_at(taus, ramp_duration)
    root = math.sqrt(1.0 - zf**2)
    wd = omegas * root
    amp = omegas / root

    decay = np.exp(-zf * omegas * lags[None, :])
    phase = wd * lags[None, :]
    sin_p = np.sin(phase)
    h = np.where(active, amp * decay * sin_p, 0.0)
    h_dot = np.where(active, amp * decay * (wd * np.cos(phase) - zf * omegas * sin_p), 0.0)

    sig2 = np.sum(h**2, axis=1) * quad_dt
    cross = np.sum(h * h_dot, axis=1) * quad_dt
    inner = h_dot - h * (cross / sig2)[:, None]
    sdot2 = np.sum(np.where(active, inner, 0.0) ** 2, axis=1) * quad_dt / sig2
    return np.sqrt(sdot2) / (2.0 * math.pi)


def mean_upcrossing_rate(
    t: float, filt: FilterParams, dt: float, ramp_duration: float | None = None
) -> float:
    """Up-crossing rate at a single time; defaults to a constant-ramp horizon t."""
    if t < dt:
        raise ValueError(f"rate undefined before the first pulse (t={t}, dt={dt})")
    horizon = ramp_duration if ramp_duration is not None else t
    return float(_rate_at_times(np.array([t]), filt, dt, horizon)[0])


def expected_upcrossing_count(
    ts: np.ndarray, filt: FilterParams, config: IdentificationConfig, ramp_duration: float
) -> np.ndarray:
    """N(t) = integral of rate * adjustment over [0, t], on the grid ts."""
    nu = _rate_at_times(ts, filt, config.quad_dt, ramp_duration)
    counts = cumulative_trapezoid(nu, ts, initial=0.0) + nu[0] * ts[0]
    return config.adjustment_factor * counts


def fit_filter_frequencies(
    record: TargetRecord, zeta_f: float, config: IdentificationConfig | None = None
) -> FrequencyFit:
    """Frequencies minimizing the squared mismatch of cumulative crossing counts."""
    config = config or IdentificationConfig()
    if record.upcrossing_count[-1] < 5:
        raise ValueError("record has fewer than 5 up-crossings")
    duration = record.duration
    ts = np.linspace(duration / config.eval_nodes, duration, config.eval_nodes)
    n_a = np.interp(ts, record.times, record.upcrossing_count)

    def objective(v):
        # keep the search inside a physically sensible band; the quadrature
        # cost grows with frequency, so reject runaway candidates up front
        if np.any(v < math.log(0.2)) or np.any(v > math.log(500.0)):
            return 1e30
        filt = FilterParams(omega0=math.exp(v[0]), omega_n=math.exp(v[1]), zeta_f=zeta_f)
        n_x = expected_upcrossing_count(ts, filt, config, duration)
        return float(np.trapezoid((n_x - n_a) ** 2, ts))

    # crossing slopes at both ends give frequency guesses (rate ~ omega / 2 pi)
    third = duration / 3.0
    early = np.interp(third, record.times, record.upcrossing_count) / third
    late = (record.upcrossing_count[-1] - np.interp(2 * third, record.times, record.upcrossing_count)) / third
    w0_guess = max(2.0 * math.pi * early / config.adjustment_factor, 0.5)
    wn_guess = max(2.0 * math.pi * late / config.adjustment_factor, 0.5)

    best = None
    converged = False
    for pattern in _FREQ_START_PATTERNS[: config.n_starts]:
        v0 = np.log([w0_guess * pattern[0], wn_guess * pattern[1]])
        res = minimize(
            objective,
            v0,
            method="Nelder-Mead",
            options={"maxiter": config.max_iter, "xatol": 1e-3, "fatol": 1e-8},
        )
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)
    return FrequencyFit(
        omega0=float(math.exp(best.x[0])),
        omega_n=float(math.exp(best.x[1])),
        objective=float(best.fun),
        converged=converged,
    )


# ---------------------------------------------------------------------------
# damping identification via simulated irregular-extrema counts
# ---------------------------------------------------------------------------


def fit_damping(record: TargetRecord, config: IdentificationConfig | None = None) -> DampingFit:
    """Grid search on the damping ratio with a simulation oracle per candidate.

    For each candidate the frequencies are refitted, replicate realizations of
    the normalized process are simulated, and the averaged cumulative count of
    positive minima and negative maxima is compared with the record's. Ties
    resolve toward smaller damping (the grid is scanned in ascending order).
    """
    config = config or IdentificationConfig()
    grid = tuple(sorted(config.damping_grid))
    t = record.times
    duration = record.duration
    dt = record.signal.dt

    best_idx = -1
    best_mismatch = math.inf
    best_freqs: FrequencyFit | None = None
    mismatches = []
    for gi, zeta in enumerate(grid):
        freq_fit = fit_filter_frequencies(record, zeta, config)
        filt = FilterParams(omega0=freq_fit.omega0, omega_n=freq_fit.omega_n, zeta_f=zeta)
        acc = np.zeros(t.size)
        for rep in range(config.sim_replicates):
            sim = unit_variance_process(
                filt, duration, dt, stream(config.seed, "damping", gi, rep)
            )
            acc += count_irregular_extrema(sim.samples)
        mean_counts = acc / config.sim_replicates
        mismatch = float(np.trapezoid((mean_counts - record.extrema_count) ** 2, t))
        mismatches.append(mismatch)
        if mismatch < best_mismatch:
            best_mismatch = mismatch
            best_idx = gi
            best_freqs = freq_fit
    return DampingFit(zeta_f=grid[best_idx], frequency_fit=best_freqs, mismatches=tuple(mismatches))


def identify(record: TargetRecord, config: IdentificationConfig | None = None) -> IdentificationResult:
    """Full identification: envelope, then damping with nested frequency fits."""
    config = config or IdentificationConfig()
    mod_fit = fit_modulation(record, config)
    damp_fit = fit_damping(record, config)
    params = GroundMotionParams(
        modulation=mod_fit.params,
        filter=FilterParams(
            omega0=damp_fit.frequency_fit.omega0,
            omega_n=damp_fit.frequency_fit.omega_n,
            zeta_f=damp_fit.zeta_f,
        ),
    )
    return IdentificationResult(
        params=params, converged=mod_fit.converged and damp_fit.frequency_fit.converged
    )


# ---------------------------------------------------------------------------
# parameter CSV: one row per record, named columns
# ---------------------------------------------------------------------------

_CSV_COLUMNS = PARAM_NAMES + ("t0",)


def write_params_csv(path, params_list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for p in params_list:
            row = list(p.as_vector()) + [p.modulation.t0]
            writer.writerow([f"{v:.17g}" for v in row])


def read_params_csv(path) -> list[GroundMotionParams]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != _CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        for row in reader:
            values = [float(v) for v in row]
            params = GroundMotionParams.from_vector(values[:8])
            m = params.modulation
            out.append(
                GroundMotionParams(
                    modulation=ModulationParams(
                        alpha1=m.alpha1, alpha2=m.alpha2, alpha3=m.alpha3,
                        t1=m.t1, t2=m.t2, t0=values[8],
                    ),
                    filter=params.filter,
                )
            )
    return out
