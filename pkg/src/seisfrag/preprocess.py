"""Pool filtering, per-component Box-Cox transform, and standardization.

Only signals whose peak linear displacement falls in [Y, 6Y] are kept: below
Y the oscillator stays elastic (the label is known), above 6Y the mechanical
model stops being credible. The transform constants are fitted once on the
kept pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import N_FEATURES, R4_INDICES

DELTA_BRACKET = (-3.0, 3.0)
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0

UPPER_MULTIPLE = 6.0


def filter_pool(lin_disps, yield_y: float, upper_multiple: float = UPPER_MULTIPLE) -> np.ndarray:
    """Indices of signals with yield_y <= L <= upper_multiple * yield_y."""
    l_arr = np.asarray(lin_disps, dtype=float)
    mask = (l_arr >= yield_y) & (l_arr <= upper_multiple * yield_y)
    return np.flatnonzero(mask)


def boxcox(x, delta: float):
    """Two-branch power transform, continuous in delta at 0. Requires x > 0."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValueError("Box-Cox input must be strictly positive")
    logs = np.log(x_arr)
    if delta == 0.0:
        out = logs
    else:
        out = np.expm1(delta * logs) / delta
    return float(out) if np.ndim(x) == 0 else out


def boxcox_loglik(column: np.ndarray, delta: float) -> float:
    """Profile normal log-likelihood of the transformed data, Jacobian included."""
    y = boxcox(column, delta)
    var = float(np.var(y))
    if var <= 0:
        return -np.inf
    n = column.size
    return -0.5 * n * np.log(var) + (delta - 1.0) * float(np.sum(np.log(column)))


def fit_boxcox_delta(column, bracket: tuple[float, float] = DELTA_BRACKET) -> float:
    """Exponent maximizing the profile log-likelihood, by golden-section search."""
    col = np.asarray(column, dtype=float)
    if col.size < 30:
        raise ValueError(f"need at least 30 values to fit the exponent, got {col.size}")
    if np.any(col <= 0):
        raise ValueError("Box-Cox input must be strictly positive")

    lo, hi = bracket
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    f_c = boxcox_loglik(col, c)
    f_d = boxcox_loglik(col, d)
    while hi - lo > 1e-6:
        if f_c > f_d:
            hi, d, f_d = d, c, f_c
            c = hi - _INVPHI * (hi - lo)
            f_c = boxcox_loglik(col, c)
        else:
            lo, c, f_c = c, d, f_d
            d = lo + _INVPHI * (hi - lo)
            f_d = boxcox_loglik(col, d)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PreprocessModel:
    """Frozen transform constants, fitted on the kept pool only."""

    keep_range: tuple[float, float]
    shifts: np.ndarray  # added before Box-Cox where a component can be <= 0
    deltas: np.ndarray
    means: np.ndarray
    stds: np.ndarray


def fit(raw: np.ndarray, keep_range: tuple[float, float]) -> PreprocessModel:
    """Fit shifts, Box-Cox exponents, and standardization constants per column."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != N_FEATURES:
        raise ValueError(f"expected a (n, {N_FEATURES}) feature matrix, got {raw.shape}")
    n_cols = raw.shape[1]
    shifts = np.zeros(n_cols)
    deltas = np.zeros(n_cols)
    means = np.zeros(n_cols)
    stds = np.zeros(n_cols)
    for j in range(n_cols):
        col = raw[:, j]
        col_min = float(np.min(col))
        if col_min <= 0:
            shifts[j] = 1.0 + abs(col_min)
            col = col + shifts[j]
        deltas[j] = fit_boxcox_delta(col)
        transformed = boxcox(col, deltas[j])
        means[j] = float(np.mean(transformed))
        stds[j] = float(np.std(transformed))
        if stds[j] <= 0:
            raise ValueError(f"feature column {j} is constant; cannot standardize")
    return PreprocessModel(
        keep_range=keep_range, shifts=shifts, deltas=deltas, means=means, stds=stds
    )


def save_model_csv(path, model: PreprocessModel) -> None:
    """One row per component: shift, Box-Cox exponent, mean, std."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# keep_range={model.keep_range[0]:.17g},{model.keep_range[1]:.17g}\n")
        fh.write("component,shift,delta,mean,std\n")
        for j in range(model.deltas.size):
            fh.write(
                f"{j},{model.shifts[j]:.17g},{model.deltas[j]:.17g},"
                f"{model.means[j]:.17g},{model.stds[j]:.17g}\n"
            )


def load_model_csv(path) -> PreprocessModel:
    shifts, deltas, means, stds = [], [], [], []
    keep_range = (0.0, 0.0)
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# keep_range="):
                lo, hi = line.strip().split("=")[1].split(",")
                keep_range = (float(lo), float(hi))
            elif line.startswith("#") or line.startswith("component,"):
                continue
            else:
                _, shift, delta, mean, std = line.strip().split(",")
                shifts.append(float(shift))
                deltas.append(float(delta))
                means.append(float(mean))
                stds.append(float(std))
    return PreprocessModel(
        keep_range=keep_range,
        shifts=np.asarray(shifts),
        deltas=np.asarray(deltas),
        means=np.asarray(means),
        stds=np.asarray(stds),
    )


def apply(model: PreprocessModel, raw: np.ndarray, view: str = "r13") -> np.ndarray:
    """Box-Cox plus standardization; view 'r4' selects (L, PGA, V, omega0)."""
    raw = np.asarray(raw, dtype=float)
    single = raw.ndim == 1
    mat = np.atleast_2d(raw)
    out = np.empty_like(mat)
    for j in range(mat.shape[1]):
        transformed = boxcox(mat[:, j] + model.shifts[j], float(model.deltas[j]))
        out[:, j] = (transformed - model.means[j]) / model.stds[j]
    if view == "r4":
        out = out[:, list(R4_INDICES)]
    elif view != "r13":
        raise ValueError(f"unknown view {view!r}")
    return out[0] if single else out
