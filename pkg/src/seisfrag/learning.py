"""SVM training, pool-based active learning, and ranking metrics.

The SVM dual is solved by sequential minimal optimization with
maximal-violating-pair selection. The active learner queries the unlabeled
instance with the smallest absolute score, the standard uncertainty
criterion, starting from one quantile-selected point on each side of the
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_COST = 10.0
KKT_TOL = 1e-3


class OracleError(RuntimeError):
    """Label oracle failure; carries the partial state so a run can resume."""

    def __init__(self, message: str, state: "ActiveState | None" = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class Kernel:
    kind: str  # "linear" or "rbf"
    gamma: float | None = None  # rbf width

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ValueError("rbf kernel needs gamma > 0")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        if self.kind == "linear":
            return a @ b.T
        sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))


def _smo(
    k_matrix: np.ndarray,
    labels: np.ndarray,
    cost: float,
    tol: float,
    alpha: np.ndarray | None = None,
    grad: np.ndarray | None = None,
) -> tuple[np.ndarray, float, bool, np.ndarray]:
    """Maximal-violating-pair SMO on the soft-margin dual.

    Returns (alpha, bias, converged, grad). The bias is the midpoint of the
    final KKT bounds, so free support vectors sit on the margin within tol/2.
    A feasible (alpha, grad) pair warm-starts the solve; the active-learning
    loop uses this to retrain after each single-point insertion.
    """
    n = labels.size
    if alpha is None:
        alpha = np.zeros(n)
        grad = -np.ones(n)  # gradient of 1/2 a^T Q a - e^T a at a = 0
    else:
        alpha = alpha.copy()
        grad = grad.copy()
    y = labels.astype(float)
    max_updates = max(200 * n, 20000)

    for _ in range(max_updates):
        crit = -y * grad
        up = ((y > 0) & (alpha < cost - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y < 0) & (alpha < cost - 1e-12)) | ((y > 0) & (alpha > 1e-12))
        i = int(np.argmax(np.where(up, crit, -np.inf)))
        j = int(np.argmin(np.where(low, crit, np.inf)))
        m_up = crit[i]
        m_low = crit[j]
        if m_up - m_low < tol:
            return alpha, float((m_up + m_low) / 2.0), True, grad

        quad = k_matrix[i, i] + k_matrix[j, j] - 2.0 * k_matrix[i, j]
        t = (m_up - m_low) / max(quad, 1e-12)
        # box constraints along the feasible direction (+y_i e_i, -y_j e_j)
        if y[i] > 0:
            t = min(t, cost - alpha[i])
        else:
            t = min(t, alpha[i])
        if y[j] > 0:
            t = min(t, alpha[j])
        else:
            t = min(t, cost - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += t * y * (k_matrix[:, i] - k_matrix[:, j])

    crit = -y * grad
    up = ((y > 0) & (alpha < cost - 1e-12)) | ((y < 0) & (alpha > 1e-12))
    low = ((y < 0) & (alpha < cost - 1e-12)) | ((y > 0) & (alpha > 1e-12))
    m_up = float(np.max(np.where(up, crit, -np.inf)))
    m_low = float(np.min(np.where(low, crit, np.inf)))
    return alpha, (m_up + m_low) / 2.0, False, grad


@dataclass(frozen=True)
class SvmModel:
    """Kernel expansion f(x) = sum coef_k K(x_k, x) + bias, coef signed by label."""

    support_x: np.ndarray  # training inputs, one row per labeled point
    coefficients: np.ndarray  # alpha_k * l_k
    bias: float
    kernel: Kernel
    labeled_refs: np.ndarray  # pool indices of the labeled points
    labels: np.ndarray  # training labels, +-1
    weights: np.ndarray | None = None  # linear kernel only
    converged: bool = True

    def score(self, x: np.ndarray) -> np.ndarray | float:
        single = np.ndim(x) == 1
        x2 = np.atleast_2d(np.asarray(x, dtype=float))
        if self.weights is not None:
            out = x2 @ self.weights + self.bias
        else:
            out = self.kernel.matrix(x2, self.support_x) @ self.coefficients + self.bias
        return float(out[0]) if single else out


def train_svm(
    features: np.ndarray,
    labels,
    kernel: Kernel,
    cost: float = DEFAULT_COST,
    tol: float = KKT_TOL,
    refs: np.ndarray | None = None,
) -> SvmModel:
    """Soft-margin SVM on the labeled points; both classes must be present."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=int)
    if x.shape[0] != y.size or y.size < 2:
        raise ValueError("need at least two labeled points with matching features")
    if len(np.unique(y)) < 2:
        raise ValueError("training set contains a single class")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")

    k_matrix = kernel.matrix(x, x)
    alpha, bias, converged, _ = _smo(k_matrix, y, cost, tol)
    coefficients = alpha * y
    weights = x.T @ coefficients if kernel.kind == "linear" else None
    if refs is None:
        refs = np.arange(y.size)
    return SvmModel(
        support_x=x,
        coefficients=coefficients,
        bias=bias,
        kernel=kernel,
        labeled_refs=np.asarray(refs),
        labels=y,
        weights=weights,
        converged=converged,
    )


def score(model: SvmModel, x) -> np.ndarray | float:
    return model.score(x)


def dual_objective(model: SvmModel, alpha: np.ndarray | None = None) -> float:
    """Value of the dual objective at the model's (or any feasible) alpha."""
    a = np.abs(model.coefficients) if alpha is None else np.asarray(alpha, dtype=float)
    signed = a * model.labels
    k = model.kernel.matrix(model.support_x, model.support_x)
    return float(np.sum(a) - 0.5 * signed @ k @ signed)


# ---------------------------------------------------------------------------
# ranking metrics
# ---------------------------------------------------------------------------


def prbp(scores, labels) -> float:
    """Precision/recall breakeven: positive fraction among the top-N+ scores.

    Ties in the score resolve by the stable original order.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise ValueError("PRBP needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    top = order[:n_pos]
    return float(np.sum(y[top] == 1) / n_pos)


def roc_curve(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) over the sweep of decision thresholds, tie groups merged."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    sorted_scores = s[order]
    tp = np.cumsum(y[order] == 1)
    fp = np.cumsum(y[order] == -1)
    distinct = np.flatnonzero(np.diff(sorted_scores) != 0)
    idx = np.concatenate([distinct, [y.size - 1]])
    fpr = np.concatenate([[0.0], fp[idx] / n_neg])
    tpr = np.concatenate([[0.0], tp[idx] / n_pos])
    return fpr, tpr


def auc(scores, labels) -> float:
    fpr, tpr = roc_curve(scores, labels)
    return float(np.trapezoid(tpr, fpr))


def simple_classifier_prbp(column, labels) -> float:
    """PRBP of the ordering induced by one raw feature column."""
    return prbp(column, labels)


# ---------------------------------------------------------------------------
# pool and active learning
# ---------------------------------------------------------------------------


class Pool:
    """Unlabeled feature pool with a cached, pay-per-call label oracle."""

    def __init__(
        self,
        features: np.ndarray,
        raw_pga: np.ndarray,
        raw_lin_disp: np.ndarray,
        label_oracle: Callable[[int], int],
    ):
        self.features = np.atleast_2d(np.asarray(features, dtype=float))
        self.raw_pga = np.asarray(raw_pga, dtype=float)
        self.raw_lin_disp = np.asarray(raw_lin_disp, dtype=float)
        if not (len(self.features) == self.raw_pga.size == self.raw_lin_disp.size):
            raise ValueError("feature matrix and raw columns must align")
        self._oracle = label_oracle
        self.label_cache: dict[int, int] = {}
        self.oracle_calls = 0

    def __len__(self) -> int:
        return len(self.features)

    def label(self, index: int) -> int:
        index = int(index)
        if index not in self.label_cache:
            self.oracle_calls += 1
            self.label_cache[index] = int(self._oracle(index))
        return self.label_cache[index]


@dataclass
class HistoryEntry:
    n_labeled: int
    queried: int  # pool index queried to reach n_labeled
    label: int
    prbp: float | None = None


@dataclass
class ActiveState:
    labeled_indices: list
    labels: list
    model: SvmModel
    history: list = field(default_factory=list)
    weight_trace: list = field(default_factory=list)  # W per iteration, linear kernel
    bias_trace: list = field(default_factory=list)  # bias per iteration, linear kernel


class _IncrementalSvm:
    """Grows a labeled set one point at a time, warm-starting each SMO solve.

    The kernel matrix lives in a preallocated buffer; appending a point adds
    one row/column and a zero dual weight, which leaves the previous solution
    feasible, so the resolve typically needs only a handful of updates.
    """

    def __init__(self, features, kernel: Kernel, cost: float, indices, labels, capacity: int):
        self.features = features
        self.kernel = kernel
        self.cost = cost
        self.indices = list(indices)
        self.labels = list(labels)
        n = len(self.indices)
        self.k_buf = np.empty((capacity, capacity))
        block = kernel.matrix(features[self.indices], features[self.indices])
        self.k_buf[:n, :n] = block
        self.alpha, self.bias, _, self.grad = _smo(
            self.k_buf[:n, :n], np.asarray(self.labels), cost, KKT_TOL
        )

    def add(self, index: int, label: int) -> None:
        n = len(self.indices)
        row = self.kernel.matrix(self.features[[index]], self.features[self.indices])[0]
        self.k_buf[n, :n] = row
        self.k_buf[:n, n] = row
        self.k_buf[n, n] = float(
            self.kernel.matrix(self.features[[index]], self.features[[index]])[0, 0]
        )
        signed = self.alpha * np.asarray(self.labels, dtype=float)
        grad_new = label * float(row @ signed) - 1.0
        self.indices.append(int(index))
        self.labels.append(int(label))
        self.alpha = np.append(self.alpha, 0.0)
        self.grad = np.append(self.grad, grad_new)
        n += 1
        self.alpha, self.bias, _, self.grad = _smo(
            self.k_buf[:n, :n], np.asarray(self.labels), self.cost, KKT_TOL,
            self.alpha, self.grad,
        )

    def model(self) -> SvmModel:
        y = np.asarray(self.labels)
        x = self.features[self.indices]
        coefficients = self.alpha * y
        weights = x.T @ coefficients if self.kernel.kind == "linear" else None
        return SvmModel(
            support_x=x,
            coefficients=coefficients,
            bias=self.bias,
            kernel=self.kernel,
            labeled_refs=np.asarray(self.indices),
            labels=y,
            weights=weights,
        )


def select_start_points(pool: Pool, rng: np.random.Generator) -> tuple[int, int]:
    """One almost-surely-negative and one almost-surely-positive start.

    The negative start comes from below both medians of (PGA, L), the
    positive one from above both 9th deciles; a draw whose oracle label
    disagrees is discarded and redrawn.
    """
    pga, lin = pool.raw_pga, pool.raw_lin_disp
    low_set = np.flatnonzero((pga < np.quantile(pga, 0.5)) & (lin < np.quantile(lin, 0.5)))
    high_set = np.flatnonzero((pga > np.quantile(pga, 0.9)) & (lin > np.quantile(lin, 0.9)))

    def draw(candidates: np.ndarray, wanted: int) -> int:
        remaining = list(candidates)
        while remaining:
            pick = remaining.pop(int(rng.integers(len(remaining))))
            if pool.label(pick) == wanted:
                return int(pick)
        raise RuntimeError(f"no candidate with label {wanted} among {candidates.size} draws")

    j1 = draw(low_set, -1)
    j2 = draw(high_set, +1)
    return j1, j2


def active_learn(
    pool: Pool,
    kernel: Kernel,
    budget: int,
    rng: np.random.Generator,
    cost: float = DEFAULT_COST,
    eval_at: tuple = (),
    eval_labels: np.ndarray | None = None,
    resume: ActiveState | None = None,
) -> ActiveState:
    """Uncertainty-sampling loop: train, score the rest, query argmin |score|.

    eval_at lists labeled-set sizes at which PRBP over the whole pool is
    recorded (needs eval_labels, the ground-truth label array). Ties in the
    query pick the smallest pool index. Deterministic given the rng state.

    Intermediate models come from warm-started solves of the growing dual;
    the final model is retrained from scratch so it is exactly what a refit
    of the stored labeled set produces.
    """
    if budget < 2:
        raise ValueError("budget must allow at least the two start points")
    eval_at = set(eval_at)

    def evaluate(model: SvmModel) -> float | None:
        if eval_labels is None:
            return None
        return prbp(model.score(pool.features), eval_labels)

    if resume is None:
        j1, j2 = select_start_points(pool, rng)
        labeled = [j1, j2]
        labels = [pool.label(j1), pool.label(j2)]
        state = ActiveState(labeled_indices=labeled, labels=labels, model=None)
        trainer = _IncrementalSvm(pool.features, kernel, cost, labeled, labels, budget)
        state.model = trainer.model()
        if kernel.kind == "linear":
            state.weight_trace.append(state.model.weights.copy())
            state.bias_trace.append(state.model.bias)
        state.history.append(
            HistoryEntry(2, j2, labels[1], evaluate(state.model) if 2 in eval_at else None)
        )
    else:
        state = resume
        trainer = _IncrementalSvm(
            pool.features, kernel, cost, state.labeled_indices, state.labels, budget
        )
        state.model = trainer.model()

    model = state.model
    unlabeled = np.setdiff1d(np.arange(len(pool)), np.array(state.labeled_indices))
    while len(state.labeled_indices) < budget:
        scores = model.score(pool.features[unlabeled])
        pick = unlabeled[int(np.argmin(np.abs(scores)))]
        try:
            label = pool.label(pick)
        except OracleError:
            raise
        except Exception as exc:  # preserve progress for resume
            raise OracleError(f"label oracle failed at pool index {pick}: {exc}", state) from exc
        state.labeled_indices.append(int(pick))
        state.labels.append(label)
        unlabeled = unlabeled[unlabeled != pick]
        trainer.add(int(pick), label)
        n = len(state.labeled_indices)
        if n == budget:
            # cold retrain: the stored model equals a refit of its labeled set
            model = train_svm(
                pool.features[state.labeled_indices],
                state.labels,
                kernel,
                cost,
                refs=np.array(state.labeled_indices),
            )
        else:
            model = trainer.model()
        state.model = model
        if kernel.kind == "linear":
            state.weight_trace.append(model.weights.copy())
            state.bias_trace.append(model.bias)
        state.history.append(
            HistoryEntry(n, int(pick), label, evaluate(model) if n in eval_at else None)
        )
    return state


def weight_trace(state: ActiveState) -> np.ndarray:
    """Per-iteration linear weights, one row per trained model."""
    if not state.weight_trace:
        raise ValueError("weight trace requires a linear-kernel run")
    return np.vstack(state.weight_trace)
