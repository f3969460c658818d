"""Soft-margin SVM over a precomputed kernel, trained by SMO.

The solver minimizes ``0.5 a'Qa - e'a`` subject to ``0 <= a <= C`` and
``y'a = 0`` where ``Q = (y y') * K``. Working pairs are chosen with the
second-order rule (maximal violating ``i``, then the ``j`` giving the largest
guaranteed objective decrease), and training stops once the maximal KKT
violation ``m(a) - M(a)`` drops below ``kkt_tol``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .core import KernelMatrix, SymmetricMatrix
from .exceptions import (
    KernelNotPsd,
    ShapeMismatch,
    SingleClassTrainingSet,
    ValidationError,
)
from .linalg import min_eigenvalue

logger = logging.getLogger(__name__)

TAU = 1e-12
PSD_PRECHECK = -1e-6


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    kkt_tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        if not self.C > 0:
            raise ValidationError("C must be positive")
        if not self.kkt_tol > 0:
            raise ValidationError("kkt_tol must be positive")
        if self.max_passes < 1:
            raise ValidationError("max_passes must be at least 1")


@dataclass(eq=False)
class SvmModel:
    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    C: float
    n_iter: int = 0
    converged: bool = True
    objective_trace: Optional[list] = field(default=None, repr=False)

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > 0)

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.labels

    @property
    def n(self) -> int:
        return self.alphas.shape[0]


def _kernel_values(k) -> np.ndarray:
    if isinstance(k, (KernelMatrix, SymmetricMatrix)):
        return np.asarray(k.values, dtype=np.float64)
    return np.asarray(k, dtype=np.float64)


def _check_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1 or not np.all(np.isin(y, (-1, 1))):
        raise ValidationError("labels must be a 1-d sequence of -1/+1")
    if np.unique(y).size < 2:
        raise SingleClassTrainingSet("training labels contain a single class")
    return y.astype(np.float64)


def dual_objective(alphas, labels, k) -> float:
    """``e'a - 0.5 a'Qa``, the quantity SMO increases."""
    ay = np.asarray(alphas) * np.asarray(labels)
    return float(np.sum(alphas) - 0.5 * ay @ _kernel_values(k) @ ay)


def _select_pair(alphas, y, grad, qd, q_row, C, kkt_tol):
    """Second-order working set selection. Returns ``(i, j)`` or ``None``."""
    up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
    low = ((y > 0) & (alphas > 0)) | ((y < 0) & (alphas < C))
    score = -y * grad
    if not up.any() or not low.any():
        return None
    up_idx = np.flatnonzero(up)
    i = int(up_idx[np.argmax(score[up_idx])])
    gmax = score[i]
    gmin = score[low].min()
    if gmax - gmin < kkt_tol:
        return None
    qi = q_row(i)
    cand = low & (score < gmax)
    idx = np.flatnonzero(cand)
    b = gmax - score[idx]
    a = qd[i] + qd[idx] - 2.0 * y[i] * y[idx] * qi[idx]
    a = np.where(a > 0, a, TAU)
    j = int(idx[np.argmin(-(b * b) / a)])
    return i, j


def train(k, labels, cfg: TrainConfig = TrainConfig(), *, check_psd: bool = True,
          record_objective: bool = False) -> SvmModel:
    """Fit the dual on a square training kernel ``k``."""
    K = _kernel_values(k)
    y = _check_labels(labels)
    n = y.shape[0]
    if K.shape != (n, n):
        raise ShapeMismatch(f"kernel shape {K.shape} does not match {n} labels")
    if check_psd:
        lam = min_eigenvalue(K)
        if lam < PSD_PRECHECK:
            raise KernelNotPsd(f"training kernel has eigenvalue {lam:.3e}")
    C = float(cfg.C)
    Q = (y[:, None] * y[None, :]) * K
    qd = np.diag(Q).copy()
    alphas = np.zeros(n)
    grad = -np.ones(n)
    trace = [0.0] if record_objective else None
    max_iter = cfg.max_passes * max(n, 1)
    converged = False
    it = 0
    while it < max_iter:
        pair = _select_pair(alphas, y, grad, qd, lambda r: Q[r], C, cfg.kkt_tol)
        if pair is None:
            converged = True
            break
        i, j = pair
        it += 1
        old_i, old_j = alphas[i], alphas[j]
        if y[i] != y[j]:
            quad = max(qd[i] + qd[j] + 2.0 * Q[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(qd[i] + qd[j] - 2.0 * Q[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alphas[i], alphas[j] = ai, aj
        grad += Q[i] * (ai - old_i) + Q[j] * (aj - old_j)
        if trace is not None:
            trace.append(float(-0.5 * alphas @ (grad - 1.0)))
    if not converged:
        logger.warning("SMO stopped after %d iterations without meeting kkt_tol=%g", it, cfg.kkt_tol)

    bias = _bias(alphas, y, grad, C)
    return SvmModel(alphas, y.astype(np.int64), bias, C, it, converged, trace)


def _bias(alphas, y, grad, C) -> float:
    yg = y * grad
    free = (alphas > 0) & (alphas < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        at_upper = alphas >= C
        at_lower = alphas <= 0
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0)
    return -rho


def decision_values(model: SvmModel, k_rows) -> np.ndarray:
    """``f(x) = sum_i a_i y_i K(x_i, x) + b`` for each row of ``k_rows``."""
    rows = np.atleast_2d(_kernel_values(k_rows))
    if rows.shape[1] != model.n:
        raise ShapeMismatch(f"kernel rows have {rows.shape[1]} columns, model has {model.n} training points")
    return rows @ model.dual_coef + model.bias


def predict_labels(values) -> np.ndarray:
    """Sign of the decision values, zero mapped to +1."""
    return np.where(np.asarray(values) >= 0, 1, -1)


def kkt_violations(model: SvmModel, k) -> np.ndarray:
    """Per-point KKT violation of a trained model on its training kernel."""
    f = decision_values(model, k)
    margin = model.labels * f
    a, C = model.alphas, model.C
    viol = np.zeros_like(margin)
    lower = a <= 0
    upper = a >= C
    free = ~(lower | upper)
    viol[lower] = np.maximum(0.0, 1.0 - margin[lower])
    viol[upper] = np.maximum(0.0, margin[upper] - 1.0)
    viol[free] = np.abs(margin[free] - 1.0)
    return viol


def save_model(model: SvmModel, path) -> None:
    """Header ``n  C  bias`` then ``index  alpha  y`` per support vector."""
    lines = [f"{model.n}\t{model.C!r}\t{model.bias!r}"]
    for i in model.support_indices:
        lines.append(f"{int(i)}\t{float(model.alphas[i])!r}\t{int(model.labels[i])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> SvmModel:
    """Inverse of :func:`save_model`. Labels of non-support rows are not
    stored and read back as +1; they never enter the decision function."""
    with open(path, encoding="utf-8") as fh:
        header, *rows = [ln for ln in fh.read().splitlines() if ln.strip()]
    n_txt, c_txt, b_txt = header.split("\t")
    n = int(n_txt)
    alphas = np.zeros(n)
    labels = np.ones(n, dtype=np.int64)
    for row in rows:
        i_txt, a_txt, y_txt = row.split("\t")
        alphas[int(i_txt)] = float(a_txt)
        labels[int(i_txt)] = int(y_txt)
    return SvmModel(alphas, labels, float(b_txt), float(c_txt))


class PrecomputedKernelSVC(ClassifierMixin, BaseEstimator):
    """Binary SVM classifier taking precomputed kernel matrices.

    ``fit`` expects the square training Gram matrix; ``decision_function``
    and ``predict`` expect rows of kernel values against the training set.
    ``classes_[1]`` is treated as the positive class.

    Parameters
    ----------
    C : float, default=1.0
        Box constraint on the dual coefficients.
    kkt_tol : float, default=1e-3
        Stopping tolerance on the maximal KKT violation.
    max_passes : int, default=200
        Iteration budget in multiples of the training set size.
    check_psd : bool, default=True
        Reject training kernels with an eigenvalue below -1e-6.
    """

    def __init__(self, C=1.0, kkt_tol=1e-3, max_passes=200, check_psd=True):
        self.C = C
        self.kkt_tol = kkt_tol
        self.max_passes = max_passes
        self.check_psd = check_psd

    def fit(self, X, y):
        K = check_array(X, dtype=np.float64)
        y = column_or_1d(y)
        if K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
            raise ShapeMismatch(f"expected a square kernel matching {y.shape[0]} labels, got {K.shape}")
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise SingleClassTrainingSet(f"need exactly two classes, got {self.classes_.size}")
        signed = np.where(y == self.classes_[1], 1, -1)
        cfg = TrainConfig(self.C, self.kkt_tol, self.max_passes)
        self.model_ = train(K, signed, cfg, check_psd=self.check_psd)
        self.support_ = self.model_.support_indices
        self.dual_coef_ = self.model_.dual_coef[self.support_][None, :]
        self.intercept_ = np.array([self.model_.bias])
        self.n_iter_ = self.model_.n_iter
        self.shape_fit_ = K.shape
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        K = check_array(X, dtype=np.float64)
        return decision_values(self.model_, K)

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= 0).astype(int)]
