"""Coupling a high-precision and a high-recall model.

Two routes: a meta-learner (logistic regression or an RBF support vector
classifier) over the z-scored pair of probabilities, and a rule that
accepts the shared label when both models agree and refers the case
otherwise.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, StandardizationParams, fit_standardizer
from .learners.common import sigmoid
from .metrics import ThresholdedClassifier, confusion, evaluate, prf

REFER = -1


class CompoundStatus(enum.Enum):
    AGREE_POSITIVE = "AgreePositive"
    AGREE_NEGATIVE = "AgreeNegative"
    DISAGREE = "Disagree"


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class MetaFeatures:
    raw: np.ndarray              # columns: p_hpm, p_hrm
    z: np.ndarray
    params: StandardizationParams
    row_ids: np.ndarray

    def __len__(self):
        return self.raw.shape[0]


def build_meta_features(hpm, hrm, rows: Dataset,
                        params: StandardizationParams | None = None) -> MetaFeatures:
    """Stack both models' probabilities for ``rows`` and z-score them.

    Pass ``params`` fitted on the meta-training rows when building features
    for evaluation rows.
    """
    if len(rows) == 0:
        empty = np.zeros((0, 2))
        p = params or StandardizationParams(np.zeros(2), np.ones(2))
        return MetaFeatures(empty, empty, p, rows.row_ids)
    a = np.asarray(hpm.predict_proba(rows.features), dtype=np.float64)
    b = np.asarray(hrm.predict_proba(rows.features), dtype=np.float64)
    if a.shape != b.shape or a.shape[0] != len(rows):
        raise ValueError("base models returned mismatched prediction lengths")
    raw = np.column_stack([a, b])
    params = params or fit_standardizer(raw)
    return MetaFeatures(raw, params.apply(raw), params, rows.row_ids)


# ---------------------------------------------------------------- logistic meta-learner

@dataclass(eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    C: float = 1.0
    converged: bool = True
    grad_norm: float = 0.0
    objective_trace: list = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X.z if isinstance(X, MetaFeatures) else X, dtype=np.float64)
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def _logistic_objective(X, y, w, b, C):
    s = X @ w + b
    nll = np.sum(np.logaddexp(0.0, s) - y * s)
    return float(nll + 0.5 / C * (w @ w))


def train_logistic_meta(X, labels, C: float = 1.0, tol: float = 1e-8,
                        max_iter: int = 100) -> LogisticModel:
    """L2-penalized logistic regression (intercept unpenalized) by damped Newton.

    Minimizes ``sum log-loss + ||w||^2 / (2C)``; backtracking keeps the
    objective non-increasing. Stops when the gradient norm drops below ``tol``.
    """
    X = np.asarray(X.z if isinstance(X, MetaFeatures) else X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("logistic meta-learner needs both classes")
    n, d = X.shape
    A = np.column_stack([X, np.ones(n)])
    theta = np.zeros(d + 1)
    reg = np.full(d + 1, 1.0 / C)
    reg[-1] = 0.0
    obj = _logistic_objective(X, y, theta[:-1], theta[-1], C)
    trace = [obj]
    gnorm = math.inf
    for _ in range(max_iter):
        p = sigmoid(A @ theta)
        grad = A.T @ (p - y) + reg * theta
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            break
        H = (A * (p * (1 - p))[:, None]).T @ A + np.diag(reg)
        step = np.linalg.solve(H + 1e-12 * np.eye(d + 1), grad)
        t = 1.0
        while True:
            cand = theta - t * step
            new = _logistic_objective(X, y, cand[:-1], cand[-1], C)
            if new <= obj or t < 1e-10:
                break
            t *= 0.5
        if new > obj:
            break
        theta, obj = cand, new
        trace.append(obj)
    else:
        p = sigmoid(A @ theta)
        gnorm = float(np.linalg.norm(A.T @ (p - y) + reg * theta))
    converged = gnorm < tol or gnorm < 1e-6 * max(1.0, n)
    if not converged:
        warnings.warn(f"logistic meta-learner stopped with gradient norm {gnorm:.3g}",
                      ConvergenceWarning)
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), C, converged, gnorm, trace)


# ---------------------------------------------------------------- RBF support vector meta-learner

@dataclass
class SvmConfig:
    kernel: str = "rbf"
    C: float = 1.0
    gamma_mode: str = "scale"
    # carried for completeness; the RBF kernel has no degree
    degree: int = 4
    class_weights: object = "balanced"
    tolerance: float = 1e-3
    max_passes: int = 100000


@dataclass(eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray        # alpha_i * y_i for the support vectors
    bias: float
    gamma: float
    alpha: np.ndarray            # full alpha vector over training rows
    upper: np.ndarray            # per-row box bound C * class_weight
    y_signed: np.ndarray
    train_X: np.ndarray
    converged: bool = True
    n_iter: int = 0
    kkt_violations: int = 0

    def kernel(self, A, B) -> np.ndarray:
        return rbf_kernel(A, B, self.gamma)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X.z if isinstance(X, MetaFeatures) else X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.zeros(0)
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel(X, self.support_vectors) @ self.dual_coef + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def predict_proba(self, X) -> np.ndarray:
        """Logistic of the decision value: a monotone score, 0.5 at the boundary."""
        return sigmoid(self.decision_function(X))


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def kkt_violations(alpha, grad, y, upper, rho, tol) -> int:
    """Rows breaking the soft-margin KKT conditions by more than ``tol``.

    With ``grad = Q alpha - 1`` the margin slack is ``y_i f(x_i) - 1 = grad_i - y_i rho``.
    """
    slack = grad - y * rho
    at_zero = alpha <= 0
    at_upper = alpha >= upper
    free = ~at_zero & ~at_upper
    bad = (at_zero & (slack < -tol)) | (at_upper & (slack > tol)) | (free & (np.abs(slack) > tol))
    bad |= (alpha < -1e-12) | (alpha > upper + 1e-12)
    return int(np.count_nonzero(bad))


def train_svm_meta(X, labels, cfg: SvmConfig | None = None) -> SvmModel:
    """Soft-margin RBF SVC solved by SMO with second-order working-set selection."""
    cfg = cfg or SvmConfig()
    if cfg.kernel != "rbf":
        raise ValueError("only the RBF kernel is supported")
    X = np.asarray(X.z if isinstance(X, MetaFeatures) else X, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("SVM meta-learner needs both classes")
    n, d = X.shape
    y = np.where(labels == 1, 1.0, -1.0)

    if cfg.gamma_mode == "scale":
        var = X.var()
        gamma = 1.0 / (d * var) if var > 0 else 1.0
    elif cfg.gamma_mode == "auto":
        gamma = 1.0 / d
    else:
        gamma = float(cfg.gamma_mode)

    if cfg.class_weights == "balanced":
        cw = np.where(labels == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))
    elif cfg.class_weights is None:
        cw = np.ones(n)
    else:
        neg_w, pos_w = cfg.class_weights
        cw = np.where(labels == 1, pos_w, neg_w)
    upper = cfg.C * cw

    K = rbf_kernel(X, X, gamma)
    Q = (y[:, None] * y[None, :]) * K
    diagK = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    eps = cfg.tolerance
    converged = False
    it = 0
    while it < cfg.max_passes:
        up = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < upper)) | ((y > 0) & (alpha > 0))
        score = -y * G
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        m_up = score[i]
        M_low = float(np.min(np.where(low, score, np.inf)))
        if m_up - M_low < eps:
            converged = True
            break
        bgap = m_up - score
        cand = low & (bgap > 0)
        quad = diagK[i] + diagK - 2.0 * y[i] * y * Q[i]
        quad = np.where(quad > 0, quad, tau)
        obj = np.where(cand, -(bgap * bgap) / quad, np.inf)
        j = int(np.argmin(obj))
        it += 1

        ai, aj = alpha[i], alpha[j]
        Ci, Cj = upper[i], upper[j]
        if y[i] != y[j]:
            q = diagK[i] + diagK[j] + 2.0 * Q[i, j]
            q = q if q > 0 else tau
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            else:
                if ni < 0:
                    ni, nj = 0.0, -diff
            if diff > Ci - Cj:
                if ni > Ci:
                    ni, nj = Ci, Ci - diff
            else:
                if nj > Cj:
                    nj, ni = Cj, Cj + diff
        else:
            q = diagK[i] + diagK[j] - 2.0 * Q[i, j]
            q = q if q > 0 else tau
            delta = (G[i] - G[j]) / q
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > Ci:
                if ni > Ci:
                    ni, nj = Ci, total - Ci
            else:
                if nj < 0:
                    nj, ni = 0.0, total
            if total > Cj:
                if nj > Cj:
                    nj, ni = Cj, total - Cj
            else:
                if ni < 0:
                    ni, nj = 0.0, total
        dai, daj = ni - ai, nj - aj
        alpha[i], alpha[j] = ni, nj
        G += Q[:, i] * dai + Q[:, j] * daj

    if not converged:
        warnings.warn(f"SMO hit max_passes={cfg.max_passes} before reaching tolerance",
                      ConvergenceWarning)

    # snap values within rounding of the box to the box
    alpha = np.where(alpha < 1e-12 * upper, 0.0, alpha)
    alpha = np.where(alpha > upper * (1 - 1e-12), upper, alpha)
    G = Q @ alpha - 1.0
    free = (alpha > 0) & (alpha < upper)
    yG = y * G
    if free.any():
        rho = float(np.mean(yG[free]))
    else:
        at_up = alpha >= upper
        at_zero = alpha <= 0
        ub_mask = (at_up & (y < 0)) | (at_zero & (y > 0))
        lb_mask = (at_up & (y > 0)) | (at_zero & (y < 0))
        ub = float(np.min(yG[ub_mask])) if ub_mask.any() else math.inf
        lb = float(np.max(yG[lb_mask])) if lb_mask.any() else -math.inf
        rho = (ub + lb) / 2 if math.isfinite(ub) and math.isfinite(lb) else 0.0
    violations = kkt_violations(alpha, G, y, upper, rho, cfg.tolerance)
    sv = alpha > 0
    return SvmModel(X[sv].copy(), (alpha * y)[sv], -rho, gamma, alpha, upper, y, X.copy(),
                    converged, it, violations)


# ---------------------------------------------------------------- rule-based coupling

def manual_ensemble(hpm_label: int, hrm_label: int):
    """(final, status): the shared label on agreement, REFER on disagreement."""
    if hpm_label not in (0, 1) or hrm_label not in (0, 1):
        raise ValueError("labels must be 0 or 1")
    if hpm_label != hrm_label:
        return REFER, CompoundStatus.DISAGREE
    if hpm_label == 1:
        return 1, CompoundStatus.AGREE_POSITIVE
    return 0, CompoundStatus.AGREE_NEGATIVE


def manual_ensemble_batch(hpm_labels, hrm_labels):
    out = [manual_ensemble(int(a), int(b)) for a, b in zip(hpm_labels, hrm_labels)]
    finals = np.array([f for f, _ in out], dtype=np.int64)
    return finals, [s for _, s in out]


def disagreement_rate(statuses) -> float:
    statuses = list(statuses)
    if not statuses:
        raise ValueError("no statuses given")
    return sum(s is CompoundStatus.DISAGREE for s in statuses) / len(statuses)


def evaluate_manual(labels, hpm_labels, hrm_labels) -> dict:
    """Metrics over all rows (referrals fall back to the HPM label) and over agreed rows."""
    labels = np.asarray(labels).astype(np.int64)
    hpm_labels = np.asarray(hpm_labels).astype(np.int64)
    finals, statuses = manual_ensemble_batch(hpm_labels, hrm_labels)
    agreed = finals != REFER
    fallback = np.where(agreed, finals, hpm_labels)
    out = {"disagreement_rate": disagreement_rate(statuses) if statuses else 0.0,
           "n_referred": int(np.count_nonzero(~agreed)), "n_rows": int(labels.size)}
    out["all_rows"] = evaluate(labels, fallback)
    out["agreed"] = evaluate(labels[agreed], finals[agreed])
    return out
