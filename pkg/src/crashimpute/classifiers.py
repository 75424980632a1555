"""Cost-sensitive SVM, stump AdaBoost and random-forest feature importance.

All three are trained from scratch on complete (already imputed) rows with
labels in {-1, +1}. Per-sample weights scale the loss of each sample: the SVM
box constraint becomes ``0 <= alpha_i <= C * weight_i`` and AdaBoost starts
from the normalized weights instead of the uniform distribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonPositiveWeight, NumericalError, SingleClass

LINEAR, GAUSSIAN, POLYNOMIAL = "linear", "gaussian", "polynomial_p3"
KERNELS = (LINEAR, GAUSSIAN, POLYNOMIAL)
TAU = 1e-12
# above this many samples kernel columns are computed on demand
DENSE_GRAM_LIMIT = 6000


# --- kernels -----------------------------------------------------------------

def kernel_matrix(kernel, A, B, bandwidth=1.0, degree=3):
    """K[i, j] = K(A[i], B[j])."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if kernel == LINEAR:
        return A @ B.T
    if kernel == GAUSSIAN:
        sq = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2 * A @ B.T
        return np.exp(-bandwidth * np.maximum(sq, 0.0))
    if kernel == POLYNOMIAL:
        return (1.0 + A @ B.T) ** degree
    raise InvalidConfig(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def _check_training_data(X, y, weights):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X shape {X.shape} does not match {y.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise InvalidConfig("training rows must be complete and finite")
    if not np.isin(y, (-1, 1)).all():
        raise InvalidConfig("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise SingleClass("both classes must be present")
    if weights is None:
        weights = np.ones(len(y))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != y.shape:
        raise DimensionMismatch("one weight per sample required")
    if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
        raise NonPositiveWeight("sample weights must be finite and positive")
    return X, y.astype(float), weights


def _check_rows(X, d):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != d:
        raise DimensionMismatch(f"rows have {X.shape[1]} features, model expects {d}")
    return X


# --- SVM ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvmModel:
    """Fitted soft-margin SVM.

    ``dual_coef`` holds ``alpha_i * y_i`` for the support vectors. For the
    linear kernel ``omega`` is the primal weight vector.
    """

    kernel: str
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    b: float
    C: float
    omega: Optional[np.ndarray] = None
    bandwidth: float = 1.0
    iterations: int = 0
    converged: bool = True
    kkt_gap: float = 0.0

    @property
    def d(self):
        return self.support_vectors.shape[1]


def _select_working_set(G, alpha, y, Cb, Kdiag, kcol, eps):
    """Second-order working-set selection (Fan, Chen & Lin 2005)."""
    up = np.where(y > 0, alpha < Cb, alpha > 0)
    low = np.where(y > 0, alpha > 0, alpha < Cb)
    minus_yG = -y * G
    if not up.any() or not low.any():
        return -1, -1, 0.0
    cand = np.where(up, minus_yG, -np.inf)
    i = int(np.argmax(cand))
    gmax = cand[i]
    gmin = np.min(np.where(low, minus_yG, np.inf))
    gap = gmax - gmin
    if gap < eps:
        return -1, -1, gap
    Ki = kcol(i)
    b = gmax - minus_yG
    a = Kdiag[i] + Kdiag - 2.0 * Ki
    a = np.where(a > 0, a, TAU)
    score = np.where(low & (b > 0), -(b * b) / a, np.inf)
    j = int(np.argmin(score))
    return i, j, gap


def _smo(kcol, Kdiag, y, Cb, eps, max_iter):
    m = len(y)
    alpha = np.zeros(m)
    G = -np.ones(m)  # gradient of 0.5 a'Qa - e'a with Q = yy'K
    it = 0
    gap = np.inf
    converged = False
    while it < max_iter:
        i, j, gap = _select_working_set(G, alpha, y, Cb, Kdiag, kcol, eps)
        if i < 0:
            converged = True
            break
        it += 1
        Ki, Kj = kcol(i), kcol(j)
        Qi, Qj = y * y[i] * Ki, y * y[j] * Kj
        ai, aj = alpha[i], alpha[j]
        Ci, Cj = Cb[i], Cb[j]
        if y[i] != y[j]:
            quad = Kdiag[i] + Kdiag[j] + 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > Ci - Cj:
                if ni > Ci:
                    ni, nj = Ci, Ci - diff
            elif nj > Cj:
                nj, ni = Cj, Cj + diff
        else:
            quad = Kdiag[i] + Kdiag[j] - 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > Ci:
                if ni > Ci:
                    ni, nj = Ci, total - Ci
            elif nj < 0:
                nj, ni = 0.0, total
            if total > Cj:
                if nj > Cj:
                    nj, ni = Cj, total - Cj
            elif ni < 0:
                ni, nj = 0.0, total
        G += Qi * (ni - ai) + Qj * (nj - aj)
        alpha[i], alpha[j] = ni, nj
    return alpha, G, it, converged, gap


@numba.njit(cache=True)
def _smo_dense(K, y, Cb, eps, max_iter):
    # same algorithm as _select_working_set + _smo, on a precomputed Gram matrix
    m = len(y)
    alpha = np.zeros(m)
    G = -np.ones(m)
    it = 0
    gap = np.inf
    converged = False
    while it < max_iter:
        i = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(m):
            myg = -y[t] * G[t]
            if (alpha[t] < Cb[t]) if y[t] > 0 else (alpha[t] > 0):
                if myg > gmax:
                    gmax = myg
                    i = t
            if (alpha[t] > 0) if y[t] > 0 else (alpha[t] < Cb[t]):
                if myg < gmin:
                    gmin = myg
        gap = gmax - gmin
        if i < 0 or gap < eps:
            converged = True
            break
        j = -1
        best = np.inf
        for t in range(m):
            if (alpha[t] > 0) if y[t] > 0 else (alpha[t] < Cb[t]):
                bt = gmax + y[t] * G[t]
                if bt > 0:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a <= 0:
                        a = TAU
                    sc = -(bt * bt) / a
                    if sc < best:
                        best = sc
                        j = t
        if j < 0:
            converged = True
            break
        it += 1
        ai = alpha[i]
        aj = alpha[j]
        Ci = Cb[i]
        Cj = Cb[j]
        Qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni = ai + delta
            nj = aj + delta
            if diff > 0:
                if nj < 0:
                    nj = 0.0
                    ni = diff
            elif ni < 0:
                ni = 0.0
                nj = -diff
            if diff > Ci - Cj:
                if ni > Ci:
                    ni = Ci
                    nj = Ci - diff
            elif nj > Cj:
                nj = Cj
                ni = Cj + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni = ai - delta
            nj = aj + delta
            if total > Ci:
                if ni > Ci:
                    ni = Ci
                    nj = total - Ci
            elif nj < 0:
                nj = 0.0
                ni = total
            if total > Cj:
                if nj > Cj:
                    nj = Cj
                    ni = total - Cj
            elif ni < 0:
                ni = 0.0
                nj = total
        dai = ni - ai
        daj = nj - aj
        for t in range(m):
            G[t] += y[t] * (y[i] * K[i, t] * dai + y[j] * K[j, t] * daj)
        alpha[i] = ni
        alpha[j] = nj
    return alpha, G, it, converged, gap


def _bias(alpha, G, y, Cb):
    yG = y * G
    at_upper = alpha >= Cb
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        rho = yG[free].mean()
    else:
        ub_set = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_set = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_set].min() if ub_set.any() else np.inf
        lb = yG[lb_set].max() if lb_set.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return -float(rho)


def svm_fit(X, y, kernel: str = LINEAR, C: float = 1.0, weights=None, tol: float = 1e-4,
            max_epochs: int = 10_000, bandwidth: float = 1.0) -> SvmModel:
    """Train a weighted soft-margin SVM by SMO on the dual problem.

    ``tol`` bounds the maximal KKT violation at convergence. One epoch is
    ``m / 2`` pair updates.
    """
    if kernel not in KERNELS:
        raise InvalidConfig(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if C <= 0:
        raise InvalidConfig("C must be positive")
    X, yf, weights = _check_training_data(X, y, weights)
    m = len(yf)
    Cb = C * weights

    max_iter = max_epochs * max(m // 2, 1)
    if m <= DENSE_GRAM_LIMIT:
        K = np.ascontiguousarray(kernel_matrix(kernel, X, X, bandwidth))
        alpha, G, it, converged, gap = _smo_dense(K, yf, Cb, float(tol), max_iter)
    else:
        Kdiag = np.array([kernel_matrix(kernel, X[i], X[i], bandwidth)[0, 0] for i in range(m)])

        def kcol(i):
            return kernel_matrix(kernel, X, X[i:i + 1], bandwidth)[:, 0]

        alpha, G, it, converged, gap = _smo(kcol, Kdiag, yf, Cb, tol, max_iter)
    b = _bias(alpha, G, yf, Cb)
    sv = alpha > 0
    coef = alpha[sv] * yf[sv]
    omega = (coef @ X[sv]) if kernel == LINEAR else None
    return SvmModel(kernel, X[sv].copy(), coef, b, float(C), omega, float(bandwidth), it,
                    converged, float(gap) if np.isfinite(gap) else 0.0)


def svm_score(model: SvmModel, X) -> np.ndarray:
    X = _check_rows(X, model.d)
    if model.kernel == LINEAR and model.omega is not None:
        return X @ model.omega + model.b
    K = kernel_matrix(model.kernel, X, model.support_vectors, model.bandwidth)
    return K @ model.dual_coef + model.b


def weighted_hinge_objective(omega, b, X, y, C=1.0, weights=None):
    """0.5 ||omega||^2 + C sum_i weight_i max(0, 1 - y_i (omega.x_i + b))."""
    weights = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    margins = 1.0 - np.asarray(y) * (np.asarray(X) @ omega + b)
    return 0.5 * float(omega @ omega) + C * float(weights @ np.maximum(margins, 0.0))


# --- AdaBoost ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdaBoostModel:
    """Ensemble F(x) = sum_t alpha_t h_t(x) of decision stumps.

    Stump t predicts ``polarities[t]`` where ``x[features[t]] > thresholds[t]``
    and ``-polarities[t]`` otherwise.
    """

    features: np.ndarray
    thresholds: np.ndarray
    polarities: np.ndarray
    alphas: np.ndarray
    errors: np.ndarray
    d: int
    training_error: float = 0.0
    error_bound: float = 1.0

    @property
    def T(self):
        return len(self.alphas)


def stump_predict(X, feature, threshold, polarity):
    return np.where(X[:, feature] > threshold, polarity, -polarity).astype(float)


def stump_alpha(err: float) -> float:
    """0.5 ln((1 - err) / err); zero at err = 0.5, err floored at 1e-10."""
    err = max(err, 1e-10)
    if err >= 0.5:
        return 0.0
    return 0.5 * math.log((1.0 - err) / err)


def best_stump(X, y, D):
    """Exhaustive weighted-error search over (feature, threshold, polarity).

    Thresholds sit midway between consecutive distinct values, plus one below
    the minimum. Ties go to the lowest feature, then the lowest threshold,
    then polarity +1.
    """
    m, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    Dpos = np.where(y > 0, D, 0.0)[order]
    Dneg = np.where(y < 0, D, 0.0)[order]
    zero = np.zeros((1, d))
    left_pos = np.vstack([zero, np.cumsum(Dpos, axis=0)])
    left_neg = np.vstack([zero, np.cumsum(Dneg, axis=0)])
    total = D.sum()
    # polarity +1: left of threshold predicted -1
    err_plus = left_pos + (left_neg[-1] - left_neg)
    err_minus = total - err_plus
    # split k puts rows [0, k) on the left; valid where values differ or k == 0
    valid = np.vstack([np.ones((1, d), bool), xs[1:] > xs[:-1], np.zeros((1, d), bool)])
    err_plus = np.where(valid, err_plus, np.inf)
    err_minus = np.where(valid, err_minus, np.inf)
    # candidate order: feature, split, polarity
    both = np.stack([err_plus.T, err_minus.T], axis=-1)  # (d, m + 1, 2)
    flat = int(np.argmin(both))
    f, k, p = np.unravel_index(flat, both.shape)
    if k == 0:
        thr = xs[0, f] - 1.0
    else:
        thr = 0.5 * (xs[k - 1, f] + xs[k, f])
    return int(f), float(thr), 1 if p == 0 else -1, float(both[f, k, p] / total)


def adaboost_fit(X, y, T: int = 100, weights=None) -> AdaBoostModel:
    """Discrete AdaBoost over decision stumps.

    The initial distribution is proportional to ``weights``. Training stops
    early when the best stump has error >= 0.5 (dropped) or is perfect (kept,
    with error capped at 1e-10).
    """
    X, yf, weights = _check_training_data(X, y, weights)
    D = weights / weights.sum()
    D0 = D.copy()
    feats, thrs, pols, alphas, errs = [], [], [], [], []
    F = np.zeros(len(yf))
    for _ in range(T):
        f, thr, pol, err = best_stump(X, yf, D)
        if err >= 0.5:
            break
        perfect = err <= 1e-10
        err = max(err, 1e-10)
        a = stump_alpha(err)
        h = stump_predict(X, f, thr, pol)
        feats.append(f)
        thrs.append(thr)
        pols.append(pol)
        alphas.append(a)
        errs.append(err)
        F += a * h
        if perfect:
            break
        D = D * np.exp(-a * yf * h)
        D /= D.sum()
    pred = np.where(F >= 0, 1.0, -1.0)
    train_err = float(D0[pred != yf].sum())
    bound = float(np.prod([2.0 * math.sqrt(e * (1.0 - e)) for e in errs])) if errs else 1.0
    if train_err > bound * (1 + 1e-9) + 1e-12:
        raise NumericalError(f"boosting bound violated: {train_err} > {bound}")
    return AdaBoostModel(np.array(feats, dtype=int), np.array(thrs), np.array(pols, dtype=int),
                         np.array(alphas), np.array(errs), X.shape[1], train_err, bound)


def adaboost_score(model: AdaBoostModel, X) -> np.ndarray:
    X = _check_rows(X, model.d)
    F = np.zeros(X.shape[0])
    for f, thr, pol, a in zip(model.features, model.thresholds, model.polarities, model.alphas):
        F += a * stump_predict(X, f, thr, pol)
    return F


# --- random forest importance ------------------------------------------------------

@numba.njit(cache=True)
def _grow_tree(X, pos, n_feats, max_depth, min_leaf, seed):
    """Grow one Gini tree; returns the per-feature impurity decrease.

    ``pos`` is 1.0 for crash rows. Candidate features are drawn per node by a
    partial Fisher-Yates shuffle; ``max_depth < 0`` means unlimited depth.
    """
    np.random.seed(seed)
    m, d = X.shape
    imp = np.zeros(d)
    perm = np.arange(d)
    # explicit stack of (start, stop, depth) over a shared index buffer
    idx = np.arange(m)
    stack = np.empty((2 * m + 2, 3), dtype=np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2] = 0, m, 0
    top = 1
    while top > 0:
        top -= 1
        lo, hi, depth = stack[top, 0], stack[top, 1], stack[top, 2]
        n = hi - lo
        node = idx[lo:hi]
        npos = 0.0
        for i in range(n):
            npos += pos[node[i]]
        if n < 2 * min_leaf or npos == 0.0 or npos == n:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        for j in range(n_feats):
            r = j + np.random.randint(d - j)
            perm[j], perm[r] = perm[r], perm[j]
        # random scan order so split ties do not favour low feature indices
        feats = perm[:n_feats].copy()
        p = npos / n
        parent = n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        best = np.inf
        best_f = -1
        best_thr = 0.0
        for f in feats:
            vals = X[node, f]
            order = np.argsort(vals, kind="mergesort")
            lp = 0.0
            for k in range(n - 1):
                lp += pos[node[order[k]]]
                ln = k + 1.0
                rn = n - ln
                if ln < min_leaf or rn < min_leaf:
                    continue
                a, b = vals[order[k]], vals[order[k + 1]]
                if not b > a:
                    continue
                ql = lp / ln
                qr = (npos - lp) / rn
                child = ln * (1.0 - ql * ql - (1.0 - ql) * (1.0 - ql)) \
                    + rn * (1.0 - qr * qr - (1.0 - qr) * (1.0 - qr))
                if child < best:
                    best, best_f, best_thr = child, f, 0.5 * (a + b)
        if best_f < 0:
            continue
        imp[best_f] += max(parent - best, 0.0)
        # stable partition of the node indices
        left = node[X[node, best_f] <= best_thr]
        right = node[X[node, best_f] > best_thr]
        idx[lo:lo + left.size] = left
        idx[lo + left.size:hi] = right
        stack[top, 0], stack[top, 1], stack[top, 2] = lo + left.size, hi, depth + 1
        stack[top + 1, 0], stack[top + 1, 1], stack[top + 1, 2] = lo, lo + left.size, depth + 1
        top += 2
    return imp


def rf_feature_importance(X, y, n_trees: int = 100, rng_seed: int = 0, max_depth: int | None = None,
                          min_samples_leaf: int = 1):
    """Gini importance from a from-scratch random forest.

    Each tree is grown on a bootstrap sample, trying ceil(sqrt(d)) random
    features per split. Per-tree impurity decreases are normalized, averaged
    and renormalized to sum to 1.

    Returns a list of ``(feature_index, importance)`` sorted by decreasing
    importance, ties by index.
    """
    X, yf, _ = _check_training_data(X, y, None)
    m, d = X.shape
    n_feats = int(math.ceil(math.sqrt(d)))
    rng = np.random.default_rng(rng_seed)
    total = np.zeros(d)
    used = 0
    for _ in range(n_trees):
        boot = rng.integers(0, m, size=m)
        seed = int(rng.integers(0, 2 ** 31 - 1))
        imp = _grow_tree(X[boot], (yf[boot] > 0).astype(float), n_feats,
                         -1 if max_depth is None else int(max_depth), int(min_samples_leaf), seed)
        s = imp.sum()
        if s > 0:
            total += imp / s
            used += 1
    if used == 0:
        total = np.full(d, 1.0 / d)
    total /= total.sum()
    order = sorted(range(d), key=lambda j: (-total[j], j))
    return [(j, float(total[j])) for j in order]


def select_top_features(ranking, k: int):
    """Indices of the k most important features (ties to the lower index), ascending."""
    if not 0 <= k <= len(ranking):
        raise InvalidConfig(f"k={k} must lie in [0, {len(ranking)}]")
    ordered = sorted(ranking, key=lambda fi: (-fi[1], fi[0]))
    return sorted(f for f, _ in ordered[:k])


# --- serialization ---------------------------------------------------------------

def model_to_dict(model) -> dict:
    if isinstance(model, SvmModel):
        return {
            "type": "svm", "kernel": model.kernel, "C": model.C, "b": model.b,
            "bandwidth": model.bandwidth, "d": model.d,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "omega": None if model.omega is None else model.omega.tolist(),
            "iterations": model.iterations, "converged": model.converged,
        }
    if isinstance(model, AdaBoostModel):
        return {
            "type": "adaboost", "d": model.d, "T": model.T,
            "stumps": [
                {"feature": int(f), "threshold": float(t), "polarity": int(p)}
                for f, t, p in zip(model.features, model.thresholds, model.polarities)
            ],
            "alphas": model.alphas.tolist(), "errors": model.errors.tolist(),
            "training_error": model.training_error, "error_bound": model.error_bound,
        }
    raise InvalidConfig(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    kind = doc.get("type")
    if kind == "svm":
        sv = np.asarray(doc["support_vectors"], dtype=float).reshape(-1, doc["d"])
        omega = None if doc.get("omega") is None else np.asarray(doc["omega"], dtype=float)
        return SvmModel(doc["kernel"], sv, np.asarray(doc["dual_coef"], dtype=float),
                        float(doc["b"]), float(doc["C"]), omega, float(doc.get("bandwidth", 1.0)),
                        doc.get("iterations", 0), doc.get("converged", True))
    if kind == "adaboost":
        stumps = doc["stumps"]
        return AdaBoostModel(
            np.array([s["feature"] for s in stumps], dtype=int),
            np.array([s["threshold"] for s in stumps], dtype=float),
            np.array([s["polarity"] for s in stumps], dtype=int),
            np.asarray(doc["alphas"], dtype=float), np.asarray(doc["errors"], dtype=float),
            int(doc["d"]), doc.get("training_error", 0.0), doc.get("error_bound", 1.0),
        )
    raise InvalidConfig(f"unknown classifier model type {kind!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def loads_model(text: str):
    return model_from_dict(json.loads(text))


def score(model, X) -> np.ndarray:
    if isinstance(model, SvmModel):
        return svm_score(model, X)
    return adaboost_score(model, X)
