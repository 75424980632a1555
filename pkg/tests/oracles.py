"""Independent reference implementations used by the tests."""
import numpy as np
from scipy.optimize import brentq


def conditional_gaussian_fill(values, mask, mean, cov):
    """Fill unobserved cells with E[x_miss | x_obs] under N(mean, cov), by block inversion."""
    out = np.array(values, dtype=float, copy=True)
    for i in range(out.shape[0]):
        o = mask[i]
        h = ~o
        if not h.any():
            continue
        coo = cov[np.ix_(o, o)]
        cho = cov[np.ix_(h, o)]
        out[i, h] = mean[h] + cho @ np.linalg.solve(coo, out[i, o] - mean[o])
    return out


def observed_loglik(values, mask, mean, cov):
    from scipy.stats import multivariate_normal

    total = 0.0
    for i in range(values.shape[0]):
        o = mask[i]
        total += multivariate_normal(mean[o], cov[np.ix_(o, o)]).logpdf(values[i, o])
    return total


def pca_residual(X, c):
    """Least-squares error of the best affine rank-c approximation (trailing eigenvalues)."""
    Xc = X - X.mean(axis=0)
    ev = np.linalg.eigvalsh(Xc.T @ Xc)
    return float(ev[: X.shape[1] - c].sum())


def mann_whitney(scores, labels):
    p = [s for s, y in zip(scores, labels) if y > 0]
    n = [s for s, y in zip(scores, labels) if y < 0]
    wins = 0.0
    for a in p:
        for b in n:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(p) * len(n))


def best_stump_bruteforce(X, y, D):
    """Enumerate every (feature, threshold, polarity) with thresholds at midpoints and outside."""
    best = (np.inf, None)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        cands = np.r_[vals[0] - 1.0, (vals[1:] + vals[:-1]) / 2, vals[-1] + 1.0]
        for thr in cands:
            for pol in (1, -1):
                pred = np.where(pol * (X[:, f] - thr) > 0, 1, -1)
                err = D[pred != y].sum()
                if err < best[0] - 1e-12:
                    best = (err, (f, thr, pol))
    return best


def _project_box_hyperplane(a, y, upper):
    """Euclidean projection onto {0 <= a <= upper, y @ a = 0} by bisection on the multiplier."""
    def g(t):
        return y @ np.clip(a - t * y, 0, upper)

    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2
    while g(hi) > 0:
        hi *= 2
    t = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.clip(a - t * y, 0, upper)


def weighted_hinge(w, b, X, y, C, weights):
    return 0.5 * w @ w + C * np.sum(weights * np.maximum(0.0, 1 - y * (X @ w + b)))


def best_bias(w, X, y, C, weights):
    """Exact minimizer of the convex piecewise-linear hinge term over b (checks every breakpoint)."""
    f = X @ w
    cands = y - f
    vals = [np.sum(weights * np.maximum(0.0, 1 - y * (f + b))) for b in cands]
    return float(cands[int(np.argmin(vals))])


def svm_oracle(X, y, C, weights, iters=20000):
    """Weighted soft-margin linear SVM by accelerated projected gradient on the dual.

    Returns the primal objective at the recovered (w, b) with b optimized exactly.
    """
    upper = C * weights
    Q = (y[:, None] * X) @ (y[:, None] * X).T
    L = max(np.linalg.eigvalsh(Q)[-1], 1e-12)
    a = np.zeros(len(y))
    z = a.copy()
    t = 1.0
    best = np.inf
    for k in range(iters):
        grad = 1 - Q @ z
        a_new = _project_box_hyperplane(z + grad / L, y, upper)
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        z = a_new + (t - 1) / t_new * (a_new - a)
        a, t = a_new, t_new
        if k % 500 == 499 or k == iters - 1:
            w = (a * y) @ X
            b = best_bias(w, X, y, C, weights)
            best = min(best, weighted_hinge(w, b, X, y, C, weights))
    return best
