"""Missing-value imputation: mean, k-means, LS-PCA, PPCA and VBPCA.

Every ``*_impute`` function returns an :class:`ImputeResult` whose ``completed``
matrix equals the input exactly at observed cells. The fitted model can be
re-applied to new rows with :func:`impute_with`.

The PCA variants share the latent model ``t_j = W z_j + mu (+ noise)`` with
``W`` of shape (d, c). Arrays are laid out samples-by-features throughout.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .data import MaskedTable
from .errors import DegenerateCluster, DimensionMismatch, InvalidConfig

LSPCA, PPCA, VBPCA = "lspca", "ppca", "vbpca"
MEAN, KMEANS = "mean", "kmeans"
IMPUTERS = (MEAN, KMEANS, LSPCA, PPCA, VBPCA)

V_FLOOR = 1e-12
HYPER_FLOOR = 1e-12
LL_SLACK = 1e-8
BOUND_SLACK = 1e-6
HYPER_WARMUP = 20

# result flags
SINGULAR_SYSTEM = "singular_system"
NO_CONVERGENCE = "no_convergence"
VARIANCE_COLLAPSE = "variance_collapse"


@dataclass(frozen=True, eq=False)
class MeanModel:
    means: np.ndarray
    algo: str = MEAN

    @property
    def d(self):
        return self.means.shape[0]


@dataclass(frozen=True, eq=False)
class KMeansModel:
    centroids: np.ndarray
    seed: Optional[int] = None
    iterations: int = 0
    algo: str = KMEANS

    @property
    def d(self):
        return self.centroids.shape[1]


@dataclass(frozen=True, eq=False)
class LatentModel:
    """Fitted PCA-family model.

    ``v`` is 0 for LS-PCA. VBPCA additionally carries the prior variances
    ``v_mu`` and ``v_w`` (one per component) and the posterior covariances of
    the loading rows ``w_cov`` (d, c, c) and of the bias ``mu_var`` (d,).
    """

    algo: str
    W: np.ndarray
    mu: np.ndarray
    v: float
    v_mu: Optional[float] = None
    v_w: Optional[np.ndarray] = None
    w_cov: Optional[np.ndarray] = None
    mu_var: Optional[np.ndarray] = None
    seed: Optional[int] = None
    iterations: int = 0

    def __post_init__(self):
        d, c = self.W.shape
        if self.mu.shape != (d,):
            raise DimensionMismatch("mu must have one entry per feature")
        if not 1 <= c <= max(d - 1, 1):
            raise InvalidConfig(f"latent dimension {c} outside [1, {d - 1}]")
        if self.v < 0:
            raise InvalidConfig("noise variance must be non-negative")
        if self.algo == VBPCA and (self.v_mu is None or self.v_mu <= 0
                                   or self.v_w is None or np.any(self.v_w <= 0)):
            raise InvalidConfig("VBPCA hyperparameters must be strictly positive")

    @property
    def d(self):
        return self.W.shape[0]

    @property
    def c(self):
        return self.W.shape[1]

    def covariance(self):
        """Marginal covariance W W^T + v I of the fitted Gaussian."""
        return self.W @ self.W.T + self.v * np.eye(self.d)


ImputerModel = Union[MeanModel, KMeansModel, LatentModel]


@dataclass(frozen=True, eq=False)
class ImputeResult:
    completed: np.ndarray
    model: ImputerModel
    iterations: int = 0
    converged: bool = True
    history: tuple = ()
    flags: tuple = ()


def _quad_rows(W, S):
    """out[j, i] = W[i] @ S[j] @ W[i] for W (d, c) and a stack S (m, c, c)."""
    WS = np.einsum("dk,jkl->jdl", W, S, optimize=True)
    return np.einsum("jdl,dl->jd", WS, W)


def _fill(table, estimate):
    out = np.where(table.mask, table.values, estimate)
    out.setflags(write=False)
    return out


def _observed_means(table):
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    return x0.sum(axis=0) / obs.sum(axis=0)


def _check_dim(table, c):
    d = table.shape[1]
    if not 1 <= c <= d - 1:
        raise InvalidConfig(f"latent dimension c={c} must lie in [1, {d - 1}]")


def _rel_change(new, old):
    return abs(new - old) / max(abs(old), 1e-300)


# --- baselines -------------------------------------------------------------

def mean_impute(table: MaskedTable) -> ImputeResult:
    means = _observed_means(table)
    model = MeanModel(means)
    return ImputeResult(_fill(table, means[None, :]), model)


def _partial_sqdist(x0, obs, centroids):
    # (m, k) squared distance over observed dims, normalized by observed count
    diff = x0[:, None, :] - centroids[None, :, :]
    return (obs[:, None, :] * diff ** 2).sum(axis=2) / obs.sum(axis=1)[:, None]


def _centroid_update(x0, obs, labels, k, previous):
    centroids = previous.copy()
    counts = np.zeros(k, dtype=int)
    for g in range(k):
        members = labels == g
        counts[g] = members.sum()
        if not counts[g]:
            continue
        n = obs[members].sum(axis=0)
        s = (x0[members] * obs[members]).sum(axis=0)
        seen = n > 0
        centroids[g, seen] = s[seen] / n[seen]
    return centroids, counts


def _lloyd(x0, obs, centroids, max_iter, tol):
    k = centroids.shape[0]
    labels = None
    inertia = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        dist = _partial_sqdist(x0, obs, centroids)
        new_labels = dist.argmin(axis=1)
        new_inertia = dist[np.arange(len(x0)), new_labels].sum()
        centroids, counts = _centroid_update(x0, obs, new_labels, k, centroids)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # reseed each empty cluster at the row farthest from its centroid
            own = dist[np.arange(len(x0)), new_labels]
            for g in empty:
                far = int(own.argmax())
                if own[far] <= 0.0:
                    raise DegenerateCluster(f"cluster {g} is empty and no row can reseed it")
                centroids[g] = np.where(obs[far] > 0, x0[far], centroids[new_labels[far]])
                new_labels[far] = g
                own[far] = 0.0
            centroids, counts = _centroid_update(x0, obs, new_labels, k, centroids)
            if np.any(counts == 0):
                raise DegenerateCluster("reseeding left an empty cluster")
        done = labels is not None and np.array_equal(new_labels, labels)
        done = done or (np.isfinite(inertia) and _rel_change(new_inertia, inertia) < tol)
        labels, inertia = new_labels, new_inertia
        if done:
            break
    dist = _partial_sqdist(x0, obs, centroids)
    labels = dist.argmin(axis=1)
    inertia = dist[np.arange(len(x0)), labels].sum()
    return centroids, labels, inertia, it


def kmeans_impute(table: MaskedTable, k: int = 5, max_iter: int = 300, tol: float = 1e-6,
                  rng_seed: int = 0, n_init: int = 10) -> ImputeResult:
    """k-means on partially observed rows.

    Distances use only the dimensions a row observes, divided by how many it
    observes. Centroid coordinates average the members that observe that
    dimension. Each missing cell takes the coordinate of its row's centroid.
    """
    m, d = table.shape
    if not 1 <= k <= m:
        raise InvalidConfig(f"k={k} must lie in [1, {m}]")
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    col_means = _observed_means(table)
    rng = np.random.default_rng(rng_seed)
    best = None
    total_iter = 0
    for _ in range(n_init if k > 1 else 1):
        seeds = rng.choice(m, size=k, replace=False)
        init = np.where(table.mask[seeds], x0[seeds], col_means[None, :])
        if k == 1:
            init = col_means[None, :].copy()
        centroids, labels, inertia, it = _lloyd(x0, obs, init, max_iter, tol)
        total_iter += it
        if best is None or inertia < best[2]:
            best = (centroids, labels, inertia)
    centroids, labels, _ = best
    if k == 1:
        centroids = col_means[None, :]
    model = KMeansModel(centroids, seed=rng_seed, iterations=total_iter)
    return ImputeResult(_fill(table, centroids[labels]), model, iterations=total_iter)


# --- LS-PCA ----------------------------------------------------------------

def _min_norm_solve(A, b, rcond=1e-10):
    """Minimum-norm solutions of a stack of symmetric PSD normal equations.

    Returns (x, rank_deficient) where rank_deficient is True if any system
    had an eigenvalue below ``rcond`` times its largest.
    """
    lam, V = np.linalg.eigh(A)
    cut = rcond * np.maximum(lam[:, -1:], 0.0)
    keep = lam > cut
    inv = np.where(keep, 1.0 / np.where(keep, lam, 1.0), 0.0)
    x = np.einsum("nkl,nl->nk", V, inv * np.einsum("nlk,nl->nk", V, b))
    return x, bool(not keep.all())


def _lspca_scores(W, mu, x0, obs):
    """Minimum-norm least-squares latent vectors, one per row."""
    A = np.einsum("jd,dkl->jkl", obs, W[:, :, None] * W[:, None, :])
    rhs = ((x0 - mu) * obs) @ W
    return _min_norm_solve(A, rhs)


def _lspca_loadings(Z, x0, obs):
    m, c = Z.shape
    Zt = np.hstack([Z, np.ones((m, 1))])
    G = np.einsum("jd,jkl->dkl", obs, Zt[:, :, None] * Zt[:, None, :])
    b = (x0 * obs).T @ Zt
    sol, singular = _min_norm_solve(G, b)
    return sol[:, :c], sol[:, c], singular


def _sse(W, mu, Z, x0, obs):
    return float((obs * (x0 - Z @ W.T - mu) ** 2).sum())


def _row_sse(W, mu, Z, x0, obs):
    return (obs * (x0 - Z @ W.T - mu) ** 2).sum(axis=1)


def _col_sse(W, mu, Z, x0, obs):
    return (obs * (x0 - Z @ W.T - mu) ** 2).sum(axis=0)


def _init_latent(table, c, rng_seed):
    rng = np.random.default_rng(rng_seed)
    W = 0.1 * rng.standard_normal((table.shape[1], c))
    return W, _observed_means(table)


def lspca_fit_impute(table: MaskedTable, c: int, max_iter: int = 500, tol: float = 1e-5,
                     rng_seed: int = 0) -> ImputeResult:
    """Alternating least squares on the observed cells only.

    The recorded ``history`` holds the squared reconstruction error after
    every half-step and is non-increasing.
    """
    _check_dim(table, c)
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    W, mu = _init_latent(table, c, rng_seed)
    history = []
    singular = False
    converged = False
    it = 0
    prev = None
    Z = None
    for it in range(1, max_iter + 1):
        Z_new, sing = _lspca_scores(W, mu, x0, obs)
        singular |= sing
        if Z is not None:
            # truncated near-singular solves are not exact minimizers; never accept a worse row
            worse = _row_sse(W, mu, Z_new, x0, obs) > _row_sse(W, mu, Z, x0, obs)
            Z_new[worse] = Z[worse]
        Z = Z_new
        history.append(_sse(W, mu, Z, x0, obs))
        W_new, mu_new, sing = _lspca_loadings(Z, x0, obs)
        singular |= sing
        worse = _col_sse(W_new, mu_new, Z, x0, obs) > _col_sse(W, mu, Z, x0, obs)
        W_new[worse], mu_new[worse] = W[worse], mu[worse]
        W, mu = W_new, mu_new
        sse = _sse(W, mu, Z, x0, obs)
        history.append(sse)
        if prev is not None and (prev - sse) <= tol * max(prev, 1e-300):
            converged = True
            break
        prev = sse
    model = LatentModel(LSPCA, W, mu, 0.0, seed=rng_seed, iterations=it)
    flags = []
    if singular:
        flags.append(SINGULAR_SYSTEM)
    if not converged:
        flags.append(NO_CONVERGENCE)
    completed = _impute_latent(model, table)
    return ImputeResult(completed, model, it, converged, tuple(history), tuple(flags))


# --- PPCA ------------------------------------------------------------------

def _posterior(W, mu, v, x0, obs, w_second=None):
    """Gaussian posterior of every row's latent vector given its observed cells.

    ``w_second`` is E[w_i w_i^T] per feature (d, c, c); defaults to w_i w_i^T.
    Returns (means (m, c), covariances (m, c, c), precision matrices / v,
    projected residuals).
    """
    c = W.shape[1]
    if w_second is None:
        w_second = W[:, :, None] * W[:, None, :]
    A = np.einsum("jd,dkl->jkl", obs, w_second) + v * np.eye(c)
    rhs = ((x0 - mu) * obs) @ W
    Ainv = np.linalg.inv(A)
    Z = np.einsum("jkl,jl->jk", Ainv, rhs)
    S = v * Ainv
    return Z, S, A, rhs


def ppca_loglik(W, mu, v, x0, obs, post=None):
    """Observed-data log-likelihood sum_j log N(t_Oj; mu_O, W_O W_O^T + v I)."""
    Z, _, A, rhs = post if post is not None else _posterior(W, mu, v, x0, obs)
    c = W.shape[1]
    o = obs.sum(axis=1)
    r2 = (obs * (x0 - mu) ** 2).sum(axis=1)
    _, logdetA = np.linalg.slogdet(A)
    quad = (r2 - (rhs * Z).sum(axis=1)) / v
    ll = -0.5 * (o * np.log(2 * np.pi) + (o - c) * np.log(v) + logdetA + quad)
    return float(ll.sum())


def _ppca_mstep(Z, S, x0, obs):
    m, c = Z.shape
    Zt = np.hstack([Z, np.ones((m, 1))])
    E = Zt[:, :, None] * Zt[:, None, :]
    E[:, :c, :c] += S
    G = np.einsum("jd,jkl->dkl", obs, E)
    b = (x0 * obs).T @ Zt
    sol = np.linalg.solve(G, b[:, :, None])[:, :, 0]
    W, mu = sol[:, :c], sol[:, c]
    resid = (x0 - Z @ W.T - mu) ** 2 + _quad_rows(W, S)
    v = float((obs * resid).sum() / obs.sum())
    return W, mu, v


def ppca_fit_impute(table: MaskedTable, c: int, max_iter: int = 500, tol: float = 1e-5,
                    rng_seed: int = 0) -> ImputeResult:
    """EM for probabilistic PCA with missing cells.

    The E-step conditions each row's latent vector on that row's observed
    cells; the M-step solves W and mu jointly per feature and updates the
    isotropic noise variance. ``history`` records the observed-data
    log-likelihood of each iterate (non-decreasing).
    """
    _check_dim(table, c)
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    W, mu = _init_latent(table, c, rng_seed)
    v = 1.0
    history = []
    flags = set()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        post = _posterior(W, mu, v, x0, obs)
        ll = ppca_loglik(W, mu, v, x0, obs, post)
        if history and _rel_change(ll, history[-1]) < tol:
            history.append(ll)
            converged = True
            break
        history.append(ll)
        W, mu, v = _ppca_mstep(post[0], post[1], x0, obs)
        if v < V_FLOOR:
            v = V_FLOOR
            flags.add(VARIANCE_COLLAPSE)
    if not converged:
        flags.add(NO_CONVERGENCE)
    model = LatentModel(PPCA, W, mu, v, seed=rng_seed, iterations=it)
    completed = _impute_latent(model, table)
    return ImputeResult(completed, model, it, converged, tuple(history), tuple(sorted(flags)))


# --- VBPCA -----------------------------------------------------------------

def _kl_gauss(mean, cov, prior_var):
    """KL(N(mean, cov) || N(0, diag(prior_var))) for a batch of vectors."""
    k = mean.shape[-1]
    inv = 1.0 / prior_var
    tr = np.einsum("...kk,k->...", cov, inv)
    maha = (mean ** 2 * inv).sum(axis=-1)
    _, logdet = np.linalg.slogdet(cov)
    return 0.5 * (tr + maha - k + np.log(prior_var).sum() - logdet)


def _vb_expected_sqerr(W, w_cov, mu, mu_var, Z, S, x0):
    recon = Z @ W.T + mu
    e = (x0 - recon) ** 2
    e += _quad_rows(W, S)
    e += _quad_rows(Z, w_cov).T
    e += S.reshape(len(S), -1) @ w_cov.reshape(len(w_cov), -1).T
    e += mu_var[None, :]
    return e


def vbpca_bound(W, w_cov, mu, mu_var, v, v_w, v_mu, Z, S, x0, obs):
    """Variational lower bound on the observed-data log evidence."""
    n = obs.sum()
    e = _vb_expected_sqerr(W, w_cov, mu, mu_var, Z, S, x0)
    lik = -0.5 * (n * np.log(2 * np.pi * v) + (obs * e).sum() / v)
    c = W.shape[1]
    kl_z = _kl_gauss(Z, S, np.ones(c)).sum()
    kl_w = _kl_gauss(W, w_cov, v_w).sum()
    kl_mu = 0.5 * (mu_var / v_mu + mu ** 2 / v_mu - 1 + np.log(v_mu) - np.log(mu_var)).sum()
    return float(lik - kl_z - kl_w - kl_mu)


def vbpca_fit_impute(table: MaskedTable, c: int, max_iter: int = 500, tol: float = 1e-5,
                     rng_seed: int = 0, v_mu: float | None = None, v_w=None,
                     fix_hyper: bool = False, hyper_warmup: int = HYPER_WARMUP) -> ImputeResult:
    """Variational Bayesian PCA with Gaussian priors on the loadings and bias.

    Priors are ``mu ~ N(0, v_mu I)`` and ``W[:, k] ~ N(0, v_w[k] I)``. The
    factorized posterior q(Z) q(W) q(mu) is updated by coordinate ascent,
    followed by point updates of ``v`` and, unless ``fix_hyper``, of the
    prior variances. Prior variances stay at their initial values for the
    first ``hyper_warmup`` sweeps; updating them while the loadings are still
    near their small random start prunes components that carry signal.
    ``history`` holds the lower bound after each sweep.
    """
    _check_dim(table, c)
    m, d = table.shape
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    W, mu = _init_latent(table, c, rng_seed)
    w_cov = np.zeros((d, c, c))
    mu_var = np.zeros(d)
    v = 1.0
    v_mu = 1.0 if v_mu is None else float(v_mu)
    v_w = np.ones(c) if v_w is None else np.broadcast_to(np.asarray(v_w, dtype=float), (c,)).copy()
    n_obs = obs.sum(axis=0)
    history = []
    flags = set()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w_second = W[:, :, None] * W[:, None, :] + w_cov
        Z, S, _, _ = _posterior(W, mu, v, x0, obs, w_second)

        # q(mu)
        resid = obs * (x0 - Z @ W.T)
        denom = n_obs * v_mu + v
        mu = v_mu * resid.sum(axis=0) / denom
        mu_var = v * v_mu / denom

        # q(W)
        z_second = Z[:, :, None] * Z[:, None, :] + S
        P = np.einsum("jd,jkl->dkl", obs, z_second) + v * np.diag(1.0 / v_w)
        w_cov = v * np.linalg.inv(P)
        b = (obs * (x0 - mu)).T @ Z
        W = np.einsum("dkl,dl->dk", w_cov, b) / v

        e = _vb_expected_sqerr(W, w_cov, mu, mu_var, Z, S, x0)
        v = float((obs * e).sum() / obs.sum())
        if v < V_FLOOR:
            v = V_FLOOR
            flags.add(VARIANCE_COLLAPSE)

        if not fix_hyper and it > hyper_warmup:
            v_mu = max(float((mu ** 2 + mu_var).mean()), HYPER_FLOOR)
            v_w = np.maximum((W ** 2 + np.einsum("dkk->dk", w_cov)).mean(axis=0), HYPER_FLOOR)

        bound = vbpca_bound(W, w_cov, mu, mu_var, v, v_w, v_mu, Z, S, x0, obs)
        if history and _rel_change(bound, history[-1]) < tol:
            history.append(bound)
            converged = True
            break
        history.append(bound)
    if not converged:
        flags.add(NO_CONVERGENCE)
    model = LatentModel(VBPCA, W, mu, v, v_mu=v_mu, v_w=np.asarray(v_w), w_cov=w_cov,
                        mu_var=mu_var, seed=rng_seed, iterations=it)
    completed = _impute_latent(model, table)
    return ImputeResult(completed, model, it, converged, tuple(history), tuple(sorted(flags)))


# --- frozen-model imputation ---------------------------------------------------

def _impute_latent(model: LatentModel, table: MaskedTable):
    obs = table.mask.astype(float)
    x0 = np.where(table.mask, table.values, 0.0)
    if model.algo == LSPCA:
        Z, _ = _lspca_scores(model.W, model.mu, x0, obs)
    else:
        w_second = model.W[:, :, None] * model.W[:, None, :]
        if model.w_cov is not None:
            w_second = w_second + model.w_cov
        Z = _posterior(model.W, model.mu, model.v, x0, obs, w_second)[0]
    return _fill(table, Z @ model.W.T + model.mu)


def impute_with(model: ImputerModel, table: MaskedTable) -> ImputeResult:
    """Fill the missing cells of ``table`` using a frozen model."""
    if model.d != table.shape[1]:
        raise DimensionMismatch(f"model has {model.d} features, table has {table.shape[1]}")
    if isinstance(model, MeanModel):
        completed = _fill(table, model.means[None, :])
    elif isinstance(model, KMeansModel):
        obs = table.mask.astype(float)
        x0 = np.where(table.mask, table.values, 0.0)
        labels = _partial_sqdist(x0, obs, model.centroids).argmin(axis=1)
        completed = _fill(table, model.centroids[labels])
    else:
        completed = _impute_latent(model, table)
    return ImputeResult(completed, model, getattr(model, "iterations", 0))


def fit_impute(table: MaskedTable, algo: str, c: int = 15, k: int = 5, max_iter: int = 500,
               tol: float = 1e-5, rng_seed: int = 0) -> ImputeResult:
    """Dispatch by imputer name; ``c`` is ignored by the baselines, ``k`` by the PCA family."""
    if algo == MEAN:
        return mean_impute(table)
    if algo == KMEANS:
        return kmeans_impute(table, k=k, rng_seed=rng_seed)
    fitters = {LSPCA: lspca_fit_impute, PPCA: ppca_fit_impute, VBPCA: vbpca_fit_impute}
    if algo not in fitters:
        raise InvalidConfig(f"unknown imputer {algo!r}; expected one of {IMPUTERS}")
    return fitters[algo](table, c, max_iter=max_iter, tol=tol, rng_seed=rng_seed)


# --- serialization -----------------------------------------------------------

def _tolist(a):
    return None if a is None else np.asarray(a).tolist()


def model_to_dict(model: ImputerModel) -> dict:
    if isinstance(model, MeanModel):
        return {"algo": MEAN, "d": model.d, "means": _tolist(model.means)}
    if isinstance(model, KMeansModel):
        return {"algo": KMEANS, "d": model.d, "k": model.centroids.shape[0],
                "centroids": _tolist(model.centroids), "seed": model.seed,
                "iterations": model.iterations}
    return {
        "algo": model.algo, "d": model.d, "c": model.c,
        "W": _tolist(model.W), "mu": _tolist(model.mu), "v": model.v,
        "v_mu": model.v_mu, "v_w": _tolist(model.v_w),
        "w_cov": _tolist(model.w_cov), "mu_var": _tolist(model.mu_var),
        "seed": model.seed, "iterations": model.iterations,
    }


def model_from_dict(doc: dict) -> ImputerModel:
    algo = doc.get("algo")
    if algo == MEAN:
        return MeanModel(np.asarray(doc["means"], dtype=float))
    if algo == KMEANS:
        return KMeansModel(np.asarray(doc["centroids"], dtype=float), doc.get("seed"),
                           doc.get("iterations", 0))
    if algo not in (LSPCA, PPCA, VBPCA):
        raise InvalidConfig(f"unknown imputer model tag {algo!r}")

    def arr(key):
        return None if doc.get(key) is None else np.asarray(doc[key], dtype=float)

    return LatentModel(algo, arr("W").reshape(doc["d"], doc["c"]), arr("mu"), float(doc["v"]),
                       v_mu=doc.get("v_mu"), v_w=arr("v_w"), w_cov=arr("w_cov"),
                       mu_var=arr("mu_var"), seed=doc.get("seed"),
                       iterations=doc.get("iterations", 0))


def dumps_model(model: ImputerModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def loads_model(text: str) -> ImputerModel:
    return model_from_dict(json.loads(text))
