"""Synthetic stand-in for the loop-detector crash table.

Rows follow a rank-r Gaussian factor model ``x = W z + mu + eps``. The first
``strong_rank`` loading columns have unit scale; the remaining ones decay
geometrically from ``tail_scale``, giving a spectrum that keeps paying off
as more latent dimensions are used. Crash rows draw their latent vector from
``N(s * a, I)`` for a fixed unit direction ``a`` inside the strong subspace,
so the class signal lives in the factor structure and survives PCA-style
imputation. Because both classes share the covariance
``W W^T + noise_std^2 I`` the Bayes-optimal score is linear and its AUC has a
closed form.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .data import LabeledDataset, MaskedTable, Scaler, fit_scaler, transform
from .errors import InvalidConfig

FEATURE_NAMES = tuple(
    f"{var}-m{sensor}-{t}"
    for var in "fos"
    for sensor in range(1, 5)
    for t in ("t3", "t2")
)


@dataclass(frozen=True)
class GeneratorConfig:
    n_crash: int = 123
    n_noncrash: int = 1230
    d: int = 24
    latent_rank: int = 15
    strong_rank: int = 3
    tail_scale: float = 0.5
    tail_decay: float = 0.85
    noise_std: float = 0.1
    class_shift: float = 2.0
    rng_seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.n_crash < 0 or self.n_noncrash < 0 or self.n_crash + self.n_noncrash < 2:
            raise InvalidConfig("need at least two rows")
        if self.d < 2:
            raise InvalidConfig("need at least two features")
        if not 1 <= self.latent_rank < self.d:
            raise InvalidConfig(f"latent_rank must lie in [1, {self.d - 1}]")
        if not 1 <= self.strong_rank <= self.latent_rank:
            raise InvalidConfig("strong_rank must lie in [1, latent_rank]")
        if self.tail_scale < 0 or not 0 < self.tail_decay <= 1:
            raise InvalidConfig("tail_scale must be >= 0 and tail_decay in (0, 1]")
        if self.noise_std < 0 or self.class_shift < 0:
            raise InvalidConfig("noise_std and class_shift must be non-negative")

    @property
    def column_names(self):
        if self.d == len(FEATURE_NAMES):
            return FEATURE_NAMES
        return tuple(f"x{j}" for j in range(self.d))

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown generator fields: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True, eq=False)
class GeneratorTruth:
    """Ground truth behind a generated dataset (raw, unstandardized scale)."""

    W: np.ndarray
    mu: np.ndarray
    shift: np.ndarray
    covariance: np.ndarray
    bayes_scores: np.ndarray
    bayes_auc: float
    scaler: Optional[Scaler]
    raw_values: np.ndarray = field(repr=False)


def generate_with_truth(config: GeneratorConfig):
    rng = np.random.default_rng(config.rng_seed)
    d, r = config.d, config.latent_rank
    k = config.strong_rank
    scale = np.concatenate([np.ones(k), config.tail_scale * config.tail_decay ** np.arange(r - k)])
    W = rng.standard_normal((d, r)) * scale
    mu = rng.standard_normal(d)
    direction = np.zeros(r)
    direction[:k] = rng.standard_normal(k)
    direction /= np.linalg.norm(direction)

    m = config.n_crash + config.n_noncrash
    labels = np.concatenate([np.ones(config.n_crash, dtype=np.int64),
                             -np.ones(config.n_noncrash, dtype=np.int64)])
    z = rng.standard_normal((m, r))
    z[labels == 1] += config.class_shift * direction
    eps = config.noise_std * rng.standard_normal((m, d))
    raw = z @ W.T + mu + eps

    cov = W @ W.T + config.noise_std ** 2 * np.eye(d)
    shift = config.class_shift * (W @ direction)
    # Bayes log-likelihood ratio; pinv covers the noise-free (singular) case
    precision_shift = np.linalg.pinv(cov, hermitian=True) @ shift
    bayes = (raw - mu - 0.5 * shift) @ precision_shift
    maha = math.sqrt(max(float(shift @ precision_shift), 0.0))
    bayes_auc = float(norm.cdf(maha / math.sqrt(2.0)))

    table = MaskedTable(raw, np.ones_like(raw, dtype=bool), config.column_names)
    scaler = None
    if config.standardize:
        scaler = fit_scaler(table)
        table = transform(table, scaler)
    truth = GeneratorTruth(W, mu, shift, cov, bayes, bayes_auc, scaler, raw)
    return LabeledDataset(table, labels), truth


def generate(config: GeneratorConfig) -> LabeledDataset:
    return generate_with_truth(config)[0]
