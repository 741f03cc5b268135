"""Structure robustness under surrogate resampling, and coefficient standard errors.

Each replicate draws a surrogate series from the conditional Gaussian of
the data, refits it, and records the signature of every minimal model.
A structure seen in ``K`` of ``N`` replicates has robustness ``100 K / N``.
"""

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
from typing import List, Optional

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_seed_sequence, check_count, check_series, child_seed
from .exceptions import TSRobustError
from .model import CausalModel, StructureSignature, TimeSeriesData, signature_of
from .sptime import FitConfig, fit
from .synth import surrogate

logger = logging.getLogger(__name__)

FAILED = "FAILED"


@dataclass(frozen=True)
class SurrogateConfig:
    """How replicates are drawn. ``p=None`` uses ``lag_multiplier * fit p`` (at least 1)."""

    p: Optional[int] = None
    lag_multiplier: int = 1
    T_out: Optional[int] = None
    burn_in: Optional[int] = None

    def lags_for(self, fit_cfg):
        if self.p is not None:
            return self.p
        return max(1, self.lag_multiplier * fit_cfg.p)


@dataclass
class StructureEntry:
    signature: StructureSignature
    count: int
    robustness: float
    coeff_mean: np.ndarray
    coeff_std: np.ndarray
    d0_mean: np.ndarray

    def mean_model(self, labels=None):
        return CausalModel.from_stack(self.coeff_mean, self.d0_mean, labels=labels)


@dataclass
class RobustnessReport:
    structures: List[StructureEntry]
    N: int
    failures: int
    seed: object
    original: object = None
    replicate_signatures: list = field(default_factory=list)
    labels: tuple = None

    @property
    def most_robust(self):
        """Index of the maximum-robustness structure (ties: smallest signature)."""
        return 0 if self.structures else None

    @property
    def best(self):
        return self.structures[0] if self.structures else None

    @property
    def max_robustness(self):
        return self.structures[0].robustness if self.structures else 0.0

    def robustness_of(self, sig):
        for entry in self.structures:
            if entry.signature == sig:
                return entry.robustness
        return 0.0


def coefficient_stats(replicate_stacks, sig):
    """Entrywise mean and sample standard deviation over replicate coefficient stacks.

    ``replicate_stacks`` holds ``CausalModel`` objects or (p+1, n, n) arrays
    that all share ``sig``. Off-support entries are exactly zero in both
    outputs (the ``A0`` diagonal of the mean is one). With fewer than two
    replicates the on-support standard deviations are NaN.
    """
    stacks = np.array([m.coefficient_stack() if isinstance(m, CausalModel) else np.asarray(m) for m in replicate_stacks])
    if stacks.ndim != 4 or len(stacks) == 0:
        raise ValueError("need at least one replicate")
    mask = sig.support_mask()
    if stacks.shape[1:] != mask.shape:
        raise ValueError(f"replicate stacks have shape {stacks.shape[1:]}, signature implies {mask.shape}")
    mean = np.where(mask, stacks.mean(axis=0), 0.0)
    mean[0][np.diag_indices(sig.n)] = 1.0
    if len(stacks) < 2:
        std = np.where(mask, np.nan, 0.0)
    else:
        std = np.where(mask, stacks.std(axis=0, ddof=1), 0.0)
    return mean, std


def _replicate(data, fit_cfg, sur_cfg, seed):
    """One surrogate + fit; returns ``[(signature, stack, d0), ...]`` or ``None`` on failure."""
    try:
        sur = surrogate(data, sur_cfg.lags_for(fit_cfg), T_out=sur_cfg.T_out, burn_in=sur_cfg.burn_in, seed=seed)
        result = fit(sur, fit_cfg)
    except (TSRobustError, np.linalg.LinAlgError) as exc:
        logger.debug("replicate failed: %s", exc)
        return None
    return [(signature_of(m), m.coefficient_stack(), np.asarray(m.d0)) for m in result.models]


def _replicate_batch(args):
    data, fit_cfg, sur_cfg, seeds = args
    return [_replicate(data, fit_cfg, sur_cfg, s) for s in seeds]


def compute_robustness(data, fit_cfg=None, N=100, surrogate_cfg=None, seed=None, n_jobs=1):
    """Robustness of every structure observed across ``N`` surrogate refits.

    Replicate ``i`` uses the child seed ``SeedSequence(seed, spawn_key=(i,))``,
    so the report does not depend on ``n_jobs``. When a replicate's fit
    returns several minimal models each distinct signature is counted once
    for it. Failed replicates stay in the denominator. The fit of the
    original data is stored in ``report.original`` and not counted.
    """
    data = TimeSeriesData.coerce(data)
    fit_cfg = FitConfig() if fit_cfg is None else fit_cfg
    surrogate_cfg = SurrogateConfig() if surrogate_cfg is None else surrogate_cfg
    N = check_count(N, "N", minimum=2)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
    master = as_seed_sequence(seed)
    original = fit(data, fit_cfg)
    seeds = [child_seed(master, i) for i in range(N)]

    if n_jobs is None or n_jobs == 1:
        outcomes = [_replicate(data, fit_cfg, surrogate_cfg, s) for s in seeds]
    else:
        workers = n_jobs if n_jobs > 0 else None
        chunks = np.array_split(np.arange(N), max(1, min(N, 4 * (workers or 4))))
        jobs = [(data, fit_cfg, surrogate_cfg, [seeds[i] for i in c]) for c in chunks if len(c)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = [o for batch in pool.map(_replicate_batch, jobs) for o in batch]

    return aggregate(outcomes, N, seed=seed, original=original, labels=data.labels)


def aggregate(outcomes, N, seed=None, original=None, labels=None):
    """Fold per-replicate outcomes (in replicate order) into a report."""
    stacks = defaultdict(list)
    noises = defaultdict(list)
    replicate_sigs = []
    failures = 0
    for outcome in outcomes:
        if outcome is None:
            failures += 1
            replicate_sigs.append(FAILED)
            continue
        sigs = []
        for sig, stack, d0 in outcome:
            stacks[sig].append(stack)
            noises[sig].append(d0)
            sigs.append(sig)
        replicate_sigs.append(tuple(sigs))
    entries = []
    for sig, group in stacks.items():
        mean, std = coefficient_stats(group, sig)
        entries.append(
            StructureEntry(
                signature=sig,
                count=len(group),
                robustness=100.0 * len(group) / N,
                coeff_mean=mean,
                coeff_std=std,
                d0_mean=np.mean(noises[sig], axis=0),
            )
        )
    entries.sort(key=lambda e: (-e.count, e.signature.sort_key()))
    return RobustnessReport(
        structures=entries,
        N=N,
        failures=failures,
        seed=seed,
        original=original,
        replicate_signatures=replicate_sigs,
        labels=labels,
    )


class RobustnessAnalyzer(BaseEstimator):
    """Estimator interface to :func:`compute_robustness`.

    After ``fit``: ``report_``, ``signature_`` and ``robustness_`` of the most
    robust structure, ``model_`` (its mean coefficients), ``coef_std_``.
    """

    def __init__(self, lags=1, alpha=0.95, n_replicates=100, surrogate_lags=None, burn_in=None, random_state=None, n_jobs=1):
        self.lags = lags
        self.alpha = alpha
        self.n_replicates = n_replicates
        self.surrogate_lags = surrogate_lags
        self.burn_in = burn_in
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        values, labels = check_series(X, min_samples=self.lags + 2)
        data = TimeSeriesData(values, labels)
        report = compute_robustness(
            data,
            FitConfig(p=self.lags, alpha=self.alpha),
            N=self.n_replicates,
            surrogate_cfg=SurrogateConfig(p=self.surrogate_lags, burn_in=self.burn_in),
            seed=self.random_state,
            n_jobs=self.n_jobs,
        )
        self.n_features_in_ = data.n
        if labels is not None:
            self.feature_names_in_ = np.asarray(labels, dtype=object)
        self.report_ = report
        best = report.best
        if best is None:
            raise TSRobustError("every replicate failed")
        self.signature_ = best.signature
        self.robustness_ = best.robustness
        self.model_ = best.mean_model(labels=data.labels)
        self.coef_ = best.coeff_mean
        self.coef_std_ = best.coeff_std
        return self
