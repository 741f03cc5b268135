"""Sparsest-permutation structure search for vector autoregressions.

For every ordering of the variables the conditional covariance of ``x_t``
given its lags is factored by Cholesky into unit-triangular contemporaneous
effects and diagonal noise; lagged effects follow from ``A0' W = -[A1' .. Ap']``.
Coefficients whose Fisher-z partial correlation is not significant are
zeroed and the survivors re-estimated. The orderings with the fewest edges win.
"""

from dataclasses import dataclass, field
import itertools
from typing import Dict, List, Tuple

import numpy as np
from scipy.stats import norm
from sklearn.base import BaseEstimator

from ._validation import check_alpha, check_count, check_series
from .autocov import conditional_params, estimate_autocov, window_covariance
from .exceptions import InsufficientDataError, InvalidModelError
from .model import CausalModel, TimeSeriesData, signature_of

MAX_VARIABLES = 10


@dataclass(frozen=True)
class FitConfig:
    p: int = 1
    alpha: float = 0.95
    max_lag: int = None
    prune_passes: int = 1
    unbiased: bool = True

    def __post_init__(self):
        check_count(self.p, "p")
        check_alpha(self.alpha)
        check_count(self.prune_passes, "prune_passes", minimum=1)
        if self.max_lag is not None and self.max_lag < self.p:
            raise ValueError(f"max_lag ({self.max_lag}) must be >= p ({self.p})")

    @property
    def autocov_lag(self):
        return self.p if self.max_lag is None else self.max_lag


@dataclass
class FitResult:
    """All signature-distinct models attaining the minimal edge count."""

    models: List[CausalModel]
    sparsity: int
    permutation_log: Dict[Tuple[int, ...], int] = field(default_factory=dict)
    orderings: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def signatures(self):
        return [signature_of(m) for m in self.models]


def critical_value(alpha):
    """Two-sided standard-normal quantile for confidence ``alpha``."""
    return float(norm.ppf(0.5 + 0.5 * alpha))


def cholesky_decompose(cond, order):
    """Causal coefficients implied by ``cond`` under the variable ``order``.

    Factors the permuted conditional precision as ``A0 D0^{-1} A0'`` with
    ``A0`` unit upper triangular in ``order`` coordinates, then solves
    ``A_k = -W_k' A0`` for the lag matrices. Returns ``(stack, d0)`` in the
    original variable order.
    """
    order = np.asarray(order)
    n = cond.gamma0.shape[0]
    g = np.asarray(cond.gamma0)[np.ix_(order, order)]
    precision = np.linalg.solve(g, np.eye(n))
    precision = 0.5 * (precision + precision.T)
    # Upper factor from a lower Cholesky of the index-reversed matrix.
    rev = precision[::-1, ::-1]
    upper = np.linalg.cholesky(rev)[::-1, ::-1]
    diag = np.diag(upper)
    a0p = upper / diag[None, :]
    d0p = 1.0 / diag**2
    a0 = np.empty((n, n))
    a0[np.ix_(order, order)] = a0p
    d0 = np.empty(n)
    d0[order] = d0p
    stack = [a0] + [-wk.T @ a0 for wk in cond.lag_blocks()]
    return np.stack(stack), d0


def _regressor_index(k, i, n):
    """Index of ``x_{i, t-k}`` in the descending window ``[x_t; x_{t-1}; ...]``."""
    return k * n + i


def _solve_equation(cov, target, regressors):
    """Least-squares coefficients and residual variance of ``target`` on ``regressors``."""
    if not regressors:
        return np.zeros(0), float(cov[target, target])
    idx = np.asarray(regressors)
    b = np.linalg.solve(cov[np.ix_(idx, idx)], cov[idx, target])
    resid = float(cov[target, target] - cov[target, idx] @ b)
    return b, resid


def _partial_correlations(cov, target, regressors):
    """Partial correlation of ``target`` with each regressor given the others."""
    idx = np.asarray(list(regressors) + [target])
    prec = np.linalg.inv(cov[np.ix_(idx, idx)])
    d = np.sqrt(np.diag(prec))
    return -prec[:-1, -1] / (d[:-1] * d[-1])


def _check_effective_size(n_eff, cond_size):
    if n_eff - cond_size - 3 <= 0:
        raise InsufficientDataError(
            f"effective sample size {n_eff} too small for a conditioning set of {cond_size}"
        )


def prune_edges(model, window_cov, n_eff, alpha, passes=1, _cache=None):
    """Zero the coefficients of ``model`` that fail a Fisher-z significance test.

    For every equation (variable ``j``) the candidate regressors are the
    nonzero entries of column ``j`` in the coefficient stack. Each one is kept
    iff ``|atanh(rho)| * sqrt(n_eff - |S| - 3)`` exceeds the two-sided normal
    quantile at ``alpha``, where ``rho`` is its partial correlation with
    ``x_j`` given the other candidates (``|S|`` of them). Survivors are then
    re-estimated by least squares on ``window_cov``. With ``passes > 1`` the
    test is repeated on the survivors until nothing changes.

    Returns a new model in the same variable order.
    """
    n, p = model.n, model.p
    crit = critical_value(alpha)
    stack = model.coefficient_stack()
    out = np.zeros_like(stack)
    out[0] = np.eye(n)
    d0 = np.empty(n)
    for j in range(n):
        support = [(k, i) for k in range(p + 1) for i in range(n) if not (k == 0 and i == j) and stack[k, i, j] != 0]
        regs = tuple(_regressor_index(k, i, n) for k, i in support)
        key = (j, regs)
        if _cache is not None and key in _cache:
            kept, b, resid = _cache[key]
        else:
            kept = list(range(len(regs)))
            for _ in range(passes):
                if not kept:
                    break
                cur = [regs[r] for r in kept]
                _check_effective_size(n_eff, len(cur) - 1)
                rho = _partial_correlations(window_cov, j, cur)
                z = np.abs(np.arctanh(np.clip(rho, -1 + 1e-16, 1 - 1e-16))) * np.sqrt(n_eff - len(cur) + 1 - 3)
                survivors = [r for r, zz in zip(kept, z) if zz > crit]
                if survivors == kept:
                    break
                kept = survivors
            b, resid = _solve_equation(window_cov, j, [regs[r] for r in kept])
            if _cache is not None:
                _cache[key] = (kept, b, resid)
        for r, coef in zip(kept, b):
            k, i = support[r]
            out[k, i, j] = -coef
        d0[j] = resid
    return CausalModel.from_stack(out, d0, labels=model.labels)


def _prepare(data, cfg):
    data = TimeSeriesData.coerce(data)
    if data.n > MAX_VARIABLES:
        raise ValueError(f"exhaustive permutation search is limited to {MAX_VARIABLES} variables, got {data.n}")
    acs = estimate_autocov(data, cfg.autocov_lag, unbiased=cfg.unbiased)
    return data, acs


def fit(data, cfg=None):
    """Sparsest-permutation fit of a lag-``cfg.p`` causal model.

    Every permutation of the variables is evaluated (lexicographic order).
    All models reaching the smallest edge count are returned in original
    variable order, keeping the first model seen for each signature.
    """
    cfg = FitConfig() if cfg is None else cfg
    data, acs = _prepare(data, cfg)
    n, p = data.n, cfg.p
    cond = conditional_params(acs, p)
    cov = window_covariance(acs, p)
    n_eff = data.T - p
    _check_effective_size(n_eff, n - 1 + n * p - 1)
    cache = {}
    log = {}
    best = None
    winners = []
    for order in itertools.permutations(range(n)):
        stack, d0 = cholesky_decompose(cond, order)
        candidate = CausalModel.from_stack(stack, d0, labels=data.labels)
        pruned = prune_edges(candidate, cov, n_eff, cfg.alpha, passes=cfg.prune_passes, _cache=cache)
        s = pruned.edge_count()
        log[order] = s
        if best is None or s < best:
            best, winners = s, [(order, pruned)]
        elif s == best:
            winners.append((order, pruned))
    models, orderings, seen = [], [], set()
    for order, m in winners:
        sig = signature_of(m)
        if sig not in seen:
            seen.add(sig)
            models.append(m)
            orderings.append(order)
    return FitResult(models=models, sparsity=best, permutation_log=log, orderings=orderings)


def refit_on_structure(data, sig, p=None, max_lag=None, unbiased=True):
    """Least-squares coefficients on a fixed support.

    Each variable is regressed on its contemporaneous and lagged parents in
    ``sig`` using the sample autocovariances; every other coefficient is zero.
    """
    if not sig.is_acyclic():
        raise InvalidModelError("signature has a contemporaneous cycle")
    p = sig.p if p is None else p
    if p != sig.p:
        raise ValueError(f"signature has p={sig.p}, requested p={p}")
    data = TimeSeriesData.coerce(data)
    if data.n != sig.n:
        raise ValueError(f"signature has n={sig.n} but data has {data.n} columns")
    acs = estimate_autocov(data, p if max_lag is None else max_lag, unbiased=unbiased)
    cov = window_covariance(acs, p)
    n = sig.n
    out = np.zeros((p + 1, n, n))
    out[0] = np.eye(n)
    d0 = np.empty(n)
    for j in range(n):
        cont, temp = sig.parents(j)
        support = [(0, i) for i in cont] + [(k, i) for i, k in temp]
        support.sort()
        b, d0[j] = _solve_equation(cov, j, [_regressor_index(k, i, n) for k, i in support])
        for (k, i), coef in zip(support, b):
            out[k, i, j] = -coef
    return CausalModel.from_stack(out, d0, labels=data.labels)


class SparsestPermutationVAR(BaseEstimator):
    """Estimator interface to :func:`fit`.

    Attributes after fitting: ``models_`` (all minimal models), ``model_``
    (the first of them), ``sparsity_``, ``signatures_``,
    ``permutation_log_``, ``coef_`` (coefficient stack of ``model_``),
    ``noise_var_`` and ``mean_``.
    """

    def __init__(self, lags=1, alpha=0.95, max_lag=None, prune_passes=1):
        self.lags = lags
        self.alpha = alpha
        self.max_lag = max_lag
        self.prune_passes = prune_passes

    def _config(self):
        return FitConfig(p=self.lags, alpha=self.alpha, max_lag=self.max_lag, prune_passes=self.prune_passes)

    def fit(self, X, y=None):
        values, labels = check_series(X, min_samples=self.lags + 2)
        data = TimeSeriesData(values, labels)
        result = fit(data, self._config())
        self.n_features_in_ = data.n
        if labels is not None:
            self.feature_names_in_ = np.asarray(labels, dtype=object)
        self.result_ = result
        self.models_ = result.models
        self.model_ = result.models[0]
        self.sparsity_ = result.sparsity
        self.signatures_ = result.signatures
        self.permutation_log_ = result.permutation_log
        self.coef_ = self.model_.coefficient_stack()
        self.noise_var_ = self.model_.d0
        self.mean_ = values.mean(axis=0)
        return self

    def predict(self, X):
        """One-step-ahead conditional means for rows ``p..T-1`` of ``X``."""
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "model_")
        values, _ = check_series(X, min_samples=self.lags + 1)
        if values.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {values.shape[1]} columns, expected {self.n_features_in_}")
        phis, _ = self.model_.reduced_form()
        xc = values - self.mean_
        T, p = xc.shape[0], self.lags
        pred = np.tile(self.mean_, (T - p, 1))
        for k, phi in enumerate(phis, start=1):
            pred += xc[p - k:T - k] @ phi.T
        return pred
