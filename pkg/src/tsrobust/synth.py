"""Random stationary models, simulation and autocovariance-based surrogates."""

from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_count, check_series
from .autocov import conditional_params, estimate_autocov
from .exceptions import DimensionError, GenerationFailedError, StationarityError
from .model import CausalModel, TimeSeriesData, default_labels, is_stationary


@dataclass(frozen=True)
class ModelGenConfig:
    """Parameters for :func:`random_model`.

    ``noise_log_mean``/``noise_log_sd`` parameterise the lognormal noise
    variances; the defaults put 90% of the variances in roughly [0.31, 0.43].
    """

    n: int
    p: int
    r: float
    lo: float = 0.4
    hi: float = 1.0
    noise_log_mean: float = -1.0
    noise_log_sd: float = 0.1
    max_attempts: int = 100_000
    seed: object = None

    def __post_init__(self):
        check_count(self.n, "n", minimum=1)
        check_count(self.p, "p")
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"connectivity ratio must lie in (0, 1], got {self.r}")
        if not 0.0 < self.lo < self.hi:
            raise ValueError(f"need 0 < lo < hi, got [{self.lo}, {self.hi}]")
        if self.noise_log_sd < 0:
            raise ValueError("noise_log_sd must be non-negative")
        check_count(self.max_attempts, "max_attempts", minimum=1)

    @property
    def max_edges(self):
        return self.n * (self.n - 1) // 2 + self.n * self.n * self.p

    @property
    def target_edges(self):
        # round half away from zero
        return int(math.floor(self.r * self.max_edges + 0.5))


def default_burn_in(n, p):
    return max(100, 10 * p * n)


def _draw_model(cfg, rng):
    n, p = cfg.n, cfg.p
    order = rng.permutation(n)
    positions = [(0, int(order[a]), int(order[b])) for a in range(n) for b in range(a + 1, n)]
    positions += [(k, i, j) for k in range(1, p + 1) for i in range(n) for j in range(n)]
    keep = rng.choice(len(positions), size=cfg.target_edges, replace=False)
    stack = np.zeros((p + 1, n, n))
    stack[0] = np.eye(n)
    for idx in np.sort(keep):
        k, i, j = positions[idx]
        stack[k, i, j] = rng.choice((-1.0, 1.0)) * rng.uniform(cfg.lo, cfg.hi)
    d0 = np.exp(rng.normal(cfg.noise_log_mean, cfg.noise_log_sd, size=n))
    return CausalModel.from_stack(stack, d0)


def random_model(cfg, seed=None):
    """Draw a random stationary model with exactly ``cfg.target_edges`` edges.

    A random variable ordering fixes which contemporaneous positions are
    admissible. Surviving coefficients are uniform on ``[-hi, -lo] U [lo, hi]``.
    Candidates are redrawn until the model is stationary.

    Raises
    ------
    GenerationFailedError
        After ``cfg.max_attempts`` nonstationary draws.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    for _ in range(cfg.max_attempts):
        model = _draw_model(cfg, rng)
        if is_stationary(model):
            return model
    raise GenerationFailedError(cfg.max_attempts)


def _run_var(weights, noise, p):
    """Iterate ``x_t = weights @ [x_{t-1}; ...; x_{t-p}] + noise_t`` from a zero start."""
    steps, n = noise.shape
    out = np.empty((steps, n))
    if p == 0:
        out[:] = noise
        return out
    hist = np.zeros(n * p)
    dot = np.dot
    for t in range(steps):
        x = dot(weights, hist) + noise[t]
        out[t] = x
        hist[n:] = hist[:-n]
        hist[:n] = x
    return out


def simulate(model, T, burn_in=None, seed=None):
    """Simulate ``T`` observations of ``model`` after discarding ``burn_in`` start-up rows."""
    T = check_count(T, "T", minimum=1)
    if T < model.p + 1:
        raise DimensionError(f"T must be at least p+1={model.p + 1}")
    if not is_stationary(model):
        raise StationarityError("cannot simulate a nonstationary model")
    burn_in = default_burn_in(model.n, model.p) if burn_in is None else check_count(burn_in, "burn_in")
    rng = np.random.default_rng(seed)
    phis, b = model.reduced_form()
    weights = np.hstack(phis) if phis else np.zeros((model.n, 0))
    eps = rng.standard_normal((T + burn_in, model.n)) * np.sqrt(model.d0)
    x = _run_var(weights, eps @ b.T, model.p)
    return TimeSeriesData(x[burn_in:], model.labels)


def sample_conditional(cond, T, burn_in, rng, mean=None):
    """Draw ``T`` rows sequentially from ``N(W [x_{t-1}; ...], Gamma0)``."""
    n = cond.gamma0.shape[0]
    chol = np.linalg.cholesky(cond.gamma0)
    noise = rng.standard_normal((T + burn_in, n)) @ chol.T
    x = _run_var(np.asarray(cond.w), noise, cond.p)[burn_in:]
    if mean is not None:
        x = x + mean
    return x


def surrogate(data, p, T_out=None, burn_in=None, seed=None):
    """Statistically similar replacement series for ``data``.

    Fits the lag-``p`` conditional Gaussian from the sample autocovariances
    and samples from it sequentially, adding the source column means back.
    Deterministic given ``seed``.
    """
    data = TimeSeriesData.coerce(data)
    p = check_count(p, "p")
    T_out = data.T if T_out is None else check_count(T_out, "T_out", minimum=1)
    burn_in = default_burn_in(data.n, p) if burn_in is None else check_count(burn_in, "burn_in")
    cond = conditional_params(estimate_autocov(data, p), p)
    rng = np.random.default_rng(seed)
    x = sample_conditional(cond, T_out, burn_in, rng, mean=data.values.mean(axis=0))
    return TimeSeriesData(x, data.labels)


class SurrogateGenerator(BaseEstimator):
    """Estimator wrapper around :func:`surrogate`.

    ``fit`` estimates the conditional Gaussian; ``sample`` draws new series
    from it. ``transform`` returns one surrogate of the same length as its input.

    Parameters
    ----------
    lags : int
        Conditioning depth ``p``.
    burn_in : int or None
        Start-up rows to discard; ``None`` uses ``max(100, 10*p*n)``.
    random_state : int, SeedSequence or None
    """

    def __init__(self, lags=1, burn_in=None, random_state=None):
        self.lags = lags
        self.burn_in = burn_in
        self.random_state = random_state

    def fit(self, X, y=None):
        values, labels = check_series(X, min_samples=self.lags + 2)
        self.n_features_in_ = values.shape[1]
        if labels is not None:
            self.feature_names_in_ = np.asarray(labels, dtype=object)
        self.mean_ = values.mean(axis=0)
        self.autocov_ = estimate_autocov(values, self.lags)
        self.conditional_ = conditional_params(self.autocov_, self.lags)
        self.w_ = self.conditional_.w
        self.gamma0_ = self.conditional_.gamma0
        self._rng = np.random.default_rng(self.random_state)
        return self

    def sample(self, n_samples, random_state=None):
        if not hasattr(self, "conditional_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit before sample")
        rng = self._rng if random_state is None else np.random.default_rng(random_state)
        burn = default_burn_in(self.n_features_in_, self.lags) if self.burn_in is None else self.burn_in
        return sample_conditional(self.conditional_, n_samples, burn, rng, mean=self.mean_)

    def transform(self, X):
        values, _ = check_series(X)
        return self.sample(values.shape[0])

    def get_feature_names_out(self, input_features=None):
        if hasattr(self, "feature_names_in_"):
            return self.feature_names_in_
        return np.asarray(default_labels(self.n_features_in_), dtype=object)
