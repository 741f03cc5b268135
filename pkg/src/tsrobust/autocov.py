"""Autocovariance estimation, block-Toeplitz assembly and the conditional Gaussian.

Convention: ``L_tau = E[(x_{t+tau} - mu)(x_t - mu)']`` so ``L_{-tau} = L_tau'``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from ._validation import check_count
from .exceptions import (
    DegenerateAutocovarianceError,
    DegenerateConditionalError,
    InsufficientDataError,
    StationarityError,
)
from .model import TimeSeriesData, is_stationary, spectral_radius

RCOND_CAP = 1e-12
# Enough for spectral radii up to about 0.99997 at double precision.
MAX_BURN_COPIES = 500_000


@dataclass(frozen=True)
class AutocovSet:
    """Autocovariance blocks ``L_0..L_k`` (each n x n)."""

    blocks: Tuple[np.ndarray, ...]
    sample_size: int = None

    def __post_init__(self):
        blocks = []
        for b in self.blocks:
            b = np.array(b, dtype=np.float64)
            b.setflags(write=False)
            blocks.append(b)
        if not blocks:
            raise ValueError("need at least L_0")
        n = blocks[0].shape[0]
        if any(b.shape != (n, n) for b in blocks):
            raise ValueError("all autocovariance blocks must be n x n")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def n(self):
        return self.blocks[0].shape[0]

    @property
    def max_lag(self):
        return len(self.blocks) - 1

    def lag(self, tau):
        """``L_tau`` for any integer ``tau`` (negative lags are transposes)."""
        return self.blocks[tau] if tau >= 0 else self.blocks[-tau].T


@dataclass(frozen=True)
class ConditionalParams:
    """``x_t | x_{t-1..t-p} ~ N(w @ [x_{t-1}; ...; x_{t-p}], gamma0)``."""

    w: np.ndarray
    gamma0: np.ndarray

    @property
    def p(self):
        n = self.gamma0.shape[0]
        return self.w.shape[1] // n

    def lag_blocks(self):
        """``[W_1, ..., W_p]``, the n x n blocks of ``w``."""
        n = self.gamma0.shape[0]
        return [self.w[:, k * n:(k + 1) * n] for k in range(self.p)]


def estimate_autocov(data, max_lag, unbiased=True):
    """Sample autocovariances ``L_0..L_max_lag`` after centering each column.

    With ``unbiased=True`` lag ``tau`` is normalised by ``T - tau``; otherwise
    by ``T``, which keeps the block-Toeplitz stack positive semidefinite.
    """
    data = TimeSeriesData.coerce(data)
    max_lag = check_count(max_lag, "max_lag")
    x = data.values
    T = x.shape[0]
    if max_lag > T - 2:
        raise InsufficientDataError(f"max_lag={max_lag} needs at least {max_lag + 2} observations, got {T}")
    xc = x - x.mean(axis=0)
    blocks = []
    for tau in range(max_lag + 1):
        prod = xc[tau:].T @ xc[:T - tau]
        blocks.append(prod / ((T - tau) if unbiased else T))
    blocks[0] = 0.5 * (blocks[0] + blocks[0].T)
    return AutocovSet(tuple(blocks), sample_size=T)


def build_toeplitz(acs, p):
    """``n*p x n*p`` symmetric block-Toeplitz matrix with block (i, j) = ``L_{i-j}``.

    This is the covariance of the ascending window ``[x_{t-p+1}; ...; x_t]``.
    """
    p = check_count(p, "p", minimum=1)
    if p - 1 > acs.max_lag:
        raise InsufficientDataError(f"order {p} Toeplitz needs lags up to {p - 1}, have {acs.max_lag}")
    n = acs.n
    out = np.empty((n * p, n * p))
    for i in range(p):
        for j in range(p):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = acs.lag(i - j)
    return out


def window_covariance(acs, p):
    """Covariance of the descending window ``[x_t; x_{t-1}; ...; x_{t-p}]``."""
    if p > acs.max_lag:
        raise InsufficientDataError(f"need autocovariances up to lag {p}, have {acs.max_lag}")
    n = acs.n
    out = np.empty((n * (p + 1), n * (p + 1)))
    for i in range(p + 1):
        for j in range(p + 1):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = acs.lag(j - i)
    return out


def _reverse_blocks(m, n):
    k = m.shape[0] // n
    idx = np.concatenate([np.arange(b * n, (b + 1) * n) for b in reversed(range(k))])
    return m[np.ix_(idx, idx)]


def _check_rcond(sym, what, exc):
    eig = np.linalg.eigvalsh(sym)
    top = eig[-1]
    if top <= 0 or eig[0] / top < RCOND_CAP:
        raise exc(f"{what} is singular or ill-conditioned (eigenvalues {eig[0]:.3g}..{top:.3g})")


def conditional_params(acs, p):
    """Mean weights ``W`` and covariance ``Gamma0`` of ``x_t`` given its ``p`` predecessors.

    ``W = [L_1 ... L_p] S^{-1}`` and ``Gamma0 = L_0 - W [L_1 ... L_p]'``
    where ``S`` is the covariance of ``[x_{t-1}; ...; x_{t-p}]`` (the
    block-reversed :func:`build_toeplitz`). ``p = 0`` gives ``W`` empty and
    ``Gamma0 = L_0``.

    Raises
    ------
    DegenerateAutocovarianceError
        If ``S`` is singular or its reciprocal condition number is below 1e-12.
    DegenerateConditionalError
        If the symmetrised ``Gamma0`` is not positive definite.
    """
    p = check_count(p, "p")
    n = acs.n
    if p == 0:
        gamma0 = np.array(acs.blocks[0])
        w = np.zeros((n, 0))
    else:
        if p > acs.max_lag:
            raise InsufficientDataError(f"need autocovariances up to lag {p}, have {acs.max_lag}")
        s = _reverse_blocks(build_toeplitz(acs, p), n)
        _check_rcond(s, "lagged block-Toeplitz covariance", DegenerateAutocovarianceError)
        cross = np.hstack([acs.blocks[k] for k in range(1, p + 1)])
        try:
            factor = sla.cho_factor(s, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise DegenerateAutocovarianceError("lagged block-Toeplitz covariance is not positive definite") from exc
        w = sla.cho_solve(factor, cross.T, check_finite=False).T
        gamma0 = acs.blocks[0] - w @ cross.T
    gamma0 = 0.5 * (gamma0 + gamma0.T)
    try:
        np.linalg.cholesky(gamma0)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConditionalError("conditional covariance is not positive definite") from exc
    w.setflags(write=False)
    gamma0.setflags(write=False)
    return ConditionalParams(w=w, gamma0=gamma0)


def _copies_needed(model, max_lag, tol=1e-15):
    rho = spectral_radius(model)
    if rho <= 0.0:
        burn = 1
    else:
        burn = int(np.ceil(np.log(tol) / (2.0 * np.log(rho)))) + 1
    return max_lag + model.p + 1 + min(max(burn, 10), MAX_BURN_COPIES)


def _sparse_stack(model, copies):
    """Sparse equivalent of :func:`stack_full_matrix`."""
    stack = model.coefficient_stack()
    return sum(
        sparse.kron(sparse.eye(copies, k=-k), sparse.csr_matrix(stack[k].T))
        for k in range(model.p + 1)
    ).tocsr()


def model_implied_autocov(model, max_lag, copies=None):
    """Exact autocovariances ``L_0..L_max_lag`` of a stationary model.

    Inverts ``A' D^{-1} A`` for the stacked coefficient matrix with
    ``copies`` time steps (chosen from the spectral radius when omitted, so
    that the start-up transient is below double precision) and reads the
    blocks at the end of the window.
    """
    max_lag = check_count(max_lag, "max_lag")
    if not is_stationary(model):
        raise StationarityError("model is not stationary")
    n = model.n
    copies = _copies_needed(model, max_lag) if copies is None else int(copies)
    if copies < max_lag + 1:
        raise ValueError("copies must exceed max_lag")
    m = _sparse_stack(model, copies)
    dinv = sparse.diags(np.tile(1.0 / model.d0, copies))
    precision = (m.T @ dinv @ m).tocsr()
    # Precision is banded (half-bandwidth n*(p+1)-1): banded Cholesky keeps this O(copies).
    u = n * (model.p + 1) - 1
    size = n * copies
    ab = np.zeros((u + 1, size))
    for d in range(u + 1):
        ab[u - d, d:] = precision.diagonal(d)
    tail = n * (max_lag + 1)
    rhs = np.zeros((size, tail))
    rhs[-tail:, :] = np.eye(tail)
    cols = sla.cho_solve_banded((sla.cholesky_banded(ab), False), rhs)
    last = slice(n * (copies - 1), n * copies)
    blocks = []
    for tau in range(max_lag + 1):
        # L_tau = E[x_t x_{t-tau}'] read at the last time step.
        j = max_lag - tau
        blocks.append(cols[last, j * n:(j + 1) * n])
    blocks[0] = 0.5 * (blocks[0] + blocks[0].T)
    return AutocovSet(tuple(blocks), sample_size=None)
