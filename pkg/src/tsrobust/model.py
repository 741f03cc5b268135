"""Linear-Gaussian time-series causal models.

A model with ``n`` variables and ``p`` lags is written

    A0' x_t + A1' x_{t-1} + ... + Ap' x_{t-p} = eps_t,   eps_t ~ N(0, diag(d0))

so column ``j`` of every coefficient matrix holds the equation of variable
``j``: a nonzero ``A0[i, j]`` (``i != j``) is a contemporaneous edge
``i -> j`` and a nonzero ``Ak[i, j]`` is a lag-``k`` edge ``i(t-k) -> j(t)``.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DimensionError, InvalidModelError

DEFAULT_ZERO_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def default_labels(n):
    return tuple(f"x{i + 1}" for i in range(n))


def _offdiag_graph(a0):
    n = a0.shape[0]
    return [[j for j in range(n) if j != i and a0[i, j] != 0] for i in range(n)]


def topological_order(a0):
    """Variable ordering in which every contemporaneous edge points forward.

    Returns ``None`` if the off-diagonal support of ``a0`` contains a cycle.
    Kahn's algorithm with smallest-index tie breaking, so the result is
    deterministic.
    """
    a0 = np.asarray(a0)
    n = a0.shape[0]
    children = _offdiag_graph(a0)
    indeg = [0] * n
    for i in range(n):
        for j in children[i]:
            indeg[j] += 1
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in children[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
        ready.sort()
    return order if len(order) == n else None


def is_acyclic(a0):
    """True iff a simultaneous row/column permutation makes ``a0`` triangular.

    Raises
    ------
    InvalidModelError
        If ``a0`` is not square or its diagonal is not all ones.
    """
    a0 = np.asarray(a0, dtype=np.float64)
    if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise InvalidModelError(f"contemporaneous matrix must be square, got shape {a0.shape}")
    if not np.all(np.diag(a0) == 1.0):
        raise InvalidModelError("contemporaneous matrix must have a unit diagonal")
    return topological_order(a0) is not None


@dataclass(frozen=True)
class CausalModel:
    """Coefficient matrices ``A0, A1..Ap`` and noise variances ``d0``.

    Instances are immutable; arrays are stored read-only.
    """

    a0: np.ndarray
    lags: Tuple[np.ndarray, ...]
    d0: np.ndarray
    labels: Tuple[str, ...] = None

    def __post_init__(self):
        a0 = _frozen(self.a0)
        if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
            raise InvalidModelError(f"a0 must be square, got shape {a0.shape}")
        n = a0.shape[0]
        lags = tuple(_frozen(a) for a in self.lags)
        for k, a in enumerate(lags, start=1):
            if a.shape != (n, n):
                raise InvalidModelError(f"lag matrix A{k} has shape {a.shape}, expected {(n, n)}")
        d0 = _frozen(self.d0).reshape(-1)
        if d0.shape != (n,):
            raise InvalidModelError(f"d0 must have length {n}, got {d0.shape[0]}")
        if not np.all(d0 > 0):
            raise InvalidModelError("noise variances must be strictly positive")
        if not is_acyclic(a0):
            raise InvalidModelError("contemporaneous effects contain a cycle")
        labels = default_labels(n) if self.labels is None else tuple(str(s) for s in self.labels)
        if len(labels) != n:
            raise InvalidModelError(f"expected {n} labels, got {len(labels)}")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.a0.shape[0]

    @property
    def p(self):
        return len(self.lags)

    def coefficient_stack(self):
        """Array of shape (p+1, n, n): ``A0, A1, ..., Ap``."""
        return np.stack((self.a0,) + self.lags)

    @classmethod
    def from_stack(cls, stack, d0, labels=None):
        stack = np.asarray(stack, dtype=np.float64)
        return cls(a0=stack[0], lags=tuple(stack[1:]), d0=d0, labels=labels)

    def reduced_form(self):
        """VAR matrices ``Phi_k`` with ``x_t = sum_k Phi_k x_{t-k} + B eps_t``.

        Returns ``(phis, B)`` where ``B = inv(A0')``.
        """
        try:
            b = np.linalg.inv(self.a0.T)
        except np.linalg.LinAlgError as exc:
            raise InvalidModelError("contemporaneous matrix is singular") from exc
        return [-b @ a.T for a in self.lags], b

    def edge_count(self, zero_tol=DEFAULT_ZERO_TOL):
        stack = self.coefficient_stack()
        off = np.abs(stack) > zero_tol
        off[0][np.diag_indices(self.n)] = False
        return int(off.sum())

    def __eq__(self, other):
        if not isinstance(other, CausalModel):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.p == other.p
            and np.array_equal(self.coefficient_stack(), other.coefficient_stack())
            and np.array_equal(self.d0, other.d0)
        )

    __hash__ = None


def companion_matrix(model):
    """``n*p x n*p`` companion matrix of the reduced-form VAR."""
    phis, _ = model.reduced_form()
    n, p = model.n, model.p
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.hstack(phis)
    comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def spectral_radius(model):
    if model.p == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(model)))))


def is_stationary(model):
    """True iff every eigenvalue of the companion matrix lies strictly inside the unit circle.

    Equivalent to the characteristic polynomial
    ``det(I - Phi_1 z - ... - Phi_p z^p)`` having no roots with ``|z| <= 1``.
    """
    return spectral_radius(model) < 1.0


@dataclass(frozen=True)
class StructureSignature:
    """Support pattern of a model's coefficient stack, in original variable order.

    ``contemporaneous_edges`` holds ``(cause, effect)`` pairs and
    ``temporal_edges`` holds ``(cause, effect, lag)`` triples. Signatures are
    hashable and totally ordered (lexicographically by sorted edge lists).
    """

    n: int
    p: int
    contemporaneous_edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)
    temporal_edges: FrozenSet[Tuple[int, int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        ce = frozenset((int(i), int(j)) for i, j in self.contemporaneous_edges)
        te = frozenset((int(i), int(j), int(k)) for i, j, k in self.temporal_edges)
        for i, j in ce:
            if i == j:
                raise InvalidModelError(f"self edge ({i}, {j}) in contemporaneous edges")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidModelError(f"edge ({i}, {j}) out of range for n={self.n}")
        for i, j, k in te:
            if not (0 <= i < self.n and 0 <= j < self.n and 1 <= k <= self.p):
                raise InvalidModelError(f"temporal edge ({i}, {j}, lag {k}) out of range")
        object.__setattr__(self, "contemporaneous_edges", ce)
        object.__setattr__(self, "temporal_edges", te)
        if not self.is_acyclic():
            raise InvalidModelError("contemporaneous edges contain a cycle")

    def sort_key(self):
        return (self.n, self.p, tuple(sorted(self.contemporaneous_edges)), tuple(sorted(self.temporal_edges)))

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __le__(self, other):
        return self.sort_key() <= other.sort_key()

    def __gt__(self, other):
        return self.sort_key() > other.sort_key()

    def __ge__(self, other):
        return self.sort_key() >= other.sort_key()

    @property
    def edge_count(self):
        return len(self.contemporaneous_edges) + len(self.temporal_edges)

    def support_mask(self):
        """Boolean (p+1, n, n) mask of free coefficients (diagonal of A0 excluded)."""
        mask = np.zeros((self.p + 1, self.n, self.n), dtype=bool)
        for i, j in self.contemporaneous_edges:
            mask[0, i, j] = True
        for i, j, k in self.temporal_edges:
            mask[k, i, j] = True
        return mask

    def is_acyclic(self):
        a0 = np.eye(self.n)
        for i, j in self.contemporaneous_edges:
            a0[i, j] = 1.0
        return topological_order(a0) is not None

    def parents(self, j):
        """``(contemporaneous parents, [(cause, lag), ...])`` of variable ``j``, sorted."""
        cont = sorted(i for i, jj in self.contemporaneous_edges if jj == j)
        temp = sorted((i, k) for i, jj, k in self.temporal_edges if jj == j)
        return cont, temp

    def describe(self, labels=None):
        labels = labels or default_labels(self.n)
        parts = [f"{labels[i]}->{labels[j]}" for i, j in sorted(self.contemporaneous_edges)]
        parts += [f"{labels[i]}(t-{k})->{labels[j]}" for i, j, k in sorted(self.temporal_edges, key=lambda e: (e[2], e[0], e[1]))]
        return ", ".join(parts) if parts else "(empty)"


def signature_of(model, zero_tol=DEFAULT_ZERO_TOL):
    """Structure signature of ``model``: edges whose ``|coefficient| > zero_tol``."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    mask = np.abs(model.coefficient_stack()) > zero_tol
    mask[0][np.diag_indices(model.n)] = False
    ce = [(int(i), int(j)) for i, j in zip(*np.nonzero(mask[0]))]
    te = [(int(i), int(j), int(k)) for k, i, j in zip(*np.nonzero(mask)) if k > 0]
    return StructureSignature(model.n, model.p, frozenset(ce), frozenset(te))


def stack_full_matrix(model, copies=None):
    """Block lower-bidiagonal stack with ``A0'`` on the diagonal and ``Ak'`` on the k-th subdiagonal.

    This is the matrix multiplying the ascending data window
    ``[x_{t-copies+1}; ...; x_t]`` to produce the innovations. ``copies``
    defaults to ``p + 1``.
    """
    n, p = model.n, model.p
    copies = p + 1 if copies is None else int(copies)
    if copies < p + 1:
        raise DimensionError(f"need at least p+1={p + 1} copies, got {copies}")
    stack = model.coefficient_stack()
    out = np.zeros((n * copies, n * copies))
    for i in range(copies):
        for k in range(min(p, i) + 1):
            j = i - k
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = stack[k].T
    return out


@dataclass(frozen=True)
class TimeSeriesData:
    """Observation matrix of shape (T, n), row ``t`` holding ``x_t``."""

    values: np.ndarray
    labels: Optional[Sequence[str]] = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DimensionError(f"values must be 2-D (T, n), got shape {values.shape}")
        if values.shape[0] < 2:
            raise DimensionError("need at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain missing or non-finite entries")
        labels = default_labels(values.shape[1]) if self.labels is None else tuple(str(s) for s in self.labels)
        if len(labels) != values.shape[1]:
            raise DimensionError(f"{values.shape[1]} columns but {len(labels)} labels")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    @classmethod
    def coerce(cls, X, labels=None):
        if isinstance(X, cls):
            return X
        from ._validation import check_series

        values, found = check_series(X)
        return cls(values, labels if labels is not None else found)
