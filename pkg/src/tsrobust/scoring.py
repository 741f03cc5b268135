"""Scores for a fitted model against a known truth.

* observational (Markov) equivalence of structures,
* the relative Frobenius error of the stacked coefficient matrix,
* coefficient errors normalised by bootstrap standard deviations, and a
  Kolmogorov-Smirnov check of those against N(0, 1).
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Tuple

import numpy as np
from scipy import stats

from .exceptions import DimensionError
from .model import CausalModel, StructureSignature, signature_of, stack_full_matrix


def _as_signature(obj):
    if isinstance(obj, StructureSignature):
        return obj
    if isinstance(obj, CausalModel):
        return signature_of(obj)
    raise TypeError(f"expected CausalModel or StructureSignature, got {type(obj).__name__}")


def skeleton(sig):
    return frozenset(frozenset(e) for e in sig.contemporaneous_edges)


def _adjacent(sig, a, b):
    """Adjacency of time-indexed nodes ``(var, lag)`` in the unrolled stationary graph."""
    (i, ka), (j, kb) = a, b
    if ka == kb:
        return (i, j) in sig.contemporaneous_edges or (j, i) in sig.contemporaneous_edges
    if ka > kb:
        return (i, j, ka - kb) in sig.temporal_edges
    return (j, i, kb - ka) in sig.temporal_edges


def v_structures(sig):
    """Colliders at time ``t``: ``{(frozenset({parent_a, parent_b}), child)}``.

    Parents are ``(var, lag)`` nodes, so lagged causes take part; two parents
    count as connected if any edge (same-time or lagged) joins them.
    """
    out = set()
    for j in range(sig.n):
        cont, temp = sig.parents(j)
        parents = [(i, 0) for i in cont] + [(i, k) for i, k in temp]
        for a, b in combinations(parents, 2):
            if not _adjacent(sig, a, b):
                out.add((frozenset((a, b)), j))
    return frozenset(out)


def obs_equivalent(m1, m2):
    """Observational equivalence of two models or signatures.

    Lagged edges are oriented by time and must match exactly; the
    contemporaneous parts must share a skeleton and v-structures.
    """
    s1, s2 = _as_signature(m1), _as_signature(m2)
    if (s1.n, s1.p) != (s2.n, s2.p):
        raise DimensionError(f"cannot compare structures with (n, p) = {(s1.n, s1.p)} and {(s2.n, s2.p)}")
    if isinstance(m1, CausalModel) and isinstance(m2, CausalModel) and m1.labels != m2.labels:
        raise DimensionError("models have different variable labels")
    if s1.temporal_edges != s2.temporal_edges:
        return False
    if skeleton(s1) != skeleton(s2):
        return False
    return v_structures(s1) == v_structures(s2)


def _check_pair(a_true, a_fit):
    if (a_true.n, a_true.p) != (a_fit.n, a_fit.p):
        raise DimensionError(f"models differ in shape: (n, p) = {(a_true.n, a_true.p)} vs {(a_fit.n, a_fit.p)}")


def accuracy_score(a_true, a_fit, copies=None):
    """``||A_true - A_fit||_F / ||A_true||_F`` on the stacked coefficient matrix (default p+1 copies)."""
    _check_pair(a_true, a_fit)
    st = stack_full_matrix(a_true, copies)
    sf = stack_full_matrix(a_fit, copies)
    return float(np.linalg.norm(st - sf) / np.linalg.norm(st))


def normalized_error(a_true, a_fit, sigma):
    """``(A_true - A_fit) / sigma`` at every coefficient with a positive, finite ``sigma``.

    ``sigma`` is a (p+1, n, n) standard-deviation stack. Returns a list of
    ``((lag, cause, effect), value)`` pairs.
    """
    _check_pair(a_true, a_fit)
    sigma = np.asarray(sigma, dtype=np.float64)
    diff = a_true.coefficient_stack() - a_fit.coefficient_stack()
    if sigma.shape != diff.shape:
        raise DimensionError(f"sigma has shape {sigma.shape}, expected {diff.shape}")
    valid = np.isfinite(sigma) & (sigma > 0)
    if not valid.any():
        raise ValueError("no coefficient has a positive standard deviation")
    return [((int(k), int(i), int(j)), float(diff[k, i, j] / sigma[k, i, j])) for k, i, j in zip(*np.nonzero(valid))]


@dataclass(frozen=True)
class NormalityResult:
    statistic: float
    pvalue: float
    pairs: np.ndarray  # (m, 2): empirical quantile, theoretical quantile

    def __iter__(self):
        return iter((self.statistic, self.pairs))


def normality_diagnostic(values, min_count=20):
    """One-sample KS statistic against N(0, 1) plus probability-plot pairs.

    Plotting positions are ``(i - 0.5) / m``. Unpacks as ``(statistic, pairs)``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < min_count:
        raise ValueError(f"need at least {min_count} values, got {values.size}")
    res = stats.kstest(values, "norm")
    m = values.size
    theo = stats.norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    pairs = np.column_stack([np.sort(values), theo])
    return NormalityResult(float(res.statistic), float(res.pvalue), pairs)


@dataclass
class ScoreBundle:
    equivalent: bool
    zeta: float
    phi_entries: List[Tuple[Tuple[int, int, int], float]] = field(default_factory=list)
    ks_statistic: float = None


def score(a_true, a_fit, sigma=None):
    phi = normalized_error(a_true, a_fit, sigma) if sigma is not None else []
    return ScoreBundle(equivalent=obs_equivalent(a_true, a_fit), zeta=accuracy_score(a_true, a_fit), phi_entries=phi)
