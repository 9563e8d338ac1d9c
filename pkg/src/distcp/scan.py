"""Pairwise distance matrices and the single change-point scan.

For a split of ``Z_1..Z_n`` after observation ``t`` the scan uses the mean
within-prefix distance ``T11``, the mean within-suffix distance ``T22`` and the
mean cross distance ``T12``. The weighted divergence

    W(t) = t (n - t) / n**2 * [(T12 - T11)**2 + (T12 - T22)**2]

is maximized over a candidate set of splits; the maximizer is the estimated
change-point and the maximum is the test statistic.

Splits are indexed by the size ``t`` of the prefix, so ``t`` is also the
1-based index of the last observation before the change.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial.distance import cdist

from .distances import DistanceError, DistanceSpec, aligned_distances

DEFAULT_DELTA = 0.05


class ScanError(ValueError):
    pass


def as_observations(data):
    """Validate and return ``data`` as a float ``(n, d)`` array."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ScanError(f"observations must be a nonempty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DistanceError("non-finite entry in observation matrix")
    return arr


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric zero-diagonal matrix of pairwise distances with cached sums.

    ``total_sum`` counts every unordered pair twice (it is the sum of all
    matrix entries).
    """

    dist: np.ndarray
    row_sums: np.ndarray = field(repr=False)
    total_sum: float

    @classmethod
    def from_array(cls, dist):
        dist = np.array(dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ScanError("distance matrix must be square")
        if not np.array_equal(dist, dist.T):
            raise ScanError("distance matrix must be symmetric")
        if np.any(np.diag(dist) != 0) or np.any(dist < 0):
            raise ScanError("distance matrix must be nonnegative with zero diagonal")
        dist.setflags(write=False)
        row_sums = dist.sum(axis=1)
        row_sums.setflags(write=False)
        return cls(dist, row_sums, float(row_sums.sum()))

    @property
    def n(self):
        return self.dist.shape[0]

    def scaled(self, c):
        return DistanceMatrix.from_array(self.dist * c)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return DistanceMatrix.from_array(self.dist[np.ix_(perm, perm)])


def _upper_pairs(n):
    return np.triu_indices(n, k=1)


def pairwise_matrix(data, spec=None, threads=1, chunk=4096):
    """Build the distance matrix of the rows of ``data``.

    L1 and L2 kinds go through :func:`scipy.spatial.distance.cdist`; the other
    kinds evaluate :func:`~distcp.distances.aligned_distances` on the upper
    triangle in chunks of ``chunk`` pairs, spread over ``threads`` workers.
    """
    spec = spec or DistanceSpec()
    x = as_observations(data)
    n, d = x.shape
    spec.validate(d)

    if spec.kind == "l2":
        dist = cdist(x, x, "euclidean") / math.sqrt(d)
    elif spec.kind == "l1":
        dist = cdist(x, x, "cityblock") / d
    else:
        iu, ju = _upper_pairs(n)
        vals = np.empty(iu.size)
        starts = range(0, iu.size, chunk)

        def work(a):
            b = min(a + chunk, iu.size)
            vals[a:b] = aligned_distances(spec, x[iu[a:b]], x[ju[a:b]])

        if threads > 1 and len(starts) > 1:
            with ThreadPoolExecutor(threads) as pool:
                list(pool.map(work, starts))
        else:
            for a in starts:
                work(a)
        dist = np.zeros((n, n))
        dist[iu, ju] = vals

    # exact symmetry and zero diagonal regardless of backend rounding
    upper = np.triu(dist, k=1)
    dist = upper + upper.T
    return DistanceMatrix.from_array(dist)


@dataclass(frozen=True)
class CandidateSet:
    """Admissible split sizes ``t_min..t_max`` (inclusive)."""

    delta: float
    t_min: int
    t_max: int

    @classmethod
    def for_n(cls, n, delta=None, rule="fixed"):
        """Candidate set for ``n`` observations.

        ``rule="fixed"`` uses ``delta`` (default ``max(0.05, 2/n)``);
        ``rule="sqrt"`` uses ``delta = 1/sqrt(n)``. The bounds are
        ``floor(n*delta)`` and ``ceil(n*(1-delta))``, clamped to ``[2, n-2]``.
        """
        if n < 4:
            raise ScanError(f"need at least 4 observations to scan, got {n}")
        if rule == "sqrt":
            if delta is not None:
                raise ScanError("delta cannot be combined with the sqrt rule")
            delta = 1.0 / math.sqrt(n)
        elif rule == "fixed":
            if delta is None:
                delta = max(DEFAULT_DELTA, 2.0 / n)
        else:
            raise ScanError(f"unknown delta rule {rule!r}")
        if not 0 < delta <= 0.5:
            raise ScanError(f"delta must lie in (0, 1/2], got {delta}")
        # round away float noise such as 40 * 0.05 = 2.0000000000000004
        low = math.floor(round(n * delta, 9))
        t_min = max(low, 2)
        t_max = min(n - low, n - 2)  # ceil(n(1-delta)) == n - floor(n*delta)
        if t_min > t_max:
            raise ScanError(f"empty candidate set for n={n}, delta={delta}")
        return cls(float(delta), t_min, t_max)

    def __post_init__(self):
        if self.t_min < 2 or self.t_min > self.t_max:
            raise ScanError(f"invalid candidate bounds [{self.t_min}, {self.t_max}]")

    def splits(self):
        return np.arange(self.t_min, self.t_max + 1)

    def check(self, n):
        if self.t_max > n - 2:
            raise ScanError(f"candidate set [{self.t_min}, {self.t_max}] does not fit n={n}")


@dataclass(frozen=True)
class ScanResult:
    splits: np.ndarray
    curve: np.ndarray
    t_hat: int
    s_hat: float
    stats_at_t_hat: tuple

    def to_dict(self, include_curve=True):
        out = {"t_hat": self.t_hat, "s_hat": self.s_hat}
        if include_curve:
            out["curve"] = [[int(t), float(v)] for t, v in zip(self.splits, self.curve)]
        return out


def segment_stats(D, t):
    """Mean within-prefix, cross and within-suffix distances for split ``t``.

    Computed directly from the matrix; this is the slow reference used to
    check :func:`scan`. A side holding a single observation has no pairs and
    its within-mean is reported as 0.
    """
    n = D.n
    if not 1 <= t <= n - 1:
        raise ScanError(f"split {t} outside [1, {n - 1}]")
    dist = D.dist

    def within(block):
        vals = block[np.triu_indices(block.shape[0], 1)]
        return vals.mean() if vals.size else 0.0

    t11 = within(dist[:t, :t])
    t22 = within(dist[t:, t:])
    t12 = dist[:t, t:].mean()
    return float(t11), float(t12), float(t22)


def weighted_divergence(t11, t12, t22, t, n):
    if not 0 < t < n:
        raise ScanError(f"need 0 < t < n, got t={t}, n={n}")
    return t * (n - t) / n**2 * ((t12 - t11) ** 2 + (t12 - t22) ** 2)


def _prefix_sums(dist, row_sums):
    # lower[..., j] = sum_{i<j} d_ij ; S11(t) = sum_{i<j<=t} d_ij
    lower = np.tril(dist, -1).sum(axis=-1)
    s11 = np.cumsum(lower, axis=-1)
    # rows in the prefix count S11 twice plus every cross pair once
    s12 = np.cumsum(row_sums, axis=-1) - 2.0 * s11
    return s11, s12


def _curve(s11, s12, total, n, ts):
    """Weighted divergence at splits ``ts`` from prefix sums (last axis)."""
    idx = ts - 1
    s11 = s11[..., idx]
    s12 = s12[..., idx]
    s22 = 0.5 * total - s11 - s12
    t = ts.astype(float)
    u = n - t
    t11 = s11 / (t * (t - 1) / 2)
    t22 = s22 / (u * (u - 1) / 2)
    t12 = s12 / (t * u)
    div = (t12 - t11) ** 2 + (t12 - t22) ** 2
    return t * u / n**2 * div, (t11, t12, t22)


def scan(D, cand=None):
    """Scan every candidate split in ``O(n**2)`` total.

    Ties at the maximum go to the smallest split.
    """
    n = D.n
    cand = cand or CandidateSet.for_n(n)
    cand.check(n)
    ts = cand.splits()
    s11, s12 = _prefix_sums(D.dist, D.row_sums)
    curve, (t11, t12, t22) = _curve(s11, s12, D.total_sum, n, ts)
    k = int(np.argmax(curve))
    return ScanResult(
        splits=ts,
        curve=curve,
        t_hat=int(ts[k]),
        s_hat=float(curve[k]),
        stats_at_t_hat=(float(t11[k]), float(t12[k]), float(t22[k])),
    )
