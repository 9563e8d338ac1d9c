"""Hierarchical detection of multiple change-points.

Inside a segment with local observations ``1..m`` the statistic

    D0(t, s) = t (s - t) / s * [(T12 - T11)**2 + (T12 - T22)**2]

compares the prefix ``1..t`` with the block ``t+1..s``. The pair maximizing
``D0`` gives the candidate split ``t``. Its significance is assessed by a
conditional permutation test that shuffles only the segment's observations and
recomputes the maximum of ``D0``. Significant splits are recorded and both
halves are searched again.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import time

import numpy as np

from .distances import DistanceSpec
from .permutation import DEFAULT_ALPHA, DEFAULT_B, p_value, run_replicates
from .scan import ScanError, as_observations, pairwise_matrix

# blocks of 2 observations make T22 a single distance and swamp the
# permutation null; 3 is the smallest size that keeps the tests usable
DEFAULT_MIN_SEG = 3


@dataclass(frozen=True)
class MultiConfig:
    min_seg: int = DEFAULT_MIN_SEG
    B: int = DEFAULT_B
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    max_depth: int = None

    def __post_init__(self):
        if self.min_seg < 2:
            raise ValueError(f"min_seg must be >= 2, got {self.min_seg}")
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 when given")

    def to_dict(self):
        return {"min_seg": self.min_seg, "B": self.B, "alpha": self.alpha,
                "seed": self.seed, "max_depth": self.max_depth}


@dataclass(frozen=True)
class Segment:
    """Inclusive 0-based observation range ``lo..hi``."""

    lo: int
    hi: int
    depth: int = 0
    parent: int = None  # location of the split that created the segment

    def __post_init__(self):
        if self.lo > self.hi:
            raise ScanError(f"empty segment [{self.lo}, {self.hi}]")

    @property
    def size(self):
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class ChangePoint:
    location: int  # 1-based index of the last observation before the change
    p_value: float
    depth: int


@dataclass
class DetectionReport:
    n: int
    change_points: list
    segments: list  # 1-based inclusive (lo, hi)
    splits: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    elapsed_ms: float = None

    @property
    def locations(self):
        return [cp.location for cp in self.change_points]


def _feasible_pairs(m, min_seg):
    tt, ss = [], []
    for t in range(min_seg, m - min_seg + 1):
        s = np.arange(t + min_seg, m + 1)
        tt.append(np.full(s.size, t))
        ss.append(s)
    if not tt:
        raise ScanError(f"segment of length {m} too short for min_seg={min_seg}")
    return np.concatenate(tt), np.concatenate(ss)


def _d0_grid(sub, tt, ss):
    """``D0`` at pairs ``(tt, ss)`` for stacked local matrices ``sub`` (..., m, m)."""
    shape = sub.shape[:-2]
    m = sub.shape[-1]
    c = np.zeros(shape + (m + 1, m + 1))
    c[..., 1:, 1:] = np.cumsum(np.cumsum(sub, axis=-2), axis=-1)
    c_tt = c[..., tt, tt]
    c_ts = c[..., tt, ss]
    c_st = c[..., ss, tt]
    c_ss = c[..., ss, ss]
    w11 = 0.5 * c_tt
    w12 = c_ts - c_tt
    w22 = 0.5 * (c_ss - c_ts - c_st + c_tt)
    t = tt.astype(float)
    u = (ss - tt).astype(float)
    t11 = w11 / (t * (t - 1) / 2)
    t12 = w12 / (t * u)
    t22 = w22 / (u * (u - 1) / 2)
    return t * u / ss * ((t12 - t11) ** 2 + (t12 - t22) ** 2)


def best_split(D, seg, min_seg=DEFAULT_MIN_SEG):
    """Most potential split of ``seg``.

    Returns ``(t, s, score)`` with ``t`` the 1-based global index of the last
    observation before the split and ``s`` the 1-based global end of the
    comparison block. Ties go to the smallest ``t``, then the smallest ``s``.
    """
    if seg.size < 2 * min_seg:
        raise ScanError(f"segment of length {seg.size} shorter than 2*min_seg={2 * min_seg}")
    tt, ss = _feasible_pairs(seg.size, min_seg)
    sub = D.dist[seg.lo:seg.hi + 1, seg.lo:seg.hi + 1]
    scores = _d0_grid(sub, tt, ss)
    k = int(np.argmax(scores))
    return seg.lo + int(tt[k]), seg.lo + int(ss[k]), float(scores[k])


def segment_test(D, seg, cfg, threads=1):
    """Best split of ``seg`` and its conditional permutation p-value."""
    t, s, score = best_split(D, seg, cfg.min_seg)
    tt, ss = _feasible_pairs(seg.size, cfg.min_seg)
    sub = D.dist[seg.lo:seg.hi + 1, seg.lo:seg.hi + 1]

    def stat(perms):
        return _d0_grid(sub[perms[:, :, None], perms[:, None, :]], tt, ss).max(axis=-1)

    reps = run_replicates(stat, seg.size, cfg.B, cfg.seed, threads=threads,
                          tag="multi", keys=(seg.lo, seg.hi))
    return t, s, score, p_value(score, reps)


def detect_multiple_from_matrix(D, cfg=None, threads=1):
    cfg = cfg or MultiConfig()
    n = D.n
    if n < 2 * cfg.min_seg:
        raise ScanError(f"need at least {2 * cfg.min_seg} observations, got {n}")

    found, splits, final = [], [], []
    level = [Segment(0, n - 1, 0)]
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while level:
            testable = [g for g in level if g.size >= 2 * cfg.min_seg
                        and (cfg.max_depth is None or g.depth < cfg.max_depth)]
            final.extend(g for g in level if g not in testable)
            run = lambda g: segment_test(D, g, cfg)
            results = list(pool.map(run, testable)) if pool else [run(g) for g in testable]
            nxt = []
            for g, (t, s, score, p) in zip(testable, results):
                significant = p <= cfg.alpha
                splits.append({"lo": g.lo + 1, "hi": g.hi + 1, "depth": g.depth,
                               "t": t, "s": s, "score": score, "p_value": p,
                               "significant": significant})
                if significant:
                    found.append(ChangePoint(t, p, g.depth))
                    nxt.append(Segment(g.lo, t - 1, g.depth + 1, t))
                    nxt.append(Segment(t, g.hi, g.depth + 1, t))
                else:
                    final.append(g)
            level = nxt
    finally:
        if pool:
            pool.shutdown()

    found.sort(key=lambda c: c.location)
    splits.sort(key=lambda r: (r["lo"], r["depth"]))
    segments = sorted((g.lo + 1, g.hi + 1) for g in final)
    return DetectionReport(n=n, change_points=found, segments=segments,
                           splits=splits, config=cfg.to_dict())


def detect_multiple(data, spec=None, cfg=None, threads=1):
    """Hierarchical multiple change-point detection on raw observations."""
    start = time.perf_counter()
    x = as_observations(data)
    spec = spec or DistanceSpec()
    D = pairwise_matrix(x, spec, threads=threads)
    report = detect_multiple_from_matrix(D, cfg, threads=threads)
    report.elapsed_ms = (time.perf_counter() - start) * 1e3
    return report
