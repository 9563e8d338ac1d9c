"""Monte-Carlo permutation test for the scan statistic.

Replicate ``b`` draws its permutation from the stream ``(seed, "perm", b)``, so
the replicate vector is identical whatever the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from ._rng import stream
from .scan import CandidateSet, ScanError, _curve, _prefix_sums, scan

DEFAULT_B = 199
DEFAULT_ALPHA = 0.05

# cap on floats gathered per batch of permuted matrices
_BATCH_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class PermutationConfig:
    B: int = DEFAULT_B
    alpha: float = DEFAULT_ALPHA
    seed: int = 0

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise ValueError(f"B must be a positive integer, got {self.B}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TestOutcome:
    s_obs: float
    p_value: float
    cutoff: float
    reject: bool
    replicates: np.ndarray

    __test__ = False  # keep pytest from collecting this class


def replicate_permutations(seed, n, start, stop, tag="perm", keys=()):
    """Permutations for replicates ``start..stop-1`` as a ``(k, n)`` array."""
    return np.stack([stream(seed, tag, *keys, b).permutation(n) for b in range(start, stop)])


def _check_perm(perm, n):
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ScanError("not a permutation of 0..n-1")
    return perm


def batch_permuted_max(D, perms, cand):
    """Scan statistic for each row of ``perms`` (shape ``(k, n)``)."""
    ts = cand.splits()
    n = D.n
    sub = D.dist[perms[:, :, None], perms[:, None, :]]
    s11, s12 = _prefix_sums(sub, D.row_sums[perms])
    curve, _ = _curve(s11, s12, D.total_sum, n, ts)
    return curve.max(axis=-1)


def permuted_scan(D, perm, cand=None):
    """Scan statistic of the sequence reordered by ``perm`` (0-based).

    Uses index indirection into ``D``; no distances are recomputed.
    """
    cand = cand or CandidateSet.for_n(D.n)
    cand.check(D.n)
    perm = _check_perm(perm, D.n)
    return float(batch_permuted_max(D, perm[None, :], cand)[0])


def _chunks(total, size):
    return [(a, min(a + size, total)) for a in range(0, total, size)]


def run_replicates(stat, n, B, seed, threads=1, tag="perm", keys=()):
    """Evaluate ``stat(perms)`` on all ``B`` replicate permutations.

    ``stat`` maps a ``(k, n)`` permutation batch to ``k`` values. Chunks are
    reassembled by replicate index.
    """
    size = max(1, min(B, _BATCH_ELEMENTS // max(n * n, 1)))
    if threads > 1:
        size = max(1, min(size, math.ceil(B / threads)))
    chunks = _chunks(B, size)

    def work(bounds):
        perms = replicate_permutations(seed, n, *bounds, tag=tag, keys=keys)
        return stat(perms)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return np.concatenate(parts)


def p_value(s_obs, replicates):
    """Add-one Monte-Carlo p-value; replicates tied with ``s_obs`` count."""
    replicates = np.asarray(replicates)
    return (1 + int(np.count_nonzero(replicates >= s_obs))) / (replicates.size + 1)


def empirical_cutoff(replicates, alpha):
    """The ``ceil((1-alpha)(B+1))``-th order statistic; ``inf`` if beyond ``B``."""
    reps = np.sort(np.asarray(replicates))
    k = math.ceil(round((1 - alpha) * (reps.size + 1), 9))
    if k > reps.size:
        return math.inf
    return float(reps[k - 1])


def permutation_test(D, cand=None, cfg=None, threads=1, s_obs=None):
    """Permutation test of the scan maximum.

    Returns a :class:`TestOutcome`; ``reject`` is decided on the p-value.
    """
    cand = cand or CandidateSet.for_n(D.n)
    cfg = cfg or PermutationConfig()
    cand.check(D.n)
    if s_obs is None:
        s_obs = scan(D, cand).s_hat
    reps = run_replicates(lambda p: batch_permuted_max(D, p, cand),
                          D.n, cfg.B, cfg.seed, threads=threads)
    p = p_value(s_obs, reps)
    return TestOutcome(
        s_obs=float(s_obs),
        p_value=p,
        cutoff=empirical_cutoff(reps, cfg.alpha),
        reject=p <= cfg.alpha,
        replicates=reps,
    )
