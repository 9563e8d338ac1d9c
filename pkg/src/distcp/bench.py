"""Replicated simulation studies.

Each replicate ``r`` draws its data and permutation seeds from the stream
``(seed, "bench", r)``; every method sees the same data in a replicate, and the
output does not depend on the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import stream
from .datagen import ScenarioSpec, make_scenario
from .distances import make_spec
from .multi import DEFAULT_MIN_SEG, MultiConfig, detect_multiple_from_matrix
from .permutation import PermutationConfig, permutation_test
from .scan import CandidateSet, pairwise_matrix, scan

BIN_LABELS = ("0", "1", "2", "3", ">=4")


def replicate_seeds(seed, r):
    rng = stream(seed, "bench", r)
    data_seed, perm_seed = rng.integers(0, 2**63, size=2)
    return int(data_seed), int(perm_seed)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


@dataclass
class SingleRun:
    t_hat: np.ndarray  # (reps,) per method
    reject: np.ndarray
    p_value: np.ndarray


@dataclass
class SingleBench:
    example_id: int
    tau: int
    n: int
    d: int
    reps: int
    runs: dict = field(default_factory=dict)  # method kind -> SingleRun

    def table(self):
        """Counts of ``|t_hat - tau|`` among detected replicates, per method."""
        rows = {}
        for kind, run in self.runs.items():
            err = np.abs(run.t_hat[run.reject] - self.tau)
            counts = [int(np.sum(err == k)) for k in range(4)] + [int(np.sum(err >= 4))]
            rows[kind] = {"bins": dict(zip(BIN_LABELS, counts)), "total": int(run.reject.sum())}
        return rows

    def exact_rate(self, kind):
        run = self.runs[kind]
        return float(np.mean(run.reject & (run.t_hat == self.tau)))

    def detection_rate(self, kind):
        return float(np.mean(self.runs[kind].reject))

    def success_rate(self, kind, tolerance=0):
        run = self.runs[kind]
        return float(np.mean(run.reject & (np.abs(run.t_hat - self.tau) <= tolerance)))


def single_replicate(spec, kinds, r, seed, perm, delta=None, rule="fixed", exp_scale=2.0,
                     block_sizes=None):
    """One replicate: ``(t_hat, reject, p_value)`` for each distance kind."""
    data_seed, perm_seed = replicate_seeds(seed, r)
    sc = make_scenario(ScenarioSpec(spec.example_id, spec.n, spec.d, spec.tau, spec.beta, data_seed))
    cand = CandidateSet.for_n(sc.data.shape[0], delta, rule)
    cfg = PermutationConfig(perm.B, perm.alpha, perm_seed)
    out = []
    for kind in kinds:
        dspec = make_spec(kind, exp_scale, block_sizes, sc.data.shape[1])
        D = pairwise_matrix(sc.data, dspec)
        res = scan(D, cand)
        test = permutation_test(D, cand, cfg, s_obs=res.s_hat)
        out.append((res.t_hat, test.reject, test.p_value))
    return out


def run_single(example_id, kinds=("l2", "l1", "exp"), reps=200, seed=0, tau=None, n=None,
               d=None, beta=None, B=199, alpha=0.05, delta=None, rule="fixed",
               exp_scale=2.0, block_sizes=None, threads=1):
    """Repeat single change-point detection on a registered example."""
    spec = ScenarioSpec(example_id, n, d, tau, beta).resolved()
    if len(spec.tau) != 1:
        raise ValueError(f"example {example_id} has several change-points; use run_multi")
    perm = PermutationConfig(B, alpha)
    results = _map(lambda r: single_replicate(spec, kinds, r, seed, perm, delta, rule,
                                              exp_scale, block_sizes),
                   range(reps), threads)
    bench = SingleBench(example_id, spec.tau[0], spec.n, spec.d, reps)
    for j, kind in enumerate(kinds):
        cols = list(zip(*(res[j] for res in results)))
        bench.runs[kind] = SingleRun(np.array(cols[0]), np.array(cols[1], dtype=bool),
                                     np.array(cols[2]))
    return bench


def success_curve(example_id, dims, kinds=("l2", "l1", "exp"), reps=200, seed=0, beta=None,
                  n=None, tolerance=0, rule="sqrt", threads=1, **kw):
    """Success rate per dimension: detected and ``|t_hat - tau| <= tolerance``."""
    out = {kind: [] for kind in kinds}
    for d in dims:
        bench = run_single(example_id, kinds, reps, seed, d=d, beta=beta, n=n, rule=rule,
                           threads=threads, **kw)
        for kind in kinds:
            out[kind].append(bench.success_rate(kind, tolerance))
    return out


@dataclass
class MultiBench:
    example_id: int
    change_points: tuple
    reps: int
    locations: dict = field(default_factory=dict)  # kind -> list of detected lists

    def hit_rate(self, kind, tolerance=1):
        """Per true change-point, fraction of replicates detecting it within ``tolerance``."""
        rates = {}
        for tau in self.change_points:
            hits = [any(abs(x - tau) <= tolerance for x in locs) for locs in self.locations[kind]]
            rates[tau] = float(np.mean(hits))
        return rates

    def count_distribution(self, kind):
        counts = np.bincount([len(l) for l in self.locations[kind]])
        return {int(k): int(c) for k, c in enumerate(counts) if c}


def multi_replicate(spec, kinds, r, seed, cfg, exp_scale=2.0, block_sizes=None):
    data_seed, perm_seed = replicate_seeds(seed, r)
    sc = make_scenario(ScenarioSpec(spec.example_id, spec.n, spec.d, spec.tau, spec.beta, data_seed))
    mcfg = MultiConfig(cfg.min_seg, cfg.B, cfg.alpha, perm_seed, cfg.max_depth)
    out = []
    for kind in kinds:
        dspec = make_spec(kind, exp_scale, block_sizes, sc.data.shape[1])
        report = detect_multiple_from_matrix(pairwise_matrix(sc.data, dspec), mcfg)
        out.append(report.locations)
    return out


def run_multi(example_id, kinds=("l2", "l1", "exp"), reps=200, seed=0, tau=None, n=None,
              d=None, B=199, alpha=0.05, min_seg=DEFAULT_MIN_SEG, max_depth=None, exp_scale=2.0,
              block_sizes=None, threads=1):
    """Repeat hierarchical detection on a registered example."""
    spec = ScenarioSpec(example_id, n, d, tau).resolved()
    cfg = MultiConfig(min_seg, B, alpha, 0, max_depth)
    results = _map(lambda r: multi_replicate(spec, kinds, r, seed, cfg, exp_scale, block_sizes),
                   range(reps), threads)
    bench = MultiBench(example_id, spec.tau, reps)
    for j, kind in enumerate(kinds):
        bench.locations[kind] = [res[j] for res in results]
    return bench
