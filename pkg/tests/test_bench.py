import numpy as np

from distcp.bench import SingleBench, SingleRun, run_multi, run_single


def test_table_bins():
    run = SingleRun(t_hat=np.array([25, 26, 30, 24, 25, 10]),
                    reject=np.array([True, True, True, True, False, True]),
                    p_value=np.zeros(6))
    b = SingleBench(7, 25, 50, 200, 6, {"exp": run})
    row = b.table()["exp"]
    assert row == {"bins": {"0": 1, "1": 2, "2": 0, "3": 0, ">=4": 2}, "total": 5}
    assert b.exact_rate("exp") == 1 / 6
    assert b.success_rate("exp", 1) == 3 / 6
    assert b.detection_rate("exp") == 5 / 6


def test_single_bench_thread_independent():
    kw = dict(kinds=("l2", "exp"), reps=4, seed=3, d=20, B=19)
    a = run_single(7, threads=1, **kw)
    b = run_single(7, threads=4, **kw)
    for k in kw["kinds"]:
        assert np.array_equal(a.runs[k].t_hat, b.runs[k].t_hat)
        assert np.array_equal(a.runs[k].p_value, b.runs[k].p_value)


def test_multi_bench_counts():
    m = run_multi(14, kinds=("exp",), reps=3, seed=1, d=30, B=19)
    assert sum(m.count_distribution("exp").values()) == 3
    assert set(m.hit_rate("exp")) == {15, 30, 45}
