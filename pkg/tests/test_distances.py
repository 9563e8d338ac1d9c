import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from distcp.distances import (DistanceError, DistanceSpec, aligned_distances, eval_distance,
                              make_spec, uniform_blocks)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vec_pair(d):
    return st.tuples(arrays(float, d, elements=finite), arrays(float, d, elements=finite))


def test_identity_is_zero():
    x = np.array([3.7, -1.0, 0.0])
    for kind in ("l2", "l1", "exp"):
        assert eval_distance(DistanceSpec(kind), x, x) == 0.0


def test_hand_values():
    assert eval_distance(DistanceSpec("l2"), np.ones(4), np.zeros(4)) == pytest.approx(1.0, abs=1e-15)
    assert eval_distance(DistanceSpec("exp", 2.0), [2.0], [0.0]) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert eval_distance(DistanceSpec("l1"), [1.0, -1.0], [0.0, 0.0]) == 1.0


def test_block_l2_blocks():
    spec = DistanceSpec("block_l1", block_sizes=(2, 1))
    # blocks: ||(3,4)|| = 5, |1| = 1, averaged over 2 blocks
    assert eval_distance(spec, [3.0, 4.0, 1.0], [0, 0, 0]) == 3.0


def test_unit_blocks_reduce_to_coordinatewise():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2, 7))
    assert eval_distance(DistanceSpec("block_l1", block_sizes=(1,) * 7), x, y) == \
        eval_distance(DistanceSpec("l1"), x, y)
    assert eval_distance(DistanceSpec("block_exp", 1.5, (1,) * 7), x, y) == \
        eval_distance(DistanceSpec("exp", 1.5), x, y)


@pytest.mark.parametrize("bad", [
    lambda: DistanceSpec("cosine"),
    lambda: DistanceSpec("exp", 0.0),
    lambda: DistanceSpec("exp", -1.0),
    lambda: DistanceSpec("block_l1"),
    lambda: DistanceSpec("block_l1", block_sizes=(2, 0)),
    lambda: DistanceSpec("l1", block_sizes=(1,)),
])
def test_invalid_specs(bad):
    with pytest.raises(DistanceError):
        bad()


def test_eval_errors():
    with pytest.raises(DistanceError, match="mismatch"):
        eval_distance(DistanceSpec(), [1, 2], [1, 2, 3])
    with pytest.raises(DistanceError, match="sum to"):
        eval_distance(DistanceSpec("block_l1", block_sizes=(2, 2)), [1, 2, 3], [0, 0, 0])
    with pytest.raises(DistanceError, match="non-finite"):
        eval_distance(DistanceSpec(), [1, np.nan], [0, 0])


def test_uniform_blocks_and_make_spec():
    assert uniform_blocks(10, 4) == (4, 4, 2)
    assert uniform_blocks(8, 4) == (4, 4)
    assert make_spec("block_exp", 2.0, 5, 10).block_sizes == (5, 5)
    assert make_spec("block_l1", 2.0, [3, 7]).block_sizes == (3, 7)
    assert make_spec("l2", 2.0, None).kind == "l2"


def test_spec_json_round_trip():
    for spec in (DistanceSpec(), DistanceSpec("exp", 0.5), DistanceSpec("block_exp", 3.0, (2, 3))):
        assert DistanceSpec.from_json(spec.to_json()) == spec


def test_aligned_matches_scalar():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 6, 5))
    for spec in (DistanceSpec("l2"), DistanceSpec("exp"), DistanceSpec("block_l1", block_sizes=(2, 3))):
        out = aligned_distances(spec, x, y)
        assert out.shape == (6,)
        assert np.array_equal(out, [eval_distance(spec, a, b) for a, b in zip(x, y)])


SPECS = [DistanceSpec("l2"), DistanceSpec("l1"), DistanceSpec("exp", 2.0),
         DistanceSpec("block_l1", block_sizes=(2, 2, 1)), DistanceSpec("block_exp", 1.0, (3, 2))]


@settings(max_examples=60, deadline=None)
@given(vec_pair(5), st.sampled_from(SPECS))
def test_symmetry_and_nonnegativity(xy, spec):
    x, y = xy
    a, b = eval_distance(spec, x, y), eval_distance(spec, y, x)
    assert a == b
    assert a >= 0


@settings(max_examples=60, deadline=None)
@given(vec_pair(5), st.sampled_from(SPECS), st.floats(-100, 100))
def test_translation_invariance(xy, spec, c):
    x, y = xy
    assert eval_distance(spec, x + c, y + c) == pytest.approx(eval_distance(spec, x, y), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(vec_pair(5))
def test_exp_bounded_by_one(xy):
    x, y = xy
    assert eval_distance(DistanceSpec("exp"), x, y) <= 1.0


@settings(max_examples=40, deadline=None)
@given(arrays(float, 4, elements=st.floats(0, 50)), st.floats(1.0, 3.0))
def test_monotone_in_coordinate_gaps(gaps, factor):
    # growing every coordinate gap cannot shrink the distance
    zero = np.zeros(4)
    for spec in SPECS[:3]:
        assert eval_distance(spec, gaps * factor, zero) >= eval_distance(spec, gaps, zero)


@settings(max_examples=80, deadline=None)
@given(vec_pair(6), arrays(float, 6, elements=finite),
       st.sampled_from([DistanceSpec("l1"), DistanceSpec("exp", 0.7), DistanceSpec("exp", 2.0)]))
def test_triangle_inequality(xy, z, spec):
    x, y = xy
    assert eval_distance(spec, x, z) <= eval_distance(spec, x, y) + eval_distance(spec, y, z) + 1e-12


def test_exp_saturates_only_for_huge_gaps():
    assert eval_distance(DistanceSpec("exp"), [60.0], [0.0]) < 1.0
    # 1 - exp(-t) rounds to 1 in float64 once exp(-t) < 2**-53
    assert eval_distance(DistanceSpec("exp"), [200.0], [0.0]) == 1.0
