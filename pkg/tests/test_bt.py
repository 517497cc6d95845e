import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdct.bt import (
    RealRateObjective,
    SubbandTree,
    best_bt_over_inits,
    deserialize_tree,
    expand_tree_to_angles,
    max_split_levels,
    run_bt_dct,
    run_sdct1_dct,
    serialize_tree,
    split_range,
    tree_side_bits,
)
from sdct.errors import MalformedTreeError
from sdct.rd import AngleRateMode, RdParams
from sdct.transform import AngleVector, build_sdct, dct2, pair_indices

PARAMS = RdParams(lam=20.0, coeff_step=8.0, angle_mode=AngleRateMode.BT_TREE)


def all_trees(p):
    """Every legal tree over ``[0, p)`` with the depth cap, by recursive enumeration."""
    cap = max_split_levels(p)

    def shapes(start, stop, depth):
        yield [(start, stop, depth)]
        if stop - start >= 2 and depth < cap:
            (a0, a1), (b0, b1) = split_range(start, stop)
            for left in shapes(a0, a1, depth + 1):
                for right in shapes(b0, b1, depth + 1):
                    yield left + right

    for leaves in shapes(0, p, 0):
        yield SubbandTree(p, tuple(leaves), tuple(range(len(leaves))))


def test_split_range_puts_remainder_second():
    assert split_range(0, 7) == ((0, 3), (3, 7))
    assert split_range(3, 5) == ((3, 4), (4, 5))


@pytest.mark.parametrize("p", range(1, 9))
def test_exhaustive_round_trip_small(p):
    trees = list(all_trees(p))
    encodings = set()
    for t in trees:
        bits = serialize_tree(t)
        assert len(bits) == 2 * t.num_leaves - 1
        back = deserialize_tree(bits, p, t.angles)
        assert back == t
        encodings.add(tuple(bits))
    assert len(encodings) == len(trees)


def random_tree(rng, p):
    tree = SubbandTree.single(p, 0)
    for _ in range(int(rng.integers(0, 40))):
        cands = [k for k, (a, b, d) in enumerate(tree.leaves) if b - a >= 2 and d < max_split_levels(p)]
        if not cands:
            break
        k = cands[int(rng.integers(len(cands)))]
        tree = tree.split(k, int(rng.integers(8)), int(rng.integers(8)))
    return tree


@pytest.mark.parametrize("p", [28, 120, 496])
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_trees_round_trip(p, seed):
    tree = random_tree(np.random.default_rng(seed), p)
    bits = serialize_tree(tree)
    assert len(bits) == 2 * tree.num_leaves - 1
    assert deserialize_tree(bits, p, tree.angles) == tree
    assert tree_side_bits(tree.num_leaves, 3) == len(bits) + 3 * tree.num_leaves


def test_malformed_sequences():
    with pytest.raises(MalformedTreeError):
        deserialize_tree([0, 1], 28)  # truncated
    with pytest.raises(MalformedTreeError):
        deserialize_tree([1, 1], 28)  # trailing bits
    with pytest.raises(MalformedTreeError):
        deserialize_tree([0, 1, 0, 1, 0, 1, 1], 4)  # splits past the depth cap / a single element
    with pytest.raises(MalformedTreeError):
        deserialize_tree([1], 28, angles=(1, 2))


def test_expand_tree():
    t = SubbandTree.single(6, 2).split(0, 1, 5)
    assert expand_tree_to_angles(t).tolist() == [1, 1, 1, 5, 5, 5]


def test_objective_uses_real_rate_and_zero_cost_dct():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 30, (8, 8))
    obj = RealRateObjective(dct2(x), 8, PARAMS, float((x * x).sum()))
    zero = np.zeros(28, dtype=np.int64)
    bd = obj.breakdown(zero, side_bits=99, num_subbands=4)
    assert bd.rate_angles == 0 and bd.num_subbands == 0
    dist, bits, _ = obj.coefficient_part(zero)
    from sdct.entropy import measure_block_rate
    from sdct.rd import quantize_indices

    q = quantize_indices(dct2(x), 8.0)
    assert bits == measure_block_rate(q)
    assert dist == pytest.approx(float(np.sum((dct2(x) - 8.0 * q) ** 2)))


def test_bt_never_worse_than_its_start_and_sdct1_is_unsplit_bt():
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.normal(0, 30, (8, 8))
        d = dct2(x)
        obj = RealRateObjective(d, 8, PARAMS)
        for a in (0, 3):
            tree, _, bd = run_bt_dct(d, 8, PARAMS, a, objective=obj)
            start = obj.breakdown(np.full(28, a), tree_side_bits(1, 3), 1)
            assert bd.J <= start.J
        best_single = min((run_bt_dct(d, 8, PARAMS, a, max_levels=0, objective=obj)[2].J for a in range(8)))
        # one leaf costs 1 structure bit + 3 angle bits, i.e. the angle plus the mode bit
        angle, _, bd1 = run_sdct1_dct(d, 8, PARAMS, objective=obj, mode_bit=True)
        assert bd1.J == pytest.approx(best_single)


def test_steered_block_found_by_bt():
    n = 8
    i, _ = pair_indices(n)
    c = np.zeros(n * n)
    c[i[:6]] = [300.0, -250.0, 200.0, 150.0, -120.0, 100.0]
    block = (build_sdct(n, AngleVector.constant(n, 5)).V @ c).reshape(n, n)
    tree, angles, bd = best_bt_over_inits(dct2(block), n, PARAMS)
    assert angles.indices[:6].tolist() == [5] * 6


def test_tree_equality_includes_angles():
    a = SubbandTree.single(4, 1)
    assert a != SubbandTree.single(4, 2)
    assert a.num_nodes == 1 and a.depth == 1
    assert list(itertools.islice(all_trees(4), 1))[0].num_leaves == 1
