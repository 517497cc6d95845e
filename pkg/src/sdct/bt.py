"""Binary-tree subband splitting of the angle vector (SDCT-BT) and SDCT-1.

Here the coefficients are always the plain quantized SDCT coefficients of
the block, and the coefficient rate is the real coded length of the block.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .entropy import measure_block_rate
from .errors import MalformedTreeError
from .rd import AngleRateMode, RdBreakdown, RdParams, quantize_indices
from .transform import AngleVector, as_block, dct2, num_pairs, rotate


def split_range(start: int, stop: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Halve ``[start, stop)``; the odd element goes to the second group."""
    mid = start + (stop - start) // 2
    return (start, mid), (mid, stop)


def max_split_levels(p: int) -> int:
    return int(math.floor(math.log2(p))) if p >= 1 else 0


@dataclass(frozen=True)
class SubbandTree:
    """Leaves of a binary halving tree over zigzag angle positions ``0..p-1``.

    ``leaves`` holds ``(start, stop, depth)`` sorted by ``start``; ``angles``
    the grid index of each leaf in the same order.
    """

    p: int
    leaves: tuple[tuple[int, int, int], ...]
    angles: tuple[int, ...]

    @classmethod
    def single(cls, p: int, angle: int) -> "SubbandTree":
        return cls(p, ((0, p, 0),), (int(angle),))

    @property
    def num_leaves(self) -> int:
        return len(self.leaves)

    @property
    def num_nodes(self) -> int:
        return 2 * len(self.leaves) - 1

    @property
    def depth(self) -> int:
        return 1 + max(d for _, _, d in self.leaves)

    def split(self, leaf: int, first_angle: int, second_angle: int) -> "SubbandTree":
        start, stop, depth = self.leaves[leaf]
        (a0, a1), (b0, b1) = split_range(start, stop)
        leaves = self.leaves[:leaf] + ((a0, a1, depth + 1), (b0, b1, depth + 1)) + self.leaves[leaf + 1:]
        angles = self.angles[:leaf] + (int(first_angle), int(second_angle)) + self.angles[leaf + 1:]
        return SubbandTree(self.p, leaves, angles)

    def with_angle(self, leaf: int, angle: int) -> "SubbandTree":
        angles = list(self.angles)
        angles[leaf] = int(angle)
        return SubbandTree(self.p, self.leaves, tuple(angles))


def serialize_tree(tree: SubbandTree) -> list[int]:
    """Breadth-first node labels from the root: 1 = leaf (subband), 0 = split."""
    leaf_set = {(a, b) for a, b, _ in tree.leaves}
    bits = []
    queue = deque([(0, tree.p)])
    while queue:
        start, stop = queue.popleft()
        if (start, stop) in leaf_set:
            bits.append(1)
            continue
        if stop - start < 2:
            raise MalformedTreeError("leaves do not tile the angle range")
        bits.append(0)
        queue.extend(split_range(start, stop))
    if len(bits) != tree.num_nodes:
        raise MalformedTreeError("leaves do not tile the angle range")
    return bits


def read_tree_structure(read_bit, p: int) -> list[tuple[int, int, int]]:
    """Parse tree labels with ``read_bit()``; returns leaves sorted by start."""
    max_depth = max_split_levels(p)
    leaves = []
    queue = deque([(0, p, 0)])
    while queue:
        start, stop, depth = queue.popleft()
        if read_bit():
            leaves.append((start, stop, depth))
            continue
        if stop - start < 2 or depth >= max_depth:
            raise MalformedTreeError(f"node [{start}, {stop}) at depth {depth} cannot be split")
        (a0, a1), (b0, b1) = split_range(start, stop)
        queue.append((a0, a1, depth + 1))
        queue.append((b0, b1, depth + 1))
    return sorted(leaves)


def deserialize_tree(bits, p: int, angles=None) -> SubbandTree:
    bits = list(bits)
    pos = 0

    def read_bit():
        nonlocal pos
        if pos >= len(bits):
            raise MalformedTreeError("truncated tree bit sequence")
        pos += 1
        return bits[pos - 1]

    leaves = read_tree_structure(read_bit, p)
    if pos != len(bits):
        raise MalformedTreeError(f"{len(bits) - pos} trailing bits after a complete tree")
    if angles is None:
        angles = (0,) * len(leaves)
    if len(angles) != len(leaves):
        raise MalformedTreeError("one angle per leaf expected")
    return SubbandTree(p, tuple(leaves), tuple(int(a) for a in angles))


def expand_tree_to_angles(tree: SubbandTree) -> np.ndarray:
    out = np.empty(tree.p, dtype=np.int64)
    for (start, stop, _), angle in zip(tree.leaves, tree.angles):
        out[start:stop] = angle
    return out


def tree_side_bits(num_leaves: int, angle_bits: int) -> int:
    return (2 * num_leaves - 1) + angle_bits * num_leaves


class RealRateObjective:
    """``J(theta)`` with plain quantization and the real coded length of the block.

    The coefficient part (distortion, coded bits) is memoized per angle
    vector, so repeated candidates within one block are free.
    """

    def __init__(self, d: np.ndarray, n: int, params: RdParams, energy: float | None = None, rate_fn=None):
        self.d = np.asarray(d, dtype=np.float64)
        self.n = n
        self.params = params
        self.offset = (float(energy) if energy is not None else float(self.d @ self.d)) - float(self.d @ self.d)
        self.rate_fn = rate_fn or measure_block_rate
        self._memo: dict[bytes, tuple[float, int, int]] = {}

    def coefficient_part(self, idx: np.ndarray) -> tuple[float, int, int]:
        key = idx.astype(np.int8).tobytes()
        hit = self._memo.get(key)
        if hit is None:
            x = rotate(self.d, idx * (math.pi / self.params.q_theta), self.n)
            q = quantize_indices(x, self.params.coeff_step)
            r = x - q * self.params.coeff_step
            hit = (max(float(r @ r) + self.offset, 0.0), int(self.rate_fn(q)), int(np.count_nonzero(q)))
            self._memo[key] = hit
        return hit

    def indices(self, idx: np.ndarray) -> np.ndarray:
        x = rotate(self.d, idx * (math.pi / self.params.q_theta), self.n)
        return quantize_indices(x, self.params.coeff_step)

    def breakdown(self, idx: np.ndarray, side_bits: float, num_subbands: int) -> RdBreakdown:
        dist, bits, nnz = self.coefficient_part(idx)
        if not idx.any():
            side_bits, num_subbands = 0.0, 0
        return RdBreakdown(dist, float(bits), float(side_bits), self.params.lam, num_subbands, nnz)


def _bt_breakdown(obj: RealRateObjective, tree: SubbandTree) -> RdBreakdown:
    idx = expand_tree_to_angles(tree)
    side = tree_side_bits(tree.num_leaves, obj.params.angle_bits)
    return obj.breakdown(idx, side, tree.num_leaves)


def _best_leaf_angle(obj: RealRateObjective, tree: SubbandTree, leaf: int) -> tuple[SubbandTree, RdBreakdown]:
    # exhaustive over the grid; the incumbent angle wins ties
    best_tree = tree
    best = _bt_breakdown(obj, tree)
    for w in range(obj.params.q_theta):
        if w == tree.angles[leaf]:
            continue
        cand = tree.with_angle(leaf, w)
        bd = _bt_breakdown(obj, cand)
        if bd.J < best.J:
            best_tree, best = cand, bd
    return best_tree, best


def run_bt_dct(d: np.ndarray, n: int, params: RdParams, init_angle: int, energy: float | None = None,
               max_levels: int | None = None, objective: RealRateObjective | None = None):
    """SDCT-BT on precomputed DCT coefficients; returns ``(tree, angles, breakdown)``."""
    params = params.with_(angle_mode=AngleRateMode.BT_TREE)
    p = num_pairs(n)
    obj = objective or RealRateObjective(d, n, params, energy)
    tree = SubbandTree.single(p, init_angle)
    best = _bt_breakdown(obj, tree)
    levels = max_split_levels(p) if max_levels is None else min(max_levels, max_split_levels(p))
    for level in range(1, levels + 1):
        split_done = False
        leaf = 0
        while leaf < tree.num_leaves:
            start, stop, depth = tree.leaves[leaf]
            if depth != level - 1 or stop - start < 2:
                leaf += 1
                continue
            parent = tree.angles[leaf]
            cand = tree.split(leaf, parent, parent)
            cand, _ = _best_leaf_angle(obj, cand, leaf)
            cand, bd = _best_leaf_angle(obj, cand, leaf + 1)
            if bd.J < best.J:
                tree, best = cand, bd
                split_done = True
                leaf += 2
            else:
                leaf += 1
        if not split_done:
            break
    return tree, AngleVector(n, expand_tree_to_angles(tree), params.q_theta), best


def run_sdct_bt(block, params: RdParams, init_angle: int, max_levels: int | None = None):
    x = as_block(block)
    return run_bt_dct(dct2(x), x.shape[-1], params, init_angle, float((x * x).sum()), max_levels)


def best_bt_over_inits(d: np.ndarray, n: int, params: RdParams, energy: float | None = None):
    params = params.with_(angle_mode=AngleRateMode.BT_TREE)
    obj = RealRateObjective(d, n, params, energy)
    best = None
    for a in range(params.q_theta):
        res = run_bt_dct(d, n, params, a, energy, objective=obj)
        if best is None or res[2].J < best[2].J:
            best = res
    return best


def run_sdct1_dct(d: np.ndarray, n: int, params: RdParams, energy: float | None = None,
                  objective: RealRateObjective | None = None,
                  mode_bit: bool = False) -> tuple[int, np.ndarray, RdBreakdown]:
    """Single angle per block, exhaustive over the grid.

    A nonzero angle costs its raw index bits, plus the block mode bit when
    ``mode_bit`` is set; the zero angle is the DCT and costs nothing.
    """
    obj = objective or RealRateObjective(d, n, params, energy)
    p = num_pairs(n)
    best = None
    for a in range(params.q_theta):
        idx = np.full(p, a, dtype=np.int64)
        bd = obj.breakdown(idx, params.angle_bits + int(mode_bit), 1)
        if best is None or bd.J < best[2].J:
            best = (a, idx, bd)
    a, idx, bd = best
    return a, obj.indices(idx) * params.coeff_step, bd
