"""Fast invariant suites behind ``sdct selftest``."""

from __future__ import annotations

import sys
import time

import numpy as np

from .am import run_am_dct
from .bt import SubbandTree, deserialize_tree, serialize_tree
from .codec import Algorithm, CodecParams, Flavor, audit_bits, decode_stream, encode_image
from .integer import integer_dct2, integer_idct2, load_integer_tables
from .rd import RdParams
from .transform import (
    AngleVector,
    build_sdct,
    dct2,
    eigen_pair_table,
    grid_laplacian,
    num_pairs,
)

SEED = 20240601


class SelftestFailure(Exception):
    pass


def _check(condition, message: str) -> None:
    # explicit check so the suites still run under python -O
    if not condition:
        raise SelftestFailure(message)


def suite_orthogonality(rng) -> None:
    for n in (4, 8):
        for _ in range(5):
            a = AngleVector(n, rng.integers(0, 8, num_pairs(n)))
            v = build_sdct(n, a).V
            err = np.abs(v.T @ v - np.eye(n * n)).max()
            _check(err < 1e-10, f"n={n}: V^T V deviates by {err:.2e}")


def suite_eigen(rng) -> None:
    for n in (4, 8):
        lap = grid_laplacian(n)
        table = eigen_pair_table(n)
        a = AngleVector(n, rng.integers(0, 8, num_pairs(n)))
        v = build_sdct(n, a).V
        res = np.abs(lap @ v - v * table.eigenvalues[None, :]).max()
        _check(res < 1e-8, f"n={n}: eigen residual {res:.2e}")
        _check(table.multiplicity_of(4.0) == n - 1, f"n={n}: multiplicity of 4")
        _check(table.simple_count() == n - 1, f"n={n}: simple eigenvalue count")


def suite_integer(rng, tables) -> None:
    for n in (8, 16):
        x = rng.integers(0, 256, (20, n, n)) - 128
        ci = integer_dct2(x, tables)
        err = np.abs(ci - dct2(x.astype(float))).max()
        _check(err <= 8, f"n={n}: integer DCT differs from the float DCT by {err}")
        back = integer_idct2(ci, n, tables)
        rt = np.abs(back - x).max()
        _check(rt <= 4, f"n={n}: integer round trip error {rt}")


def suite_codec_roundtrip(rng) -> None:
    img = np.clip(rng.normal(128, 40, (24, 20)), 0, 255).astype(np.uint8)
    for alg in Algorithm:
        for flavor in Flavor:
            enc = encode_image(img, CodecParams(n=8, coeff_step=12.0, algorithm=alg, flavor=flavor))
            dec = decode_stream(enc.bitstream)
            _check(np.array_equal(dec.image, enc.image), f"{alg.name}/{flavor.name}: decode mismatch")
            _check(audit_bits(enc.records) == enc.total_bits, f"{alg.name}/{flavor.name}: bit audit mismatch")


def suite_monotonicity(rng) -> None:
    n = 8
    params = RdParams(lam=20.0, alpha=8.0, coeff_step=8.0)
    for _ in range(20):
        d = dct2(rng.normal(0, 40, (n, n)))
        st = run_am_dct(d, n, params, int(rng.integers(0, 8)))
        j = [h.J for h in st.J_history]
        _check(all(b <= a + 1e-9 for a, b in zip(j, j[1:])), "AM objective increased")


def suite_serializer(rng) -> None:
    for p in (6, 28, 120):
        for _ in range(50):
            tree = SubbandTree.single(p, 0)
            for _ in range(int(rng.integers(0, 8))):
                splittable = [k for k, (a, b, d) in enumerate(tree.leaves) if b - a >= 2 and d < int(np.log2(p))]
                if not splittable:
                    break
                k = splittable[int(rng.integers(len(splittable)))]
                tree = tree.split(k, 0, 0)
            bits = serialize_tree(tree)
            _check(len(bits) == 2 * tree.num_leaves - 1, "structure bits != 2s-1")
            _check(deserialize_tree(bits, p).leaves == tree.leaves, "tree round trip failed")


def run_selftest(tables_path=None, out=sys.stdout) -> bool:
    rng = np.random.default_rng(SEED)
    try:
        tables = load_integer_tables(tables_path)
    except Exception as exc:  # a broken table file is itself a failure
        print(f"FAIL integer tables: {exc}", file=out)
        return False
    suites = [
        ("orthogonality", lambda: suite_orthogonality(rng)),
        ("eigen-consistency", lambda: suite_eigen(rng)),
        ("integer-transform", lambda: suite_integer(rng, tables)),
        ("codec-round-trip", lambda: suite_codec_roundtrip(rng)),
        ("am-monotonicity", lambda: suite_monotonicity(rng)),
        ("tree-serializer", lambda: suite_serializer(rng)),
    ]
    ok = True
    for name, fn in suites:
        t0 = time.perf_counter()
        try:
            fn()
            status = "PASS"
        except SelftestFailure as exc:
            status, ok = f"FAIL ({exc})", False
        print(f"{status:<6} {name} [{time.perf_counter() - t0:.2f}s]", file=out)
    print("selftest: " + ("all suites passed" if ok else "failures present"), file=out)
    return ok
