"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are
repeated in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""
import json
import resource
import subprocess
import sys
import time

import numpy as np
import pytest

from lpkernel.generate import instance_seed
from lpkernel.suites import run_suite, sample_structure
from lpkernel.support_graph import (
    build_incidence,
    components_equivrel,
    components_graph,
    disjoint_partition,
    partition_violations,
)
from lpkernel.verification import brute_force_components

SEED = 20240601
FAMILIES = 10 ** 4
INSTANCES = 10 ** 3


@pytest.fixture(scope="module")
def partition_run():
    """10^4 random families: sizes 1-500, sparsity 1-16."""
    stats = {"partition_failures": [], "uf_bfs": [], "brute": [], "brute_checked": 0, "vectors": 0}
    t0 = time.perf_counter()
    for i in range(FAMILIES):
        rng = np.random.default_rng(instance_seed(SEED, i))
        n = int(rng.integers(1, 501))
        s = int(rng.integers(1, 17))
        universe = int(rng.integers(max(s, 2), max(s + 2, 2 * n * s // 3)))
        D = sample_structure(rng, n, universe, s)
        stats["vectors"] += n
        inc = build_incidence(D)
        uf = components_equivrel(D, inc)
        bfs = components_graph(D, inc)
        part = disjoint_partition(D, uf)
        bad = partition_violations(D, part)
        covered = np.sort(np.asarray([v for g in part.groups for v in g]))
        if bad or not np.array_equal(covered, D.ids):
            stats["partition_failures"].append((i, bad))
        if uf != bfs:
            stats["uf_bfs"].append(i)
        if n <= 200:
            stats["brute_checked"] += 1
            if not np.array_equal(brute_force_components(D), uf.component_of):
                stats["brute"].append(i)
    stats["seconds"] = time.perf_counter() - t0
    return stats


def test_criterion_1_partition_soundness(partition_run, criterion):
    r = partition_run
    ok = not r["partition_failures"] and r["seconds"] < 60
    criterion(1, "partition soundness/completeness", ok,
              f"{FAMILIES} families, {r['vectors']} vectors, {len(r['partition_failures'])} failures, "
              f"{r['seconds']:.1f} s (limit 60 s)")
    assert not r["partition_failures"], r["partition_failures"][:3]
    assert r["seconds"] < 60


def test_criterion_2_cross_proof_agreement(partition_run, criterion):
    r = partition_run
    ok = not r["uf_bfs"] and not r["brute"] and r["brute_checked"] > 0
    criterion(2, "union-find = BFS = brute-force closure", ok,
              f"{len(r['uf_bfs'])} union-find/BFS mismatches over {FAMILIES} families, "
              f"{len(r['brute'])} brute-force mismatches over {r['brute_checked']} families of size <= 200")
    assert ok


def _suite(number, title, name, criterion, limit=None, instances=INSTANCES):
    t0 = time.perf_counter()
    rep = run_suite(name, instances, seed=SEED)
    dt = time.perf_counter() - t0
    fails = rep["failures"]
    ok = not fails and (limit is None or dt < limit)
    detail = f"{instances} instances, {len(fails)} failures, {dt:.1f} s"
    if limit is not None:
        detail += f" (limit {limit} s)"
    if fails:
        detail += f"; first: {json.dumps(fails[0], default=str)[:300]}"
    criterion(number, title, ok, detail)
    return ok, fails, dt


def test_criterion_3_dense_image(criterion):
    ok, fails, _ = _suite(3, "dense-image probes, rank and contraction", "dense_image", criterion)
    assert ok, fails[:3]


def test_criterion_4_kernel_synthesis(criterion):
    ok, fails, dt = _suite(4, "ker T = span Y (duality, quotient on l_p, l_1, c0)", "kernel", criterion, limit=300)
    assert ok, (fails[:3], dt)


def test_criterion_5_duality_chain(criterion):
    ok, fails, _ = _suite(5, "annihilator identities", "duality", criterion)
    assert ok, fails[:3]


def test_criterion_6_biorthogonality(criterion):
    ok, fails, _ = _suite(6, "Markushevich biorthogonality and evaluation rank", "biorthogonal", criterion)
    assert ok, fails[:3]


def test_criterion_7_lp_sum_isometry(criterion):
    ok, fails, _ = _suite(7, "l_p-sum isometry, p in {1, 2, 3}", "lpsum", criterion)
    assert ok, fails[:3]


def _bench(threads: int) -> tuple[dict, float, float]:
    before = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "lpkernel", "bench", "--n", "1000000", "--universe", "10000000",
         "--support", "geometric:8", "--seed", "8", "--threads", str(threads)],
        capture_output=True, text=True, check=True)
    elapsed = time.perf_counter() - t0
    peak_mb = max(before, resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss) / 1024.0
    return json.loads(proc.stdout), elapsed, peak_mb


def test_criterion_8_performance(criterion):
    runs = [_bench(1), _bench(1), _bench(2)]
    hashes = {r["hash"] for r, _, _ in runs}
    wall = max(r["timing"]["wall_s"] for r, _, _ in runs)
    elapsed = max(e for _, e, _ in runs)
    peak = max(max(p, r["timing"]["peak_rss_mb"]) for r, _, p in runs)
    rep = runs[0][0]
    ok = len(hashes) == 1 and elapsed < 30 and peak < 4096 and rep["n_vectors"] == 10 ** 6
    criterion(8, "partition of 10^6 vectors", ok,
              f"mean support {rep['mean_support']:.3f}, partition {wall:.2f} s, whole process {elapsed:.2f} s "
              f"(limit 30 s), peak RSS {peak:.0f} MB (limit 4096), {rep['timing']['throughput_vectors_per_s']:.0f} "
              f"vectors/s, {rep['peak_groups']} groups, hash stable over 3 runs and 2 thread counts: {len(hashes) == 1}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
