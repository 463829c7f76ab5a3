"""Randomised verification campaigns over the whole inequality suite.

A campaign draws ``trials`` random ``n``-simplices and runs every check
on each catalog function: the classic two-sided bound, the pairwise face
lemma, refinement monotonicity of the partition functional, the partition
sandwich, and every single-simplex bound.  Everything is derived from one
seed; trial ``t`` uses sub-seeds hashed from ``(seed, label, t)``, so the
summary is identical for any thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any

import numpy as np

from ._parallel import derive_seed, pmap
from .bounds import (
    ABS_TOL,
    ChainResult,
    FaceAverages,
    _all_faces_barycenter,
    _barycenter_face,
    _barycenter_vertex,
    _divisor,
    _mixed_group,
    _partition_functional,
    _vertex_face,
    _vertex_mean,
    check_lemma,
    compare,
    divisors,
)
from .functions import ConvexFunction, random_affine, random_catalog, squared_norm
from .partitions import (
    MAX_ENUMERATION_N,
    Partition,
    enumerate_partitions,
    refines,
    sample_partitions,
    singleton_partition,
    trivial_partition,
)
from .simplex import random_simplex

#: up to this n every ordered refinement pair is compared; above it, covering pairs only
ALL_PAIRS_MAX_N = 4
SAMPLED_PARTITIONS = 20
SAMPLED_LEMMA_PAIRS = 200
MAX_LISTED_FAILURES = 50


def _rng(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(derive_seed(seed, *labels)))


def covering_refinements(P: Partition) -> list[Partition]:
    """Partitions obtained from ``P`` by splitting one block into two."""
    out = []
    for j, block in enumerate(P.blocks):
        first, rest = block[0], block[1:]
        # fix `first` in the left half to list each unordered split once
        for r in range(len(rest)):
            for mates in combinations(rest, r):
                left = (first,) + mates
                right = tuple(i for i in rest if i not in mates)
                blocks = P.blocks[:j] + (left, right) + P.blocks[j + 1:]
                out.append(Partition(blocks, P.ground_size))
    return out


def disjoint_pairs(n: int):
    """Unordered pairs of disjoint nonempty subsets of ``{0..n}``."""
    ground = range(n + 1)
    for size in range(2, n + 2):
        for union in combinations(ground, size):
            head, tail = union[0], union[1:]
            for r in range(len(tail)):
                for mates in combinations(tail, r):
                    K = (head,) + mates
                    L = tuple(i for i in tail if i not in mates)
                    yield K, L


def _random_disjoint_pair(n: int, rng: np.random.Generator):
    while True:
        labels = rng.integers(0, 3, n + 1)
        K = tuple(int(i) for i in np.flatnonzero(labels == 1))
        L = tuple(int(i) for i in np.flatnonzero(labels == 2))
        if K and L:
            return K, L


@dataclass
class CheckTally:
    checked: int = 0
    passed: int = 0
    worst_slack: float = 0.0
    by_check: dict[str, list[int]] = field(default_factory=dict)
    failures: list[dict[str, Any]] = field(default_factory=list)

    def add(self, category: str, result: ChainResult, trial: int, kind: str) -> None:
        self.checked += 1
        counts = self.by_check.setdefault(category, [0, 0])
        counts[0] += 1
        if result.passed:
            self.passed += 1
            counts[1] += 1
        else:
            self.failures.append({"trial": trial, "function": kind, "check": category, **result.to_dict()})
        self.worst_slack = min(self.worst_slack, result.slack)

    def merge(self, other: CheckTally) -> None:
        self.checked += other.checked
        self.passed += other.passed
        self.worst_slack = min(self.worst_slack, other.worst_slack)
        for k, (c, p) in other.by_check.items():
            mine = self.by_check.setdefault(k, [0, 0])
            mine[0] += c
            mine[1] += p
        self.failures.extend(other.failures)


def _partition_pairs(n: int, rng: np.random.Generator) -> tuple[list[Partition], list[tuple[Partition, Partition]], str]:
    # returns (partitions, (coarse, fine) pairs, mode)
    if n <= MAX_ENUMERATION_N:
        parts = list(enumerate_partitions(n))
        if n <= ALL_PAIRS_MAX_N:
            pairs = [(K, L) for K in parts for L in parts if K.rgs != L.rgs and refines(L, K)]
        else:
            pairs = [(K, L) for K in parts for L in covering_refinements(K)]
        return parts, pairs, "exhaustive"
    sampled = sample_partitions(n, SAMPLED_PARTITIONS, int(rng.integers(0, 2**63)))
    bottom, top = singleton_partition(n), trivial_partition(n)
    pairs = []
    for P in sampled:
        pairs += [(P, bottom), (top, P)]
        splits = covering_refinements(P)
        if splits:
            pairs.append((P, splits[int(rng.integers(0, len(splits)))]))
    parts = {p.rgs: p for p in sampled + [bottom, top] + [L for _, L in pairs]}
    return list(parts.values()), pairs, "sampled"


def catalog_for_trial(n: int, seed: int, trial: int, inject_nonconvex: bool = False) -> list[ConvexFunction]:
    rng = _rng(seed, "functions", trial)
    funcs = random_catalog(n, rng) + [random_affine(n, rng)]
    if inject_nonconvex:
        funcs.append(squared_norm(n, -1.0))
    return funcs


def run_trial(n: int, seed: int, trial: int, inject_nonconvex: bool = False,
              abs_tol: float = ABS_TOL) -> tuple[CheckTally, str]:
    s = random_simplex(n, _rng(seed, "simplex", trial))
    prng = _rng(seed, "partitions", trial)
    parts, pairs, mode = _partition_pairs(n, prng)
    if n <= MAX_ENUMERATION_N:
        lemma_pairs = list(disjoint_pairs(n))
    else:
        lemma_pairs = [_random_disjoint_pair(n, prng) for _ in range(SAMPLED_LEMMA_PAIRS)]

    tally = CheckTally()
    for f in catalog_for_trial(n, seed, trial, inject_nonconvex):
        fa = FaceAverages(s, f)
        kind = f.kind
        avg = fa[fa.full]
        vmean = _vertex_mean(fa)
        tally.add("classic_lower", compare("f(b) <= Avg", fa.at_barycenter(fa.full), avg, abs_tol), trial, kind)
        tally.add("classic_upper", compare("Avg <= vertex mean", avg, vmean, abs_tol), trial, kind)
        for K, L in lemma_pairs:
            tally.add("lemma", check_lemma(fa, f, K, L, abs_tol=abs_tol), trial, kind)

        functional = {P.rgs: _partition_functional(fa, P) for P in parts}
        vertex_sum = vmean._replace(value=vmean.value * (n + 1))
        scaled_avg = avg._replace(value=avg.value * (n + 1), error=avg.error * (n + 1))
        for P in parts:
            F = functional[P.rgs]
            tally.add("sandwich_lower", compare(f"(n+1)Avg <= F({P})", scaled_avg, F, abs_tol), trial, kind)
            tally.add("sandwich_upper", compare(f"F({P}) <= sum f(x_i)", F, vertex_sum, abs_tol), trial, kind)
        for K, L in pairs:
            tally.add("monotonicity", compare(f"F({K}) <= F({L})", functional[K.rgs], functional[L.rgs], abs_tol),
                      trial, kind)

        bounds = {
            "vertex_face": _vertex_face(fa),
            "barycenter_face": _barycenter_face(fa),
            "barycenter_vertex": _barycenter_vertex(fa),
            "all_faces_barycenter": _all_faces_barycenter(fa),
        }
        for d in divisors(n + 1):
            bounds[f"divisor[d={d}]"] = _divisor(fa, d)
        for k in range(1, n + 2):
            bounds[f"mixed_group[k={k}]"] = _mixed_group(fa, k)
        for name, est in bounds.items():
            tally.add(name.split("[")[0], compare(f"Avg <= {name}", avg, est, abs_tol), trial, kind)
        tally.add("barycenter_vertex_le_vertex_mean",
                  compare("barycenter_vertex <= vertex mean", bounds["barycenter_vertex"], vmean, abs_tol),
                  trial, kind)
    return tally, mode


def run_campaign(n: int, trials: int, seed: int, inject_nonconvex: bool = False,
                 threads: int | None = None, abs_tol: float = ABS_TOL) -> dict[str, Any]:
    """Run ``trials`` random trials and summarise them as a JSON-ready dict."""
    if n < 1:
        raise ValueError("verify needs n >= 1")
    if trials < 1:
        raise ValueError("verify needs trials >= 1")
    results = pmap(lambda t: run_trial(n, seed, t, inject_nonconvex, abs_tol), range(trials), threads)
    total = CheckTally()
    for tally, _ in results:
        total.merge(tally)
    mode = results[0][1]
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "mode": mode,
        "pairs": "all" if n <= ALL_PAIRS_MAX_N else ("covers" if mode == "exhaustive" else "sampled"),
        "injected_nonconvex": inject_nonconvex,
        "functions": [f.kind for f in catalog_for_trial(n, seed, 0, inject_nonconvex)],
        "checked": total.checked,
        "passed": total.passed,
        "failed": total.checked - total.passed,
        "max_negative_margin": -total.worst_slack if total.worst_slack < 0 else 0.0,
        "by_check": {k: {"checked": c, "passed": p} for k, (c, p) in sorted(total.by_check.items())},
        "failures": total.failures[:MAX_LISTED_FAILURES],
    }
