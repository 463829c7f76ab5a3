"""Upper bounds on the average of a convex function over a simplex, and the checks that chain them.

For a convex ``f`` on an ``n``-simplex with vertices ``x_0..x_n`` every
function here returning a bound satisfies ``Avg(f, simplex) <= bound``
(``hh_classic`` also returns the lower bound ``f(barycenter)``).

Comparisons go through the tolerance policy of :func:`compare`: a relation
``lhs <= rhs`` passes iff ``rhs - lhs >= -(abs_tol + err(lhs) + err(rhs))``
where the errors are the integration error estimates that entered each
side (zero on exact paths).
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, NamedTuple

import numpy as np

from ._parallel import pmap
from .errors import NotADivisor, NotARefinement, NotFullDimensional, SimplexHHError, WrongCount
from .functions import ConvexFunction, convexity_sample_check
from .integrate import AvgResult, Integrator, default_integrator
from .partitions import (
    Partition,
    enumerate_partitions,
    equal_block_partitions,
    refines,
    singleton_partition,
    trivial_partition,
)
from .simplex import FaceSet, Simplex, face, face_set

ABS_TOL = 1e-9


class Estimate(NamedTuple):
    """A computed quantity and the integration error that went into it."""

    value: float
    error: float = 0.0


def _combine(terms: Iterable[tuple[float, Estimate]]) -> Estimate:
    value = err = 0.0
    for w, e in terms:
        value += w * e.value
        err += abs(w) * e.error
    return Estimate(value, err)


class FaceAverages:
    """Memoised face averages and barycenter values of one function on one simplex."""

    def __init__(self, s: Simplex, f: ConvexFunction, integrator: Integrator | None = None):
        if s.intrinsic_dim < 1:
            raise NotFullDimensional("bounds need a simplex of dimension >= 1")
        self.simplex = s
        self.f = f
        self.integrator = integrator or default_integrator
        self.n = s.intrinsic_dim
        self._avg: dict[FaceSet, AvgResult] = {}
        self._bary: dict[FaceSet, float] = {}

    def result(self, K: Iterable[int]) -> AvgResult:
        K = face_set(K, self.n)
        if K not in self._avg:
            self._avg[K] = self.integrator(face(self.simplex, K), self.f)
        return self._avg[K]

    def __getitem__(self, K: Iterable[int]) -> Estimate:
        r = self.result(K)
        return Estimate(r.value, r.error_estimate)

    def prefetch(self, faces: Iterable[Iterable[int]], threads: int | None = None) -> None:
        todo = sorted({face_set(K, self.n) for K in faces} - set(self._avg))
        for K, r in zip(todo, pmap(lambda K: self.integrator(face(self.simplex, K), self.f), todo, threads)):
            self._avg[K] = r

    def at_barycenter(self, K: Iterable[int]) -> float:
        K = face_set(K, self.n)
        if K not in self._bary:
            self._bary[K] = self.f.evaluate(self.simplex.vertices[list(K)].mean(axis=0))
        return self._bary[K]

    @property
    def full(self) -> FaceSet:
        return tuple(range(self.n + 1))

    def vertex_values(self) -> np.ndarray:
        return np.asarray(self.f.evaluate(self.simplex.vertices))

    def faces_of_size(self, m: int) -> list[FaceSet]:
        return list(combinations(range(self.n + 1), m))


def _averages(s, f, integrator) -> FaceAverages:
    if isinstance(s, FaceAverages):
        return s
    return FaceAverages(s, f, integrator)


# -- tolerance policy ---------------------------------------------------------


@dataclass(frozen=True)
class ChainResult:
    relation: str
    lhs: float
    rhs: float
    slack: float
    budget: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "relation": self.relation, "lhs": self.lhs, "rhs": self.rhs,
            "slack": self.slack, "budget": self.budget, "passed": self.passed,
        }


def compare(relation: str, lhs: Estimate | float, rhs: Estimate | float, abs_tol: float = ABS_TOL) -> ChainResult:
    """Evaluate ``lhs <= rhs`` under the tolerance policy."""
    lhs = lhs if isinstance(lhs, Estimate) else Estimate(float(lhs))
    rhs = rhs if isinstance(rhs, Estimate) else Estimate(float(rhs))
    budget = lhs.error + rhs.error
    slack = rhs.value - lhs.value
    return ChainResult(relation, lhs.value, rhs.value, slack, budget, slack >= -(abs_tol + budget))


# -- classic bounds -----------------------------------------------------------


def hh_classic(s: Simplex, f: ConvexFunction) -> tuple[float, float]:
    """``(f(barycenter), mean of vertex values)``, the two-sided classic bounds on the average."""
    fa = _averages(s, f, None)
    return fa.at_barycenter(fa.full), float(np.mean(fa.vertex_values()))


def _vertex_mean(fa: FaceAverages) -> Estimate:
    return Estimate(float(np.mean(fa.vertex_values())))


# -- partition functional -----------------------------------------------------


def _check_partition(fa: FaceAverages, P: Partition) -> None:
    if P.ground_size != fa.n + 1:
        raise ValueError(f"partition of {P.ground_size} elements used on a simplex with {fa.n + 1} vertices")


def _partition_functional(fa: FaceAverages, P: Partition) -> Estimate:
    _check_partition(fa, P)
    return _combine((len(b), fa[b]) for b in P.blocks)


def partition_functional(s: Simplex, f: ConvexFunction, P: Partition, integrator: Integrator | None = None) -> float:
    """``sum over blocks B of |B| * Avg(f, face B)``.

    Decreases (weakly) as ``P`` is coarsened; equals ``sum f(x_i)`` for the
    singleton partition and ``(n + 1) Avg(f, s)`` for the one-block partition.
    """
    return _partition_functional(_averages(s, f, integrator), P).value


def lemma_combine(k_card: int, l_card: int, avg_K: float, avg_L: float) -> float:
    """Cardinality-weighted mean of two disjoint faces' averages.

    Upper-bounds the average over the face the two span together.
    """
    if k_card < 1 or l_card < 1:
        raise ValueError("face cardinalities must be >= 1")
    return (k_card * avg_K + l_card * avg_L) / (k_card + l_card)


def check_lemma(s, f, K: Iterable[int], L: Iterable[int], integrator: Integrator | None = None,
                abs_tol: float = ABS_TOL) -> ChainResult:
    """``Avg(f, face K u L) <= lemma_combine(|K|, |L|, Avg_K, Avg_L)`` for disjoint ``K``, ``L``."""
    fa = _averages(s, f, integrator)
    K, L = face_set(K, fa.n), face_set(L, fa.n)
    if set(K) & set(L):
        raise ValueError(f"{K} and {L} are not disjoint")
    kc, lc = len(K), len(L)
    rhs = _combine([(kc / (kc + lc), fa[K]), (lc / (kc + lc), fa[L])])
    return compare(f"Avg{_fmt(K + L)} <= combine(Avg{_fmt(K)}, Avg{_fmt(L)})", fa[K + L], rhs, abs_tol)


def check_refinement_monotonicity(s, f, K: Partition, L: Partition, integrator: Integrator | None = None,
                                  abs_tol: float = ABS_TOL) -> ChainResult:
    """``F(K) <= F(L)`` for ``L`` refining ``K``.

    Raises:
        NotARefinement: if ``L`` does not refine ``K``.
    """
    if not refines(L, K):
        raise NotARefinement(f"{L} does not refine {K}")
    fa = _averages(s, f, integrator)
    return compare(f"F({K}) <= F({L})", _partition_functional(fa, K), _partition_functional(fa, L), abs_tol)


# -- face-average bounds ------------------------------------------------------


def _vertex_face(fa: FaceAverages) -> Estimate:
    n = fa.n
    opposite = _combine((1.0, fa[K]) for K in fa.faces_of_size(n))
    return _combine([(1 / (n + 1), _vertex_mean(fa)), (n / (n + 1) ** 2, opposite)])


def vertex_face_bound(s, f, integrator: Integrator | None = None) -> float:
    """Mix of the vertex mean (weight ``1/(n+1)``) and the mean facet average (weight ``n/(n+1)``)."""
    return _vertex_face(_averages(s, f, integrator)).value


def _divisor(fa: FaceAverages, d: int) -> Estimate:
    if d < 1 or (fa.n + 1) % d:
        raise NotADivisor(f"{d} does not divide {fa.n + 1}")
    faces = fa.faces_of_size(d)
    return _combine((1 / len(faces), fa[K]) for K in faces)


def divisor_bound(s, f, d: int, integrator: Integrator | None = None) -> float:
    """Mean of ``Avg(f, face K)`` over all faces with ``d`` vertices, ``d`` dividing ``n + 1``."""
    return _divisor(_averages(s, f, integrator), d).value


def regular_simplex_constant(n: int, d: int) -> float:
    """``C(n, d-1)^-2 / (n+1-d)! * sqrt(d / ((n+1) 2^(n+1-d)))``."""
    if d < 1 or (n + 1) % d:
        raise NotADivisor(f"{d} does not divide {n + 1}")
    return math.sqrt(d / ((n + 1) * 2.0 ** (n + 1 - d))) / (math.comb(n, d - 1) ** 2 * math.factorial(n + 1 - d))


def regular_simplex_integral_bound(n: int, d: int, face_integrals: Sequence[float]) -> float:
    """Upper bound on ``int f`` over the unit-edge regular ``n``-simplex.

    ``face_integrals`` are the raw integrals of ``f`` over the ``C(n+1, d)``
    faces with ``d`` vertices (for ``d = 1``: the vertex values), in
    lexicographic face order.

    Raises:
        WrongCount: if the number of integrals is not ``C(n+1, d)``.
    """
    c = regular_simplex_constant(n, d)
    if len(face_integrals) != math.comb(n + 1, d):
        raise WrongCount(f"expected {math.comb(n + 1, d)} face integrals, got {len(face_integrals)}")
    return c * math.fsum(face_integrals)


def _barycenter_face(fa: FaceAverages) -> Estimate:
    n = fa.n
    opposite = _combine((1.0, fa[K]) for K in fa.faces_of_size(n))
    return _combine([(1 / (n + 1), Estimate(fa.at_barycenter(fa.full))), (n / (n + 1) ** 2, opposite)])


def barycenter_face_bound(s, f, integrator: Integrator | None = None) -> float:
    """``f(b) / (n+1)`` plus ``n/(n+1)`` times the mean facet average."""
    return _barycenter_face(_averages(s, f, integrator)).value


def _barycenter_vertex(fa: FaceAverages) -> Estimate:
    n = fa.n
    return Estimate(fa.at_barycenter(fa.full) / (n + 1) + n / (n + 1) * _vertex_mean(fa).value)


def barycenter_vertex_bound(s, f) -> float:
    """``f(b) / (n+1) + n/(n+1) * vertex mean``; needs no integration."""
    return _barycenter_vertex(_averages(s, f, None)).value


def _mean_barycenter_value(fa: FaceAverages, m: int) -> float:
    return math.fsum(fa.at_barycenter(K) for K in fa.faces_of_size(m)) / math.comb(fa.n + 1, m)


def _all_faces_barycenter(fa: FaceAverages) -> Estimate:
    n = fa.n
    return Estimate(math.fsum(_mean_barycenter_value(fa, m) for m in range(1, n + 2)) / (n + 1))


def all_faces_barycenter_bound(s, f) -> float:
    """Average over ``m = 1..n+1`` of the mean value at barycenters of faces with ``m`` vertices."""
    return _all_faces_barycenter(_averages(s, f, None)).value


@dataclass(frozen=True)
class MixedWeights:
    alpha: Fraction
    beta: Fraction | None = None


def mixed_weights(n: int, k: int) -> MixedWeights:
    """``alpha = floor((n+1)/k) / (n+1)``; for ``k = 2`` also ``beta = ceil((n+1)/2) / (n+1) = 1 - alpha``."""
    alpha = Fraction((n + 1) // k, n + 1)
    beta = Fraction(-(-(n + 1) // 2), n + 1) if k == 2 else None
    return MixedWeights(alpha, beta)


def _mixed_group(fa: FaceAverages, k: int) -> Estimate:
    n = fa.n
    if not 1 <= k <= n + 1:
        raise ValueError(f"group size must be in 1..{n + 1}, got {k}")
    alpha = float(mixed_weights(n, k).alpha)
    return Estimate(alpha * _mean_barycenter_value(fa, k) + (1 - alpha) * _vertex_mean(fa).value)


def mixed_group_bound(s, f, k: int) -> float:
    """``alpha`` times the mean value at barycenters of ``k``-vertex faces plus ``1 - alpha`` times the vertex mean."""
    return _mixed_group(_averages(s, f, None), k).value


# -- report -------------------------------------------------------------------


def _fmt(K: Sequence[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(K)) + "}"


def divisors(m: int) -> list[int]:
    return [d for d in range(1, m + 1) if m % d == 0]


def parse_partition_spec(spec: str | Iterable[str] | None, n: int) -> list[Partition]:
    """Expand a partition selection into partitions of ``{0..n}``.

    Items (separated by ``;`` or given as a list): ``all``, ``singletons``,
    ``trivial``, ``divisor=d`` (all equal-block partitions with block size
    ``d``) or an explicit partition such as ``0,1|2``.  With ``None``, all
    partitions are used for ``n <= 4`` and singletons, trivial and the
    equal-block partitions otherwise.
    """
    if spec is None:
        items = ["all"] if n <= 4 else ["singletons", "trivial"] + [f"divisor={d}" for d in divisors(n + 1)]
    elif isinstance(spec, str):
        items = [x for x in spec.split(";") if x.strip()]
    else:
        items = [x for s in spec for x in s.split(";") if x.strip()]
    out: dict[tuple, Partition] = {}
    for item in items:
        item = item.strip()
        if item == "all":
            parts = list(enumerate_partitions(n))
        elif item == "singletons":
            parts = [singleton_partition(n)]
        elif item == "trivial":
            parts = [trivial_partition(n)]
        elif item.startswith("divisor="):
            parts = equal_block_partitions(n, int(item.split("=", 1)[1]))
        else:
            parts = [Partition.parse(item, n + 1)]
        for p in parts:
            out.setdefault(p.rgs, p)
    return [out[k] for k in sorted(out)]


@dataclass(frozen=True)
class BoundEntry:
    """One evaluated bound on the average scale.

    ``margin = value - avg`` for upper bounds; ``side`` is ``"lower"`` only
    for ``f(barycenter)``.  ``raw`` keeps the unnormalised partition
    functional where applicable.
    """

    name: str
    value: float
    margin: float
    anchor: str
    error_budget: float
    passed: bool
    side: str = "upper"
    raw: float | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name, "value": self.value, "margin": self.margin, "anchor": self.anchor,
            "error_budget": self.error_budget, "passed": self.passed, "side": self.side,
        }
        if self.raw is not None:
            d["raw"] = self.raw
        return d


@dataclass
class BoundReport:
    avg: AvgResult | None
    n: int
    entries: list[BoundEntry] = field(default_factory=list)
    chains: list[ChainResult] = field(default_factory=list)
    convexity: str = "certified"
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.chains)

    @property
    def failures(self) -> list[ChainResult]:
        return [c for c in self.chains if not c.passed]

    def entry(self, name: str) -> BoundEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "avg": self.avg.to_dict() if self.avg else None,
            "n": self.n,
            "convexity": self.convexity,
            "entries": [e.to_dict() for e in self.entries],
            "chains": [c.to_dict() for c in self.chains],
            "all_passed": self.all_passed,
            "warnings": list(self.warnings),
            "errors": list(self.errors),
            "notes": dict(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "margin", "pass"])
        for e in self.entries:
            w.writerow([e.name, repr(e.value), repr(e.margin), str(e.passed).lower()])
        return buf.getvalue()

    def to_text(self) -> str:
        a = self.avg
        lines = [f"Avg = {a.value!r} ({a.method.value}, err {a.error_estimate:.3g})" if a else "Avg unavailable",
                 f"convexity: {self.convexity}"]
        lines += [f"WARNING: {w}" for w in self.warnings]
        width = max((len(e.name) for e in self.entries), default=4)
        for e in self.entries:
            flag = "ok  " if e.passed else "FAIL"
            lines.append(f"{flag} {e.name:<{width}}  {e.value!r:<24} margin {e.margin:+.3e}")
        bad = self.failures
        lines.append(f"chains: {len(self.chains) - len(bad)}/{len(self.chains)} passed")
        lines += [f"FAIL {c.relation}: slack {c.slack:.3e} (budget {c.budget:.1e})" for c in bad]
        lines += [f"error: {e}" for e in self.errors]
        lines += [f"{k}: {v}" for k, v in sorted(self.notes.items())]
        return "\n".join(lines) + "\n"


def full_report(s: Simplex, f: ConvexFunction, partitions: str | Iterable[str] | Sequence[Partition] | None = None,
                integrator: Integrator | None = None, abs_tol: float = ABS_TOL, convexity_trials: int = 1000,
                seed: int = 0, threads: int | None = None) -> BoundReport:
    """Evaluate the average, every bound and every chain relation on one instance.

    Failures of individual entries are recorded in the report, never raised.
    A function that is neither certified convex nor passes the sampled
    check is still evaluated, with a warning.
    """
    fa = FaceAverages(s, f, integrator)
    n = fa.n
    if partitions is None or isinstance(partitions, str) or not all(isinstance(p, Partition) for p in partitions):
        parts = parse_partition_spec(partitions, n)
    else:
        parts = list(partitions)

    if f.convexity_certified:
        convexity = "certified"
        warnings = []
    else:
        check = convexity_sample_check(f, s, convexity_trials, seed)
        convexity = "sample-checked" if check else "failed sampled check"
        warnings = [] if check else [f"function is not convex on this simplex (witness {check.witness})"]

    faces = {K for P in parts for K in P.blocks} | set(fa.faces_of_size(n)) | {fa.full}
    faces |= {K for d in divisors(n + 1) for K in fa.faces_of_size(d)}
    report = BoundReport(avg=None, n=n, convexity=convexity, warnings=warnings)
    try:
        fa.prefetch(faces, threads)
        report.avg = fa.result(fa.full)
    except SimplexHHError as exc:
        report.errors.append(f"average: {exc}")
        return report
    avg = fa[fa.full]

    def add(name, anchor, compute, side="upper", scale=1.0):
        try:
            est = compute()
        except SimplexHHError as exc:
            report.errors.append(f"{name}: {exc}")
            return None
        value = Estimate(est.value / scale, est.error / scale)
        chain = compare(f"Avg <= {name}", avg, value, abs_tol) if side == "upper" else \
            compare(f"{name} <= Avg", value, avg, abs_tol)
        report.entries.append(BoundEntry(name, value.value, value.value - avg.value, anchor,
                                         value.error + avg.error, chain.passed, side,
                                         est.value if scale != 1.0 else None))
        report.chains.append(chain)
        return value

    add("classic_lower", "value at the barycenter", lambda: Estimate(fa.at_barycenter(fa.full)), side="lower")
    vmean = add("classic_upper", "mean of the vertex values", lambda: _vertex_mean(fa))
    vface = add("vertex_face", "vertex mean and facet averages", lambda: _vertex_face(fa))
    for d in divisors(n + 1):
        add(f"divisor[d={d}]", "mean average over faces with d vertices", lambda d=d: _divisor(fa, d))
    functionals = {}
    for P in parts:
        est = add(f"partition[{P}]", "partition functional / (n+1)", lambda P=P: _partition_functional(fa, P),
                  scale=n + 1)
        if est is not None:
            functionals[P.rgs] = Estimate(est.value * (n + 1), est.error * (n + 1))
    add("barycenter_face", "barycenter value and facet averages", lambda: _barycenter_face(fa))
    bvert = add("barycenter_vertex", "barycenter value and vertex mean", lambda: _barycenter_vertex(fa))
    allf = add("all_faces_barycenter", "values at barycenters of all faces", lambda: _all_faces_barycenter(fa))
    for k in range(1, n + 2):
        add(f"mixed_group[k={k}]", "k-face barycenters and vertex mean", lambda k=k: _mixed_group(fa, k))

    vertex_sum = Estimate(float(np.sum(fa.vertex_values())))
    scaled_avg = Estimate((n + 1) * avg.value, (n + 1) * avg.error)
    for P in parts:
        if P.rgs in functionals:
            F = functionals[P.rgs]
            report.chains.append(compare(f"(n+1)Avg <= F({P})", scaled_avg, F, abs_tol))
            report.chains.append(compare(f"F({P}) <= sum f(x_i)", F, vertex_sum, abs_tol))
    for K in parts:
        for L in parts:
            if K.rgs != L.rgs and K.rgs in functionals and L.rgs in functionals and refines(L, K):
                report.chains.append(compare(f"F({K}) <= F({L})", functionals[K.rgs], functionals[L.rgs], abs_tol))
    if bvert is not None and vmean is not None:
        report.chains.append(compare("barycenter_vertex <= classic_upper", bvert, vmean, abs_tol))
        if vface is not None:
            report.notes["tighter_of_vertex_face_and_barycenter_vertex"] = (
                "vertex_face" if vface.value < bvert.value else
                "barycenter_vertex" if bvert.value < vface.value else "equal")
        if allf is not None:
            report.notes["all_faces_barycenter_vs_barycenter_vertex"] = (
                "<" if allf.value < bvert.value else ">" if allf.value > bvert.value else "=")
    return report
