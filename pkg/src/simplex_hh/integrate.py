"""Average value of a function over a simplex.

Three independent routes are provided:

* :func:`avg_polynomial_exact` pulls a polynomial back to the standard
  simplex ``E_k`` and integrates monomials with exact rationals,
* :func:`avg_quadrature` uses Grundmann-Moeller rules,
* :func:`avg_monte_carlo` averages over uniform samples.

The average over a 0-simplex is the value at its vertex.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from ._parallel import pmap
from .errors import DegenerateFace, DegenerateSimplex, DimensionMismatch, NotPolynomial, UnsupportedDegree
from .functions import Affine, ConvexFunction, LogSumExp, MaxAffine, Polynomial, uniform_weights
from .simplex import Simplex, barycentric_to_point, face, face_set, make_simplex, volume

MAX_QUADRATURE_DEGREE = 25
MAX_EXACT_DEGREE = 16
MAX_EXACT_AMBIENT_DIM = 6
DEFAULT_QUADRATURE_DEGREE = 10
CONVERGENCE_RTOL = 1e-10
MC_CHUNK = 1 << 16


class Method(str, enum.Enum):
    EXACT = "exact"
    QUADRATURE = "quad"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class AvgResult:
    """An average value together with how it was obtained.

    ``error_estimate`` is 0 for the exact route, a rule-difference estimate
    for quadrature and the standard error for Monte Carlo.
    ``samples_or_degree`` is the sample count or the quadrature exactness.
    """

    value: float
    method: Method
    error_estimate: float = 0.0
    samples_or_degree: int = 0
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method.value,
            "error_estimate": self.error_estimate,
            "samples_or_degree": self.samples_or_degree,
            "seed": self.seed,
        }


Integrator = Callable[[Simplex, ConvexFunction], AvgResult]


def _check_arity(s: Simplex, f: ConvexFunction) -> None:
    if f.dim != s.ambient_dim:
        raise DimensionMismatch(f"function arity {f.dim} != simplex ambient dimension {s.ambient_dim}")


def _vertex_value(s: Simplex, f: ConvexFunction, method: Method) -> AvgResult:
    return AvgResult(f.evaluate(s.vertices[0]), method, 0.0, 0)


# -- exact route --------------------------------------------------------------


def monomial_integral_standard(exponents) -> Fraction:
    """``int_{E_k} prod alpha_i^{a_i} d alpha = prod(a_i!) / (k + sum a_i)!``, exactly.

    >>> monomial_integral_standard([1, 1])
    Fraction(1, 24)
    """
    exps = [int(a) for a in exponents]
    if not exps:
        raise ValueError("need k >= 1 exponents")
    if any(a < 0 for a in exps):
        raise ValueError("exponents must be nonnegative")
    num = math.prod(math.factorial(a) for a in exps)
    return Fraction(num, math.factorial(len(exps) + sum(exps)))


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ep, cp in p.items():
        for eq, cq in q.items():
            e = tuple(a + b for a, b in zip(ep, eq))
            out[e] = out.get(e, 0) + cp * cq
    return out


def pullback(s: Simplex, f: Polynomial) -> dict[tuple[int, ...], Fraction]:
    """Expand ``f(phi(alpha))`` as an exact polynomial in the ``k`` coordinates of ``E_k``."""
    k = s.intrinsic_dim
    origin = [Fraction(float(v)) for v in s.vertices[0]]
    edges = [[Fraction(float(v)) for v in row] for row in s.edges]
    zero = (0,) * k
    forms = []
    for j in range(s.ambient_dim):
        form = {zero: origin[j]}
        for i in range(k):
            if edges[i][j]:
                e = [0] * k
                e[i] = 1
                form[tuple(e)] = edges[i][j]
        forms.append(form)

    powers: dict[tuple[int, int], dict] = {}

    def power(j: int, e: int) -> dict:
        if e == 0:
            return {zero: Fraction(1)}
        if (j, e) not in powers:
            powers[(j, e)] = _poly_mul(power(j, e - 1), forms[j])
        return powers[(j, e)]

    out: dict = {}
    for coeff, exps in f.terms:
        term = {zero: Fraction(coeff)}
        for j, e in enumerate(exps):
            if e:
                term = _poly_mul(term, power(j, e))
        for m, c in term.items():
            out[m] = out.get(m, 0) + c
    return out


def avg_polynomial_exact(s: Simplex, f: Polynomial | Affine) -> AvgResult:
    """Exact average of a polynomial: ``k! * int_{E_k} f(phi(alpha)) d alpha``.

    Raises:
        NotPolynomial: for non-polynomial variants.
        UnsupportedDegree: above degree 16, or for nonlinear polynomials in
            ambient dimension above 6.
    """
    if isinstance(f, Affine):
        f = f.to_polynomial()
    if not isinstance(f, Polynomial):
        raise NotPolynomial(f"exact integration needs a polynomial, got {f.kind}")
    _check_arity(s, f)
    if f.degree > MAX_EXACT_DEGREE or (f.degree > 1 and s.ambient_dim > MAX_EXACT_AMBIENT_DIM):
        raise UnsupportedDegree(
            f"exact path is capped at degree {MAX_EXACT_DEGREE} in dimension <= {MAX_EXACT_AMBIENT_DIM}"
        )
    k = s.intrinsic_dim
    if k == 0:
        return _vertex_value(s, f, Method.EXACT)
    total = sum(c * monomial_integral_standard(m) for m, c in pullback(s, f).items())
    return AvgResult(float(total * math.factorial(k)), Method.EXACT, 0.0, f.degree)


def _cell_average(a: np.ndarray, b: np.ndarray, p: np.ndarray, q: float, k: int) -> tuple[float, float]:
    """Volume of ``{alpha : a alpha <= b}`` and the integral of ``p . alpha + q`` over it."""
    from scipy.optimize import linprog
    from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

    norms = np.linalg.norm(a, axis=1)
    # Chebyshev centre: an interior point, and a test for a full-dimensional cell
    lp = linprog(np.r_[np.zeros(k), -1.0], A_ub=np.c_[a, norms], b_ub=b,
                 bounds=[(None, None)] * k + [(0, None)], method="highs")
    if lp.status != 0 or lp.x[-1] <= 1e-12:
        return 0.0, 0.0
    centre = lp.x[:k]
    if k == 1:
        lo, hi = -np.inf, np.inf
        for (ai,), bi in zip(a, b):
            if ai > 0:
                hi = min(hi, bi / ai)
            elif ai < 0:
                lo = max(lo, bi / ai)
        vol = hi - lo
        return vol, vol * (p[0] * (lo + hi) / 2 + q)
    try:
        pts = HalfspaceIntersection(np.c_[a, -b], centre).intersections
        hull = ConvexHull(pts)
    except QhullError:
        return 0.0, 0.0
    # cone every (triangulated) boundary facet to the interior point
    facets = pts[hull.simplices]
    vols = np.abs(np.linalg.det(facets - centre[None, None, :])) / math.factorial(k)
    centroids = (facets.sum(axis=1) + centre) / (k + 1)
    return float(vols.sum()), float(vols @ (centroids @ p + q))


def avg_max_affine_exact(s: Simplex, f: MaxAffine) -> AvgResult:
    """Exact average of a max of affine pieces.

    The simplex is split into the convex cells where each piece attains the
    maximum; on each cell the function is affine and its integral is the
    cell volume times the value at the cell centroid.  Cells are computed in
    the coordinates of ``E_k`` so lower-dimensional faces need no special care.
    """
    if not isinstance(f, MaxAffine) or isinstance(f, LogSumExp):
        raise NotPolynomial(f"piecewise-affine exact path needs max_affine, got {f.kind}")
    _check_arity(s, f)
    k = s.intrinsic_dim
    if k == 0:
        return _vertex_value(s, f, Method.EXACT)
    dirs = np.array([pc[0] for pc in f.pieces]).reshape(len(f.pieces), f.dim)
    offs = np.array([pc[1] for pc in f.pieces])
    # pieces pulled back to E_k: p_i . alpha + q_i
    p = dirs @ s.edges.T
    q = dirs @ s.vertices[0] + offs
    domain_a = np.vstack([-np.eye(k), np.ones((1, k))])
    domain_b = np.r_[np.zeros(k), 1.0]
    # identical pulled-back pieces would tie everywhere and be counted twice
    pieces = np.unique(np.c_[p, q], axis=0)
    p, q = pieces[:, :k], pieces[:, k]
    total = 0.0
    for i in range(len(q)):
        dp = np.delete(p, i, axis=0) - p[i]
        dq = q[i] - np.delete(q, i)
        flat = ~np.any(dp, axis=1)
        if np.any(flat & (dq < 0)):
            continue  # dominated everywhere by a parallel piece
        a = np.vstack([domain_a, dp[~flat]])
        b = np.r_[domain_b, dq[~flat]]
        total += _cell_average(a, b, p[i], q[i], k)[1]
    return AvgResult(total * math.factorial(k), Method.EXACT, 0.0, 1)


# -- quadrature ---------------------------------------------------------------


def _compositions(total: int, parts: int) -> np.ndarray:
    """All ``parts``-tuples of nonnegative ints summing to ``total``, as rows (stars and bars)."""
    bars = np.array(list(combinations(range(total + parts - 1), parts - 1)), dtype=np.int64)
    bars = bars.reshape(-1, parts - 1)
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), total + parts - 1)])
    return np.diff(edges, axis=1) - 1


@lru_cache(maxsize=None)
def grundmann_moeller(s: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Grundmann-Moeller rule of index ``s`` on the ``k``-simplex.

    Exact for polynomials of total degree ``2s + 1``.  Returns barycentric
    nodes ``(m, k + 1)`` and weights normalised to sum to one, so the rule
    approximates the *average*.  Nodes shared between levels are not merged.
    """
    d = 2 * s + 1
    nodes, weights = [], []
    for i in range(s + 1):
        denom = d + k - 2 * i
        w = Fraction((-1) ** i * denom**d * math.factorial(k), 4**s * math.factorial(i) * math.factorial(d + k - i))
        beta = _compositions(s - i, k + 1)
        nodes.append((2 * beta + 1) / denom)
        weights.append(np.full(beta.shape[0], float(w)))
    nodes, weights = np.vstack(nodes), np.concatenate(weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _rule_index(degree: int) -> int:
    return degree // 2


def _apply_rule(s: Simplex, f: ConvexFunction, index: int) -> float:
    if index < 0:
        # degree-1 fallback: the vertex mean
        return float(np.mean(f.evaluate(s.vertices)))
    nodes, weights = grundmann_moeller(index, s.intrinsic_dim)
    values = f.evaluate(barycentric_to_point(s, nodes))
    # weights sum to one only up to cancellation; centring makes constants exact
    ref = values[0]
    return float(ref + weights @ (values - ref))


def avg_quadrature(s: Simplex, f: ConvexFunction, degree: int = DEFAULT_QUADRATURE_DEGREE) -> AvgResult:
    """Average by the Grundmann-Moeller rule exact to (at least) ``degree``.

    The error estimate is the difference to the rule two degrees lower.

    Raises:
        UnsupportedDegree: if ``degree`` is below 1 or above 25.
    """
    if not 1 <= degree <= MAX_QUADRATURE_DEGREE:
        raise UnsupportedDegree(f"quadrature degree must be in 1..{MAX_QUADRATURE_DEGREE}, got {degree}")
    _check_arity(s, f)
    if s.intrinsic_dim == 0:
        return _vertex_value(s, f, Method.QUADRATURE)
    idx = _rule_index(degree)
    value = _apply_rule(s, f, idx)
    lower = _apply_rule(s, f, idx - 1)
    return AvgResult(value, Method.QUADRATURE, abs(value - lower), 2 * idx + 1)


def avg_quadrature_converged(s: Simplex, f: ConvexFunction, degree: int = DEFAULT_QUADRATURE_DEGREE) -> AvgResult:
    """Quadrature with degree doubling until two successive values agree to 1e-10 relative.

    Stops at the degree cap otherwise.  The reported error is the larger of
    the rule-difference estimate and the last doubling step.
    """
    _check_arity(s, f)
    if s.intrinsic_dim == 0:
        return _vertex_value(s, f, Method.QUADRATURE)
    values: dict[int, float] = {}

    def rule(idx: int) -> float:
        if idx not in values:
            values[idx] = _apply_rule(s, f, idx)
        return values[idx]

    idx = _rule_index(min(degree, MAX_QUADRATURE_DEGREE))
    step = math.inf
    while 2 * idx + 1 < MAX_QUADRATURE_DEGREE:
        nxt = _rule_index(min(2 * (2 * idx + 1), MAX_QUADRATURE_DEGREE))
        step = abs(rule(nxt) - rule(idx))
        idx = nxt
        if step <= CONVERGENCE_RTOL * abs(rule(idx)):
            break
    err = abs(rule(idx) - rule(idx - 1))
    if step < math.inf:
        err = max(err, step)
    return AvgResult(rule(idx), Method.QUADRATURE, err, 2 * idx + 1)


# -- Monte Carlo --------------------------------------------------------------


def _mc_chunk(s: Simplex, f: ConvexFunction, seed: int, chunk: int, size: int) -> tuple[int, float, float]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
    vals = f.evaluate(barycentric_to_point(s, uniform_weights(rng, size, s.intrinsic_dim)))
    mean = float(np.mean(vals))
    return size, mean, float(np.sum((vals - mean) ** 2))


def _merge_moments(parts) -> tuple[int, float, float]:
    # pairwise-stable merge of (count, mean, sum of squared deviations)
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def avg_monte_carlo(s: Simplex, f: ConvexFunction, n_samples: int = 100_000, seed: int = 0,
                    threads: int | None = None) -> AvgResult:
    """Monte Carlo average with uniform (flat Dirichlet) samples.

    Samples are drawn in fixed-size chunks, chunk ``c`` from a Philox stream
    keyed by ``(seed, c)``, so the result does not depend on ``threads``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    _check_arity(s, f)
    seed = int(seed) & (2**64 - 1)
    if s.intrinsic_dim == 0:
        r = _vertex_value(s, f, Method.MONTE_CARLO)
        return AvgResult(r.value, Method.MONTE_CARLO, 0.0, n_samples, seed)
    sizes = [min(MC_CHUNK, n_samples - start) for start in range(0, n_samples, MC_CHUNK)]
    parts = pmap(lambda c: _mc_chunk(s, f, seed, c, sizes[c]), range(len(sizes)), threads)
    n, mean, m2 = _merge_moments(parts)
    stderr = math.sqrt(m2 / (n - 1) / n)
    return AvgResult(mean, Method.MONTE_CARLO, stderr, n, seed)


# -- dispatch -----------------------------------------------------------------


def avg(s: Simplex, f: ConvexFunction, method: Method | str = Method.QUADRATURE, **params) -> AvgResult:
    """Dispatch to one of the three backends.

    ``params`` are forwarded: ``degree`` for quadrature, ``n_samples``,
    ``seed`` and ``threads`` for Monte Carlo.
    """
    method = Method(method)
    if method is Method.EXACT:
        if isinstance(f, MaxAffine) and not isinstance(f, LogSumExp):
            return avg_max_affine_exact(s, f)
        return avg_polynomial_exact(s, f)
    if method is Method.QUADRATURE:
        return avg_quadrature(s, f, **params)
    return avg_monte_carlo(s, f, **params)


def default_integrator(s: Simplex, f: ConvexFunction) -> AvgResult:
    """Exact for polynomials (inside the exact-path caps) and max-affine functions,
    converged quadrature otherwise."""
    if isinstance(f, MaxAffine) and not isinstance(f, LogSumExp):
        return avg_max_affine_exact(s, f)
    if isinstance(f, (Polynomial, Affine)):
        if f.degree <= 1 or (f.degree <= MAX_EXACT_DEGREE and s.ambient_dim <= MAX_EXACT_AMBIENT_DIM):
            return avg_polynomial_exact(s, f)
        if f.degree <= MAX_QUADRATURE_DEGREE:
            return avg_quadrature(s, f, max(f.degree, 1))
    return avg_quadrature_converged(s, f)


def quadrature_integrator(degree: int) -> Integrator:
    return lambda s, f: avg_quadrature(s, f, degree)


def monte_carlo_integrator(n_samples: int, seed: int, threads: int | None = None) -> Integrator:
    return lambda s, f: avg_monte_carlo(s, f, n_samples, seed, threads)


# -- change of variables ------------------------------------------------------


@dataclass(frozen=True)
class JacobianCheck:
    lhs: float
    rhs: float
    passed: bool
    stderr: float


def _face_frame(s: Simplex, K, L):
    K = face_set(K, s.intrinsic_dim)
    L = face_set(L, s.intrinsic_dim)
    if set(K) & set(L):
        raise ValueError(f"face sets {K} and {L} are not disjoint")
    union = tuple(sorted(K + L))
    try:
        joined = make_simplex(face(s, union).vertices)
    except DegenerateSimplex as exc:
        raise DegenerateFace(f"face {union} is degenerate") from exc
    # orthonormal basis of the affine hull of the joined face
    q, _ = np.linalg.qr(joined.edges.T)
    return face(s, K), face(s, L), joined, q


def _phi_jacobians(fk: Simplex, fl: Simplex, q: np.ndarray, t, alpha, beta) -> np.ndarray:
    k, l = fk.intrinsic_dim, fl.intrinsic_dim
    t = np.asarray(t, dtype=float).reshape(-1)
    alpha = np.asarray(alpha, dtype=float).reshape(t.size, k)
    beta = np.asarray(beta, dtype=float).reshape(t.size, l)
    ds = (fk.vertices[0] + alpha @ fk.edges) - (fl.vertices[0] + beta @ fl.edges)
    rows = [ds[:, None, :]]
    if k:
        rows.append(t[:, None, None] * fk.edges[None])
    if l:
        rows.append((1 - t)[:, None, None] * fl.edges[None])
    jac = np.concatenate(rows, axis=1) @ q
    return np.abs(np.linalg.det(jac))


def phi_jacobian(s: Simplex, K, L, t, alpha, beta) -> np.ndarray:
    """``|det D Phi|`` of ``Phi(t, alpha, beta) = t phi_K(alpha) + (1 - t) phi_L(beta)``.

    The Jacobian is taken in an orthonormal frame of the face spanned by
    ``K`` and ``L`` together, so it is square even for lower-dimensional faces.
    """
    fk, fl, _, q = _face_frame(s, K, L)
    return _phi_jacobians(fk, fl, q, t, alpha, beta)


def jacobian_identity_check(s: Simplex, K, L, n_samples: int = 100_000, seed: int = 0) -> JacobianCheck:
    """Monte Carlo check that ``Phi`` covers the joined face with the right volume.

    Integrates ``|det D Phi|`` over ``[0, 1] x E_k x E_l`` and compares the
    result with the volume of the face spanned by ``K`` and ``L``; passes
    when they agree within five standard errors.
    """
    fk, fl, joined, q = _face_frame(s, K, L)
    k, l = fk.intrinsic_dim, fl.intrinsic_dim
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1)])))
    t = rng.random(n_samples)
    alpha = uniform_weights(rng, n_samples, k)[:, 1:]
    beta = uniform_weights(rng, n_samples, l)[:, 1:]
    dets = _phi_jacobians(fk, fl, q, t, alpha, beta)
    domain = 1.0 / (math.factorial(k) * math.factorial(l))
    lhs = domain * float(np.mean(dets))
    stderr = domain * float(np.std(dets, ddof=1)) / math.sqrt(n_samples)
    rhs = volume(joined)
    passed = abs(lhs - rhs) <= 5 * stderr + 1e-12 * rhs
    return JacobianCheck(lhs, rhs, passed, stderr)

