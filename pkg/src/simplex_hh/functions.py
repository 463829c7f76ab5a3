"""Catalog of test functions with convexity metadata.

Each variant is an immutable dataclass exposing ``dim`` (its declared
arity), ``evaluate`` (vectorised over a trailing coordinate axis) and
``convexity_certified``.  Every variant except :class:`Polynomial` is
convex by construction; a polynomial is only certified after it passes
:func:`convexity_sample_check` (see :func:`certify_polynomial`).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import DimensionMismatch, EvaluationOverflow, SchemaError
from .simplex import Simplex, barycentric_to_point

#: absolute slack (scaled by ``max(1, |rhs|)``) allowed in the sampled convexity check
CONVEXITY_TOL = 1e-9
_LAMBDAS = (0.25, 0.5, 0.75)


def _as_points(x: Any, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    arr = np.atleast_2d(arr) if dim else arr.reshape(-1, 0)
    if arr.shape[-1] != dim:
        raise DimensionMismatch(f"function expects points in R^{dim}, got shape {np.shape(x)}")
    return arr, single


def _finish(values: np.ndarray, single: bool) -> float | np.ndarray:
    if not np.all(np.isfinite(values)):
        raise EvaluationOverflow("function value is not finite")
    return float(values[0]) if single else values


def _vector(v: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(c) for c in v)


class ConvexFunction:
    """Common behaviour of the catalog variants."""

    dim: int
    kind: str = ""

    @property
    def convexity_certified(self) -> bool:
        return True

    #: polynomial degree when the variant is one, else ``None``
    @property
    def degree(self) -> int | None:
        return None

    def evaluate(self, x: Any) -> float | np.ndarray:
        """Evaluate at one point (returns ``float``) or at rows of an ``(m, dim)`` array.

        Raises:
            DimensionMismatch: if the coordinate length differs from ``dim``.
            EvaluationOverflow: if any value is not finite.
        """
        pts, single = _as_points(x, self.dim)
        with np.errstate(over="ignore", invalid="ignore"):
            values = self._eval(pts)
        return _finish(values, single)

    __call__ = evaluate

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Polynomial(ConvexFunction):
    """Sum of ``coeff * prod(x_j ** e_j)`` terms."""

    dim: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    certified: bool = False
    kind: str = field(default="polynomial", init=False, repr=False)

    def __post_init__(self):
        clean = []
        for coeff, exps in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim:
                raise DimensionMismatch(f"exponent vector {exps} has length != dim {self.dim}")
            if any(e < 0 for e in exps):
                raise ValueError("exponents must be nonnegative")
            clean.append((float(coeff), exps))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_terms(cls, dim: int, terms, certified: bool = False) -> Polynomial:
        return cls(dim, tuple((c, tuple(e)) for c, e in terms), certified)

    @property
    def convexity_certified(self) -> bool:
        return self.certified

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def _eval(self, pts):
        out = np.zeros(pts.shape[0])
        for coeff, exps in self.terms:
            out += coeff * np.prod(pts ** np.array(exps, dtype=float), axis=1)
        return out

    def to_dict(self):
        return {
            "type": self.kind,
            "dim": self.dim,
            "terms": [{"coeff": c, "exponents": list(e)} for c, e in self.terms],
            "certified": self.certified,
        }


@dataclass(frozen=True)
class Affine(ConvexFunction):
    """``x -> a . x + c``."""

    a: tuple[float, ...]
    c: float = 0.0
    kind: str = field(default="affine", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", _vector(self.a))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return len(self.a)

    @property
    def degree(self) -> int:
        return 1

    def _eval(self, pts):
        return pts @ np.array(self.a) + self.c

    def to_polynomial(self) -> Polynomial:
        terms = [(self.c, (0,) * self.dim)]
        for j, aj in enumerate(self.a):
            exps = [0] * self.dim
            exps[j] = 1
            terms.append((aj, tuple(exps)))
        return Polynomial(self.dim, tuple(terms), certified=True)

    def to_dict(self):
        return {"type": self.kind, "dim": self.dim, "a": list(self.a), "c": self.c}


@dataclass(frozen=True)
class ExpAffine(ConvexFunction):
    """``x -> exp(a . x + c)``."""

    a: tuple[float, ...]
    c: float = 0.0
    kind: str = field(default="exp_affine", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", _vector(self.a))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return len(self.a)

    def _eval(self, pts):
        return np.exp(pts @ np.array(self.a) + self.c)

    def to_dict(self):
        return {"type": self.kind, "dim": self.dim, "a": list(self.a), "c": self.c}


def _clean_pieces(pieces, kind: str) -> tuple[tuple[tuple[float, ...], float], ...]:
    out = tuple((_vector(a), float(c)) for a, c in pieces)
    if not out:
        raise ValueError(f"{kind} needs at least one affine piece")
    if len({len(a) for a, _ in out}) != 1:
        raise DimensionMismatch(f"{kind} pieces have inconsistent dimensions")
    return out


@dataclass(frozen=True)
class MaxAffine(ConvexFunction):
    """``x -> max_i (a_i . x + c_i)``."""

    pieces: tuple[tuple[tuple[float, ...], float], ...]
    kind: str = field(default="max_affine", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pieces", _clean_pieces(self.pieces, "max_affine"))

    @property
    def dim(self) -> int:
        return len(self.pieces[0][0])

    def _affine_values(self, pts):
        a = np.array([p[0] for p in self.pieces]).reshape(len(self.pieces), self.dim)
        c = np.array([p[1] for p in self.pieces])
        return pts @ a.T + c

    def _eval(self, pts):
        return self._affine_values(pts).max(axis=1)

    def to_dict(self):
        return {
            "type": self.kind,
            "dim": self.dim,
            "pieces": [{"a": list(a), "c": c} for a, c in self.pieces],
        }


@dataclass(frozen=True)
class LogSumExp(MaxAffine):
    """``x -> log sum_i exp(a_i . x + c_i)``, the smooth upper envelope of :class:`MaxAffine`."""

    kind: str = field(default="log_sum_exp", init=False, repr=False)

    def _eval(self, pts):
        z = self._affine_values(pts)
        m = z.max(axis=1)
        return m + np.log(np.exp(z - m[:, None]).sum(axis=1))


@dataclass(frozen=True)
class NormPower(ConvexFunction):
    """``x -> ||x||_2 ** p`` with ``p >= 1``."""

    dim: int
    p: float = 2.0
    kind: str = field(default="norm_power", init=False, repr=False)

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"norm_power requires p >= 1, got {self.p}")
        object.__setattr__(self, "p", float(self.p))

    def _eval(self, pts):
        return np.linalg.norm(pts, axis=1) ** self.p

    def to_dict(self):
        return {"type": self.kind, "dim": self.dim, "p": self.p}


# -- JSON ---------------------------------------------------------------------


def _need(data: dict, key: str):
    if key not in data:
        raise SchemaError(f"function JSON of type {data.get('type')!r} is missing {key!r}")
    return data[key]


def _num(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{what} must be a number, got {v!r}")
    return float(v)


def _numlist(v, what: str, dim: int) -> list[float]:
    if not isinstance(v, list):
        raise SchemaError(f"{what} must be a list")
    out = [_num(c, what) for c in v]
    if len(out) != dim:
        raise DimensionMismatch(f"{what} has length {len(out)}, declared dim is {dim}")
    return out


def _pieces(data: dict, dim: int):
    raw = _need(data, "pieces")
    if not isinstance(raw, list) or not raw:
        raise SchemaError('"pieces" must be a nonempty list')
    out = []
    for p in raw:
        if not isinstance(p, dict):
            raise SchemaError("each piece must be an object with 'a' and 'c'")
        out.append((_numlist(_need(p, "a"), "piece 'a'", dim), _num(p.get("c", 0.0), "piece 'c'")))
    return out


def function_from_dict(data: Any) -> ConvexFunction:
    """Parse the JSON function schema (``{"type": ..., "dim": ..., ...}``).

    Raises:
        SchemaError: on unknown types, missing keys or non-numeric values.
        DimensionMismatch: when vector lengths disagree with ``dim``.
    """
    if not isinstance(data, dict):
        raise SchemaError("function JSON must be an object")
    kind = data.get("type")
    dim = _need(data, "dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 0:
        raise SchemaError(f"'dim' must be a nonnegative integer, got {dim!r}")
    try:
        if kind == "polynomial":
            terms = []
            for t in _need(data, "terms"):
                exps = _need(t, "exponents")
                if not isinstance(exps, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in exps):
                    raise SchemaError("'exponents' must be a list of integers")
                terms.append((_num(_need(t, "coeff"), "coeff"), tuple(exps)))
            return Polynomial(dim, tuple(terms), certified=bool(data.get("certified", False)))
        if kind == "affine":
            return Affine(_numlist(_need(data, "a"), "'a'", dim), _num(data.get("c", 0.0), "'c'"))
        if kind == "exp_affine":
            return ExpAffine(_numlist(_need(data, "a"), "'a'", dim), _num(data.get("c", 0.0), "'c'"))
        if kind == "max_affine":
            return MaxAffine(tuple(_pieces(data, dim)))
        if kind == "log_sum_exp":
            return LogSumExp(tuple(_pieces(data, dim)))
        if kind == "norm_power":
            return NormPower(dim, _num(data.get("p", 2.0), "'p'"))
    except TypeError as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown function type {kind!r}")


# -- convexity ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityCheck:
    """Outcome of :func:`convexity_sample_check`; truthy when no violation was found.

    ``witness`` holds ``(x, y, lam, f(lam x + (1-lam) y), lam f(x) + (1-lam) f(y))``
    for the first violation.
    """

    passed: bool
    trials: int
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.passed


def uniform_weights(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    """``m`` uniform draws from the ``k``-simplex as barycentric weights (normalised exponentials)."""
    g = rng.standard_exponential((m, k + 1))
    return g / g.sum(axis=1, keepdims=True)


def convexity_sample_check(f: ConvexFunction, s: Simplex, trials: int = 1000, seed: int = 0) -> ConvexityCheck:
    """Test ``f(lam x + (1-lam) y) <= lam f(x) + (1-lam) f(y)`` on random pairs in ``s``.

    ``lam`` ranges over 0.25, 0.5 and 0.75 for each of the ``trials`` pairs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if f.dim != s.ambient_dim:
        raise DimensionMismatch(f"function arity {f.dim} != simplex ambient dimension {s.ambient_dim}")
    rng = np.random.Generator(np.random.Philox(seed))
    x = barycentric_to_point(s, uniform_weights(rng, trials, s.intrinsic_dim))
    y = barycentric_to_point(s, uniform_weights(rng, trials, s.intrinsic_dim))
    fx, fy = f.evaluate(x), f.evaluate(y)
    for lam in _LAMBDAS:
        lhs = f.evaluate(lam * x + (1 - lam) * y)
        rhs = lam * fx + (1 - lam) * fy
        bad = lhs > rhs + CONVEXITY_TOL * np.maximum(1.0, np.abs(rhs))
        if bad.any():
            i = int(np.argmax(bad))
            witness = (x[i].tolist(), y[i].tolist(), lam, float(lhs[i]), float(rhs[i]))
            return ConvexityCheck(False, trials, witness)
    return ConvexityCheck(True, trials)


def certify_polynomial(f: Polynomial, s: Simplex, trials: int = 1000, seed: int = 0) -> Polynomial:
    """Return ``f`` flagged as certified if it passes the sampled check on ``s``."""
    if f.certified or not convexity_sample_check(f, s, trials, seed):
        return f
    return replace(f, certified=True)


def squared_norm(dim: int, sign: float = 1.0) -> Polynomial:
    """``sign * ||x||^2`` as a polynomial (certified only for ``sign >= 0``)."""
    terms = []
    for j in range(dim):
        exps = [0] * dim
        exps[j] = 2
        terms.append((sign, tuple(exps)))
    return Polynomial(dim, tuple(terms), certified=sign >= 0)


def random_catalog(dim: int, rng: np.random.Generator) -> list[ConvexFunction]:
    """Five randomly parametrised convex functions, one per non-affine variant.

    The polynomial is ``||x||^2 + x_0^4``, convex by construction.
    """
    def unit(m):
        v = rng.standard_normal((m, dim))
        return v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12)

    poly_terms = list(squared_norm(dim).terms)
    quartic = [0] * dim
    quartic[0] = 4
    poly_terms.append((1.0, tuple(quartic)))
    pieces = [(tuple(a), float(c)) for a, c in zip(unit(3), rng.standard_normal(3) * 0.5)]
    return [
        Polynomial(dim, tuple(poly_terms), certified=True),
        ExpAffine(tuple(unit(1)[0]), 0.0),
        MaxAffine(tuple(pieces)),
        LogSumExp(tuple(pieces)),
        NormPower(dim, 3.0),
    ]


def random_affine(dim: int, rng: np.random.Generator) -> Affine:
    return Affine(tuple(rng.standard_normal(dim)), float(rng.standard_normal()))
