"""Simplices, their faces, barycenters and volumes.

A :class:`Simplex` is an ordered list of ``k + 1`` vertices in ``R^n``
(``k <= n``).  Faces keep the ambient coordinates of their parent, so a
``k``-face of an ``n``-simplex is still a list of ``n``-vectors and its
volume is always taken from the Gram determinant of its edge vectors.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DegenerateSimplex, DimensionMismatch, IndexOutOfRange, SchemaError

#: relative threshold on ``sqrt(det G) / (max edge)^k`` below which a simplex is degenerate
DEGENERACY_RTOL = 1e-10

FaceSet = tuple[int, ...]


def face_set(indices: Iterable[int], n: int | None = None) -> FaceSet:
    """Validate and sort a set of vertex indices.

    Args:
        indices: distinct vertex indices.
        n: largest admissible index; unchecked when ``None``.

    Raises:
        IndexOutOfRange: if an index is negative or exceeds ``n``.
        ValueError: on an empty or repeated index set.
    """
    idx = [int(i) for i in indices]
    if not idx:
        raise ValueError("a face set must be nonempty")
    if len(set(idx)) != len(idx):
        raise ValueError(f"repeated index in face set {idx}")
    for i in idx:
        if i < 0 or (n is not None and i > n):
            raise IndexOutOfRange(f"vertex index {i} outside 0..{n}")
    return tuple(sorted(idx))


def _gram_sqrt_det(edges: np.ndarray) -> float:
    # edges has shape (k, n): one edge vector per row
    if edges.shape[0] == 0:
        return 1.0
    gram = edges @ edges.T
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0))


@dataclass(frozen=True, eq=False)
class Simplex:
    """An ordered, nondegenerate simplex.

    Build instances with :func:`make_simplex`; the constructor does no
    validation.  ``vertices`` is a read-only ``(k + 1, n)`` float array.
    """

    vertices: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def intrinsic_dim(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def is_full(self) -> bool:
        return self.intrinsic_dim == self.ambient_dim

    @property
    def edges(self) -> np.ndarray:
        """Edge vectors ``y_i - y_0`` as rows, shape ``(k, n)``."""
        return self.vertices[1:] - self.vertices[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Simplex):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.array_equal(self.vertices, other.vertices)
        )

    def __hash__(self) -> int:
        return hash((self.vertices.shape, self.vertices.tobytes()))

    def __repr__(self) -> str:
        return f"Simplex(k={self.intrinsic_dim}, n={self.ambient_dim}, vertices={self.vertices.tolist()})"

    def to_dict(self) -> dict[str, Any]:
        return {"vertices": self.vertices.tolist()}


def make_simplex(vertices: Sequence[Sequence[float]] | np.ndarray) -> Simplex:
    """Validate a vertex list and return a :class:`Simplex`.

    Raises:
        DimensionMismatch: on an empty or ragged vertex list, or more than
            ``n + 1`` vertices in ``R^n``.
        DegenerateSimplex: if the edge vectors are numerically dependent.

    >>> make_simplex([(0, 0), (1, 0), (0, 1)]).intrinsic_dim
    2
    """
    rows = [list(v) for v in vertices]
    if not rows:
        raise DimensionMismatch("a simplex needs at least one vertex")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise DimensionMismatch(f"vertices have inconsistent lengths {sorted(dims)}")
    arr = np.array(rows, dtype=float).reshape(len(rows), dims.pop())
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("vertex coordinates must be finite")
    k = arr.shape[0] - 1
    if k > arr.shape[1]:
        raise DegenerateSimplex(f"{k + 1} vertices cannot be affinely independent in R^{arr.shape[1]}")
    if k > 0:
        edges = arr[1:] - arr[0]
        scale = float(np.max(np.linalg.norm(edges, axis=1)))
        if scale == 0.0 or _gram_sqrt_det(edges) < DEGENERACY_RTOL * scale**k:
            raise DegenerateSimplex("vertices are affinely dependent")
    arr.setflags(write=False)
    return Simplex(arr)


def simplex_from_dict(data: Any) -> Simplex:
    """Build a simplex from the ``{"vertices": [[...], ...]}`` JSON form."""
    if not isinstance(data, dict) or "vertices" not in data:
        raise SchemaError('simplex JSON must be an object with a "vertices" key')
    verts = data["vertices"]
    if not isinstance(verts, list) or not all(isinstance(v, list) for v in verts):
        raise SchemaError('"vertices" must be a list of coordinate lists')
    for v in verts:
        for c in v:
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise SchemaError(f"non-numeric coordinate {c!r}")
    return make_simplex(verts)


def face(s: Simplex, indices: Iterable[int]) -> Simplex:
    """The face spanned by the vertices with the given indices (ascending order)."""
    idx = face_set(indices, s.intrinsic_dim)
    arr = s.vertices[list(idx)]
    arr.setflags(write=False)
    return Simplex(arr)


def barycenter(s: Simplex) -> np.ndarray:
    return s.vertices.mean(axis=0)


def volume(s: Simplex) -> float:
    """``k``-dimensional volume, ``sqrt(det(M M^T)) / k!`` with ``M`` the edge rows.

    A 0-simplex has volume 1 (counting measure).
    """
    return _gram_sqrt_det(s.edges) / math.factorial(s.intrinsic_dim)


def phi_map(s: Simplex, alpha: Sequence[float] | np.ndarray) -> np.ndarray:
    """Affine map from the standard simplex ``E_k`` onto ``s``.

    ``alpha`` holds ``k`` coordinates (the barycentric weights with the
    first one dropped), or an ``(m, k)`` batch of them.
    """
    a = np.asarray(alpha, dtype=float)
    k = s.intrinsic_dim
    if a.shape[-1:] != (k,) and not (k == 0 and a.size == 0):
        raise DimensionMismatch(f"expected {k} standard-simplex coordinates, got shape {a.shape}")
    if k == 0:
        return s.vertices[0].copy() if a.ndim <= 1 else np.repeat(s.vertices[:1], a.shape[0], axis=0)
    return s.vertices[0] + a @ s.edges


def barycentric_to_point(s: Simplex, weights: np.ndarray) -> np.ndarray:
    """Map barycentric weights (``(..., k+1)``) to points of ``s``."""
    w = np.asarray(weights, dtype=float)
    if w.shape[-1] != s.n_vertices:
        raise DimensionMismatch(f"expected {s.n_vertices} barycentric weights, got {w.shape[-1]}")
    return w @ s.vertices


def standard_simplex(k: int) -> Simplex:
    """``E_k``: vertices ``0, e_1, ..., e_k`` in ``R^k``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    arr = np.vstack([np.zeros((1, k)), np.eye(k)])
    arr.setflags(write=False)
    return Simplex(arr)


def regular_simplex(n: int) -> Simplex:
    """Unit-edge regular ``n``-simplex, embedded in ``R^(n+1)`` as ``e_i / sqrt(2)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    arr = np.eye(n + 1) / math.sqrt(2.0)
    arr.setflags(write=False)
    return Simplex(arr)


def regular_simplex_volume(n: int) -> float:
    """Closed-form volume ``sqrt((n+1) / 2^n) / n!`` of the unit-edge regular ``n``-simplex."""
    return math.sqrt((n + 1) / 2.0**n) / math.factorial(n)


def barycenter_split(s: Simplex) -> list[Simplex]:
    """The ``k + 1`` simplices obtained by replacing vertex ``i`` with the barycenter."""
    b = barycenter(s)
    pieces = []
    for i in range(s.n_vertices):
        arr = s.vertices.copy()
        arr[i] = b
        arr.setflags(write=False)
        pieces.append(Simplex(arr))
    return pieces


def random_simplex(n: int, rng: np.random.Generator, min_relative_volume: float = 1e-3) -> Simplex:
    """Random full-dimensional ``n``-simplex with Gaussian vertices.

    Draws are rejected until the volume relative to ``(max edge)^n / n!``
    reaches ``min_relative_volume``, which keeps the sample well conditioned.
    """
    while True:
        arr = rng.standard_normal((n + 1, n))
        edges = arr[1:] - arr[0]
        scale = float(np.max(np.linalg.norm(edges, axis=1))) if n else 1.0
        if n == 0 or _gram_sqrt_det(edges) >= min_relative_volume * scale**n:
            return make_simplex(arr)
