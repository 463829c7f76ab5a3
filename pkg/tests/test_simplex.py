import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from simplex_hh.errors import DegenerateSimplex, DimensionMismatch, IndexOutOfRange, SchemaError
from simplex_hh.simplex import (
    barycenter,
    barycenter_split,
    face,
    make_simplex,
    phi_map,
    random_simplex,
    regular_simplex,
    regular_simplex_volume,
    simplex_from_dict,
    standard_simplex,
    volume,
)


def test_make_simplex_triangle(triangle):
    s = make_simplex([(0, 0), (1, 0), (0, 1)])
    assert (s.intrinsic_dim, s.ambient_dim) == (2, 2)
    assert s == triangle


def test_make_simplex_embedded_face():
    s = make_simplex([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    assert (s.intrinsic_dim, s.ambient_dim) == (2, 3)
    assert not s.is_full


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, 1), (2, 2)],
    [(0, 0), (0, 0)],
    [(0,), (1,), (2,)],  # too many vertices for the ambient space
])
def test_degenerate_rejected(verts):
    with pytest.raises(DegenerateSimplex):
        make_simplex(verts)


def test_degeneracy_threshold_is_scale_aware():
    tiny = make_simplex(np.array([(0, 0), (1, 0), (0, 1)]) * 1e-8)
    assert volume(tiny) == pytest.approx(0.5e-16)


@pytest.mark.parametrize("verts", [[], [[0, 0], [1]], [[0, math.nan], [1, 0]]])
def test_malformed_vertices(verts):
    with pytest.raises(DimensionMismatch):
        make_simplex(verts)


def test_vertices_are_read_only(triangle):
    with pytest.raises(ValueError):
        triangle.vertices[0, 0] = 5.0


def test_faces(triangle):
    np.testing.assert_array_equal(face(triangle, [0, 1]).vertices, [[0, 0], [1, 0]])
    assert face(triangle, [0, 1, 2]) == triangle
    vertex = face(triangle, {2})
    assert vertex.intrinsic_dim == 0
    np.testing.assert_array_equal(vertex.vertices, [[0, 1]])
    # any index order gives the ascending face
    assert face(triangle, [2, 0]) == face(triangle, [0, 2])


@pytest.mark.parametrize("K", [[], [3], [-1]])
def test_bad_face_sets(triangle, K):
    with pytest.raises((IndexOutOfRange, ValueError)):
        face(triangle, K)


def test_barycenter(triangle):
    np.testing.assert_allclose(barycenter(triangle), [1 / 3, 1 / 3])
    np.testing.assert_allclose(barycenter(make_simplex([[-1.0], [3.0]])), [1.0])
    np.testing.assert_array_equal(barycenter(face(triangle, [1])), [1, 0])


def test_volume_examples(triangle):
    assert volume(triangle) == 0.5
    s = regular_simplex(3)
    assert volume(s) == pytest.approx(math.sqrt(4 / 8) / 6, rel=1e-12)
    assert volume(s) == pytest.approx(0.11785113, abs=1e-8)
    assert volume(make_simplex([(0, 0, 0), (1, 0, 0)])) == 1.0
    assert volume(face(triangle, [1])) == 1.0


def test_standard_simplex():
    np.testing.assert_array_equal(standard_simplex(1).vertices, [[0], [1]])
    assert standard_simplex(2) == make_simplex([(0, 0), (1, 0), (0, 1)])
    for k in range(1, 11):
        assert volume(standard_simplex(k)) == pytest.approx(1 / math.factorial(k), rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_regular_simplex_has_unit_edges(n):
    s = regular_simplex(n)
    v = s.vertices
    d = np.linalg.norm(v[:, None] - v[None], axis=-1)
    np.testing.assert_allclose(d[~np.eye(n + 1, dtype=bool)], 1.0, rtol=1e-14)
    assert volume(s) == pytest.approx(regular_simplex_volume(n), rel=1e-12)


def test_phi_map_examples(triangle):
    np.testing.assert_array_equal(phi_map(triangle, [0, 0]), [0, 0])
    np.testing.assert_array_equal(phi_map(triangle, [1, 0]), [1, 0])
    np.testing.assert_allclose(phi_map(triangle, [1 / 3, 1 / 3]), barycenter(triangle), atol=1e-15)


def test_simplex_json_round_trip(triangle):
    assert simplex_from_dict(triangle.to_dict()) == triangle
    for bad in [None, {}, {"vertices": "x"}, {"vertices": [[0, "a"], [1, 0]]}, {"vertices": [[True, 0]]}]:
        with pytest.raises(SchemaError):
            simplex_from_dict(bad)


# -- properties ---------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


@settings(max_examples=60, deadline=None)
@given(dims, seeds)
def test_volume_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    s = random_simplex(n, rng)
    t = make_simplex(s.vertices[rng.permutation(n + 1)])
    assert volume(t) == pytest.approx(volume(s), rel=1e-12)
    assert volume(face(s, range(n + 1))) == volume(s)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), seeds)
def test_volume_rigid_motion_invariant(n, seed):
    rng = np.random.default_rng(seed)
    s = random_simplex(n, rng)
    Q = special_ortho_group.rvs(n, random_state=rng)
    t = make_simplex(s.vertices @ Q.T + rng.normal(size=n) * 10)
    assert volume(t) == pytest.approx(volume(s), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(dims, seeds)
def test_phi_at_uniform_weights_is_barycenter(n, seed):
    s = random_simplex(n, np.random.default_rng(seed))
    np.testing.assert_allclose(phi_map(s, np.full(n, 1 / (n + 1))), barycenter(s), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_barycenter_split_volumes(n, seed):
    s = random_simplex(n, np.random.default_rng(seed))
    parts = barycenter_split(s)
    assert len(parts) == n + 1
    for b in parts:
        assert volume(b) == pytest.approx(volume(s) / (n + 1), rel=1e-12)
    assert math.fsum(volume(b) for b in parts) == pytest.approx(volume(s), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), seeds)
def test_embedded_face_volume_matches_intrinsic(k, extra, seed):
    # a k-simplex isometrically embedded in a larger space keeps its volume
    rng = np.random.default_rng(seed)
    s = random_simplex(k, rng)
    n = k + extra
    Q = special_ortho_group.rvs(n, random_state=rng)
    padded = np.hstack([s.vertices, np.zeros((k + 1, extra))]) @ Q.T
    assert volume(make_simplex(padded)) == pytest.approx(volume(s), rel=1e-9)
