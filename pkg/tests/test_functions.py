import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplex_hh.errors import DimensionMismatch, EvaluationOverflow, SchemaError
from simplex_hh.functions import (
    Affine,
    ExpAffine,
    LogSumExp,
    MaxAffine,
    NormPower,
    Polynomial,
    certify_polynomial,
    convexity_sample_check,
    function_from_dict,
    random_affine,
    random_catalog,
    squared_norm,
)
from simplex_hh.simplex import barycenter, make_simplex, random_simplex


def test_evaluate_examples():
    assert squared_norm(2).evaluate([1.0, 0.0]) == 1.0
    assert MaxAffine((((1.0,), 0.0), ((-1.0,), 1.0)))(0.25) == 0.75
    assert ExpAffine((0.0, 0.0), 0.0)([3.0, -7.0]) == 1.0


def test_evaluate_batches():
    f = squared_norm(2)
    np.testing.assert_array_equal(f.evaluate(np.array([[1, 0], [1, 1], [0, 3]])), [1, 2, 9])
    assert isinstance(f.evaluate([1, 2]), float)


def test_arity_checked():
    with pytest.raises(DimensionMismatch):
        squared_norm(2).evaluate([1.0, 2.0, 3.0])


def test_overflow_is_an_error():
    with pytest.raises(EvaluationOverflow):
        ExpAffine((1000.0,), 0.0).evaluate([1.0])
    with pytest.raises(EvaluationOverflow):
        NormPower(1, 400.0).evaluate(np.array([[1.0], [1e3]]))


def test_norm_power_needs_p_at_least_one():
    with pytest.raises(ValueError):
        NormPower(2, 0.5)


def test_degrees():
    assert squared_norm(3).degree == 2
    assert Polynomial(2, ((1.0, (3, 2)), (2.0, (0, 0)))).degree == 5
    assert Affine((1.0, 2.0), 3.0).degree == 1
    assert ExpAffine((1.0,)).degree is None


def test_affine_to_polynomial():
    f = Affine((3.0, 2.0), 1.0)
    p = f.to_polynomial()
    x = np.random.default_rng(0).normal(size=(20, 2))
    np.testing.assert_allclose(p.evaluate(x), f.evaluate(x), rtol=1e-15)


CATALOG_DICTS = [
    {"type": "polynomial", "dim": 2, "terms": [{"coeff": 1, "exponents": [2, 0]}, {"coeff": 1.5, "exponents": [0, 2]}],
     "certified": True},
    {"type": "affine", "dim": 2, "a": [3, 2], "c": 1},
    {"type": "exp_affine", "dim": 2, "a": [0.5, -1], "c": 0.1},
    {"type": "max_affine", "dim": 2, "pieces": [{"a": [1, 0], "c": 0}, {"a": [0, 1], "c": 0.2}]},
    {"type": "log_sum_exp", "dim": 2, "pieces": [{"a": [1, 0], "c": 0}, {"a": [0, 1], "c": 0.2}]},
    {"type": "norm_power", "dim": 2, "p": 3},
]


@pytest.mark.parametrize("data", CATALOG_DICTS, ids=lambda d: d["type"])
def test_json_round_trip(data):
    f = function_from_dict(data)
    assert f.kind == data["type"]
    assert function_from_dict(f.to_dict()) == f
    assert f.dim == 2


@pytest.mark.parametrize("data, error", [
    ([], SchemaError),
    ({"type": "spline", "dim": 1}, SchemaError),
    ({"type": "affine", "a": [1]}, SchemaError),
    ({"type": "affine", "dim": 2, "a": [1]}, DimensionMismatch),
    ({"type": "affine", "dim": 1, "a": ["x"]}, SchemaError),
    ({"type": "polynomial", "dim": 1, "terms": [{"coeff": 1, "exponents": [1.5]}]}, SchemaError),
    ({"type": "max_affine", "dim": 1, "pieces": "nope"}, SchemaError),
    ({"type": "affine", "dim": True, "a": [1]}, SchemaError),
])
def test_json_errors(data, error):
    with pytest.raises(error):
        function_from_dict(data)


def test_convexity_check_examples(unit_interval, triangle):
    assert convexity_sample_check(squared_norm(2), triangle, 1000, 0)
    check = convexity_sample_check(squared_norm(1, -1.0), unit_interval, 1000, 0)
    assert not check
    x, y, lam, lhs, rhs = check.witness
    assert lhs > rhs
    assert convexity_sample_check(Affine((2.0,), 1.0), unit_interval, 1000, 0)


def test_convexity_check_is_seeded(triangle):
    f = Polynomial(2, ((1.0, (2, 0)), (-1.0, (0, 2))))
    a = convexity_sample_check(f, triangle, 200, 7)
    b = convexity_sample_check(f, triangle, 200, 7)
    assert a == b and not a


def test_certify_polynomial(triangle):
    assert not Polynomial(2, ((1.0, (2, 0)),)).convexity_certified
    assert certify_polynomial(Polynomial(2, ((1.0, (2, 0)),)), triangle).convexity_certified
    assert not certify_polynomial(squared_norm(2, -1.0), triangle).convexity_certified


def test_certified_variants_pass_sampled_check():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        s = random_simplex(n, rng)
        for f in random_catalog(n, rng) + [random_affine(n, rng)]:
            assert f.convexity_certified
            assert convexity_sample_check(f, s, 1000, int(rng.integers(2**31)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_log_sum_exp_envelope(dim, m, seed):
    rng = np.random.default_rng(seed)
    pieces = tuple((tuple(rng.normal(size=dim)), float(rng.normal())) for _ in range(m))
    x = rng.normal(size=(50, dim)) * 3
    gap = LogSumExp(pieces).evaluate(x) - MaxAffine(pieces).evaluate(x)
    assert np.all(gap >= -1e-12)
    assert np.all(gap <= math.log(m) + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_affine_barycenter_equals_vertex_mean(n, seed):
    rng = np.random.default_rng(seed)
    s = random_simplex(n, rng)
    f = random_affine(n, rng)
    assert f.evaluate(barycenter(s)) == pytest.approx(np.mean(f.evaluate(s.vertices)), abs=1e-12)


def test_convexity_check_on_embedded_face():
    s = make_simplex([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    assert convexity_sample_check(squared_norm(3), s)
    with pytest.raises(DimensionMismatch):
        convexity_sample_check(squared_norm(2), s)
