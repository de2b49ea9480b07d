import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spseries import QuadraticSystem, TruncationSpec, emit, parse_document, parse_system, validate
from spseries.errors import (
    DimensionMismatchError,
    MalformedInputError,
    NonFiniteEntryError,
    SingularMatrixError,
    UnknownKeyError,
)

DOC_A = '{"A": [[-2, -1], [-1, -1]], "b": [4, 3]}'


def test_parse_example_system():
    system = parse_system(DOC_A)
    assert system.dim == 2
    np.testing.assert_array_equal(system.A, [[-2, -1], [-1, -1]])
    np.testing.assert_array_equal(system.b, [4, 3])
    assert system.x0 is None


def test_parse_diagonal_case():
    system = parse_system('{"A": [[-1, 0], [0, -1]], "b": [1, 2]}')
    assert system.dim == 2


def test_parse_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        parse_system('{"A": [[-2, -1], [-1, -1]], "b": [4, 3, 1]}')


def test_parse_ragged_matrix():
    with pytest.raises(DimensionMismatchError):
        parse_system('{"A": [[-2, -1], [-1]], "b": [4, 3]}')


def test_parse_rejects_unknown_keys():
    with pytest.raises(UnknownKeyError):
        parse_system(DOC_A[:-1] + ', "extra": 1}')


def test_parse_rejects_nonfinite():
    with pytest.raises(NonFiniteEntryError):
        parse_system('{"A": [[-2, NaN], [-1, -1]], "b": [4, 3]}')


def test_parse_rejects_non_numbers():
    with pytest.raises(MalformedInputError):
        parse_system('{"A": [[-2, "x"], [-1, -1]], "b": [4, 3]}')
    with pytest.raises(MalformedInputError):
        parse_system('not json at all')


def test_parse_truncation_block():
    _, trunc = parse_document(DOC_A[:-1] + ', "truncation": {"per_index": 3}}')
    assert trunc == TruncationSpec.per_index(3)
    _, trunc = parse_document(DOC_A[:-1] + ', "truncation": {"total_degree": 5}}')
    assert trunc == TruncationSpec.total_degree(5)
    with pytest.raises(UnknownKeyError):
        parse_document(DOC_A[:-1] + ', "truncation": {"cap": 3}}')
    with pytest.raises(MalformedInputError):
        parse_document(DOC_A[:-1] + ', "truncation": {"per_index": 3, "total_degree": 5}}')


def test_truncation_counts():
    assert TruncationSpec.per_index(3).index_count(2) == 16
    assert TruncationSpec.total_degree(2).index_count(3) == 10
    with pytest.raises(MalformedInputError):
        TruncationSpec.per_index(-1)
    with pytest.raises(MalformedInputError):
        TruncationSpec("diagonal", 3)


def test_emit_parse_round_trip_exact():
    system = QuadraticSystem(A=[[-2.0, -1.0], [-1.0, -1.0]], b=[4.0, 3.0],
                             x0=[0.1 + 0.2, 1e-17])
    again, _ = parse_document(emit(system))
    np.testing.assert_array_equal(again.A, system.A)
    np.testing.assert_array_equal(again.b, system.b)
    np.testing.assert_array_equal(again.x0, system.x0)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=2, max_size=2))
def test_round_trip_property(a_vals, b_vals):
    system = QuadraticSystem(A=np.array(a_vals).reshape(2, 2), b=b_vals)
    again, _ = parse_document(emit(system))
    np.testing.assert_array_equal(again.A, system.A)
    np.testing.assert_array_equal(again.b, system.b)


def test_validate_accepts_examples(system_2x2_int, system_2x2_close):
    assert validate(system_2x2_int) is system_2x2_int
    assert validate(system_2x2_close) is system_2x2_close


def test_validate_rejects_singular():
    with pytest.raises(SingularMatrixError):
        validate(QuadraticSystem(A=[[1.0, 1.0], [1.0, 1.0]], b=[1.0, 1.0]))


def test_validate_idempotent(system_2x2_int):
    assert validate(validate(system_2x2_int)) is system_2x2_int


def test_system_is_immutable(system_2x2_int):
    with pytest.raises(ValueError):
        system_2x2_int.A[0, 0] = 5.0


def test_emit_includes_truncation():
    system = parse_system(DOC_A)
    doc = json.loads(emit(system, TruncationSpec.per_index(3)))
    assert doc["truncation"] == {"per_index": 3}
