import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskmesh.exactsum import exact_scaled_sum, scaled_to_float


def test_matches_fsum():
    rng = np.random.RandomState(0)
    values = rng.uniform(-1e6, 1e6, size=1000) * 10.0 ** rng.randint(-12, 12, 1000)
    assert scaled_to_float(exact_scaled_sum(values)) == math.fsum(values)


def test_partition_invariance():
    rng = np.random.RandomState(1)
    values = rng.standard_normal(997)
    whole = exact_scaled_sum(values)
    for parts in (2, 3, 7):
        chunks = np.array_split(values, parts)
        assert sum(exact_scaled_sum(c) for c in chunks) == whole


def test_single_value_round_trip():
    for v in (0.0, 1.0, -3.5, 1e-300, 123.456e77, 5e-324):
        assert scaled_to_float(exact_scaled_sum(np.array([v]))) == v


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        exact_scaled_sum(np.array([1.0, np.inf]))


@given(st.lists(st.floats(-1e100, 1e100, allow_nan=False, width=64),
                min_size=1, max_size=50))
@settings(max_examples=200, deadline=None)
def test_grouping_never_changes_bits(values):
    arr = np.array(values)
    front, back = arr[: len(arr) // 2], arr[len(arr) // 2 :]
    split = exact_scaled_sum(front) + exact_scaled_sum(back)
    assert scaled_to_float(split) == scaled_to_float(exact_scaled_sum(arr))
