"""
Tests for the sorted sample and the empirical distribution function
"""

import numpy as np
import pytest
from lrdensity.errors import ValidationError
from lrdensity.estimation.edf import edf_at_points, edf_eval, sort_sample


def test_sort_sample_keeps_original_positions():
    """
    values = original[sort_index]
    """
    sample = sort_sample([3.0, 1.0, 2.0])
    assert sample.values.tolist() == [1.0, 2.0, 3.0]
    assert sample.sort_index.tolist() == [1, 2, 0]
    assert not sample.weighted
    assert sample.n == 3


def test_edf_counts_ties_inclusively():
    """
    F at a tied value counts every copy
    """
    edf = edf_at_points(sort_sample([1.0, 2.0, 2.0, 3.0]))
    assert np.allclose(edf.values, [0.25, 0.75, 0.75, 1.0])


def test_weighted_edf():
    """
    Weights travel with their observations
    """
    sample = sort_sample([3.0, 1.0, 2.0], [1.0, 2.0, 1.0])
    assert sample.weights.tolist() == [2.0, 1.0, 1.0]
    assert np.allclose(edf_at_points(sample).values, [2 / 3, 1.0, 4 / 3])
    assert sample.weight_mean == pytest.approx(4 / 3)


def test_edf_eval_is_right_continuous():
    """
    Jumps belong to the right
    """
    sample = sort_sample([1.0, 2.0, 2.0, 3.0])
    assert edf_eval(sample, 2.0) == 0.75
    assert edf_eval(sample, 1.999) == 0.25
    assert np.allclose(edf_eval(sample, np.array([-5.0, 10.0])), [0.0, 1.0])
    weighted = sort_sample([1.0, 2.0], [3.0, 1.0])
    assert edf_eval(weighted, 1.5) == pytest.approx(1.5)


@pytest.mark.parametrize("values, weights", [
    ([], None),
    ([1.0, np.nan], None),
    ([1.0, 2.0], [1.0]),
    ([1.0, 2.0], [1.0, np.inf]),
])
def test_invalid_samples_are_rejected(values, weights):
    """
    Empty samples, non-finite values and misaligned weights
    """
    with pytest.raises(ValidationError):
        sort_sample(values, weights)
