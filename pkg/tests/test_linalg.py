"""Tests for numeric rank and null spaces."""

import numpy as np
import pytest

from logic import linalg


def test_rank_of_dependent_rows():
    assert linalg.numeric_rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1
    assert linalg.numeric_rank(np.eye(3)) == 3
    assert linalg.numeric_rank(np.zeros((2, 3))) == 0
    assert linalg.numeric_rank(np.empty((0, 0))) == 0


def test_rank_over_the_complex_numbers():
    A = np.array([[1.0, 1j], [1j, -1.0]])
    assert linalg.numeric_rank(A) == 1


def test_rank_tolerance_is_relative():
    A = np.array([[1e6, 0.0], [0.0, 1e-5]])
    assert linalg.numeric_rank(A) == 1
    assert linalg.numeric_rank(A, tol=1e-12) == 2
    assert linalg.numeric_rank(1e-20 * np.eye(2)) == 2


@pytest.mark.parametrize("seed", range(5))
def test_left_null_space_annihilates(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    A = B @ rng.normal(size=(2, 3))
    M = linalg.left_null_space(A)
    assert M.shape == (2, 4)
    np.testing.assert_allclose(M @ A, 0.0, atol=1e-9 * linalg.max_norm(A))
    np.testing.assert_allclose(M @ M.conj().T, np.eye(2), atol=1e-12)


def test_null_spaces_of_zero_matrix():
    assert linalg.left_null_space(np.zeros((3, 2))).shape == (3, 3)
    assert linalg.right_null_space(np.zeros((3, 2))).shape == (2, 2)


def test_max_norm():
    assert linalg.max_norm(np.array([[1.0, -2.0], [0.5, 0.5]])) == 3.0
