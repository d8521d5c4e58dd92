import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elruhna.matching import canonical, dominant_match, greedy_match, local_match_score
from elruhna.oracle import brute_force_assignment


def test_diagonal():
    M = dominant_match(np.diag([3.0, 2.0, 1.0]))
    assert M.pairs == ((0, 0, 3.0), (1, 1, 2.0), (2, 2, 1.0))
    assert M.total_weight == 6.0


def test_dominant_diagonal_2x2():
    M = dominant_match([[2.0, 1.0], [1.0, 2.0]])
    assert M.as_dict() == {0: 0, 1: 1} and M.total_weight == 4.0


def test_antidiagonal_2x2_is_optimal():
    M = dominant_match([[1.0, 2.0], [2.0, 1.0]])
    assert M.as_dict() == {0: 1, 1: 0}
    assert M.total_weight == brute_force_assignment([[1, 2], [2, 1]])[0] == 4.0


def test_ties_go_to_smaller_row_then_col():
    M = dominant_match(np.ones((3, 3)))
    assert M.as_dict() == {0: 0, 1: 1, 2: 2}
    M = dominant_match([[0, 5, 5], [5, 0, 0]])
    assert M.as_dict() == {0: 1, 1: 0}


def test_empty_and_zero():
    assert len(dominant_match(sp.csr_matrix((3, 4)))) == 0
    assert len(dominant_match(np.zeros((2, 2)))) == 0
    with pytest.raises(ValueError):
        dominant_match([[-1.0]])


def test_to_matrix():
    M = dominant_match([[1.0, 2.0], [2.0, 1.0]]).to_matrix()
    assert M.toarray().tolist() == [[0, 1], [1, 0]]


def test_local_match_score():
    # vertices 0 and 1 each lie in hyperedges 0 and 1
    B = sp.csr_matrix(np.array([[1, 1], [1, 1], [0, 0]], dtype=float))
    Y = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert local_match_score(Y, B, B, 0, 1) == 4.0
    assert local_match_score(Y, B, B, 2, 0) == 0.0
    B1 = sp.csr_matrix(np.array([[1.0]]))
    assert local_match_score(sp.csr_matrix([[0.7]]), B1, B1, 0, 0) == 0.7


dense = st.integers(1, 6).flatmap(lambda r: st.integers(1, 6).flatmap(
    lambda c: arrays(np.float64, (r, c), elements=st.sampled_from([0.0, 0.5, 1.0, 1.0, 2.0, 3.0]))))


@settings(max_examples=300, deadline=None)
@given(dense)
def test_matching_properties(W):
    M = dominant_match(W)
    rows = [p[0] for p in M.pairs]
    cols = [p[1] for p in M.pairs]
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert all(w > 0 for _, _, w in M.pairs)
    # maximal on the support
    free_r = set(range(W.shape[0])) - set(rows)
    free_c = set(range(W.shape[1])) - set(cols)
    assert not any(W[r, c] > 0 for r in free_r for c in free_c)
    assert M.total_weight >= 0.5 * brute_force_assignment(W)[0] - 1e-12
    assert M == greedy_match(W)
    assert dominant_match(W) == M


def test_canonical_removes_zeros_and_duplicates():
    W = sp.coo_matrix(([1.0, 2.0, 0.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = canonical(W)
    assert C.nnz == 1 and C[0, 1] == 3.0
