import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import RIGID8, random_core
from elruhna.hypercore import normalized_incidence
from elruhna.initsim import (BlockOperator, CentralityScores, ConvergenceError, block_centrality, compare,
                             degree_attributes, dense_similarity, init_similarity_dense, init_similarity_sparse,
                             nearest_k, residual)


def _svd_top(op):
    U, S, Vt = np.linalg.svd(op.dense())
    return S[0]


def test_compare():
    assert compare(3.7, 3.7) == 1.0
    assert compare(2, 4) == 0.5
    assert compare(3, 1) == compare(1, 3) == pytest.approx(1 / 3)
    assert compare(0, 0) == 1.0
    assert compare(0, 2) == 0.0
    assert compare(10.0, 30.0) == compare(1.0, 3.0)
    assert np.allclose(compare(np.array([1.0, 2.0]), np.array([2.0, 2.0])), [0.5, 1.0])


def test_two_by_one_block():
    col = sp.csr_matrix(np.array([[1.0], [1.0]]) / math.sqrt(2))
    s = block_centrality(col, col)
    assert s.sigma_max == pytest.approx(1.0, abs=1e-9)
    assert s.l_Q[0] == pytest.approx(s.l_Q[1]) and s.l_D[0] == pytest.approx(s.l_D[1])
    op = BlockOperator(col, col)
    assert s.sigma_max == pytest.approx(_svd_top(op))


@pytest.mark.parametrize("balanced", [False, True])
def test_singular_triple_identity(balanced):
    H = random_core(12, 15, 3.0, 4)
    K = random_core(14, 17, 3.0, 5)
    BQ, BD = normalized_incidence(H), normalized_incidence(K)
    rng = np.random.default_rng(0)
    WV = sp.random(H.n, K.n, density=0.2, random_state=rng)
    WE = sp.random(H.m, K.m, density=0.2, random_state=rng)
    s = block_centrality(BQ, BD, WV, WE, beta=0.7, balanced=balanced)
    if not balanced:
        assert residual(BQ, BD, WV, WE, 0.7, s) <= 1e-6 * s.sigma_max
        assert s.sigma_max == pytest.approx(_svd_top(BlockOperator(BQ, BD, WV, WE, 0.7)), rel=1e-6)
        assert float(s.l_Q @ s.l_Q + s.r_D @ s.r_D) == pytest.approx(1.0)
        assert float(s.l_D @ s.l_D + s.r_Q @ s.r_Q) == pytest.approx(1.0)
    for v in (s.l_Q, s.r_Q, s.l_D, s.r_D):
        assert (v >= -1e-12).all()
    assert s.sigma_max > 0


def test_ten_by_twelve_against_svd():
    rng = np.random.default_rng(2)
    BQ = sp.random(10, 12, density=0.3, random_state=rng)
    BD = sp.random(11, 12, density=0.3, random_state=rng)
    s = block_centrality(BQ, BD, tol=1e-10, max_iter=20000)
    assert s.sigma_max == pytest.approx(_svd_top(BlockOperator(BQ, BD)), rel=1e-6)


def test_block_operator_matches_dense():
    rng = np.random.default_rng(1)
    BQ, BD = sp.random(4, 5, density=0.5, random_state=rng), sp.random(6, 3, density=0.5, random_state=rng)
    WV, WE = sp.random(4, 6, density=0.5, random_state=rng), sp.random(5, 3, density=0.5, random_state=rng)
    op = BlockOperator(BQ, BD, WV, WE, 2.0)
    M = op.dense()
    x = rng.random(op.shape[1])
    y = rng.random(op.shape[0])
    lQ, rD = op.matvec(x[:6], x[6:])
    assert np.allclose(np.concatenate([lQ, rD]), M @ x)
    lD, rQ = op.rmatvec(y[:4], y[4:])
    assert np.allclose(np.concatenate([lD, rQ]), M.T @ y)
    with pytest.raises(ValueError):
        BlockOperator(BQ, BD, WE, None)
    with pytest.raises(ValueError):
        BlockOperator(BQ, BD, beta=0.0)


def test_convergence_error_carries_iterate():
    H = random_core(12, 15, 3.0, 4)
    B = normalized_incidence(H)
    with pytest.raises(ConvergenceError) as info:
        block_centrality(B, B, tol=1e-300, max_iter=3)
    assert isinstance(info.value.scores, CentralityScores)
    assert info.value.residual >= 0


def test_dominant_importance_ranks_first():
    B = normalized_incidence(RIGID8)
    WV = sp.csr_matrix(([50.0], ([3], [6])), shape=(8, 8))
    s = block_centrality(B, B, WV, None)
    assert int(np.argmax(s.l_Q)) == 3 and int(np.argmax(s.l_D)) == 6


def test_dense_similarity():
    s = block_centrality(normalized_incidence(RIGID8), normalized_incidence(RIGID8), balanced=True)
    X, Y = init_similarity_dense(s)
    assert X.shape == (8, 8) and Y.shape == (7, 7)
    assert np.allclose(X.diagonal(), 1.0) and np.allclose(Y.diagonal(), 1.0)
    assert X.data.min() >= 0 and X.data.max() <= 1
    flat = CentralityScores(np.ones(2), np.ones(1), np.ones(3), np.ones(2), 1.0)
    X, Y = init_similarity_dense(flat)
    assert X.toarray().tolist() == [[1.0] * 3] * 2


def test_nearest_k_example():
    S = nearest_k(np.array([1.0, 5.0]), np.array([1.0, 2.0, 9.0]), 1)
    assert sorted(zip(*S.nonzero())) == [(0, 0), (1, 1)]


def test_ratio_and_difference_rankings_differ():
    a, b = np.array([1.0]), np.array([0.5, 1.6])
    assert nearest_k(a, b, 1).indices.tolist() == [0]
    assert nearest_k(a, b, 1, by="ratio").indices.tolist() == [1]
    with pytest.raises(ValueError):
        nearest_k(a, b, 1, by="euclid")


def test_nearest_k_ties_and_zeros():
    S = nearest_k(np.array([2.0]), np.array([3.0, 1.0, 0.0]), 1)
    assert S.nonzero()[1].tolist() == [0]          # equal distance -> smaller id
    S = nearest_k(np.array([2.0]), np.array([1.0, 3.0]), 1)
    assert S.nonzero()[1].tolist() == [0]
    S = nearest_k(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 2)
    assert S.nnz == 1 and S[1, 1] == 1.0


def test_sparse_matches_dense_on_support():
    rng = np.random.default_rng(3)
    a, b = rng.random(30), rng.random(40)
    D = dense_similarity(a, b)
    for k in (1, 3, 40):
        S = nearest_k(a, b, k)
        assert (np.diff(S.indptr) == min(k, 40)).all()
        r, c = S.nonzero()
        assert np.allclose(S[r, c], D[r, c])
        # with ratio ranking the kept values are exactly the k largest of each dense row
        R = nearest_k(a, b, k, by="ratio")
        for i in range(30):
            row = np.sort(D[i].toarray().ravel())[::-1]
            assert np.allclose(np.sort(R[i].data)[::-1], row[: min(k, 40)])
            # with difference ranking the kept values are the k smallest |a_i - b_j|
            dist = np.sort(np.abs(a[i] - b))[: min(k, 40)]
            assert np.allclose(np.sort(np.abs(a[i] - b[S[i].indices])), dist)
    assert (nearest_k(a, b, 40) != 0).toarray().tolist() == (D != 0).toarray().tolist()


def test_init_sparse_k_checks():
    s = CentralityScores(np.ones(2), np.ones(1), np.ones(3), np.ones(2), 1.0)
    with pytest.raises(ValueError):
        init_similarity_sparse(s, 0)
    with pytest.warns(UserWarning):
        X, Y = init_similarity_sparse(s, 10)
    assert X.nnz == 6 and Y.nnz == 2


def test_degree_attributes():
    from elruhna.hypercore import Hypergraph
    H = Hypergraph(5, ((0, 1, 2, 3), (0, 1, 2, 3)))
    v, e = degree_attributes(normalized_incidence(H))
    assert v[0] == pytest.approx(1.0) and v[4] == 0.0
    assert np.allclose(e, 2.0)
