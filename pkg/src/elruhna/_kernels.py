"""Compiled inner loops.

Sparse matrices enter as CSR triples ``(indptr, indices, data)`` with sorted
column indices.  Every routine is sequential and deterministic.

Entry priority everywhere is: larger weight first, then smaller row, then
smaller column.  Under this strict total order the locally dominant matching
is unique and equals the sorted greedy matching.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _better(k1, k2, data):
    # entry ids follow CSR order, so id order is (row, col) order
    if k2 < 0:
        return True
    w1 = data[k1]
    w2 = data[k2]
    return w1 > w2 or (w1 == w2 and k1 < k2)


@njit(cache=True)
def _best_in_row(r, indptr, indices, data, col_mate):
    best = -1
    for k in range(indptr[r], indptr[r + 1]):
        if data[k] > 0 and col_mate[indices[k]] < 0 and _better(k, best, data):
            best = k
    return best


@njit(cache=True)
def _best_in_col(c, cptr, centry, rows_of, data, row_mate):
    best = -1
    for t in range(cptr[c], cptr[c + 1]):
        k = centry[t]
        if data[k] > 0 and row_mate[rows_of[k]] < 0 and _better(k, best, data):
            best = k
    return best


@njit(cache=True)
def pointer_dominant_match(indptr, indices, data, ncols):
    """Locally dominant matching by candidate pointers.

    Every row and column keeps a pointer to its best live entry; an entry that
    both its row and its column point to is committed, and only pointers into
    the freshly matched row and column are recomputed.

    Returns the committed entry ids in commit order.
    """
    nrows = indptr.shape[0] - 1
    nnz = data.shape[0]
    rows_of = np.empty(nnz, dtype=np.int64)
    for r in range(nrows):
        for k in range(indptr[r], indptr[r + 1]):
            rows_of[k] = r
    # column-major index of entry ids
    cptr = np.zeros(ncols + 1, dtype=np.int64)
    for k in range(nnz):
        cptr[indices[k] + 1] += 1
    for c in range(ncols):
        cptr[c + 1] += cptr[c]
    fill = cptr[:-1].copy()
    centry = np.empty(nnz, dtype=np.int64)
    for k in range(nnz):
        c = indices[k]
        centry[fill[c]] = k
        fill[c] += 1

    row_mate = -np.ones(nrows, dtype=np.int64)
    col_mate = -np.ones(ncols, dtype=np.int64)
    cand_r = -np.ones(nrows, dtype=np.int64)
    cand_c = -np.ones(ncols, dtype=np.int64)
    for r in range(nrows):
        cand_r[r] = _best_in_row(r, indptr, indices, data, col_mate)
    for c in range(ncols):
        cand_c[c] = _best_in_col(c, cptr, centry, rows_of, data, row_mate)

    queue = np.empty(nnz + nrows + ncols + 1, dtype=np.int64)
    head = 0
    tail = 0
    for r in range(nrows):
        k = cand_r[r]
        if k >= 0 and cand_c[indices[k]] == k:
            queue[tail] = k
            tail += 1

    committed = np.empty(min(nrows, ncols), dtype=np.int64)
    n_comm = 0
    while head < tail:
        k = queue[head]
        head += 1
        r = rows_of[k]
        c = indices[k]
        if row_mate[r] >= 0 or col_mate[c] >= 0:
            continue
        row_mate[r] = c
        col_mate[c] = r
        committed[n_comm] = k
        n_comm += 1
        # columns whose pointer sat in row r
        for k2 in range(indptr[r], indptr[r + 1]):
            c2 = indices[k2]
            if col_mate[c2] < 0 and cand_c[c2] == k2:
                kk = _best_in_col(c2, cptr, centry, rows_of, data, row_mate)
                cand_c[c2] = kk
                if kk >= 0 and cand_r[rows_of[kk]] == kk:
                    queue[tail] = kk
                    tail += 1
        # rows whose pointer sat in column c
        for t in range(cptr[c], cptr[c + 1]):
            k2 = centry[t]
            r2 = rows_of[k2]
            if row_mate[r2] < 0 and cand_r[r2] == k2:
                kk = _best_in_row(r2, indptr, indices, data, col_mate)
                cand_r[r2] = kk
                if kk >= 0 and cand_c[indices[kk]] == kk:
                    queue[tail] = kk
                    tail += 1
    return committed[:n_comm]


@njit(cache=True)
def _stable_order_desc(w, n, order):
    for t in range(n):
        order[t] = t
    # insertion sort keeps equal weights in collection order
    for t in range(1, n):
        key = order[t]
        wk = w[key]
        s = t - 1
        while s >= 0 and w[order[s]] < wk:
            order[s + 1] = order[s]
            s -= 1
        order[s + 1] = key


@njit(cache=True)
def _lookup(indptr, indices, data, r, c):
    lo = indptr[r]
    hi = indptr[r + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < c:
            lo = mid + 1
        else:
            hi = mid
    if lo < indptr[r + 1] and indices[lo] == c:
        return data[lo]
    return 0.0


@njit(cache=True)
def local_match(q_nbrs, d_nbrs, s_indptr, s_indices, s_data, w_buf, r_buf, c_buf, order, used_r, used_c):
    """Weight of the greedy matching on ``S[q_nbrs][:, d_nbrs]``.

    ``q_nbrs`` and ``d_nbrs`` must be ascending.  Buffers must be large enough
    for ``len(q_nbrs) * len(d_nbrs)`` entries.
    """
    cnt = 0
    for a in range(q_nbrs.shape[0]):
        for b in range(d_nbrs.shape[0]):
            w = _lookup(s_indptr, s_indices, s_data, q_nbrs[a], d_nbrs[b])
            if w > 0.0:
                w_buf[cnt] = w
                r_buf[cnt] = a
                c_buf[cnt] = b
                cnt += 1
    if cnt == 0:
        return 0.0
    if cnt <= 64:
        _stable_order_desc(w_buf, cnt, order)
    else:
        idx = np.argsort(-w_buf[:cnt], kind="mergesort")
        for t in range(cnt):
            order[t] = idx[t]
    total = 0.0
    for t in range(cnt):
        k = order[t]
        a = r_buf[k]
        b = c_buf[k]
        if not used_r[a] and not used_c[b]:
            used_r[a] = True
            used_c[b] = True
            total += w_buf[k]
    for a in range(q_nbrs.shape[0]):
        used_r[a] = False
    for b in range(d_nbrs.shape[0]):
        used_c[b] = False
    return total


@njit(cache=True)
def rule1_sweep(t_indptr, t_indices, qn_indptr, qn_indices, dn_indptr, dn_indices,
                s_indptr, s_indices, s_data, b_row, b_col):
    """Local-matching update for every stored entry of a target matrix.

    Target entry ``(i, j)`` becomes the greedy matching weight of the source
    matrix restricted to rows ``N_Q(i)`` and columns ``N_D(j)``, divided by
    ``max(sum b_row[N_Q(i)], sum b_col[N_D(j)])`` (zero when that is zero).
    """
    nq = qn_indptr.shape[0] - 1
    nd = dn_indptr.shape[0] - 1
    max_q = 1
    for i in range(nq):
        max_q = max(max_q, qn_indptr[i + 1] - qn_indptr[i])
    max_d = 1
    for j in range(nd):
        max_d = max(max_d, dn_indptr[j + 1] - dn_indptr[j])
    cap = max_q * max_d
    w_buf = np.empty(cap, dtype=np.float64)
    r_buf = np.empty(cap, dtype=np.int64)
    c_buf = np.empty(cap, dtype=np.int64)
    order = np.empty(cap, dtype=np.int64)
    used_r = np.zeros(max_q, dtype=np.bool_)
    used_c = np.zeros(max_d, dtype=np.bool_)

    # neighbourhood sums of b depend only on the endpoint
    q_bsum = np.zeros(nq, dtype=np.float64)
    for i in range(nq):
        for t in range(qn_indptr[i], qn_indptr[i + 1]):
            q_bsum[i] += b_row[qn_indices[t]]
    d_bsum = np.zeros(nd, dtype=np.float64)
    for j in range(nd):
        for t in range(dn_indptr[j], dn_indptr[j + 1]):
            d_bsum[j] += b_col[dn_indices[t]]

    out = np.zeros(t_indices.shape[0], dtype=np.float64)
    for i in range(t_indptr.shape[0] - 1):
        qn = qn_indices[qn_indptr[i]:qn_indptr[i + 1]]
        for k in range(t_indptr[i], t_indptr[i + 1]):
            j = t_indices[k]
            den = max(q_bsum[i], d_bsum[j])
            if den <= 0.0:
                continue
            dn = dn_indices[dn_indptr[j]:dn_indptr[j + 1]]
            num = local_match(qn, dn, s_indptr, s_indices, s_data, w_buf, r_buf, c_buf,
                              order, used_r, used_c)
            out[k] = num / den
    return out
