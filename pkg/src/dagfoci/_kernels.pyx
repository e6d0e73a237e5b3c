# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nearest-neighbour kernels.

Distances are squared Euclidean, accumulated coordinate by coordinate in
index order with no fused multiply-add (the extension is built with
``-ffp-contract=off``).  Under that rule the bounding-box lower bound is
never larger than the computed distance of any point inside the box, so
pruning with a strict ``>`` keeps every exact-distance tie.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free, qsort
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.intp_t intp


cdef int _cmp_intp(const void* a, const void* b) noexcept nogil:
    cdef intp x = (<intp*>a)[0]
    cdef intp y = (<intp*>b)[0]
    return (x > y) - (x < y)


cdef inline double _sqdist(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0
    cdef double diff
    cdef Py_ssize_t k
    for k in range(d):
        diff = a[k] - b[k]
        acc = acc + diff * diff
    return acc


cdef inline double _box_lb(const double* x, const double* lo, const double* hi,
                           Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0
    cdef double gap
    cdef Py_ssize_t k
    for k in range(d):
        if x[k] < lo[k]:
            gap = lo[k] - x[k]
            acc = acc + gap * gap
        elif x[k] > hi[k]:
            gap = x[k] - hi[k]
            acc = acc + gap * gap
        else:
            acc = acc + 0.0
    return acc


cdef void _select(intp* idx, const double* pts, Py_ssize_t d, Py_ssize_t dim,
                  Py_ssize_t lo, Py_ssize_t hi, Py_ssize_t kth) noexcept nogil:
    # Quickselect on idx[lo:hi] by coordinate `dim`; idx[kth] ends in sorted position.
    cdef Py_ssize_t i, j, mid
    cdef double pivot
    cdef intp tmp
    hi -= 1
    while hi > lo:
        mid = lo + (hi - lo) // 2
        pivot = pts[idx[mid] * d + dim]
        i = lo
        j = hi
        while i <= j:
            while pts[idx[i] * d + dim] < pivot:
                i += 1
            while pts[idx[j] * d + dim] > pivot:
                j -= 1
            if i <= j:
                tmp = idx[i]; idx[i] = idx[j]; idx[j] = tmp
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            return


cdef struct IntBuf:
    intp* data
    Py_ssize_t size
    Py_ssize_t cap


cdef int _buf_push(IntBuf* b, intp v) noexcept nogil:
    cdef intp* grown
    if b.size == b.cap:
        grown = <intp*>realloc(b.data, 2 * b.cap * sizeof(intp))
        if grown == NULL:
            return -1
        b.data = grown
        b.cap *= 2
    b.data[b.size] = v
    b.size += 1
    return 0


def kdtree_nearest(const double[:, ::1] pts, Py_ssize_t leafsize=32):
    """All exact nearest other points of every row of ``pts`` (rows unique).

    Returns ``(best, offsets, ties)``: ``best[i]`` is the minimal squared
    distance from row ``i`` to any other row and ``ties[offsets[i]:offsets[i+1]]``
    lists every row attaining it, in ascending order.
    """
    cdef Py_ssize_t m = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if m < 2:
        raise ValueError("need at least two distinct points")
    if leafsize < 1:
        leafsize = 1
    cdef Py_ssize_t max_nodes = 2 * m + 1
    idx_arr = np.arange(m, dtype=np.intp)
    start_arr = np.empty(max_nodes, dtype=np.intp)
    end_arr = np.empty(max_nodes, dtype=np.intp)
    left_arr = np.full(max_nodes, -1, dtype=np.intp)
    right_arr = np.full(max_nodes, -1, dtype=np.intp)
    lo_arr = np.empty((max_nodes, d), dtype=np.float64)
    hi_arr = np.empty((max_nodes, d), dtype=np.float64)
    best_arr = np.full(m, np.inf, dtype=np.float64)
    counts_arr = np.zeros(m, dtype=np.intp)
    raw_start_arr = np.zeros(m, dtype=np.intp)

    cdef intp[::1] idx = idx_arr
    cdef intp[::1] nstart = start_arr
    cdef intp[::1] nend = end_arr
    cdef intp[::1] nleft = left_arr
    cdef intp[::1] nright = right_arr
    cdef double[:, ::1] blo = lo_arr
    cdef double[:, ::1] bhi = hi_arr
    cdef double[::1] best = best_arr
    cdef intp[::1] counts = counts_arr
    cdef intp[::1] raw_start = raw_start_arr
    cdef const double* P = &pts[0, 0]

    cdef Py_ssize_t n_nodes = 1
    cdef Py_ssize_t node, s, e, k, i, dim, mid, top, child, c0, c1, q
    cdef double spread, v, lb0, lb1, dist, bq
    cdef intp p
    cdef intp* stack_node = NULL
    cdef double* stack_lb = NULL
    cdef IntBuf local, out
    cdef int failed = 0

    stack_node = <intp*>malloc(512 * sizeof(intp))
    stack_lb = <double*>malloc(512 * sizeof(double))
    local.data = <intp*>malloc(16 * sizeof(intp))
    local.size = 0
    local.cap = 16
    out.data = <intp*>malloc((m + 16) * sizeof(intp))
    out.size = 0
    out.cap = m + 16
    if stack_node == NULL or stack_lb == NULL or local.data == NULL or out.data == NULL:
        free(stack_node); free(stack_lb); free(local.data); free(out.data)
        raise MemoryError()

    with nogil:
        # build: nodes are created in DFS order via an explicit stack of node ids
        nstart[0] = 0
        nend[0] = m
        top = 0
        stack_node[top] = 0
        top += 1
        while top > 0:
            top -= 1
            node = stack_node[top]
            s = nstart[node]
            e = nend[node]
            for k in range(d):
                blo[node, k] = P[idx[s] * d + k]
                bhi[node, k] = P[idx[s] * d + k]
            for i in range(s + 1, e):
                for k in range(d):
                    v = P[idx[i] * d + k]
                    if v < blo[node, k]:
                        blo[node, k] = v
                    elif v > bhi[node, k]:
                        bhi[node, k] = v
            if e - s <= leafsize:
                continue
            dim = 0
            spread = bhi[node, 0] - blo[node, 0]
            for k in range(1, d):
                if bhi[node, k] - blo[node, k] > spread:
                    spread = bhi[node, k] - blo[node, k]
                    dim = k
            mid = s + (e - s) // 2
            _select(&idx[0], P, d, dim, s, e, mid)
            c0 = n_nodes
            c1 = n_nodes + 1
            n_nodes += 2
            nstart[c0] = s
            nend[c0] = mid
            nstart[c1] = mid
            nend[c1] = e
            nleft[node] = c0
            nright[node] = c1
            stack_node[top] = c0
            stack_node[top + 1] = c1
            top += 2

        # query every row, visiting rows in leaf order for locality
        for i in range(m):
            q = idx[i]
            bq = INFINITY
            local.size = 0
            top = 0
            stack_node[top] = 0
            stack_lb[top] = 0.0
            top += 1
            while top > 0:
                top -= 1
                node = stack_node[top]
                if stack_lb[top] > bq:
                    continue
                if nleft[node] < 0:
                    for k in range(nstart[node], nend[node]):
                        p = idx[k]
                        if p == q:
                            continue
                        dist = _sqdist(P + p * d, P + q * d, d)
                        if dist < bq:
                            bq = dist
                            local.size = 0
                            if _buf_push(&local, p) < 0:
                                failed = 1
                        elif dist == bq:
                            if _buf_push(&local, p) < 0:
                                failed = 1
                    continue
                c0 = nleft[node]
                c1 = nright[node]
                lb0 = _box_lb(P + q * d, &blo[c0, 0], &bhi[c0, 0], d)
                lb1 = _box_lb(P + q * d, &blo[c1, 0], &bhi[c1, 0], d)
                # push the farther child first so the nearer one is popped next
                if lb0 <= lb1:
                    if lb1 <= bq:
                        stack_node[top] = c1; stack_lb[top] = lb1; top += 1
                    if lb0 <= bq:
                        stack_node[top] = c0; stack_lb[top] = lb0; top += 1
                else:
                    if lb0 <= bq:
                        stack_node[top] = c0; stack_lb[top] = lb0; top += 1
                    if lb1 <= bq:
                        stack_node[top] = c1; stack_lb[top] = lb1; top += 1
            best[q] = bq
            counts[q] = local.size
            raw_start[q] = out.size
            if local.size > 1:
                qsort(local.data, local.size, sizeof(intp), _cmp_intp)
            for k in range(local.size):
                if _buf_push(&out, local.data[k]) < 0:
                    failed = 1

    try:
        if failed:
            raise MemoryError()
        raw = np.empty(out.size, dtype=np.intp)
        for k in range(out.size):
            raw[k] = out.data[k]
        offsets_arr = np.zeros(m + 1, dtype=np.intp)
        np.cumsum(counts_arr, out=offsets_arr[1:])
        # tie lists were appended in leaf order; gather them back into row order
        gather = np.repeat(raw_start_arr - offsets_arr[:-1], counts_arr)
        gather += np.arange(out.size, dtype=np.intp)
        ties = raw[gather]
        return best_arr, offsets_arr, ties
    finally:
        free(stack_node)
        free(stack_lb)
        free(local.data)
        free(out.data)


def scan_nearest(const double[:, ::1] pts):
    """Exact linear-scan counterpart of :func:`kdtree_nearest` (any dimension)."""
    cdef Py_ssize_t m = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if m < 2:
        raise ValueError("need at least two distinct points")
    best_arr = np.full(m, np.inf, dtype=np.float64)
    offsets_arr = np.zeros(m + 1, dtype=np.intp)
    cdef double[::1] best = best_arr
    cdef intp[::1] offsets = offsets_arr
    cdef const double* P = &pts[0, 0]
    cdef IntBuf out
    cdef Py_ssize_t q, p, first
    cdef double dist, bq
    cdef int failed = 0
    out.data = <intp*>malloc((m + 16) * sizeof(intp))
    out.size = 0
    out.cap = m + 16
    if out.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for q in range(m):
                bq = INFINITY
                first = out.size
                for p in range(m):
                    if p == q:
                        continue
                    dist = _sqdist(P + p * d, P + q * d, d)
                    if dist < bq:
                        bq = dist
                        out.size = first
                        if _buf_push(&out, p) < 0:
                            failed = 1
                    elif dist == bq:
                        if _buf_push(&out, p) < 0:
                            failed = 1
                best[q] = bq
                offsets[q + 1] = out.size
        if failed:
            raise MemoryError()
        ties = np.empty(out.size, dtype=np.intp)
        for p in range(out.size):
            ties[p] = out.data[p]
        return best_arr, offsets_arr, ties
    finally:
        free(out.data)


def resolve_ties(const cnp.int64_t[::1] keys, const intp[::1] group,
                 const intp[::1] members, const intp[::1] gstart,
                 const intp[::1] rank_in_group, const double[::1] best,
                 const intp[::1] offsets, const intp[::1] ties):
    """Pick one neighbour per original row from its sorted candidate list.

    Row ``j`` belongs to group ``group[j]`` of identical rows; the sorted
    members of group ``g`` are ``members[gstart[g]:gstart[g+1]]``.  The
    candidates of ``j`` are the other members of its own group (distance 0)
    together with the members of the nearest other groups when those are
    also at distance 0 or when ``j`` has no duplicate.  The choice is
    ``candidates[keys[j] % len(candidates)]`` over the ascending list.
    """
    cdef Py_ssize_t n = keys.shape[0]
    nn_arr = np.empty(n, dtype=np.intp)
    cdef intp[::1] nn = nn_arr
    cdef Py_ssize_t j, g, h, t, size, c, pos, total, k, w
    cdef intp* buf = NULL
    cdef Py_ssize_t cap = 0
    cdef int own, other
    for j in range(n):
        g = group[j]
        size = gstart[g + 1] - gstart[g]
        own = size >= 2
        other = (not own) or best[g] == 0.0
        if own and not other:
            c = keys[j] % (size - 1)
            pos = rank_in_group[j]
            if c >= pos:
                c += 1
            nn[j] = members[gstart[g] + c]
            continue
        if not own and offsets[g + 1] - offsets[g] == 1:
            h = ties[offsets[g]]
            c = keys[j] % (gstart[h + 1] - gstart[h])
            nn[j] = members[gstart[h] + c]
            continue
        total = 0
        if own:
            total += size - 1
        for t in range(offsets[g], offsets[g + 1]):
            h = ties[t]
            total += gstart[h + 1] - gstart[h]
        if total > cap:
            free(buf)
            cap = total
            buf = <intp*>malloc(cap * sizeof(intp))
            if buf == NULL:
                raise MemoryError()
        w = 0
        if own:
            for k in range(gstart[g], gstart[g + 1]):
                if members[k] != j:
                    buf[w] = members[k]
                    w += 1
        for t in range(offsets[g], offsets[g + 1]):
            h = ties[t]
            for k in range(gstart[h], gstart[h + 1]):
                buf[w] = members[k]
                w += 1
        qsort(buf, w, sizeof(intp), _cmp_intp)
        nn[j] = buf[keys[j] % w]
    free(buf)
    return nn_arr
