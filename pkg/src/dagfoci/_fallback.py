"""NumPy/SciPy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and bit-identical outputs; used when the extension is not
built or when ``DAGFOCI_PURE=1``.
"""
import numpy as np
from scipy.spatial import cKDTree


def _sqdist_rows(pts, a, b):
    # squared distances between rows a[i] and b[i], summed in coordinate order
    acc = np.zeros(len(a), dtype=np.float64)
    for k in range(pts.shape[1]):
        diff = pts[a, k] - pts[b, k]
        acc = acc + diff * diff
    return acc


def _ties_from_pairs(m, rows, cols, dist):
    # keep, per row, every candidate attaining the row minimum
    keep = rows != cols
    rows, cols, dist = rows[keep], cols[keep], dist[keep]
    order = np.lexsort((cols, rows))
    rows, cols, dist = rows[order], cols[order], dist[order]
    best = np.full(m, np.inf)
    np.minimum.at(best, rows, dist)
    hit = dist == best[rows]
    rows, cols = rows[hit], cols[hit]
    offsets = np.zeros(m + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=m), out=offsets[1:])
    return best, offsets, cols.astype(np.intp)


def kdtree_nearest(pts, leafsize=32):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    m = pts.shape[0]
    if m < 2:
        raise ValueError("need at least two distinct points")
    tree = cKDTree(pts, leafsize=leafsize)
    dd, ii = tree.query(pts, k=2)
    # rows are unique, but underflow can make another row report distance 0
    other = np.where(ii[:, 0] == np.arange(m), dd[:, 1], dd[:, 0])
    # cKDTree rounds differently; widen the ball, then re-check exactly
    radius = other * (1.0 + 1e-9) + 1e-300
    balls = tree.query_ball_point(pts, radius)
    lengths = np.fromiter((len(b) for b in balls), dtype=np.intp, count=m)
    rows = np.repeat(np.arange(m, dtype=np.intp), lengths)
    cols = np.fromiter((c for b in balls for c in b), dtype=np.intp, count=int(lengths.sum()))
    return _ties_from_pairs(m, rows, cols, _sqdist_rows(pts, rows, cols))


def scan_nearest(pts, block=256):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    m = pts.shape[0]
    if m < 2:
        raise ValueError("need at least two distinct points")
    best = np.empty(m)
    tie_lists = []
    allcols = np.arange(m, dtype=np.intp)
    for s in range(0, m, block):
        e = min(m, s + block)
        acc = np.zeros((e - s, m))
        for k in range(pts.shape[1]):
            diff = pts[None, :, k] - pts[s:e, None, k]
            acc = acc + diff * diff
        acc[np.arange(e - s), allcols[s:e]] = np.inf
        blk_best = acc.min(axis=1)
        best[s:e] = blk_best
        r, c = np.nonzero(acc == blk_best[:, None])
        tie_lists.append((r + s, c))
    rows = np.concatenate([r for r, _ in tie_lists])
    cols = np.concatenate([c for _, c in tie_lists]).astype(np.intp)
    offsets = np.zeros(m + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=m), out=offsets[1:])
    return best, offsets, cols


def resolve_ties(keys, group, members, gstart, rank_in_group, best, offsets, ties):
    n = len(keys)
    nn = np.empty(n, dtype=np.intp)
    size = (gstart[1:] - gstart[:-1])[group]
    own = size >= 2
    other = ~own | (best[group] == 0.0)
    ntied = (offsets[1:] - offsets[:-1])[group]

    # duplicates only: pick among the rest of the row's own group
    sel = own & ~other
    j = np.nonzero(sel)[0]
    c = keys[j] % (size[j] - 1)
    c = c + (c >= rank_in_group[j])
    nn[j] = members[gstart[group[j]] + c]

    # no duplicate, a single nearest group
    sel = ~own & (ntied == 1)
    j = np.nonzero(sel)[0]
    h = ties[offsets[group[j]]]
    c = keys[j] % (gstart[h + 1] - gstart[h])
    nn[j] = members[gstart[h] + c]

    for j in np.nonzero(~((own & ~other) | (~own & (ntied == 1))))[0]:
        g = group[j]
        parts = [members[gstart[h]:gstart[h + 1]] for h in ties[offsets[g]:offsets[g + 1]]]
        if own[j]:
            mine = members[gstart[g]:gstart[g + 1]]
            parts.append(mine[mine != j])
        cand = np.sort(np.concatenate(parts))
        nn[j] = cand[keys[j] % len(cand)]
    return nn
