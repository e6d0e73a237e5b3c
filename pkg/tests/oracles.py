"""Brute-force reference implementations used only by the tests.

Quadratic-time and deliberately naive: ranks by direct counting, neighbours
by scanning every pair.  They share nothing with the production path except
the tie-key contract (keys drawn from ``default_rng(seed)``, candidates
sorted by index, pick ``key % count``).
"""
import numpy as np


def ranks(y):
    y = np.asarray(y, dtype=float)
    r = np.array([sum(1 for b in y if b <= a) for a in y])
    l = np.array([sum(1 for b in y if b >= a) for a in y])
    return r, l


def keys(n, seed):
    rng = np.random.default_rng(seed)
    return rng.integers(0, np.iinfo(np.int64).max, size=n, dtype=np.int64)


def nearest(points, seed):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, d = pts.shape
    key = keys(n, seed)
    out = []
    for j in range(n):
        dist = np.zeros(n)
        for c in range(d):
            diff = pts[:, c] - pts[j, c]
            dist = dist + diff * diff
        dist[j] = np.inf
        cand = [k for k in range(n) if dist[k] == dist.min()]
        out.append(cand[int(key[j] % len(cand))])
    return np.array(out)


def _seed(seed):
    return (seed,) if isinstance(seed, int) else tuple(seed)


def codec_unconditional(y, z, seed):
    n = len(y)
    r, l = ranks(y)
    m = nearest(z, _seed(seed) + (1,))
    num = sum(n * min(r[i], r[m[i]]) - l[i] ** 2 for i in range(n))
    den = sum(l[i] * (n - l[i]) for i in range(n))
    return num / den, num / n**3


def codec_conditional(y, z, x, seed):
    n = len(y)
    r, _ = ranks(y)
    x = np.asarray(x, dtype=float).reshape(n, -1)
    z = np.asarray(z, dtype=float).reshape(n, -1)
    nn = nearest(x, _seed(seed) + (0,))
    m = nearest(np.hstack([x, z]), _seed(seed) + (1,))
    num = sum(min(r[j], r[m[j]]) - min(r[j], r[nn[j]]) for j in range(n))
    den = sum(r[j] - min(r[j], r[nn[j]]) for j in range(n))
    return num / den


def markov_boundary(parents, v):
    """Parents, children and co-parents of ``v`` from a parent map."""
    pa = set(parents[v])
    ch = {c for c, ps in parents.items() if v in ps}
    sp = set()
    for c in ch:
        sp |= set(parents[c])
    sp.discard(v)
    return pa | ch | sp, pa, ch, sp - pa - ch
