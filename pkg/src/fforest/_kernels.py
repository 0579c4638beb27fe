"""Compiled tree-building and prediction kernels.

Trees are stored as flat parallel arrays (feature, threshold, left, right,
leaf value). feature == -1 marks a leaf. The builders take the feature
matrix transposed (d, n) and C-contiguous so per-feature access during the
split search stays within one cache-friendly row.

The split quality expression is written exactly once (_scan_feature) and
deliberately mirrors the documented form

    (|D1|/|D|) * 2*p1*(1-p1) + (|D2|/|D|) * 2*p2*(1-p2)

term by term, so an independent brute-force enumeration using the same
published formula produces bit-identical floats and therefore the same
argmin. Do not "simplify" the arithmetic here.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _sort_pairs(vals, labs, lo, hi):
    # iterative quicksort on vals[lo:hi] carrying labs along; insertion
    # sort below 16 elements; median-of-three pivot
    stack = np.empty((64, 2), np.int64)
    stack[0, 0] = lo
    stack[0, 1] = hi
    top = 1
    while top > 0:
        top -= 1
        l = stack[top, 0]
        h = stack[top, 1]
        while h - l > 16:
            mid = (l + h - 1) // 2
            if vals[l] > vals[mid]:
                vals[l], vals[mid] = vals[mid], vals[l]
                labs[l], labs[mid] = labs[mid], labs[l]
            if vals[l] > vals[h - 1]:
                vals[l], vals[h - 1] = vals[h - 1], vals[l]
                labs[l], labs[h - 1] = labs[h - 1], labs[l]
            if vals[mid] > vals[h - 1]:
                vals[mid], vals[h - 1] = vals[h - 1], vals[mid]
                labs[mid], labs[h - 1] = labs[h - 1], labs[mid]
            p = vals[mid]
            i = l
            j = h - 1
            while True:
                while vals[i] < p:
                    i += 1
                while vals[j] > p:
                    j -= 1
                if i >= j:
                    break
                vals[i], vals[j] = vals[j], vals[i]
                labs[i], labs[j] = labs[j], labs[i]
                i += 1
                j -= 1
            if j + 1 - l < h - (j + 1):
                stack[top, 0] = j + 1
                stack[top, 1] = h
                top += 1
                h = j + 1
            else:
                stack[top, 0] = l
                stack[top, 1] = j + 1
                top += 1
                l = j + 1
        for i in range(l + 1, h):
            v = vals[i]
            lb = labs[i]
            j = i - 1
            while j >= l and vals[j] > v:
                vals[j + 1] = vals[j]
                labs[j + 1] = labs[j]
                j -= 1
            vals[j + 1] = v
            labs[j + 1] = lb


@njit(cache=True, nogil=True)
def _scan_feature(vals, labs, m, tot1):
    """Best threshold for one feature given gathered, sorted values.

    vals[:m] must be sorted ascending with labs aligned. tot1 is the count
    of label-1 samples. Returns (gini, threshold, found); thresholds are
    midpoints of consecutive distinct values, scanned ascending, strict
    improvement only, so the lowest qualifying threshold wins ties.
    """
    best_g = np.inf
    best_t = 0.0
    found = False
    c1 = 0
    for i in range(m - 1):
        c1 += labs[i]
        vi = vals[i]
        vip = vals[i + 1]
        if vi == vip:
            continue
        nl = i + 1
        nr = m - nl
        pl = c1 / nl
        pr = (tot1 - c1) / nr
        g = (nl / m) * (2.0 * pl * (1.0 - pl)) + (nr / m) * (2.0 * pr * (1.0 - pr))
        if g < best_g:
            best_g = g
            best_t = (vi + vip) / 2.0
            found = True
            if g == 0.0:
                break
    return best_g, best_t, found


@njit(cache=True, nogil=True)
def best_split_scan(XT, y, features, sample_idx):
    """Scan the given (ascending) features over the rows in sample_idx.

    Returns (feature, threshold, gini, found). Ties resolve to the lower
    feature index because candidates are visited in ascending order with
    strict improvement.
    """
    m = sample_idx.shape[0]
    vals = np.empty(m, np.float64)
    labs = np.empty(m, np.int64)
    tot1 = 0
    for i in range(m):
        tot1 += y[sample_idx[i]]
    best_g = np.inf
    best_f = -1
    best_t = 0.0
    for cj in range(features.shape[0]):
        f = features[cj]
        row = XT[f]
        v0 = row[sample_idx[0]]
        const = True
        for i in range(m):
            v = row[sample_idx[i]]
            vals[i] = v
            labs[i] = y[sample_idx[i]]
            if v != v0:
                const = False
        if const:
            continue
        _sort_pairs(vals, labs, 0, m)
        g, t, ok = _scan_feature(vals, labs, m, tot1)
        if ok and g < best_g:
            best_g = g
            best_f = f
            best_t = t
            if g == 0.0:
                break
    return best_f, best_t, best_g, best_f >= 0


@njit(cache=True, nogil=True)
def build_cart(XT, y, max_features, rng):
    """Grow a CART tree on XT (d, n) with labels y; returns flat arrays.

    Per node: max_features candidates drawn without replacement (partial
    Fisher-Yates over a persistent pool), visited in ascending index
    order. Nodes stop at purity, fewer than 2 samples, or no valid split.
    """
    d, n = XT.shape
    cap = 2 * n + 1
    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, 2), np.float64)
    samples = np.arange(n)
    pool = np.arange(d)
    cand = np.empty(max_features, np.int64)
    vals = np.empty(n, np.float64)
    labs = np.empty(n, np.int64)
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        nid = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo
        ones = 0
        for i in range(lo, hi):
            ones += y[samples[i]]
        if ones == 0 or ones == m or m < 2:
            value[nid, 0] = (m - ones) / m
            value[nid, 1] = ones / m
            continue
        for j in range(max_features):
            r = j + rng.integers(0, d - j)
            pool[j], pool[r] = pool[r], pool[j]
            cand[j] = pool[j]
        cand.sort()
        best_g = np.inf
        best_f = -1
        best_t = 0.0
        tot1 = ones
        for cj in range(max_features):
            f = cand[cj]
            row = XT[f]
            v0 = row[samples[lo]]
            const = True
            for i in range(m):
                v = row[samples[lo + i]]
                vals[i] = v
                labs[i] = y[samples[lo + i]]
                if v != v0:
                    const = False
            if const:
                continue
            _sort_pairs(vals, labs, 0, m)
            g, t, ok = _scan_feature(vals, labs, m, tot1)
            if ok and g < best_g:
                best_g = g
                best_f = f
                best_t = t
                if g == 0.0:
                    break
        if best_f < 0:
            value[nid, 0] = (m - ones) / m
            value[nid, 1] = ones / m
            continue
        row = XT[best_f]
        i = lo
        j = hi - 1
        while i <= j:
            if row[samples[i]] <= best_t:
                i += 1
            else:
                tmp = samples[i]
                samples[i] = samples[j]
                samples[j] = tmp
                j -= 1
        mid = i
        if mid == lo or mid == hi:
            # cannot happen for a midpoint threshold, kept as a guard
            value[nid, 0] = (m - ones) / m
            value[nid, 1] = ones / m
            continue
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feat[nid] = best_f
        thr[nid] = best_t
        left[nid] = lid
        right[nid] = rid
        stack_node[top] = rid
        stack_lo[top] = mid
        stack_hi[top] = hi
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = mid
        top += 1
    return feat[:n_nodes].copy(), thr[:n_nodes].copy(), left[:n_nodes].copy(), right[:n_nodes].copy(), value[:n_nodes].copy()


@njit(cache=True, nogil=True)
def build_crt(XT, y, rng):
    """Grow a completely random tree: uniform feature, uniform threshold.

    A draw is degenerate when the feature is constant at the node or the
    sampled threshold does not fall strictly inside (min, max); after d
    degenerate draws the node becomes a leaf.
    """
    d, n = XT.shape
    cap = 2 * n + 1
    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, 2), np.float64)
    samples = np.arange(n)
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        nid = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo
        ones = 0
        for i in range(lo, hi):
            ones += y[samples[i]]
        if ones == 0 or ones == m or m < 2:
            value[nid, 0] = (m - ones) / m
            value[nid, 1] = ones / m
            continue
        best_f = -1
        best_t = 0.0
        for _ in range(d):
            f = rng.integers(0, d)
            row = XT[f]
            vmin = row[samples[lo]]
            vmax = vmin
            for i in range(lo + 1, hi):
                v = row[samples[i]]
                if v < vmin:
                    vmin = v
                elif v > vmax:
                    vmax = v
            if vmax <= vmin:
                continue
            t = rng.uniform(vmin, vmax)
            if vmin < t < vmax:
                best_f = f
                best_t = t
                break
        if best_f < 0:
            value[nid, 0] = (m - ones) / m
            value[nid, 1] = ones / m
            continue
        row = XT[best_f]
        i = lo
        j = hi - 1
        while i <= j:
            if row[samples[i]] <= best_t:
                i += 1
            else:
                tmp = samples[i]
                samples[i] = samples[j]
                samples[j] = tmp
                j -= 1
        mid = i
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feat[nid] = best_f
        thr[nid] = best_t
        left[nid] = lid
        right[nid] = rid
        stack_node[top] = rid
        stack_lo[top] = mid
        stack_hi[top] = hi
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = mid
        top += 1
    return feat[:n_nodes].copy(), thr[:n_nodes].copy(), left[:n_nodes].copy(), right[:n_nodes].copy(), value[:n_nodes].copy()


@njit(cache=True, nogil=True)
def accumulate_tree(X, feat, thr, left, right, value, out):
    """Route every row of X down one tree and add its leaf pair into out."""
    n = X.shape[0]
    for i in range(n):
        nid = 0
        while feat[nid] >= 0:
            if X[i, feat[nid]] <= thr[nid]:
                nid = left[nid]
            else:
                nid = right[nid]
        out[i, 0] += value[nid, 0]
        out[i, 1] += value[nid, 1]
