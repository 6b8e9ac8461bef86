"""Pure numpy tree builder; the reference the compiled kernel must match bit for bit.

Both builders share one contract:

* rows with ``weight <= 0`` are ignored;
* node sums accumulate sequentially in ascending row order, split sweeps
  accumulate sequentially in (value, row) order;
* nodes are numbered in creation order and expanded depth first, left first;
* per-node feature subsets come from a splitmix64 stream seeded with ``seed``.
"""

import numpy as np

GINI = 0
NEWTON = 1

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


def sample_features(rng, n_features, k):
    perm = list(range(n_features))
    for i in range(k):
        j = i + rng.next() % (n_features - i)
        perm[i], perm[j] = perm[j], perm[i]
    return sorted(perm[:k])


def presort(X):
    X = np.asarray(X, dtype=np.float64)
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)


def _seqsum(a):
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def build_tree(X, order, weight, target, hess, mode, max_depth, min_samples_leaf,
               max_features, reg_lambda, gamma, min_child_weight, seed):
    """Grow one tree. ``order`` is unused here but kept for signature parity."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    n_features = X.shape[1]
    k = max_features if 0 < max_features < n_features else n_features
    rng = SplitMix64(seed)

    active = np.flatnonzero(weight > 0)
    cap = max(2 * active.size - 1, 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    gain = np.zeros(cap)
    node_weight = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)

    if mode == GINI:
        pos = np.where(target > 0.5, weight, 0.0)
        neg = np.where(target > 0.5, 0.0, weight)

    n_nodes = 1
    stack = [(0, active, 0)]
    while stack:
        node, rows, depth = stack.pop()
        m = rows.size
        n_samples[node] = m
        if mode == GINI:
            t1 = _seqsum(pos[rows])
            t0 = _seqsum(neg[rows])
            tw = t0 + t1
            value[node] = t1 / tw if tw > 0 else 0.0
            node_weight[node] = tw
            pure = t0 <= 0.0 or t1 <= 0.0
            parent = (t0 * t0 + t1 * t1) / tw if tw > 0 else 0.0
        else:
            tg = _seqsum(target[rows])
            th = _seqsum(hess[rows])
            value[node] = -tg / (th + reg_lambda) if th + reg_lambda > 0 else 0.0
            node_weight[node] = th
            pure = False
            parent = tg * tg / (th + reg_lambda) if th + reg_lambda > 0 else 0.0

        if depth >= max_depth or m < 2 * min_samples_leaf or m < 2 or pure:
            continue
        feats = sample_features(rng, n_features, k) if k < n_features else range(n_features)

        best_proxy = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in feats:
            srt = rows[np.argsort(X[rows, f], kind="stable")]
            vals = X[srt, f]
            cnt = np.arange(1, m)
            ok = (vals[:-1] < vals[1:]) & (cnt >= min_samples_leaf) & (m - cnt >= min_samples_leaf)
            if mode == GINI:
                l1 = np.cumsum(pos[srt])[:-1]
                l0 = np.cumsum(neg[srt])[:-1]
                r0 = t0 - l0
                r1 = t1 - l1
                wl = l0 + l1
                wr = r0 + r1
                ok &= (wl > 0) & (wr > 0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    proxy = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr
            else:
                gl = np.cumsum(target[srt])[:-1]
                hl = np.cumsum(hess[srt])[:-1]
                gr = tg - gl
                hr = th - hl
                ok &= (hl >= min_child_weight) & (hr >= min_child_weight)
                ok &= (hl + reg_lambda > 0) & (hr + reg_lambda > 0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    proxy = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
            if not ok.any():
                continue
            cand = np.where(ok, proxy, -np.inf)
            i = int(np.argmax(cand))
            if cand[i] > best_proxy:
                best_proxy = float(cand[i])
                best_f = f
                a, b = float(vals[i]), float(vals[i + 1])
                thr = (a + b) * 0.5
                if thr >= b:
                    thr = a
                best_thr = thr

        if best_f < 0:
            continue
        if mode == GINI:
            g = best_proxy - parent
            if not g > 1e-12 * tw:
                continue
        else:
            g = 0.5 * (best_proxy - parent)
            if not g - gamma > 0.0:
                continue
        go_left = X[rows, best_f] <= best_thr
        lid, rid = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        gain[node] = g
        stack.append((rid, rows[~go_left], depth + 1))
        stack.append((lid, rows[go_left], depth + 1))

    return {
        "feature": feature[:n_nodes], "threshold": threshold[:n_nodes],
        "left": left[:n_nodes], "right": right[:n_nodes], "value": value[:n_nodes],
        "gain": gain[:n_nodes], "weight": node_weight[:n_nodes], "n_samples": n_samples[:n_nodes],
    }


def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    idx = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[idx]
        inner = f >= 0
        if not inner.any():
            return idx
        r = rows[inner]
        ni = idx[inner]
        go = X[r, f[inner]] <= threshold[ni]
        idx[inner] = np.where(go, left[ni], right[ni])


def predict_tree(feature, threshold, left, right, value, X):
    return np.asarray(value)[apply_tree(feature, threshold, left, right, X)]
