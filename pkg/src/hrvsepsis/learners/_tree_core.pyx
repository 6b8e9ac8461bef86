# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree builder. Same contract and arithmetic order as ``_tree_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport INFINITY

cnp.import_array()

cdef enum:
    GINI = 0
    NEWTON = 1


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def presort(X):
    X = np.asarray(X, dtype=np.float64)
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)


def build_tree(X, order, weight, target, hess, int mode, int max_depth, int min_samples_leaf,
               int max_features, double reg_lambda, double gamma, double min_child_weight,
               uint64_t seed):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[:, ::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef const double[::1] wv = np.ascontiguousarray(weight, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(target, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(hess, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t p = Xv.shape[1]
    cdef Py_ssize_t k = max_features if 0 < max_features < p else p
    cdef Py_ssize_t i, j, f, fi, s, r, m, start, end, pos_l, pos_r

    # a[r] / b[r]: weighted negative / positive mass in gini mode, gradient / hessian otherwise
    a_np = np.zeros(n)
    b_np = np.zeros(n)
    cdef double[::1] av = a_np
    cdef double[::1] bv = b_np
    for r in range(n):
        if mode == GINI:
            if tv[r] > 0.5:
                bv[r] = wv[r]
            else:
                av[r] = wv[r]
        else:
            av[r] = tv[r]
            bv[r] = hv[r]

    cdef Py_ssize_t n_act = 0
    for r in range(n):
        if wv[r] > 0:
            n_act += 1

    # slots 0..p-1 hold rows sorted by (value, row) per feature, slot p rows ascending
    work_np = np.empty((p + 1, max(n_act, 1)), dtype=np.int64)
    cdef int64_t[:, ::1] work = work_np
    for f in range(p):
        j = 0
        for i in range(n):
            r = ordv[f, i]
            if wv[r] > 0:
                work[f, j] = r
                j += 1
    j = 0
    for r in range(n):
        if wv[r] > 0:
            work[p, j] = r
            j += 1

    tmp_np = np.empty(max(n_act, 1), dtype=np.int64)
    cdef int64_t[::1] tmp = tmp_np
    goes_np = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] goes = goes_np
    perm_np = np.empty(p, dtype=np.int64)
    cdef int64_t[::1] perm = perm_np

    cdef Py_ssize_t cap = max(2 * n_act - 1, 1)
    feature_np = np.full(cap, -1, dtype=np.int64)
    threshold_np = np.zeros(cap)
    left_np = np.full(cap, -1, dtype=np.int64)
    right_np = np.full(cap, -1, dtype=np.int64)
    value_np = np.zeros(cap)
    gain_np = np.zeros(cap)
    nweight_np = np.zeros(cap)
    nsamp_np = np.zeros(cap, dtype=np.int64)
    cdef int64_t[::1] feature = feature_np
    cdef double[::1] threshold = threshold_np
    cdef int64_t[::1] left = left_np
    cdef int64_t[::1] right = right_np
    cdef double[::1] value = value_np
    cdef double[::1] gain = gain_np
    cdef double[::1] nweight = nweight_np
    cdef int64_t[::1] nsamp = nsamp_np

    # stack entries: node id, start, end, depth
    stack_np = np.empty((cap + 1, 4), dtype=np.int64)
    cdef int64_t[:, ::1] stack = stack_np
    cdef Py_ssize_t top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_act
    stack[0, 3] = 0
    top = 1
    cdef Py_ssize_t n_nodes = 1

    cdef uint64_t rng = seed
    cdef Py_ssize_t node, depth, best_f, lid, rid, cnt, nl
    cdef double t0, t1, tw, parent, l0, l1, r0, r1, wl, wr, proxy, best_proxy, best_thr, g
    cdef double x0, x1, thr
    cdef bint pure

    with nogil:
        while top > 0:
            top -= 1
            node = stack[top, 0]
            start = stack[top, 1]
            end = stack[top, 2]
            depth = stack[top, 3]
            m = end - start
            nsamp[node] = m

            t0 = 0.0
            t1 = 0.0
            for i in range(start, end):
                r = work[p, i]
                t0 += av[r]
                t1 += bv[r]
            if mode == GINI:
                tw = t0 + t1
                value[node] = t1 / tw if tw > 0 else 0.0
                nweight[node] = tw
                pure = t0 <= 0.0 or t1 <= 0.0
                parent = (t0 * t0 + t1 * t1) / tw if tw > 0 else 0.0
            else:
                # t0 = gradient sum, t1 = hessian sum
                tw = t1
                value[node] = -t0 / (t1 + reg_lambda) if t1 + reg_lambda > 0 else 0.0
                nweight[node] = t1
                pure = False
                parent = t0 * t0 / (t1 + reg_lambda) if t1 + reg_lambda > 0 else 0.0

            if depth >= max_depth or m < 2 * min_samples_leaf or m < 2 or pure:
                continue

            for i in range(p):
                perm[i] = i
            if k < p:
                for i in range(k):
                    j = i + <Py_ssize_t>(_splitmix(&rng) % <uint64_t>(p - i))
                    s = perm[i]
                    perm[i] = perm[j]
                    perm[j] = s
                # insertion sort of the chosen prefix
                for i in range(1, k):
                    s = perm[i]
                    j = i - 1
                    while j >= 0 and perm[j] > s:
                        perm[j + 1] = perm[j]
                        j -= 1
                    perm[j + 1] = s

            best_proxy = -INFINITY
            best_f = -1
            best_thr = 0.0
            for fi in range(k):
                f = perm[fi]
                l0 = 0.0
                l1 = 0.0
                for i in range(start, end - 1):
                    r = work[f, i]
                    l0 += av[r]
                    l1 += bv[r]
                    cnt = i - start + 1
                    if cnt < min_samples_leaf or m - cnt < min_samples_leaf:
                        continue
                    x0 = Xv[r, f]
                    x1 = Xv[work[f, i + 1], f]
                    if not x0 < x1:
                        continue
                    if mode == GINI:
                        r0 = t0 - l0
                        r1 = t1 - l1
                        wl = l0 + l1
                        wr = r0 + r1
                        if not (wl > 0 and wr > 0):
                            continue
                        proxy = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr
                    else:
                        r0 = t0 - l0
                        r1 = t1 - l1
                        if not (l1 >= min_child_weight and r1 >= min_child_weight):
                            continue
                        if not (l1 + reg_lambda > 0 and r1 + reg_lambda > 0):
                            continue
                        proxy = l0 * l0 / (l1 + reg_lambda) + r0 * r0 / (r1 + reg_lambda)
                    if proxy > best_proxy:
                        best_proxy = proxy
                        best_f = f
                        thr = (x0 + x1) * 0.5
                        if thr >= x1:
                            thr = x0
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

            nl = 0
            for i in range(start, end):
                r = work[p, i]
                if Xv[r, best_f] <= best_thr:
                    goes[r] = 1
                    nl += 1
                else:
                    goes[r] = 0
            for f in range(p + 1):
                pos_l = start
                pos_r = 0
                for i in range(start, end):
                    r = work[f, i]
                    if goes[r]:
                        work[f, pos_l] = r
                        pos_l += 1
                    else:
                        tmp[pos_r] = r
                        pos_r += 1
                for i in range(pos_r):
                    work[f, pos_l + i] = tmp[i]

            lid = n_nodes
            rid = n_nodes + 1
            n_nodes += 2
            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = lid
            right[node] = rid
            gain[node] = g
            stack[top, 0] = rid
            stack[top, 1] = start + nl
            stack[top, 2] = end
            stack[top, 3] = depth + 1
            top += 1
            stack[top, 0] = lid
            stack[top, 1] = start
            stack[top, 2] = start + nl
            stack[top, 3] = depth + 1
            top += 1

    return {
        "feature": feature_np[:n_nodes].copy(), "threshold": threshold_np[:n_nodes].copy(),
        "left": left_np[:n_nodes].copy(), "right": right_np[:n_nodes].copy(),
        "value": value_np[:n_nodes].copy(), "gain": gain_np[:n_nodes].copy(),
        "weight": nweight_np[:n_nodes].copy(), "n_samples": nsamp_np[:n_nodes].copy(),
    }


def apply_tree(feature, threshold, left, right, X):
    cdef const int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    out_np = np.zeros(Xv.shape[0], dtype=np.int64)
    cdef int64_t[::1] out = out_np
    cdef Py_ssize_t i, node
    with nogil:
        for i in range(Xv.shape[0]):
            node = 0
            while fv[node] >= 0:
                if Xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[i] = node
    return out_np


def predict_tree(feature, threshold, left, right, value, X):
    return np.asarray(value)[apply_tree(feature, threshold, left, right, X)]
