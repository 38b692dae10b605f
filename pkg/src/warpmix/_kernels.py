"""Compiled inner loops for the sampler's hot path."""

import numpy as np
from numba import njit


@njit(cache=True)
def local_basis(U, t, p, n_basis, lo, hi):
    """Nonzero cubic B-spline values per point, clamping into [lo, hi].

    Returns (first, vals, n_clamped). Only ``p == 3`` is supported.
    """
    m = t.shape[0]
    first = np.empty(m, dtype=np.int64)
    vals = np.empty((m, 4))
    n_clamped = 0
    top = n_basis - 1
    for k in range(m):
        x = t[k]
        if x < lo:
            x = lo
            n_clamped += 1
        elif x > hi:
            x = hi
            n_clamped += 1
        # last span with U[span] <= x, right-closed at hi
        if x >= U[top]:
            s = top
        else:
            a = 3
            b = top
            while b - a > 1:
                mid = (a + b) // 2
                if U[mid] <= x:
                    a = mid
                else:
                    b = mid
            s = a
        l1 = x - U[s]
        l2 = x - U[s - 1]
        l3 = x - U[s - 2]
        r1 = U[s + 1] - x
        r2 = U[s + 2] - x
        r3 = U[s + 3] - x
        # degree 1
        tmp = 1.0 / (r1 + l1)
        n0 = r1 * tmp
        n1 = l1 * tmp
        # degree 2
        tmp = n0 / (r1 + l2)
        n0 = r1 * tmp
        sv = l2 * tmp
        tmp = n1 / (r2 + l1)
        n1 = sv + r2 * tmp
        n2 = l1 * tmp
        # degree 3
        tmp = n0 / (r1 + l3)
        n0 = r1 * tmp
        sv = l3 * tmp
        tmp = n1 / (r2 + l2)
        n1 = sv + r2 * tmp
        sv = l2 * tmp
        tmp = n2 / (r3 + l1)
        n2 = sv + r3 * tmp
        n3 = l1 * tmp
        vals[k, 0] = n0
        vals[k, 1] = n1
        vals[k, 2] = n2
        vals[k, 3] = n3
        first[k] = s - 3
    return first, vals, n_clamped


@njit(cache=True)
def spline_eval(first, vals, coef):
    m = first.shape[0]
    q = vals.shape[1]
    out = np.empty(m)
    for k in range(m):
        acc = 0.0
        f = first[k]
        for j in range(q):
            acc += vals[k, j] * coef[f + j]
        out[k] = acc
    return out


@njit(cache=True)
def warp_eval(Bw, phi, s):
    m = Bw.shape[0]
    q = Bw.shape[1]
    out = np.empty(m)
    for k in range(m):
        acc = 0.0
        i = s[k]
        for j in range(q):
            acc += Bw[k, j] * phi[i, j]
        out[k] = acc
    return out


@njit(cache=True)
def weighted_gram(first1, vals1, first2, vals2, w1, w2, r, K):
    """W'W and W'r for W = [w1 * B(h1), w2 * B(h2)] without forming W."""
    m = first1.shape[0]
    q = vals1.shape[1]
    G = np.zeros((2 * K, 2 * K))
    b = np.zeros(2 * K)
    row_idx = np.empty(2 * q, dtype=np.int64)
    row_val = np.empty(2 * q)
    for k in range(m):
        for j in range(q):
            row_idx[j] = first1[k] + j
            row_val[j] = w1[k] * vals1[k, j]
            row_idx[q + j] = K + first2[k] + j
            row_val[q + j] = w2[k] * vals2[k, j]
        for a in range(2 * q):
            ia = row_idx[a]
            va = row_val[a]
            b[ia] += va * r[k]
            for c in range(2 * q):
                G[ia, row_idx[c]] += va * row_val[c]
    return G, b


@njit(cache=True)
def group_sum(s, x, n):
    out = np.zeros(n)
    for k in range(s.shape[0]):
        out[s[k]] += x[k]
    return out


@njit(cache=True)
def group_sse(s, r, n):
    out = np.zeros(n)
    for k in range(s.shape[0]):
        out[s[k]] += r[k] * r[k]
    return out
