"""Hot loops: statistics of every product named by a block of words.

A block is a 2-D integer array of words (one per row) sorted
lexicographically. Products are formed through the prefix tree of the block
with strict left-to-right association, ``P_(w,i) = P_w @ A_i``, so every tree
node costs exactly one matrix multiplication. Both backends visit the same
nodes and therefore report the same multiplication count.

Norm codes: 0 column-sum, 1 spectral, 2 row-sum.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

COLSUM, SPECTRAL, ROWSUM = 0, 1, 2


# ---------------------------------------------------------------- numba path

@njit(cache=True)
def _matmul_into(out, a, b):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            acc = 0j
            for t in range(n):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc


@njit(cache=True)
def _norm_jit(P, code):
    n = P.shape[0]
    if code == 1:
        # top eigenvalue of the Gram matrix: well conditioned and cheaper than an SVD
        lam = np.linalg.eigvalsh(P.conj().T @ P)[-1]
        return np.sqrt(max(lam, 0.0))
    best = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if code == 0:
                acc += abs(P[j, i])
            else:
                acc += abs(P[i, j])
        if acc > best:
            best = acc
    return best


@njit(cache=True)
def _word_stats_jit(stack, words, codes, mask):
    W, k = words.shape
    n = stack.shape[1]
    c = codes.shape[0]
    norms = np.zeros((W, c))
    radii = np.full(W, np.nan)
    traces = np.full(W, np.nan)
    prefix = np.empty((k, n, n), dtype=np.complex128)
    mults = 0
    for w in range(W):
        j = 0
        if w > 0:
            while j < k and words[w, j] == words[w - 1, j]:
                j += 1
        for d in range(j, k):
            if d == 0:
                prefix[0, :, :] = stack[words[w, 0]]
            else:
                _matmul_into(prefix[d], prefix[d - 1], stack[words[w, d]])
                mults += 1
        P = prefix[k - 1]
        for q in range(c):
            norms[w, q] = _norm_jit(P, codes[q])
        if mask[w]:
            ev = np.linalg.eigvals(P)
            r = 0.0
            for e in ev:
                if abs(e) > r:
                    r = abs(e)
            radii[w] = r
            tr = 0j
            for i in range(n):
                tr += P[i, i]
            traces[w] = abs(tr)
    return norms, radii, traces, mults


@njit(cache=True)
def _products_jit(stack, words):
    W, k = words.shape
    n = stack.shape[1]
    out = np.empty((W, n, n), dtype=np.complex128)
    prefix = np.empty((k, n, n), dtype=np.complex128)
    mults = 0
    for w in range(W):
        j = 0
        if w > 0:
            while j < k and words[w, j] == words[w - 1, j]:
                j += 1
        for d in range(j, k):
            if d == 0:
                prefix[0, :, :] = stack[words[w, 0]]
            else:
                _matmul_into(prefix[d], prefix[d - 1], stack[words[w, d]])
                mults += 1
        out[w, :, :] = prefix[k - 1]
    return out, mults


# ---------------------------------------------------------------- numpy path

def _products_np(stack, words):
    W, k = words.shape
    if W == 0:
        return np.empty((0,) + stack.shape[1:], dtype=np.complex128), 0
    # first position where each row differs from the previous one
    diff = np.ones((W, k), dtype=bool)
    diff[1:] = words[1:] != words[:-1]
    change = np.where(diff.any(axis=1), diff.argmax(axis=1), k)
    change[0] = 0

    new = change < 1
    node = np.cumsum(new) - 1
    level = stack[words[new, 0]]
    mults = 0
    for d in range(1, k):
        new = change <= d
        parent = node[new]
        node = np.cumsum(new) - 1
        level = level[parent] @ stack[words[new, d]]
        mults += len(parent)
    return level[node], mults


def _norms_np(P, codes):
    out = np.empty((P.shape[0], len(codes)))
    absP = None
    for q, code in enumerate(codes):
        if code == SPECTRAL:
            out[:, q] = np.linalg.svd(P, compute_uv=False)[:, 0] if len(P) else 0.0
        else:
            if absP is None:
                absP = np.abs(P)
            axis = 1 if code == COLSUM else 2
            out[:, q] = absP.sum(axis=axis).max(axis=1)
    return out


def _word_stats_np(stack, words, codes, mask):
    P, mults = _products_np(stack, words)
    norms = _norms_np(P, codes)
    radii = np.full(len(words), np.nan)
    traces = np.full(len(words), np.nan)
    if mask.any():
        sel = P[mask]
        radii[mask] = np.abs(np.linalg.eigvals(sel)).max(axis=1)
        traces[mask] = np.abs(np.trace(sel, axis1=1, axis2=2))
    return norms, radii, traces, mults


# ---------------------------------------------------------------- dispatch

def word_stats(stack, words, codes=(), mask=None, use_numba=None):
    """Norms of all products in ``words``; radius and |trace| where ``mask``.

    Returns ``(norms[W, len(codes)], radii[W], traces[W], multiplications)``;
    unmasked radii/traces are NaN.
    """
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    words = np.ascontiguousarray(words, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int64)
    if mask is None:
        mask = np.zeros(len(words), dtype=bool)
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        norms, radii, traces, mults = _word_stats_jit(stack, words, codes, mask)
        return norms, radii, traces, int(mults)
    return _word_stats_np(stack, words, codes, mask)


def products(stack, words, use_numba=None):
    """Products for each word (rows of ``words``), with the multiplication count."""
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    words = np.ascontiguousarray(words, dtype=np.int64)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        out, mults = _products_jit(stack, words)
        return out, int(mults)
    return _products_np(stack, words)


def word_block(m, k, start, stop):
    """Rows ``start..stop-1`` of the lexicographic list of all length-k words."""
    idx = np.arange(start, stop, dtype=np.int64)
    powers = m ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % m
