"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen at import time from the ``GBHT_DISABLE_NUMBA``
environment variable (any non-empty value other than ``0`` selects numpy)
and can be switched at runtime with :func:`set_backend`. Both paths
evaluate the affine map in the same operation order, so bin assignments
agree bitwise; reductions (sums of logs) may differ in the last ulp.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
KEY_LIMIT = 2**62

_flag = os.environ.get("GBHT_DISABLE_NUMBA", "").strip()
_use_numba = NUMBA_AVAILABLE and _flag in ("", "0")


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    previous = backend()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


# ---------------------------------------------------------------------------
# numpy implementations


def _affine_np(X, M, b):
    # column-by-column accumulation: same order as the compiled loop
    acc = X[:, 0:1] * M[:, 0]
    for j in range(1, X.shape[1]):
        acc += X[:, j : j + 1] * M[:, j]
    acc += b
    return acc


def _transformed_bins_np(X, M, b):
    return np.floor(_affine_np(X, M, b)).astype(np.int64)


def _encode_bins_np(idx, lo, span, stride):
    off = idx - lo
    inside = np.all((off >= 0) & (off < span), axis=1)
    keys = np.where(inside, off @ stride, -1)
    return keys.astype(np.int64)


def _query_keys_np(X, M, b, lo, span, stride):
    return _encode_bins_np(_transformed_bins_np(X, M, b), lo, span, stride)


def _mixture_nll_np(prev, cand, alpha):
    return -np.sum(np.log((1.0 - alpha) * prev + alpha * cand))


def _search_nll_np(prev, cand, alpha, nz):
    return _mixture_nll_np(prev, cand, alpha) - nz * math.log1p(-alpha)


def _golden_section_np(prev, cand, upper, tol, nz):
    return _golden_section_impl(_search_nll_np, prev, cand, upper, tol, nz)


def _golden_section_impl(nll, prev, cand, upper, tol, nz):
    a, b = 0.0, upper
    c = b - INV_GOLDEN * (b - a)
    d = a + INV_GOLDEN * (b - a)
    gc = nll(prev, cand, c, nz)
    gd = nll(prev, cand, d, nz)
    while b - a > tol:
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - INV_GOLDEN * (b - a)
            gc = nll(prev, cand, c, nz)
        else:
            a, c, gc = c, d, gd
            d = a + INV_GOLDEN * (b - a)
            gd = nll(prev, cand, d, nz)
    mid = 0.5 * (a + b)
    best, gbest = 0.0, nll(prev, cand, 0.0, nz)
    gmid = nll(prev, cand, mid, nz)
    if gmid < gbest:
        best, gbest = mid, gmid
    gup = nll(prev, cand, upper, nz)
    if gup < gbest:
        best = upper
    return best


def _group_bins_np(X, M, b, weights):
    idx = _transformed_bins_np(X, M, b)
    return _group_idx_np(idx, weights)


def _group_idx_np(idx, weights):
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    if _box_overflows(span):
        cells, inverse = np.unique(idx, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        W = np.bincount(inverse, weights=weights, minlength=len(cells))
        return cells, inverse, W, None
    stride = _strides(span)
    keys = idx - lo
    keys = keys @ stride
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    W = np.bincount(inverse, weights=weights, minlength=len(uniq))
    return idx[first], inverse, W, (lo, span, stride, uniq)


def _box_overflows(span):
    total = 1
    for s in span:
        total *= int(s)
    return total >= KEY_LIMIT


def _strides(span):
    d = span.shape[0]
    stride = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        stride[k] = stride[k + 1] * span[k + 1]
    return stride


def _deriv_np(prev, cand, alpha, nz):
    diff = cand - prev
    mix = prev + alpha * diff
    r = diff / mix
    keep = 1.0 - alpha
    # the folded zero-candidate rows contribute -nz * log(1 - alpha)
    return nz / keep - np.sum(r), np.sum(r * r) + nz / (keep * keep)


def _newton_np(prev, cand, upper, tol, nz):
    return _newton_impl(_search_nll_np, _deriv_np, prev, cand, upper, tol, nz)


def _newton_impl(nll, deriv, prev, cand, upper, tol, nz):
    g1, _ = deriv(prev, cand, 0.0, nz)
    if not g1 < 0.0:
        return 0.0
    gu, _ = deriv(prev, cand, upper, nz)
    if gu <= 0.0:
        a = upper
    else:
        lo, hi = 0.0, upper
        a = 0.5 * upper
        for _ in range(200):
            g1, g2 = deriv(prev, cand, a, nz)
            if g1 > 0.0:
                hi = a
            else:
                lo = a
            if hi - lo <= tol:
                break
            step = g1 / g2 if g2 > 0.0 else 0.0
            nxt = a - step
            if not (lo < nxt < hi):
                nxt = 0.5 * (lo + hi)
            if abs(nxt - a) < 0.25 * tol:
                # confirm the bracket around the converged point
                left = max(lo, nxt - 0.5 * tol)
                right = min(hi, nxt + 0.5 * tol)
                if deriv(prev, cand, left, nz)[0] <= 0.0:
                    lo = left
                if deriv(prev, cand, right, nz)[0] >= 0.0:
                    hi = right
                a = nxt
                if hi - lo <= tol:
                    break
                continue
            a = nxt
        else:
            a = 0.5 * (lo + hi)
    if nll(prev, cand, a, nz) < nll(prev, cand, 0.0, nz):
        return a
    return 0.0


def _kde_kernel_sum_np(Q, S, h, chunk=2048):
    out = np.empty(Q.shape[0])
    inv = 1.0 / (2.0 * h * h)
    s2 = np.einsum("ij,ij->i", S, S)
    for start in range(0, Q.shape[0], chunk):
        q = Q[start : start + chunk]
        d2 = np.einsum("ij,ij->i", q, q)[:, None] + s2[None, :] - 2.0 * (q @ S.T)
        np.maximum(d2, 0.0, out=d2)
        out[start : start + chunk] = np.exp(-d2 * inv).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# numba implementations

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _transformed_bins_nb(X, M, b):
        n, d = X.shape
        out = np.empty((n, d), dtype=np.int64)
        for i in range(n):
            for k in range(d):
                acc = X[i, 0] * M[k, 0]
                for j in range(1, d):
                    acc += X[i, j] * M[k, j]
                acc += b[k]
                out[i, k] = np.int64(math.floor(acc))
        return out

    @njit(cache=True)
    def _encode_bins_nb(idx, lo, span, stride):
        n, d = idx.shape
        keys = np.empty(n, dtype=np.int64)
        for i in range(n):
            key = np.int64(0)
            for k in range(d):
                off = idx[i, k] - lo[k]
                if off < 0 or off >= span[k]:
                    key = -1
                    break
                key += off * stride[k]
            keys[i] = key
        return keys

    @njit(cache=True)
    def _query_keys_nb(X, M, b, lo, span, stride):
        n, d = X.shape
        keys = np.empty(n, dtype=np.int64)
        for i in range(n):
            key = np.int64(0)
            for k in range(d):
                acc = X[i, 0] * M[k, 0]
                for j in range(1, d):
                    acc += X[i, j] * M[k, j]
                acc += b[k]
                off = np.int64(math.floor(acc)) - lo[k]
                if off < 0 or off >= span[k]:
                    key = -1
                    break
                key += off * stride[k]
            keys[i] = key
        return keys

    @njit(cache=True)
    def _mixture_nll_nb(prev, cand, alpha):
        total = 0.0
        keep = 1.0 - alpha
        for i in range(prev.shape[0]):
            total -= math.log(keep * prev[i] + alpha * cand[i])
        return total

    @njit(cache=True)
    def _search_nll_nb(prev, cand, alpha, nz):
        return _mixture_nll_nb(prev, cand, alpha) - nz * math.log1p(-alpha)

    @njit(cache=True)
    def _golden_section_nb(prev, cand, upper, tol, nz):
        a, b = 0.0, upper
        c = b - INV_GOLDEN * (b - a)
        d = a + INV_GOLDEN * (b - a)
        gc = _search_nll_nb(prev, cand, c, nz)
        gd = _search_nll_nb(prev, cand, d, nz)
        while b - a > tol:
            if gc <= gd:
                b, d, gd = d, c, gc
                c = b - INV_GOLDEN * (b - a)
                gc = _search_nll_nb(prev, cand, c, nz)
            else:
                a, c, gc = c, d, gd
                d = a + INV_GOLDEN * (b - a)
                gd = _search_nll_nb(prev, cand, d, nz)
        mid = 0.5 * (a + b)
        best = 0.0
        gbest = _search_nll_nb(prev, cand, 0.0, nz)
        gmid = _search_nll_nb(prev, cand, mid, nz)
        if gmid < gbest:
            best = mid
            gbest = gmid
        gup = _search_nll_nb(prev, cand, upper, nz)
        if gup < gbest:
            best = upper
        return best


    @njit(cache=True)
    def _group_bins_nb(X, M, b, weights):
        idx = _transformed_bins_nb(X, M, b)
        n, d = idx.shape
        lo = idx[0].copy()
        hi = idx[0].copy()
        for i in range(1, n):
            for k in range(d):
                v = idx[i, k]
                if v < lo[k]:
                    lo[k] = v
                elif v > hi[k]:
                    hi[k] = v
        span = hi - lo + 1
        total = 1.0
        for k in range(d):
            total *= span[k]
        if total >= 4.0e18:
            return idx, np.empty(0, np.int64), np.empty(0), lo, span, span, np.empty(0, np.int64), False
        stride = np.ones(d, dtype=np.int64)
        for k in range(d - 2, -1, -1):
            stride[k] = stride[k + 1] * span[k + 1]
        keys = _encode_bins_nb(idx, lo, span, stride)
        # open-addressing table: slot -> distinct key, row -> slot
        size = 1
        while size < 2 * n:
            size *= 2
        mask = size - 1
        table = np.full(size, -1, dtype=np.int64)
        slot_of = np.empty(n, dtype=np.int64)
        first_of_slot = np.empty(size, dtype=np.int64)
        m = 0
        for i in range(n):
            h = (keys[i] * np.int64(-7046029254386353131)) & mask
            while table[h] != -1 and table[h] != keys[i]:
                h = (h + 1) & mask
            if table[h] == -1:
                table[h] = keys[i]
                first_of_slot[h] = i
                m += 1
            slot_of[i] = h
        uniq = np.empty(m, dtype=np.int64)
        j = 0
        for h in range(size):
            if table[h] != -1:
                uniq[j] = table[h]
                j += 1
        uniq.sort()
        rank = np.empty(size, dtype=np.int64)
        first = np.empty(m, dtype=np.int64)
        for j in range(m):
            h = (uniq[j] * np.int64(-7046029254386353131)) & mask
            while table[h] != uniq[j]:
                h = (h + 1) & mask
            rank[h] = j
            first[j] = first_of_slot[h]
        inverse = np.empty(n, dtype=np.int64)
        W = np.zeros(m)
        # accumulate in row order so sums match np.bincount
        for i in range(n):
            r = rank[slot_of[i]]
            inverse[i] = r
            W[r] += weights[i]
        cells = np.empty((m, d), dtype=np.int64)
        for j in range(m):
            cells[j] = idx[first[j]]
        return cells, inverse, W, lo, span, stride, uniq, True

    @njit(cache=True)
    def _deriv_nb(prev, cand, alpha, nz):
        keep = 1.0 - alpha
        g1 = nz / keep
        g2 = nz / (keep * keep)
        for i in range(prev.shape[0]):
            diff = cand[i] - prev[i]
            r = diff / (prev[i] + alpha * diff)
            g1 -= r
            g2 += r * r
        return g1, g2

    @njit(cache=True)
    def _newton_nb(prev, cand, upper, tol, nz):
        g1, _ = _deriv_nb(prev, cand, 0.0, nz)
        if not g1 < 0.0:
            return 0.0
        gu, _ = _deriv_nb(prev, cand, upper, nz)
        if gu <= 0.0:
            a = upper
        else:
            lo, hi = 0.0, upper
            a = 0.5 * upper
            done = False
            for _ in range(200):
                g1, g2 = _deriv_nb(prev, cand, a, nz)
                if g1 > 0.0:
                    hi = a
                else:
                    lo = a
                if hi - lo <= tol:
                    done = True
                    break
                step = g1 / g2 if g2 > 0.0 else 0.0
                nxt = a - step
                if not (lo < nxt < hi):
                    nxt = 0.5 * (lo + hi)
                if abs(nxt - a) < 0.25 * tol:
                    left = max(lo, nxt - 0.5 * tol)
                    right = min(hi, nxt + 0.5 * tol)
                    if _deriv_nb(prev, cand, left, nz)[0] <= 0.0:
                        lo = left
                    if _deriv_nb(prev, cand, right, nz)[0] >= 0.0:
                        hi = right
                    a = nxt
                    if hi - lo <= tol:
                        done = True
                        break
                    continue
                a = nxt
            if not done:
                a = 0.5 * (lo + hi)
        if _search_nll_nb(prev, cand, a, nz) < _search_nll_nb(prev, cand, 0.0, nz):
            return a
        return 0.0

    @njit(cache=True)
    def _positive_qr_nb(M):
        Q, W = np.linalg.qr(M)
        d = M.shape[0]
        for k in range(d):
            if W[k, k] < 0.0:
                for i in range(d):
                    Q[i, k] = -Q[i, k]
        if np.linalg.det(Q) < 0.0:
            for i in range(d):
                Q[i, 0] = -Q[i, 0]
        return Q

    @njit(cache=True, nogil=True)
    def _kde_kernel_sum_nb(Q, S, h):
        m, d = Q.shape
        n = S.shape[0]
        inv = 1.0 / (2.0 * h * h)
        out = np.empty(m)
        for i in range(m):
            total = 0.0
            for j in range(n):
                d2 = 0.0
                for k in range(d):
                    diff = Q[i, k] - S[j, k]
                    d2 += diff * diff
                total += math.exp(-d2 * inv)
            out[i] = total
        return out


# ---------------------------------------------------------------------------
# dispatch


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def transformed_bins(X, M, b):
    """Integer bin indices ``floor(M @ x + b)`` for every row of ``X``."""
    if _use_numba:
        return _transformed_bins_nb(_f64(X), _f64(M), _f64(b))
    return _transformed_bins_np(_f64(X), _f64(M), _f64(b))


def encode_bins(idx, lo, span, stride):
    """Mixed-radix keys of bin indices; ``-1`` for indices outside ``[lo, lo+span)``."""
    if _use_numba:
        return _encode_bins_nb(_i64(idx), _i64(lo), _i64(span), _i64(stride))
    return _encode_bins_np(_i64(idx), _i64(lo), _i64(span), _i64(stride))


def query_keys(X, M, b, lo, span, stride):
    """Fused :func:`transformed_bins` + :func:`encode_bins`."""
    args = (_f64(X), _f64(M), _f64(b), _i64(lo), _i64(span), _i64(stride))
    if _use_numba:
        return _query_keys_nb(*args)
    return _query_keys_np(*args)


def mixture_nll(prev, cand, alpha):
    """Sum of ``-log((1 - alpha) * prev + alpha * cand)``."""
    if _use_numba:
        return _mixture_nll_nb(_f64(prev), _f64(cand), float(alpha))
    return float(_mixture_nll_np(_f64(prev), _f64(cand), float(alpha)))


def _compress(prev, cand):
    """Drop rows with ``cand == 0``; each adds ``-log(1 - alpha)`` plus a constant."""
    prev, cand = _f64(prev), _f64(cand)
    active = cand != 0.0
    nz = prev.shape[0] - int(np.count_nonzero(active))
    if nz == 0:
        return prev, cand, 0.0
    return np.ascontiguousarray(prev[active]), np.ascontiguousarray(cand[active]), float(nz)


def golden_section_alpha(prev, cand, upper, tol):
    """Golden-section minimizer of :func:`mixture_nll` over ``[0, upper]``.

    Rows where ``cand`` is zero are folded into a single ``log(1 - alpha)``
    term, which makes the sparse greedy learner cheap to line-search.
    """
    prev, cand, nz = _compress(prev, cand)
    if _use_numba:
        return float(_golden_section_nb(prev, cand, float(upper), float(tol), nz))
    return float(_golden_section_np(prev, cand, float(upper), float(tol), nz))


def kde_kernel_sum(Q, S, h):
    """Per-query sum of unnormalized Gaussian kernels ``exp(-|q - s|^2 / 2h^2)``."""
    if _use_numba:
        return _kde_kernel_sum_nb(_f64(Q), _f64(S), float(h))
    return _kde_kernel_sum_np(_f64(Q), _f64(S), float(h))


def group_bins(X, M, b, weights):
    """Bin the rows of ``X`` and group them by cell.

    Returns ``(cells, inverse, cell_weights, encoding)`` where ``cells`` are the
    distinct bin vectors in lexicographic order, ``inverse`` maps rows to
    cells, ``cell_weights`` sums ``weights`` per cell (in row order), and
    ``encoding`` is ``(lo, span, stride, keys)`` or ``None`` when the cells'
    bounding box is too large for int64 keys.
    """
    X, M, b, w = _f64(X), _f64(M), _f64(b), _f64(weights)
    if _use_numba:
        cells, inverse, W, lo, span, stride, keys, ok = _group_bins_nb(X, M, b, w)
        if ok:
            return cells, inverse, W, (lo, span, stride, keys)
        return _group_idx_np(cells, w)
    return _group_bins_np(X, M, b, w)


def newton_alpha(prev, cand, upper, tol):
    """Safeguarded Newton/bisection on the derivative of :func:`mixture_nll`."""
    prev, cand, nz = _compress(prev, cand)
    if _use_numba:
        return float(_newton_nb(prev, cand, float(upper), float(tol), nz))
    return float(_newton_np(prev, cand, float(upper), float(tol), nz))


def positive_qr(M):
    """Orthogonal QR factor with positive triangular diagonal, reflected to det +1."""
    M = _f64(M)
    if _use_numba:
        return _positive_qr_nb(M)
    Q, W = np.linalg.qr(M)
    signs = np.where(np.diag(W) < 0.0, -1.0, 1.0)
    Q = Q * signs
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
