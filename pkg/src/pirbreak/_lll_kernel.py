"""Compiled LLL inner loop on int64 bases with float64 Gram-Schmidt.

Size reduction uses wrapping int64 arithmetic.  Intermediate values may
leave the int64 range, but the ring Z/2**64 is exact, so a reduced vector
whose true entries fit in int64 comes out right.  For q-ary bases with
``p < 2**62`` and dimension up to about 150 every size-reduced vector does
fit (its norm is at most ``p * sqrt(1 + d/4)``).  To catch the cases where
it does not, a shadow copy of the basis is kept modulo a 31-bit prime and
compared after each reduced vector; a mismatch means wrapped data and the
kernel stops with :data:`OVERFLOW`.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

OK = 0
PRECISION = 1
OVERFLOW = 2

# Inputs must stay below this magnitude.
ENTRY_LIMIT = 1 << 62
_SHADOW = 2147483647  # 2**31 - 1
_X_LIMIT = float(1 << 62)


@njit(cache=True)
def _gso_row(b, bs, c, mu, k):
    d, m = b.shape
    v = np.empty(m)
    for t in range(m):
        v[t] = float(b[k, t])
    for j in range(k):
        s = 0.0
        for t in range(m):
            s += bs[j, t] * v[t]
        mu[k, j] = s / c[j]
    w = v.copy()
    for j in range(k):
        f = mu[k, j]
        for t in range(m):
            w[t] -= f * bs[j, t]
    # second pass removes the components the first one missed
    for j in range(k):
        s = 0.0
        for t in range(m):
            s += bs[j, t] * w[t]
        f = s / c[j]
        mu[k, j] += f
        for t in range(m):
            w[t] -= f * bs[j, t]
    s = 0.0
    for t in range(m):
        bs[k, t] = w[t]
        s += w[t] * w[t]
    c[k] = s
    return s > 0.0 and np.isfinite(s)


@njit(cache=True)
def _row_intact(b, shadow, k):
    for t in range(b.shape[1]):
        if b[k, t] % _SHADOW != shadow[k, t]:
            return False
    return True


@njit(cache=True)
def _stop(b, shadow, k, status):
    # Row k is the only one that may hold unverified data.
    if _row_intact(b, shadow, k):
        return status
    return OVERFLOW


@njit(cache=True)
def lll_int64(b, delta, eta, max_passes, max_iterations):
    """Reduce ``b`` (rows are basis vectors) in place; returns a status code.

    After :data:`PRECISION` the array is still a basis of the same lattice;
    after :data:`OVERFLOW` it is not and must be discarded.
    """
    d, m = b.shape
    if d <= 1:
        return OK
    shadow = np.empty((d, m), dtype=np.int64)
    for i in range(d):
        for t in range(m):
            shadow[i, t] = b[i, t] % _SHADOW
    bs = np.zeros((d, m))
    c = np.zeros(d)
    mu = np.zeros((d, d))
    if not _gso_row(b, bs, c, mu, 0):
        return PRECISION
    k = 1
    iterations = 0
    while k < d:
        iterations += 1
        if iterations > max_iterations:
            return PRECISION
        converged = False
        for _ in range(max_passes):
            if not _gso_row(b, bs, c, mu, k):
                return _stop(b, shadow, k, PRECISION)
            worst = 0.0
            for j in range(k):
                a = abs(mu[k, j])
                if a > worst:
                    worst = a
            if worst <= eta:
                converged = True
                break
            for j in range(k - 1, -1, -1):
                xf = np.rint(mu[k, j])
                if xf == 0.0:
                    continue
                if abs(xf) >= _X_LIMIT:
                    return _stop(b, shadow, k, PRECISION)
                x = np.int64(xf)
                xs = x % _SHADOW
                for t in range(m):
                    b[k, t] -= x * b[j, t]
                    shadow[k, t] = (shadow[k, t] - xs * shadow[j, t]) % _SHADOW
                for i in range(j):
                    mu[k, i] -= xf * mu[j, i]
                mu[k, j] -= xf
        if not converged:
            return _stop(b, shadow, k, PRECISION)
        if not _row_intact(b, shadow, k):
            return OVERFLOW
        if delta * c[k - 1] > c[k] + mu[k, k - 1] * mu[k, k - 1] * c[k - 1]:
            for t in range(m):
                tmp = b[k, t]
                b[k, t] = b[k - 1, t]
                b[k - 1, t] = tmp
                tmp = shadow[k, t]
                shadow[k, t] = shadow[k - 1, t]
                shadow[k - 1, t] = tmp
            if k > 1:
                k -= 1
            else:
                if not _gso_row(b, bs, c, mu, 0):
                    return PRECISION
        else:
            k += 1
    return OK
