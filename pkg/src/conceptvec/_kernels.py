"""Compiled inner loops for skip-gram negative-sampling training.

Every function here releases the GIL so several threads can update the
same parameter matrices at once without locking.
"""
import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(nogil=True, cache=True)
def learning_rate(fraction, initial_lr, min_lr):
    lr = initial_lr * (1.0 - fraction)
    if lr < min_lr:
        return min_lr
    return lr


@njit(nogil=True, cache=True)
def _next_u64(state):
    # splitmix64
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(nogil=True, cache=True)
def uniform(state):
    return float(_next_u64(state) >> _S11) * _INV53


@njit(nogil=True, cache=True)
def draw_negative(cdf, state):
    i = np.searchsorted(cdf, uniform(state), side="right")
    if i >= cdf.shape[0]:
        i = cdf.shape[0] - 1
    return i


@njit(nogil=True, cache=True)
def sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(nogil=True, cache=True, fastmath={"reassoc", "contract"})
def sgd_pair(w_in, w_out, target, context, negs, lr, grad_u, gneg):
    """One ascent step on log s(v_c.u_t) + sum_n log s(-v_n.u_t).

    All coefficients come from the pre-step parameters, so the update is
    exactly ``lr`` times the analytic gradient, summed per drawn slot.
    """
    dim = w_in.shape[1]
    k = negs.shape[0]
    u = w_in[target]
    v = w_out[context]
    dot = 0.0
    for d in range(dim):
        dot += u[d] * v[d]
    gpos = 1.0 - sigmoid(dot)
    for d in range(dim):
        grad_u[d] = gpos * v[d]
    for s in range(k):
        vn = w_out[negs[s]]
        dot = 0.0
        for d in range(dim):
            dot += u[d] * vn[d]
        g = -sigmoid(dot)
        gneg[s] = g
        for d in range(dim):
            grad_u[d] += g * vn[d]
    # output rows move only after every coefficient has been read
    a = lr * gpos
    for d in range(dim):
        v[d] += a * u[d]
    for s in range(k):
        vn = w_out[negs[s]]
        a = lr * gneg[s]
        for d in range(dim):
            vn[d] += a * u[d]
    for d in range(dim):
        u[d] += lr * grad_u[d]


@njit(nogil=True, cache=True)
def train_span(tokens, starts, ends, window, k, cdf, w_in, w_out,
               initial_lr, min_lr, done, total, state):
    """Train on documents ``tokens[starts[i]:ends[i]]``; return pairs done.

    ``done``/``total`` place this call on the global linear decay schedule.
    """
    dim = w_in.shape[1]
    grad_u = np.empty(dim, dtype=np.float64)
    gneg = np.empty(k, dtype=np.float64)
    negs = np.empty(k, dtype=np.int64)
    for doc in range(starts.shape[0]):
        a = starts[doc]
        b = ends[doc]
        for i in range(a, b):
            lo = max(a, i - window)
            hi = min(b, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                lr = learning_rate(done / total, initial_lr, min_lr)
                for s in range(k):
                    negs[s] = draw_negative(cdf, state)
                sgd_pair(w_in, w_out, tokens[i], tokens[j], negs, lr, grad_u, gneg)
                done += 1
    return done
