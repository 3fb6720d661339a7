# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels.

Mirrors `_purepy` function for function, including the branch taken by
piecewise losses at exact boundary points. Reduction order differs from
numpy's, so cross-backend agreement is tolerance-level, not bitwise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()

LOGISTIC = 0
HUBER_HINGE = 1
SMOOTHED_PERCEPTRON = 2


cdef inline double _loss(int loss_id, double h, double z) noexcept nogil:
    cdef double t
    if loss_id == 0:
        if z > 0.0:
            return log1p(exp(-z))
        return -z + log1p(exp(z))
    if loss_id == 1:
        if z > 1.0 + h:
            return 0.0
        if z < 1.0 - h:
            return 1.0 - z
        t = 1.0 + h - z
        return t * t / (4.0 * h)
    if z > h:
        return 0.0
    if z < -h:
        return -z
    t = h - z
    return t * t / (4.0 * h)


cdef inline double _dloss(int loss_id, double h, double z) noexcept nogil:
    cdef double e
    if loss_id == 0:
        if z > 0.0:
            e = exp(-z)
            return -e / (1.0 + e)
        return -1.0 / (1.0 + exp(z))
    if loss_id == 1:
        if z > 1.0 + h:
            return 0.0
        if z < 1.0 - h:
            return -1.0
        return -(1.0 + h - z) / (2.0 * h)
    if z > h:
        return 0.0
    if z < -h:
        return -1.0
    return -(h - z) / (2.0 * h)


cdef inline void _check_loss_id(int loss_id):
    if loss_id < 0 or loss_id > 2:
        raise ValueError(f"unknown loss id {loss_id}")


def loss_values(z, int loss_id, double h):
    _check_loss_id(loss_id)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _loss(loss_id, h, zv[i])
    return out_arr


def loss_derivs(z, int loss_id, double h):
    _check_loss_id(loss_id)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _dloss(loss_id, h, zv[i])
    return out_arr


def objective_value(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                    int loss_id, double h, double lam_eff, b_over_n):
    _check_loss_id(loss_id)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef const double[::1] bv = None
    if b_over_n is not None:
        bv = b_over_n
    cdef double acc = 0.0
    cdef double dot, value, reg
    cdef Py_ssize_t i, j
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += X[i, j] * w[j]
        acc += _loss(loss_id, h, y[i] * dot)
    value = acc / n
    reg = 0.0
    for j in range(d):
        reg += w[j] * w[j]
    value += 0.5 * lam_eff * reg
    if bv is not None:
        dot = 0.0
        for j in range(d):
            dot += bv[j] * w[j]
        value += dot
    return value


def objective_grad(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                   int loss_id, double h, double lam_eff, b_over_n):
    _check_loss_id(loss_id)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef const double[::1] bv = None
    if b_over_n is not None:
        bv = b_over_n
    out_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] g = out_arr
    cdef double dot, coef
    cdef Py_ssize_t i, j
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += X[i, j] * w[j]
        coef = _dloss(loss_id, h, y[i] * dot) * y[i] / n
        for j in range(d):
            g[j] += coef * X[i, j]
    for j in range(d):
        g[j] += lam_eff * w[j]
    if bv is not None:
        for j in range(d):
            g[j] += bv[j]
    return out_arr


def sgd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] w,
              const cnp.int64_t[::1] order, Py_ssize_t batch_size, double lr,
              int loss_id, double h, double lam_eff, b_over_n):
    _check_loss_id(loss_id)
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef const double[::1] bv = None
    if b_over_n is not None:
        bv = b_over_n
    cdef Py_ssize_t width = batch_size if batch_size < n else n
    cdef double[::1] g = np.empty(d, dtype=np.float64)
    cdef double[::1] coefs = np.empty(width, dtype=np.float64)
    cdef Py_ssize_t start = 0
    cdef Py_ssize_t stop, bsize, i, j, row
    cdef double dot, coef
    while start < n:
        stop = start + batch_size
        if stop > n:
            stop = n
        bsize = stop - start
        # slopes are evaluated at the batch-start weights, then applied at once
        for i in range(bsize):
            row = order[start + i]
            dot = 0.0
            for j in range(d):
                dot += X[row, j] * w[j]
            coefs[i] = _dloss(loss_id, h, y[row] * dot) * y[row] / bsize
        for j in range(d):
            g[j] = lam_eff * w[j]
        if bv is not None:
            for j in range(d):
                g[j] += bv[j]
        for i in range(bsize):
            row = order[start + i]
            coef = coefs[i]
            for j in range(d):
                g[j] += coef * X[row, j]
        for j in range(d):
            w[j] -= lr * g[j]
        start = stop
