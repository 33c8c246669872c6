# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Kalman filter kernel.

Mirrors ``_kalman_py.kalman_filter`` exactly; see that module for the
contract. The state dimension is small (trend + seasonal dummies), so the
per-step matrix products are open-coded C loops over stack-friendly
scratch arrays instead of BLAS calls.
"""

from libc.math cimport INFINITY, isfinite, log

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double LOG_2PI = 1.8378770664093453


def kalman_filter(double[:, ::1] trans, double[::1] obs_vec, double[::1] state_var,
                  double obs_var, double[::1] init_mean, double[:, ::1] init_cov,
                  double[::1] y, bint store):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t s = obs_vec.shape[0]
    cdef Py_ssize_t t, i, j, l
    cdef double f, v, loglik, ki, acc

    a_arr = np.array(init_mean, dtype=np.float64)
    p_arr = np.array(init_cov, dtype=np.float64)
    cdef double[::1] a = a_arr
    cdef double[:, ::1] p = p_arr

    scratch = np.zeros((4, s), dtype=np.float64)
    cdef double[::1] zp = scratch[0]
    cdef double[::1] k = scratch[1]
    cdef double[::1] a_new = scratch[2]
    tmp_arr = np.zeros((s, s), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    tmp2_arr = np.zeros((s, s), dtype=np.float64)
    cdef double[:, ::1] tmp2 = tmp2_arr

    means_arr = np.empty((n, s), dtype=np.float64) if store else None
    covs_arr = np.empty((n, s, s), dtype=np.float64) if store else None
    cdef double[:, ::1] means
    cdef double[:, :, ::1] covs
    if store:
        means = means_arr
        covs = covs_arr

    loglik = 0.0
    for t in range(n):
        # innovation variance f = z' P z + h and gain direction zp = P z
        f = obs_var
        for i in range(s):
            acc = 0.0
            for j in range(s):
                acc += p[i, j] * obs_vec[j]
            zp[i] = acc
            f += obs_vec[i] * acc
        if f <= 0.0 or not isfinite(f):
            return -INFINITY, means_arr, covs_arr
        v = y[t]
        for i in range(s):
            v -= obs_vec[i] * a[i]
        loglik -= 0.5 * (LOG_2PI + log(f) + v * v / f)

        # Joseph-form measurement update (stable under the diffuse prior):
        # P <- (I - K Z) P (I - K Z)' + h K K', using tmp = (I - K Z) P
        for i in range(s):
            k[i] = zp[i] / f
            a[i] += k[i] * v
        for i in range(s):
            ki = k[i]
            for j in range(s):
                acc = p[i, j]
                for l in range(s):
                    acc -= ki * obs_vec[l] * p[l, j]
                tmp[i, j] = acc
        for i in range(s):
            for j in range(s):
                acc = tmp[i, j]
                for l in range(s):
                    acc -= tmp[i, l] * obs_vec[l] * k[j]
                tmp2[i, j] = acc + obs_var * k[i] * k[j]
        for i in range(s):
            for j in range(s):
                p[i, j] = 0.5 * (tmp2[i, j] + tmp2[j, i])
        if store:
            for i in range(s):
                means[t, i] = a[i]
                for j in range(s):
                    covs[t, i, j] = p[i, j]

        # time update: a <- T a, P <- T P T' + diag(q)
        for i in range(s):
            acc = 0.0
            for j in range(s):
                acc += trans[i, j] * a[j]
            a_new[i] = acc
        for i in range(s):
            a[i] = a_new[i]
        for i in range(s):
            for j in range(s):
                acc = 0.0
                for l in range(s):
                    acc += trans[i, l] * p[l, j]
                tmp[i, j] = acc
        for i in range(s):
            for j in range(s):
                acc = 0.0
                for l in range(s):
                    acc += tmp[i, l] * trans[j, l]
                p[i, j] = acc
            p[i, i] += state_var[i]

    return loglik, means_arr, covs_arr
