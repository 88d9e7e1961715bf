# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_kernels_py``; same shapes and results."""
import numpy as np
from libc.math cimport sqrt


def estimate_batch(double[:, :, ::1] dev, double tau_cap, double eps):
    cdef Py_ssize_t R = dev.shape[0], m = dev.shape[1], x = dev.shape[2]
    cdef Py_ssize_t r, i, k
    cdef double acc, b, rss, dd
    b_out = np.empty((R, m))
    t_out = np.empty((R, m))
    cdef double[:, ::1] bv = b_out
    cdef double[:, ::1] tv = t_out
    for r in range(R):
        for i in range(m):
            acc = 0.0
            for k in range(x):
                acc += dev[r, i, k]
            b = acc / x
            rss = 0.0
            for k in range(x):
                dd = dev[r, i, k] - b
                rss += dd * dd
            bv[r, i] = b
            if rss < eps:
                tv[r, i] = tau_cap
            else:
                tv[r, i] = min(tau_cap, (x - 1) / rss)
    return b_out, t_out


def score_batch(double[:, ::1] b_hat, double[:, ::1] tau_hat, double[:, :, ::1] np_reports,
                long long[:, ::1] graders, double[:, ::1] y_np, double mu, double sqrt_gamma,
                bint true_reference, double alpha):
    cdef Py_ssize_t R = np_reports.shape[0], m = np_reports.shape[1], h = np_reports.shape[2]
    cdef Py_ssize_t P = graders.shape[0], c = graders.shape[1]
    cdef Py_ssize_t r, p, q, q2, s, i
    cdef double prior_num = sqrt_gamma * mu
    cdef double num, den, rs, ref, w_all, num_q, den_q, r_loo, e
    r_out = np.empty((R, P))
    t_out = np.zeros((R, m * h))
    cdef double[:, ::1] rv = r_out
    cdef double[:, ::1] tv = t_out
    cdef double[::1] w = np.empty(c)
    cdef double[::1] wd = np.empty(c)
    for r in range(R):
        for p in range(P):
            num = prior_num
            den = sqrt_gamma
            for q in range(c):
                s = graders[p, q]
                if s < 0:
                    w[q] = 0.0
                    wd[q] = 0.0
                    continue
                i = s // h
                w[q] = sqrt(tau_hat[r, i])
                wd[q] = w[q] * (np_reports[r, i, s - i * h] - b_hat[r, i])
                num = num + wd[q]
                den = den + w[q]
            rs = num / den
            rv[r, p] = rs
            if true_reference or y_np[r, p] > rs:
                ref = y_np[r, p]
            else:
                ref = rs
            w_all = -(rs - ref) * (rs - ref)
            for q in range(c):
                s = graders[p, q]
                if s < 0:
                    continue
                num_q = prior_num
                den_q = sqrt_gamma
                for q2 in range(c):
                    if q2 != q:
                        num_q = num_q + wd[q2]
                        den_q = den_q + w[q2]
                r_loo = num_q / den_q
                e = r_loo - ref
                tv[r, s] = alpha * (w_all + e * e)
    return r_out, t_out.reshape(R, m, h)
