# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cone kernels; same signatures as ``kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64


cdef inline double _jn(const f64[:] u, Py_ssize_t a, Py_ssize_t d) nogil:
    cdef double acc = u[a] * u[a]
    cdef Py_ssize_t k
    for k in range(1, d):
        acc -= u[a + k] * u[a + k]
    return sqrt(acc) if acc > 0.0 else 0.0


def nt_scaling(const f64[:] s, const f64[:] z, Py_ssize_t l, const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t m = s.shape[0], nq = q_dims.shape[0], i, k, a, d, wo = 0, total = 0
    for i in range(nq):
        total += q_dims[i]
    lp_w_arr = np.empty(l)
    wbar_arr = np.empty(total)
    eta_arr = np.empty(nq)
    lam_arr = np.empty(m)
    cdef f64[:] lp_w = lp_w_arr
    cdef f64[:] wbar = wbar_arr
    cdef f64[:] eta = eta_arr
    cdef f64[:] lam = lam_arr
    cdef double sn, zn, dot, gamma, w0, v0, wv
    with nogil:
        for i in range(l):
            lp_w[i] = sqrt(s[i] / z[i])
            lam[i] = sqrt(s[i] * z[i])
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            sn = _jn(s, a, d)
            zn = _jn(z, a, d)
            dot = s[a] * z[a] / (sn * zn)
            for k in range(1, d):
                dot += s[a + k] * z[a + k] / (sn * zn)
            gamma = sqrt(0.5 * (1.0 + dot))
            wbar[wo] = (s[a] / sn + z[a] / zn) / (2.0 * gamma)
            for k in range(1, d):
                wbar[wo + k] = (s[a + k] / sn - z[a + k] / zn) / (2.0 * gamma)
            eta[i] = sqrt(sn / zn)
            w0 = wbar[wo]
            v0 = z[a]
            wv = 0.0
            for k in range(1, d):
                wv += wbar[wo + k] * z[a + k]
            lam[a] = eta[i] * (w0 * v0 + wv)
            for k in range(1, d):
                lam[a + k] = eta[i] * (z[a + k] + (v0 + wv / (1.0 + w0)) * wbar[wo + k])
            wo += d
    return lp_w_arr, wbar_arr, eta_arr, lam_arr


def scale(const f64[:] v, const f64[:] lp_w, const f64[:] wbar, const f64[:] eta, Py_ssize_t l,
          const i64[:] q_starts, const i64[:] q_dims, bint inverse):
    cdef Py_ssize_t m = v.shape[0], nq = q_dims.shape[0], i, k, a, d, wo = 0
    out_arr = np.empty(m)
    cdef f64[:] out = out_arr
    cdef double w0, v0, wv, f, sg
    with nogil:
        for i in range(l):
            out[i] = v[i] / lp_w[i] if inverse else v[i] * lp_w[i]
        sg = -1.0 if inverse else 1.0
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            f = 1.0 / eta[i] if inverse else eta[i]
            w0 = wbar[wo]
            v0 = v[a]
            wv = 0.0
            for k in range(1, d):
                wv += wbar[wo + k] * v[a + k]
            out[a] = f * (w0 * v0 + sg * wv)
            for k in range(1, d):
                out[a + k] = f * (v[a + k] + (sg * v0 + wv / (1.0 + w0)) * wbar[wo + k])
            wo += d
    return out_arr


def jordan_prod(const f64[:] u, const f64[:] v, Py_ssize_t l, const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t m = u.shape[0], nq = q_dims.shape[0], i, k, a, d
    out_arr = np.empty(m)
    cdef f64[:] out = out_arr
    cdef double acc
    with nogil:
        for i in range(l):
            out[i] = u[i] * v[i]
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            acc = 0.0
            for k in range(d):
                acc += u[a + k] * v[a + k]
            out[a] = acc
            for k in range(1, d):
                out[a + k] = u[a] * v[a + k] + v[a] * u[a + k]
    return out_arr


def jordan_div(const f64[:] lam, const f64[:] dv, Py_ssize_t l, const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t m = lam.shape[0], nq = q_dims.shape[0], i, k, a, d
    out_arr = np.empty(m)
    cdef f64[:] out = out_arr
    cdef double det, x0
    with nogil:
        for i in range(l):
            out[i] = dv[i] / lam[i]
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            det = lam[a] * lam[a]
            x0 = lam[a] * dv[a]
            for k in range(1, d):
                det -= lam[a + k] * lam[a + k]
                x0 -= lam[a + k] * dv[a + k]
            x0 /= det
            out[a] = x0
            for k in range(1, d):
                out[a + k] = (dv[a + k] - x0 * lam[a + k]) / lam[a]
    return out_arr


def max_step(const f64[:] u, const f64[:] dv, Py_ssize_t l, const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t nq = q_dims.shape[0], i, k, a, d
    cdef double best = INFINITY, un, inner, rho0, factor, r, nr, gap
    with nogil:
        for i in range(l):
            if dv[i] < 0.0 and -u[i] / dv[i] < best:
                best = -u[i] / dv[i]
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            un = _jn(u, a, d)
            inner = u[a] / un * dv[a]
            for k in range(1, d):
                inner -= u[a + k] / un * dv[a + k]
            rho0 = inner / un
            factor = (inner + dv[a]) / (u[a] / un + 1.0)
            nr = 0.0
            for k in range(1, d):
                r = (dv[a + k] - factor * u[a + k] / un) / un
                nr += r * r
            gap = sqrt(nr) - rho0
            if gap > 0.0 and 1.0 / gap < best:
                best = 1.0 / gap
    return best


def min_eig(const f64[:] u, Py_ssize_t l, const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t nq = q_dims.shape[0], i, k, a, d
    cdef double best = INFINITY, nr, e
    with nogil:
        for i in range(l):
            if u[i] < best:
                best = u[i]
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            nr = 0.0
            for k in range(1, d):
                nr += u[a + k] * u[a + k]
            e = u[a] - sqrt(nr)
            if e < best:
                best = e
    return best


def w2_blocks(const f64[:] lp_w, const f64[:] wbar, const f64[:] eta, Py_ssize_t l,
              const i64[:] q_starts, const i64[:] q_dims):
    cdef Py_ssize_t nq = q_dims.shape[0], i, j, k, a, d, wo = 0, nnz = l, p = 0
    for i in range(nq):
        nnz += q_dims[i] * q_dims[i]
    rows_arr = np.empty(nnz, dtype=np.int64)
    cols_arr = np.empty(nnz, dtype=np.int64)
    vals_arr = np.empty(nnz)
    cdef i64[:] rows = rows_arr
    cdef i64[:] cols = cols_arr
    cdef f64[:] vals = vals_arr
    cdef double e2, val
    with nogil:
        for i in range(l):
            rows[p] = i
            cols[p] = i
            vals[p] = lp_w[i] * lp_w[i]
            p += 1
        for i in range(nq):
            a = q_starts[i]
            d = q_dims[i]
            e2 = eta[i] * eta[i]
            for j in range(d):
                for k in range(d):
                    val = 2.0 * wbar[wo + j] * wbar[wo + k]
                    if j == k:
                        val += -1.0 if j == 0 else 1.0
                    rows[p] = a + j
                    cols[p] = a + k
                    vals[p] = e2 * val
                    p += 1
            wo += d
    return rows_arr, cols_arr, vals_arr
