# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float kernels for geodesic integration.

A metric is passed in flattened form: term ``r`` contributes
``coeffs[r] * prod_d x_d**exps[r, d]`` to component ``(ci[r], cj[r])`` (and its
mirror).  Signatures match :mod:`geodefect._kernels_py`.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _ipow(double x, long k) nogil:
    cdef double r = 1.0
    while k > 0:
        if k & 1:
            r *= x
        x *= x
        k >>= 1
    return r


cdef void _jet1(int n, long[:] ci, long[:] cj, long[:, :] exps, double[:] coeffs,
                double[:] x, double[:, :] g, double[:, :, :] dg) nogil:
    cdef Py_ssize_t r, d, a, i, j
    cdef long e
    cdef double val, part
    for i in range(n):
        for j in range(n):
            g[i, j] = 0.0
            for a in range(n):
                dg[a, i, j] = 0.0
    for r in range(coeffs.shape[0]):
        i = ci[r]
        j = cj[r]
        val = coeffs[r]
        for d in range(n):
            val *= _ipow(x[d], exps[r, d])
        g[i, j] += val
        for a in range(n):
            e = exps[r, a]
            if e == 0:
                continue
            part = coeffs[r] * e
            for d in range(n):
                if d == a:
                    part *= _ipow(x[d], e - 1)
                else:
                    part *= _ipow(x[d], exps[r, d])
            dg[a, i, j] += part
    for i in range(n):
        for j in range(i + 1, n):
            g[j, i] = g[i, j]
            for a in range(n):
                dg[a, j, i] = dg[a, i, j]


cdef int _solve(int n, double[:, :] A, double[:, :] B) nogil:
    # in-place Gauss-Jordan with partial pivoting; B <- A^{-1} B
    cdef Py_ssize_t c, r, k, p
    cdef double best, f, tmp
    for c in range(n):
        p = c
        best = abs(A[c, c])
        for r in range(c + 1, n):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                p = r
        if best == 0.0:
            return -1
        if p != c:
            for k in range(n):
                tmp = A[c, k]; A[c, k] = A[p, k]; A[p, k] = tmp
            for k in range(B.shape[1]):
                tmp = B[c, k]; B[c, k] = B[p, k]; B[p, k] = tmp
        f = 1.0 / A[c, c]
        for k in range(n):
            A[c, k] *= f
        for k in range(B.shape[1]):
            B[c, k] *= f
        for r in range(n):
            if r != c and A[r, c] != 0.0:
                f = A[r, c]
                for k in range(n):
                    A[r, k] -= f * A[c, k]
                for k in range(B.shape[1]):
                    B[r, k] -= f * B[c, k]
    return 0


cdef int _accel(int n, long[:] ci, long[:] cj, long[:, :] exps, double[:] coeffs,
                double[:] x, double[:] v, double[:] out,
                double[:, :] g, double[:, :, :] dg, double[:, :] rhs) nogil:
    # out^k = -Γ^k_ij v^i v^j; solve g·out = -Γ_m(v,v)
    cdef Py_ssize_t m, i, j
    cdef double acc
    _jet1(n, ci, cj, exps, coeffs, x, g, dg)
    for m in range(n):
        acc = 0.0
        for i in range(n):
            for j in range(n):
                acc += (dg[i, j, m] + dg[j, i, m] - dg[m, i, j]) * v[i] * v[j]
        rhs[m, 0] = -0.5 * acc
    if _solve(n, g, rhs) != 0:
        return -1
    for m in range(n):
        out[m] = rhs[m, 0]
    return 0


def metric_jet1(long[:] ci, long[:] cj, long[:, :] exps, double[:] coeffs, double[:] x):
    cdef int n = x.shape[0]
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    _jet1(n, ci, cj, exps, coeffs, x, g, dg)
    return g, dg


def geodesic_accel(long[:] ci, long[:] cj, long[:, :] exps, double[:] coeffs,
                   double[:] x, double[:] v):
    cdef int n = x.shape[0]
    out = np.zeros(n)
    cdef double[:, :] g = np.zeros((n, n))
    cdef double[:, :, :] dg = np.zeros((n, n, n))
    cdef double[:, :] rhs = np.zeros((n, 1))
    if _accel(n, ci, cj, exps, coeffs, x, v, out, g, dg, rhs) != 0:
        raise ZeroDivisionError("metric singular along the path")
    return out


def rk4_integrate(long[:] ci, long[:] cj, long[:, :] exps, double[:] coeffs,
                  double[:] x0, double[:] v0, double h, int steps):
    """Classical RK4 on (x, v); returns positions, velocities, accelerations."""
    cdef int n = x0.shape[0]
    X_arr = np.zeros((steps + 1, n))
    V_arr = np.zeros((steps + 1, n))
    A_arr = np.zeros((steps + 1, n))
    cdef double[:, :] X = X_arr
    cdef double[:, :] V = V_arr
    cdef double[:, :] Acc = A_arr
    cdef double[:, :] g = np.zeros((n, n))
    cdef double[:, :, :] dg = np.zeros((n, n, n))
    cdef double[:, :] rhs = np.zeros((n, 1))
    cdef double[:] xs = np.zeros(n)
    cdef double[:] vs = np.zeros(n)
    cdef double[:] k1 = np.zeros(n)
    cdef double[:] k2 = np.zeros(n)
    cdef double[:] k3 = np.zeros(n)
    cdef double[:] k4 = np.zeros(n)
    cdef Py_ssize_t s, d
    cdef int bad = 0
    with nogil:
        for d in range(n):
            X[0, d] = x0[d]
            V[0, d] = v0[d]
        for s in range(steps):
            # k for x is v-stage; k for v is acceleration stage
            bad |= _accel(n, ci, cj, exps, coeffs, X[s], V[s], k1, g, dg, rhs)
            for d in range(n):
                Acc[s, d] = k1[d]
                xs[d] = X[s, d] + 0.5 * h * V[s, d]
                vs[d] = V[s, d] + 0.5 * h * k1[d]
            bad |= _accel(n, ci, cj, exps, coeffs, xs, vs, k2, g, dg, rhs)
            for d in range(n):
                xs[d] = X[s, d] + 0.5 * h * (V[s, d] + 0.5 * h * k1[d])
                vs[d] = V[s, d] + 0.5 * h * k2[d]
            bad |= _accel(n, ci, cj, exps, coeffs, xs, vs, k3, g, dg, rhs)
            for d in range(n):
                xs[d] = X[s, d] + h * (V[s, d] + 0.5 * h * k2[d])
                vs[d] = V[s, d] + h * k3[d]
            bad |= _accel(n, ci, cj, exps, coeffs, xs, vs, k4, g, dg, rhs)
            for d in range(n):
                X[s + 1, d] = X[s, d] + h * V[s, d] + h * h / 6.0 * (k1[d] + k2[d] + k3[d])
                V[s + 1, d] = V[s, d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])
            if bad != 0:
                break
        if bad == 0:
            bad |= _accel(n, ci, cj, exps, coeffs, X[steps], V[steps], k1, g, dg, rhs)
            for d in range(n):
                Acc[steps, d] = k1[d]
    if bad != 0:
        raise ZeroDivisionError("metric singular along the path")
    return X_arr, V_arr, A_arr
