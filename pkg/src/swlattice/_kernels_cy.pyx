# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot array kernels.

Contract and signatures match `_kernels_np`, and the per-element arithmetic is
written to match it operation for operation (reciprocal multiply instead of
division, subtraction before addition in the transposes) so the two backends
agree bitwise wherever libm does.  All loops are sequential gathers over the
output array, so results are deterministic.
"""

import numpy as np

from libc.math cimport cos, sin

ctypedef fused num_t:
    double
    double complex


cdef inline void _shape5(u, Py_ssize_t* n):
    cdef Py_ssize_t m = 1
    cdef int i
    for i in range(4):
        n[i] = u.shape[i]
    for i in range(4, u.ndim):
        m *= u.shape[i]
    n[4] = m


def forward_diff(u, int axis, double h):
    cdef Py_ssize_t n[5]
    _shape5(u, n)
    out_shape = list(u.shape)
    out_shape[axis] -= 1
    out = np.empty(out_shape, dtype=u.dtype)
    _fd_loop(u.ravel(), out.ravel(), n[0], n[1], n[2], n[3], n[4], axis, h)
    return out


def forward_diff_transpose(w, int axis, double h):
    cdef Py_ssize_t n[5]
    _shape5(w, n)
    out_shape = list(w.shape)
    out_shape[axis] += 1
    out = np.empty(out_shape, dtype=w.dtype)
    _fdt_loop(w.ravel(), out.ravel(), n[0], n[1], n[2], n[3], n[4], axis, h)
    return out


def cov_forward(a, phi, int axis, double h):
    cdef Py_ssize_t n[5]
    _shape5(phi, n)
    out = np.empty(a.shape + (2,), dtype=np.complex128)
    _cov_loop(a.ravel(), phi.ravel(), out.ravel(), n[0], n[1], n[2], n[3], axis, h)
    return out


def cov_forward_transpose(a, w, int axis, double h, out):
    cdef Py_ssize_t n[5]
    _shape5(out, n)
    _covt_loop(a.ravel(), w.ravel(), out.ravel(), n[0], n[1], n[2], n[3], axis, h)
    return out


def _fd_loop(num_t[::1] u, num_t[::1] out, Py_ssize_t n1, Py_ssize_t n2,
             Py_ssize_t n3, Py_ssize_t n4, Py_ssize_t m, int axis, double h):
    cdef Py_ssize_t o1 = n1, o2 = n2, o3 = n3, o4 = n4
    cdef Py_ssize_t step, i1, i2, i3, i4, c, src, dst = 0
    cdef double inv = 1.0 / h
    cdef Py_ssize_t s4 = m, s3 = n4 * m, s2 = n3 * n4 * m, s1 = n2 * n3 * n4 * m
    if axis == 0:
        o1 -= 1; step = s1
    elif axis == 1:
        o2 -= 1; step = s2
    elif axis == 2:
        o3 -= 1; step = s3
    else:
        o4 -= 1; step = s4
    for i1 in range(o1):
        for i2 in range(o2):
            for i3 in range(o3):
                for i4 in range(o4):
                    src = (((i1 * n2 + i2) * n3 + i3) * n4 + i4) * m
                    for c in range(m):
                        out[dst] = (u[src + step + c] - u[src + c]) * inv
                        dst += 1


def _fdt_loop(num_t[::1] w, num_t[::1] out, Py_ssize_t w1, Py_ssize_t w2,
              Py_ssize_t w3, Py_ssize_t w4, Py_ssize_t m, int axis, double h):
    # out has `axis` one longer than w; out[x] = (w[x - e] - w[x]) / h with w
    # zero extended past its ends.
    cdef Py_ssize_t n1 = w1, n2 = w2, n3 = w3, n4 = w4, wlen
    cdef Py_ssize_t i1, i2, i3, i4, c, xj, src, dst = 0, step
    cdef double inv = 1.0 / h
    cdef Py_ssize_t t4 = m, t3 = w4 * m, t2 = w3 * w4 * m, t1 = w2 * w3 * w4 * m
    cdef num_t t
    if axis == 0:
        n1 += 1; step = t1; wlen = w1
    elif axis == 1:
        n2 += 1; step = t2; wlen = w2
    elif axis == 2:
        n3 += 1; step = t3; wlen = w3
    else:
        n4 += 1; step = t4; wlen = w4
    for i1 in range(n1):
        for i2 in range(n2):
            for i3 in range(n3):
                for i4 in range(n4):
                    # flat w index of the same coordinates; only dereferenced
                    # where the guards hold
                    src = (((i1 * w2 + i2) * w3 + i3) * w4 + i4) * m
                    if axis == 0:
                        xj = i1
                    elif axis == 1:
                        xj = i2
                    elif axis == 2:
                        xj = i3
                    else:
                        xj = i4
                    for c in range(m):
                        t = 0
                        if xj >= 1:
                            t = w[src - step + c]
                        if xj <= wlen - 1:
                            t = t - w[src + c]
                        out[dst] = t * inv
                        dst += 1


def _cov_loop(double[::1] a, double complex[::1] phi, double complex[::1] out,
              Py_ssize_t n1, Py_ssize_t n2, Py_ssize_t n3, Py_ssize_t n4,
              int axis, double h):
    # a lives on the link grid (axis shortened by one), phi on the site grid
    # with two trailing complex components.
    cdef Py_ssize_t o1 = n1, o2 = n2, o3 = n3, o4 = n4
    cdef Py_ssize_t step, i1, i2, i3, i4, src, la = 0, dst = 0
    cdef double ar, inv = 1.0 / h
    cdef double complex u
    cdef Py_ssize_t s4 = 2, s3 = n4 * 2, s2 = n3 * n4 * 2, s1 = n2 * n3 * n4 * 2
    if axis == 0:
        o1 -= 1; step = s1
    elif axis == 1:
        o2 -= 1; step = s2
    elif axis == 2:
        o3 -= 1; step = s3
    else:
        o4 -= 1; step = s4
    for i1 in range(o1):
        for i2 in range(o2):
            for i3 in range(o3):
                for i4 in range(o4):
                    src = (((i1 * n2 + i2) * n3 + i3) * n4 + i4) * 2
                    ar = h * a[la]
                    u = cos(ar) + 1j * sin(ar)
                    out[dst] = (u * phi[src + step] - phi[src]) * inv
                    out[dst + 1] = (u * phi[src + step + 1] - phi[src + 1]) * inv
                    la += 1
                    dst += 2


def _covt_loop(double[::1] a, double complex[::1] w, double complex[::1] out,
               Py_ssize_t n1, Py_ssize_t n2, Py_ssize_t n3, Py_ssize_t n4,
               int axis, double h):
    # gather over sites; subtract the outgoing-link term before adding the
    # transported incoming-link term, matching the numpy update order
    cdef Py_ssize_t i1, i2, i3, i4, xj, nj, la, dst = 0
    cdef double ar, inv = 1.0 / h
    cdef double complex uc, v0, v1
    cdef Py_ssize_t a1 = n1, a2 = n2, a3 = n3, a4 = n4, stepl
    if axis == 0:
        a1 -= 1; nj = n1
    elif axis == 1:
        a2 -= 1; nj = n2
    elif axis == 2:
        a3 -= 1; nj = n3
    else:
        a4 -= 1; nj = n4
    cdef Py_ssize_t l4 = 1, l3 = a4, l2 = a3 * a4, l1 = a2 * a3 * a4
    if axis == 0:
        stepl = l1
    elif axis == 1:
        stepl = l2
    elif axis == 2:
        stepl = l3
    else:
        stepl = l4
    for i1 in range(n1):
        for i2 in range(n2):
            for i3 in range(n3):
                for i4 in range(n4):
                    # flat link index of the same coordinates, valid under guards
                    la = ((i1 * a2 + i2) * a3 + i3) * a4 + i4
                    if axis == 0:
                        xj = i1
                    elif axis == 1:
                        xj = i2
                    elif axis == 2:
                        xj = i3
                    else:
                        xj = i4
                    v0 = out[dst]
                    v1 = out[dst + 1]
                    if xj <= nj - 2:
                        v0 = v0 - w[2 * la] * inv
                        v1 = v1 - w[2 * la + 1] * inv
                    if xj >= 1:
                        ar = h * a[la - stepl]
                        uc = cos(ar) - 1j * sin(ar)
                        v0 = v0 + (uc * w[2 * (la - stepl)]) * inv
                        v1 = v1 + (uc * w[2 * (la - stepl) + 1]) * inv
                    out[dst] = v0
                    out[dst + 1] = v1
                    dst += 2
