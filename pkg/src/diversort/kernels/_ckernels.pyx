# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def solve_dense(cost):
    cdef double[:, ::1] a = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("solve_dense expects a square matrix")
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef double[::1] minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    cols = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] out = cols
    for j in range(1, n + 1):
        out[p[j] - 1] = j - 1
    return cols


def iou_matrix(a, b):
    cdef double[:, ::1] A = np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1, 4))
    cdef double[:, ::1] B = np.ascontiguousarray(np.asarray(b, dtype=np.float64).reshape(-1, 4))
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], i, j
    result = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = result
    cdef double iw, ih, inter, area_a
    for i in range(n):
        area_a = A[i, 2] * A[i, 3]
        for j in range(m):
            iw = min(A[i, 0] + A[i, 2], B[j, 0] + B[j, 2]) - max(A[i, 0], B[j, 0])
            ih = min(A[i, 1] + A[i, 3], B[j, 1] + B[j, 3]) - max(A[i, 1], B[j, 1])
            if iw <= 0 or ih <= 0:
                out[i, j] = 0.0
            else:
                inter = iw * ih
                out[i, j] = min(inter / (area_a + B[j, 2] * B[j, 3] - inter), 1.0)
    return result
