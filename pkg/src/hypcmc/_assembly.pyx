# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled assembly kernels; same contract as ``_assembly_py``."""
import numpy as np
from libc.math cimport sqrt


def element_gradients(const long[:, ::1] tri, const double[:, :, ::1] dphi,
                      const double[::1] u):
    cdef Py_ssize_t t, k, M = tri.shape[0]
    G_arr = np.zeros((M, 2))
    cdef double[:, ::1] G = G_arr
    with nogil:
        for t in range(M):
            for k in range(3):
                G[t, 0] += u[tri[t, k]] * dphi[t, k, 0]
                G[t, 1] += u[tri[t, k]] * dphi[t, k, 1]
    return G_arr


def residual(const long[:, ::1] tri, const double[::1] area,
             const double[:, :, ::1] dphi, const double[::1] u, double H):
    cdef Py_ssize_t t, k, M = tri.shape[0]
    cdef double gx, gy, W, uc, src, val
    F_arr = np.zeros(u.shape[0])
    cdef double[::1] F = F_arr
    with nogil:
        for t in range(M):
            gx = 0.0
            gy = 0.0
            uc = 0.0
            for k in range(3):
                gx = gx + u[tri[t, k]] * dphi[t, k, 0]
                gy = gy + u[tri[t, k]] * dphi[t, k, 1]
                uc = uc + u[tri[t, k]]
            uc = uc / 3.0
            W = sqrt(1.0 + gx * gx + gy * gy)
            src = area[t] / 3.0 * (2.0 / uc) * (1.0 / W - H)
            for k in range(3):
                val = area[t] * (gx * dphi[t, k, 0] + gy * dphi[t, k, 1]) / W - src
                F[tri[t, k]] += val
    return F_arr


def jacobian_values(const long[:, ::1] tri, const double[::1] area,
                    const double[:, :, ::1] dphi, const double[::1] u, double H,
                    bint principal=True, bint first=True, bint zeroth=True):
    cdef Py_ssize_t t, i, j, k, M = tri.shape[0]
    cdef double gx, gy, W, W3, uc, z, c1, val
    cdef double gd[3]
    vals_arr = np.zeros((M, 9))
    cdef double[:, ::1] vals = vals_arr
    with nogil:
        for t in range(M):
            gx = 0.0
            gy = 0.0
            uc = 0.0
            for k in range(3):
                gx = gx + u[tri[t, k]] * dphi[t, k, 0]
                gy = gy + u[tri[t, k]] * dphi[t, k, 1]
                uc = uc + u[tri[t, k]]
            uc = uc / 3.0
            W = sqrt(1.0 + gx * gx + gy * gy)
            W3 = W * W * W
            for k in range(3):
                gd[k] = gx * dphi[t, k, 0] + gy * dphi[t, k, 1]
            z = 2.0 / (9.0 * uc * uc) * (1.0 / W - H)
            c1 = 2.0 / (3.0 * uc * W3)
            for i in range(3):
                for j in range(3):
                    val = 0.0
                    if principal:
                        val = val + (dphi[t, i, 0] * dphi[t, j, 0]
                                     + dphi[t, i, 1] * dphi[t, j, 1]) / W - gd[i] * gd[j] / W3
                    if first:
                        val = val + c1 * gd[j]
                    if zeroth:
                        val = val + z
                    vals[t, 3 * i + j] = area[t] * val
    return vals_arr
