# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: error-diffusion scan and affine plane warping."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def diffuse_jarvis(cnp.float64_t[:, ::1] u, double threshold=128.0):
    """Raster-order Jarvis error diffusion; mutates a working copy, returns {0,1}."""
    cdef Py_ssize_t h = u.shape[0], w = u.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double e, y
    for i in range(h):
        for j in range(w):
            if u[i, j] >= threshold:
                y = 255.0
                out[i, j] = 1
            else:
                y = 0.0
            e = (u[i, j] - y) / 48.0
            if j + 1 < w:
                u[i, j + 1] += e * 7
            if j + 2 < w:
                u[i, j + 2] += e * 5
            if i + 1 < h:
                if j - 2 >= 0:
                    u[i + 1, j - 2] += e * 3
                if j - 1 >= 0:
                    u[i + 1, j - 1] += e * 5
                u[i + 1, j] += e * 7
                if j + 1 < w:
                    u[i + 1, j + 1] += e * 5
                if j + 2 < w:
                    u[i + 1, j + 2] += e * 3
            if i + 2 < h:
                if j - 2 >= 0:
                    u[i + 2, j - 2] += e * 1
                if j - 1 >= 0:
                    u[i + 2, j - 1] += e * 3
                u[i + 2, j] += e * 5
                if j + 1 < w:
                    u[i + 2, j + 1] += e * 3
                if j + 2 < w:
                    u[i + 2, j + 2] += e * 1
    return out_arr


def warp_affine_plane(cnp.float64_t[:, ::1] src, cnp.float64_t[:, ::1] inv,
                      Py_ssize_t out_h, Py_ssize_t out_w, bint bilinear=True):
    """Inverse-mapping warp of one plane; out-of-source samples become 0."""
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    out_arr = np.zeros((out_h, out_w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef double a00 = inv[0, 0], a01 = inv[0, 1], a02 = inv[0, 2]
    cdef double a10 = inv[1, 0], a11 = inv[1, 1], a12 = inv[1, 2]
    cdef Py_ssize_t y, x, x0, y0, xi, yi
    cdef double sx, sy, fx, fy, v00, v01, v10, v11
    for y in range(out_h):
        for x in range(out_w):
            sx = a00 * x + a01 * y + a02
            sy = a10 * x + a11 * y + a12
            if bilinear:
                x0 = <Py_ssize_t>(sx // 1.0)
                y0 = <Py_ssize_t>(sy // 1.0)
                if x0 < -1 or x0 > w - 1 or y0 < -1 or y0 > h - 1:
                    continue
                fx = sx - x0
                fy = sy - y0
                v00 = src[y0, x0] if (0 <= y0 < h and 0 <= x0 < w) else 0.0
                v01 = src[y0, x0 + 1] if (0 <= y0 < h and 0 <= x0 + 1 < w) else 0.0
                v10 = src[y0 + 1, x0] if (0 <= y0 + 1 < h and 0 <= x0 < w) else 0.0
                v11 = src[y0 + 1, x0 + 1] if (0 <= y0 + 1 < h and 0 <= x0 + 1 < w) else 0.0
                out[y, x] = ((1 - fy) * ((1 - fx) * v00 + fx * v01)
                             + fy * ((1 - fx) * v10 + fx * v11))
            else:
                xi = <Py_ssize_t>(sx + 0.5) if sx >= -0.5 else -1
                yi = <Py_ssize_t>(sy + 0.5) if sy >= -0.5 else -1
                if 0 <= yi < h and 0 <= xi < w:
                    out[y, x] = src[yi, xi]
    return out_arr
