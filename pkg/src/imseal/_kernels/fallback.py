"""Numpy fallbacks for the compiled kernels; same contracts, slower scans."""

import numpy as np

_JARVIS_TAPS = (
    (0, 1, 7.0), (0, 2, 5.0),
    (1, -2, 3.0), (1, -1, 5.0), (1, 0, 7.0), (1, 1, 5.0), (1, 2, 3.0),
    (2, -2, 1.0), (2, -1, 3.0), (2, 0, 5.0), (2, 1, 3.0), (2, 2, 1.0),
)


def diffuse_jarvis(u, threshold=128.0):
    u = np.asarray(u, dtype=np.float64)
    h, w = u.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for i in range(h):
        row = u[i]
        for j in range(w):
            v = row[j]
            if v >= threshold:
                out[i, j] = 1
                e = (v - 255.0) / 48.0
            else:
                e = v / 48.0
            for di, dj, wt in _JARVIS_TAPS:
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w:
                    u[ii, jj] += e * wt
    return out


def warp_affine_plane(src, inv, out_h, out_w, bilinear=True):
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    xs, ys = np.meshgrid(np.arange(out_w), np.arange(out_h))
    sx = inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]
    sy = inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]
    out = np.zeros((out_h, out_w), dtype=np.float64)
    if bilinear:
        x0 = np.floor(sx).astype(np.int64)
        y0 = np.floor(sy).astype(np.int64)
        fx = sx - x0
        fy = sy - y0

        def sample(yy, xx):
            ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            return np.where(ok, src[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)], 0.0)

        v00 = sample(y0, x0)
        v01 = sample(y0, x0 + 1)
        v10 = sample(y0 + 1, x0)
        v11 = sample(y0 + 1, x0 + 1)
        out = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11)
    else:
        xi = np.round(sx).astype(np.int64)
        yi = np.round(sy).astype(np.int64)
        ok = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        out[ok] = src[yi[ok], xi[ok]]
    return out
