"""Blob-feature registration used to undo geometric attacks.

Box-filter Hessian detector over an integral image, 64-float oriented
descriptors, ratio-test matching and a RANSAC affine fit.  The reference side
of the pipeline is the inverse-halftoned digest; the target is the attacked
image, and the estimated transform maps target coordinates onto the reference
canvas.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter

from . import _kernels
from .raster import Raster

__all__ = [
    "IntegralImage", "InterestPoint", "Transform", "RegistrationConfig",
    "RegistrationError", "integral", "hessian_response", "detect", "describe",
    "match_descriptors", "estimate_transform", "warp", "decompose_similarity",
]

# filter side lengths per octave; lobe = size // 3
_OCTAVE_SIZES = (
    (9, 15, 21, 27),
    (15, 27, 39, 51),
    (27, 51, 75, 99),
    (51, 99, 147, 195),
)


class RegistrationError(RuntimeError):
    """Raised when not enough reliable matches exist to fit a transform."""


@dataclass(frozen=True)
class InterestPoint:
    x: float
    y: float
    scale: float
    response: float
    sign: int
    orientation: float = 0.0


@dataclass
class Transform:
    """3x3 affine, last row (0,0,1); maps (x, y, 1) target -> reference."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("3x3 matrix required")
        if abs(np.linalg.det(m[:2, :2])) <= 1e-6:
            raise ValueError("transform is singular")
        m[2] = (0.0, 0.0, 1.0)
        self.matrix = m

    def inverse(self):
        return Transform(np.linalg.inv(self.matrix))

    def apply(self, pts):
        p = np.asarray(pts, dtype=np.float64)
        ones = np.ones((p.shape[0], 1))
        return (np.hstack([p, ones]) @ self.matrix.T)[:, :2]

    @classmethod
    def identity(cls):
        return cls(np.eye(3))


@dataclass
class RegistrationConfig:
    octaves: int = 4
    threshold: float = 4.0
    max_keypoints: int = 1500
    ratio: float = 0.7
    ransac_iters: int = 2000
    inlier_radius: float = 3.0
    sample_step: int = 1
    rng_seed: int = 20240501
    refine_rounds: int = 3


class IntegralImage:
    """(H+1)x(W+1) cumulative table with O(1) clipped rectangle sums."""

    def __init__(self, plane):
        p = np.asarray(plane, dtype=np.float64)
        self.height, self.width = p.shape
        self.table = np.zeros((self.height + 1, self.width + 1))
        np.cumsum(np.cumsum(p, axis=0), axis=1, out=self.table[1:, 1:])

    def rect(self, r0, c0, rows, cols):
        """Sum over [r0, r0+rows) x [c0, c0+cols), clipped to the image."""
        t = self.table
        r0 = np.clip(r0, 0, self.height)
        c0 = np.clip(c0, 0, self.width)
        r1 = np.clip(r0 + rows, 0, self.height)
        c1 = np.clip(c0 + cols, 0, self.width)
        return t[r1, c1] - t[r0, c1] - t[r1, c0] + t[r0, c0]


def integral(plane) -> IntegralImage:
    return IntegralImage(plane)


def hessian_response(ii: IntegralImage, size: int, rr, cc):
    """Normalized det-of-Hessian box responses at the given pixel grids."""
    lobe = size // 3
    border = size // 2
    area = float(size * size)
    dxx = (ii.rect(rr - lobe + 1, cc - border, 2 * lobe - 1, size)
           - 3.0 * ii.rect(rr - lobe + 1, cc - lobe // 2, 2 * lobe - 1, lobe))
    dyy = (ii.rect(rr - border, cc - lobe + 1, size, 2 * lobe - 1)
           - 3.0 * ii.rect(rr - lobe // 2, cc - lobe + 1, lobe, 2 * lobe - 1))
    dxy = (ii.rect(rr - lobe, cc + 1, lobe, lobe)
           + ii.rect(rr + 1, cc - lobe, lobe, lobe)
           - ii.rect(rr - lobe, cc - lobe, lobe, lobe)
           - ii.rect(rr + 1, cc + 1, lobe, lobe))
    dxx /= area
    dyy /= area
    dxy /= area
    det = dxx * dyy - (0.9 * dxy) ** 2
    return det, dxx + dyy


def _subpixel_offset(stack, lv, r, c):
    """Quadratic 3-D interpolation of a response peak; returns (dx, dy, ds)."""
    f = stack
    dx = (f[lv, r, c + 1] - f[lv, r, c - 1]) / 2.0
    dy = (f[lv, r + 1, c] - f[lv, r - 1, c]) / 2.0
    ds = (f[lv + 1, r, c] - f[lv - 1, r, c]) / 2.0
    dxx = f[lv, r, c + 1] + f[lv, r, c - 1] - 2 * f[lv, r, c]
    dyy = f[lv, r + 1, c] + f[lv, r - 1, c] - 2 * f[lv, r, c]
    dss = f[lv + 1, r, c] + f[lv - 1, r, c] - 2 * f[lv, r, c]
    dxy = (f[lv, r + 1, c + 1] - f[lv, r + 1, c - 1]
           - f[lv, r - 1, c + 1] + f[lv, r - 1, c - 1]) / 4.0
    dxs = (f[lv + 1, r, c + 1] - f[lv + 1, r, c - 1]
           - f[lv - 1, r, c + 1] + f[lv - 1, r, c - 1]) / 4.0
    dys = (f[lv + 1, r + 1, c] - f[lv + 1, r - 1, c]
           - f[lv - 1, r + 1, c] + f[lv - 1, r - 1, c]) / 4.0
    h = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
    g = np.array([dx, dy, ds])
    try:
        off = -np.linalg.solve(h, g)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(off)) or np.any(np.abs(off) > 1.0):
        return None
    return off


def detect(plane, config: RegistrationConfig | None = None):
    """Interest points as 3x3x3 maxima of the det-of-Hessian scale stack."""
    cfg = config or RegistrationConfig()
    p = np.asarray(plane, dtype=np.float64)
    if min(p.shape) < 64:
        return []
    ii = IntegralImage(p)
    points = []
    for octave in range(cfg.octaves):
        sizes = _OCTAVE_SIZES[octave]
        step = cfg.sample_step * (2 ** octave)
        if sizes[-1] >= min(p.shape):
            break
        rr = np.arange(0, p.shape[0], step)
        cc = np.arange(0, p.shape[1], step)
        rg, cg = np.meshgrid(rr, cc, indexing="ij")
        stack = np.empty((len(sizes),) + rg.shape)
        signs = np.empty_like(stack)
        inside = np.empty((len(sizes),) + rg.shape, dtype=bool)
        for i, size in enumerate(sizes):
            det, tr = hessian_response(ii, size, rg, cg)
            # where the filter hangs off the image the response is unusable
            b = size // 2 + 1
            inside[i] = ((rg >= b) & (rg < p.shape[0] - b)
                         & (cg >= b) & (cg < p.shape[1] - b))
            stack[i] = det
            signs[i] = tr
        is_max = stack == maximum_filter(stack, size=(3, 3, 3), mode="constant",
                                         cval=np.inf * -1)
        cand = np.argwhere(is_max & (stack > cfg.threshold))
        for lv, r, c in cand:
            if lv in (0, len(sizes) - 1):
                continue
            if r < 1 or c < 1 or r >= rg.shape[0] - 1 or c >= rg.shape[1] - 1:
                continue
            # the largest neighbor filter has the widest unusable border
            if not inside[lv + 1, r, c]:
                continue
            off = _subpixel_offset(stack, lv, r, c)
            if off is None:
                continue
            size_step = sizes[1] - sizes[0]
            size_here = sizes[lv] + off[2] * size_step
            points.append(InterestPoint(
                x=float(cc[c] + off[0] * step),
                y=float(rr[r] + off[1] * step),
                scale=float(1.2 * size_here / 9.0),
                response=float(stack[lv, r, c]),
                sign=1 if signs[lv, r, c] >= 0 else -1,
            ))
    points.sort(key=lambda q: -q.response)
    return points[:cfg.max_keypoints]


def _haar_xy(ii: IntegralImage, xs, ys, s):
    """Axis-aligned Haar responses of size 2s at integer sample positions."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    right = ii.rect(ys - s, xs, 2 * s, s)
    left = ii.rect(ys - s, xs - s, 2 * s, s)
    bottom = ii.rect(ys, xs - s, s, 2 * s)
    top = ii.rect(ys - s, xs - s, s, 2 * s)
    return right - left, bottom - top


_ORI_OFFS = [(i, j) for i in range(-6, 7) for j in range(-6, 7)
             if i * i + j * j <= 36]
_ORI_W = np.array([math.exp(-(i * i + j * j) / (2 * 2.5 ** 2))
                   for i, j in _ORI_OFFS])


def _orientation(ii, pt):
    s = max(int(round(pt.scale)), 1)
    xs = np.array([int(round(pt.x + i * s)) for i, _ in _ORI_OFFS])
    ys = np.array([int(round(pt.y + j * s)) for _, j in _ORI_OFFS])
    dx, dy = _haar_xy(ii, xs, ys, 2 * s)
    dx = dx * _ORI_W
    dy = dy * _ORI_W
    ang = np.arctan2(dy, dx)
    best, best_mag = 0.0, -1.0
    for start in np.arange(-math.pi, math.pi, math.pi / 18):
        end = start + math.pi / 3
        inwin = (ang >= start) & (ang < end)
        if end > math.pi:
            inwin |= ang < end - 2 * math.pi
        sx, sy = float(dx[inwin].sum()), float(dy[inwin].sum())
        mag = sx * sx + sy * sy
        if mag > best_mag:
            best_mag = mag
            best = math.atan2(sy, sx)
    return best


# 20x20 sample offsets in scale units, subregion index for each sample
_DESC_UV = np.array([(u - 9.5, v - 9.5) for v in range(20) for u in range(20)])
_DESC_SUB = np.array([(v // 5) * 4 + (u // 5) for v in range(20) for u in range(20)])
_DESC_W = np.exp(-(_DESC_UV[:, 0] ** 2 + _DESC_UV[:, 1] ** 2) / (2 * 3.3 ** 2))


def describe(plane, points, config: RegistrationConfig | None = None):
    """64-float descriptors; points too close to the border are dropped.

    Returns (descriptors, kept_points).
    """
    p = np.asarray(plane, dtype=np.float64)
    ii = IntegralImage(p)
    h, w = p.shape
    descs, kept = [], []
    for pt in points:
        s = max(int(round(pt.scale)), 1)
        margin = 14 * s
        if not (margin <= pt.x < w - margin and margin <= pt.y < h - margin):
            continue
        theta = _orientation(ii, pt)
        co, si = math.cos(theta), math.sin(theta)
        us = _DESC_UV[:, 0] * s
        vs = _DESC_UV[:, 1] * s
        xs = np.round(pt.x + co * us - si * vs).astype(np.int64)
        ys = np.round(pt.y + si * us + co * vs).astype(np.int64)
        dx, dy = _haar_xy(ii, xs, ys, s)
        dx = dx * _DESC_W
        dy = dy * _DESC_W
        rdx = co * dx + si * dy
        rdy = -si * dx + co * dy
        vec = np.zeros(64)
        for sub in range(16):
            m = _DESC_SUB == sub
            vec[sub * 4:(sub + 1) * 4] = (rdx[m].sum(), np.abs(rdx[m]).sum(),
                                          rdy[m].sum(), np.abs(rdy[m]).sum())
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            continue
        descs.append(vec / norm)
        kept.append(InterestPoint(pt.x, pt.y, pt.scale, pt.response, pt.sign,
                                  orientation=theta))
    if not descs:
        return np.zeros((0, 64)), []
    return np.array(descs), kept


def match_descriptors(d_ref, d_tgt, pts_ref, pts_tgt, ratio=0.7):
    """Nearest-neighbor matching with a ratio test and Laplacian-sign gating.

    Returns (ref_xy, tgt_xy) arrays of matched coordinates.
    """
    if len(d_ref) == 0 or len(d_tgt) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))
    sign_ref = np.array([p.sign for p in pts_ref])
    sign_tgt = np.array([p.sign for p in pts_tgt])
    d2 = (np.sum(d_tgt ** 2, axis=1)[:, None]
          + np.sum(d_ref ** 2, axis=1)[None, :]
          - 2.0 * d_tgt @ d_ref.T)
    d2[sign_tgt[:, None] != sign_ref[None, :]] = np.inf
    order = np.argsort(d2, axis=1)
    best = order[:, 0]
    second = order[:, 1] if d2.shape[1] > 1 else best
    db = d2[np.arange(len(d_tgt)), best]
    ds = d2[np.arange(len(d_tgt)), second]
    keep = (db >= 0) & np.isfinite(db) & (db < (ratio ** 2) * np.maximum(ds, 1e-12))
    ref_xy = np.array([[pts_ref[i].x, pts_ref[i].y] for i in best[keep]])
    tgt_xy = np.array([[p.x, p.y] for p, k in zip(pts_tgt, keep) if k])
    return ref_xy.reshape(-1, 2), tgt_xy.reshape(-1, 2)


def _fit_affine(tgt, ref):
    """Least-squares affine mapping tgt -> ref."""
    n = tgt.shape[0]
    a = np.hstack([tgt, np.ones((n, 1))])
    sol, *_ = np.linalg.lstsq(a, ref, rcond=None)
    m = np.eye(3)
    m[:2, :] = sol.T
    return m


def _plane_for_matching(img):
    if isinstance(img, Raster):
        if img.is_gray:
            return img.plane(0)
        d = img.data
        return 0.299 * d[0] + 0.587 * d[1] + 0.114 * d[2]
    return np.asarray(img, dtype=np.float64)


def estimate_transform(ref, target, config: RegistrationConfig | None = None) -> Transform:
    """RANSAC affine estimate mapping target coordinates to the reference frame."""
    cfg = config or RegistrationConfig()
    p_ref = _plane_for_matching(ref)
    p_tgt = _plane_for_matching(target)
    pts_r = detect(p_ref, cfg)
    pts_t = detect(p_tgt, cfg)
    d_ref, pts_r = describe(p_ref, pts_r, cfg)
    d_tgt, pts_t = describe(p_tgt, pts_t, cfg)
    ref_xy, tgt_xy = match_descriptors(d_ref, d_tgt, pts_r, pts_t, cfg.ratio)
    n = ref_xy.shape[0]
    if n < 3:
        raise RegistrationError(f"insufficient matches: {n} < 3")
    rng = np.random.default_rng(cfg.rng_seed)
    best_inliers = None
    best_count = 0
    r2 = cfg.inlier_radius ** 2
    ones = np.ones((n, 1))
    tgt_h = np.hstack([tgt_xy, ones])
    for _ in range(cfg.ransac_iters):
        idx = rng.choice(n, size=3, replace=False)
        t3, r3 = tgt_xy[idx], ref_xy[idx]
        # degenerate (near-collinear) samples give unstable fits
        area = abs((t3[1, 0] - t3[0, 0]) * (t3[2, 1] - t3[0, 1])
                   - (t3[2, 0] - t3[0, 0]) * (t3[1, 1] - t3[0, 1]))
        if area < 4.0:
            continue
        try:
            m = _fit_affine(t3, r3)
        except np.linalg.LinAlgError:
            continue
        proj = tgt_h @ m[:2].T
        err = np.sum((proj - ref_xy) ** 2, axis=1)
        inliers = err < r2
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 3:
        raise RegistrationError("no consistent transform found")
    inliers = best_inliers
    m = _fit_affine(tgt_xy[inliers], ref_xy[inliers])
    for radius in np.linspace(cfg.inlier_radius, cfg.inlier_radius / 2,
                              cfg.refine_rounds):
        proj = tgt_h @ m[:2].T
        err = np.sum((proj - ref_xy) ** 2, axis=1)
        new_inliers = err < radius ** 2
        if new_inliers.sum() < 3:
            break
        inliers = new_inliers
        m = _fit_affine(tgt_xy[inliers], ref_xy[inliers])
    # guided pass: once the frame is roughly known, every detected keypoint
    # pair that lands together spatially is a usable correspondence; the
    # larger set pins down the angle and scale far more precisely
    all_ref = np.array([[p.x, p.y] for p in pts_r])
    all_tgt = np.array([[p.x, p.y] for p in pts_t])
    all_tgt_h = np.hstack([all_tgt, np.ones((len(all_tgt), 1))])
    for gate in (4.0, 2.5, 1.5):
        proj = all_tgt_h @ m[:2].T
        d2 = (np.sum(proj ** 2, axis=1)[:, None]
              + np.sum(all_ref ** 2, axis=1)[None, :]
              - 2.0 * proj @ all_ref.T)
        nearest_ref = np.argmin(d2, axis=1)
        dist = d2[np.arange(len(proj)), nearest_ref]
        nearest_tgt = np.argmin(d2, axis=0)
        mutual = nearest_tgt[nearest_ref] == np.arange(len(proj))
        keep = mutual & (dist < gate ** 2)
        if keep.sum() < max(12, best_count):
            break
        m = _fit_affine(all_tgt[keep], all_ref[nearest_ref[keep]])
    return Transform(m)


def warp(img, t: Transform, out_h: int, out_w: int, interp: str = "bilinear"):
    """Resample img onto an (out_h, out_w) canvas through t (inverse mapping).

    `t` maps source coordinates to output coordinates; pixels that map from
    outside the source are 0.  interp is "bilinear" or "nearest".
    """
    inv = np.ascontiguousarray(t.inverse().matrix[:2], dtype=np.float64)
    bilinear = interp == "bilinear"
    if interp not in ("bilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interp!r}")

    def one(plane):
        src = np.ascontiguousarray(plane, dtype=np.float64)
        return _kernels.warp_affine_plane(src, inv, out_h, out_w, bilinear)

    if isinstance(img, Raster):
        return Raster(np.stack([one(p) for p in img.data]))
    return one(img)


def decompose_similarity(t: Transform):
    """(scale, angle_deg, tx, ty) of the closest similarity; for test oracles."""
    m = t.matrix
    a, b = m[0, 0], m[0, 1]
    c, d = m[1, 0], m[1, 1]
    scale = math.sqrt(abs(a * d - b * c))
    angle = math.degrees(math.atan2(c - b, a + d))
    return scale, angle, float(m[0, 2]), float(m[1, 2])
