"""Quality and robustness metrics: MSE, PSNR, SSIM, NC, BER, TPR/FPR."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve, uniform_filter

__all__ = [
    "PSNR_INF", "SsimParams", "mse", "psnr", "ssim", "nc", "nc_normalized",
    "ber", "tpr_fpr",
]

PSNR_INF = float("inf")


def _planes(x):
    a = np.asarray(x, dtype=np.float64)
    return a[None] if a.ndim == 2 else a


def _check_same_shape(x, y):
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")


def mse(x, y) -> float:
    """Mean squared error; multi-channel inputs average over channels."""
    a, b = _planes(x), _planes(y)
    _check_same_shape(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(x, y, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf."""
    m = mse(x, y)
    if m == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / m)


@dataclass
class SsimParams:
    """Stabilizers and window for SSIM; c3 is tied to c2/2."""

    c1: float = (0.01 * 255.0) ** 2
    c2: float = (0.03 * 255.0) ** 2
    window_size: int = 11
    window_sigma: float = 1.5

    @property
    def c3(self):
        return self.c2 / 2.0

    def window(self):
        half = self.window_size // 2
        g = np.arange(-half, half + 1, dtype=np.float64)
        k = np.exp(-(g ** 2) / (2 * self.window_sigma ** 2))
        k2 = np.outer(k, k)
        return k2 / k2.sum()


def _to_gray(x):
    a = _planes(x)
    if a.shape[0] == 1:
        return a[0]
    return 0.299 * a[0] + 0.587 * a[1] + 0.114 * a[2]


def ssim(x, y, params: SsimParams | None = None, downsample: bool = False) -> float:
    """Mean of the windowed luminance*contrast*structure product.

    downsample=True applies the classic automatic f = round(min(H,W)/256)
    box-filter decimation before scoring, the convention behind most
    published watermarking SSIM figures for 512x512 covers.
    """
    p = params or SsimParams()
    a, b = _to_gray(x), _to_gray(y)
    _check_same_shape(a, b)
    if downsample:
        f = max(1, round(min(a.shape) / 256))
        if f > 1:
            a = uniform_filter(a, size=f, mode="nearest")[::f, ::f]
            b = uniform_filter(b, size=f, mode="nearest")[::f, ::f]
    win = p.window()

    def f(img):
        return convolve(img, win, mode="nearest")

    mu_x, mu_y = f(a), f(b)
    sxx = f(a * a) - mu_x * mu_x
    syy = f(b * b) - mu_y * mu_y
    sxy = f(a * b) - mu_x * mu_y
    sxx, syy = np.maximum(sxx, 0.0), np.maximum(syy, 0.0)
    sx, sy = np.sqrt(sxx), np.sqrt(syy)
    lum = (2 * mu_x * mu_y + p.c1) / (mu_x ** 2 + mu_y ** 2 + p.c1)
    con = (2 * sx * sy + p.c2) / (sxx + syy + p.c2)
    stru = (sxy + p.c3) / (sx * sy + p.c3)
    return float(np.mean(lum * con * stru))


def _check_bits(w, wp):
    a = np.asarray(w)
    b = np.asarray(wp)
    _check_same_shape(a, b)
    return a.astype(np.float64), b.astype(np.float64)


def nc(w, w_prime) -> float:
    """Literal normalized correlation: sum(w*w') / (h*w).

    Saturates at the density of 1-bits, so BER is the primary headline
    robustness number in reports; see nc_normalized for the cross-correlation
    variant.
    """
    a, b = _check_bits(w, w_prime)
    return float(np.sum(a * b) / a.size)


def nc_normalized(w, w_prime) -> float:
    """Cross-correlation variant: sum(w*w') / sqrt(sum(w^2) * sum(w'^2))."""
    a, b = _check_bits(w, w_prime)
    denom = math.sqrt(float(np.sum(a * a)) * float(np.sum(b * b)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(a * b) / denom)


def ber(w, w_prime) -> float:
    """Bit error rate: fraction of disagreeing cells."""
    a, b = _check_bits(w, w_prime)
    return float(np.sum(a != b) / a.size)


def tpr_fpr(map_bits, truth_bits):
    """Block-level detection rates in percent; TPR is None for an all-zero truth."""
    m, t = _check_bits(map_bits, truth_bits)
    tp = float(np.sum((m == 1) & (t == 1)))
    fn = float(np.sum((m == 0) & (t == 1)))
    fp = float(np.sum((m == 1) & (t == 0)))
    tn = float(np.sum((m == 0) & (t == 0)))
    tpr = None if (tp + fn) == 0 else 100.0 * tp / (tp + fn)
    fpr = None if (fp + tn) == 0 else 100.0 * fp / (fp + tn)
    return tpr, fpr
