"""Jarvis error-diffusion halftoning, inverse halftoning and cat-map scrambling.

The digest sent to the receiver is the Jarvis halftone of the cover; the
receiver reconstructs a continuous-tone estimate from it for registration and
for patching tampered regions.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from . import _kernels
from .transforms import lwt_haar_forward, lwt_haar_inverse, LwtDecomposition

__all__ = [
    "JARVIS_KERNEL", "jarvis_halftone", "inverse_halftone",
    "acm_scramble", "acm_unscramble", "subpixel_shift", "reconstruction_shift",
]

# 3x5 stencil, divisor 48; entries at/before the current pixel are zero
JARVIS_KERNEL = np.array([
    [0, 0, 0, 7, 5],
    [3, 5, 7, 5, 3],
    [1, 3, 5, 3, 1],
], dtype=np.float64)


def jarvis_halftone(lum: np.ndarray, threshold: float = 128.0) -> np.ndarray:
    """Binarize a [0,255] plane by raster-scan error diffusion; returns {0,1}."""
    work = np.ascontiguousarray(lum, dtype=np.float64).copy()
    return _kernels.diffuse_jarvis(work, threshold)


def _soft(a, t):
    return np.sign(a) * np.maximum(np.abs(a) - t, 0.0)


def inverse_halftone(halftone: np.ndarray, sigma: float = 1.25,
                     shrink_gain: float = 1.5) -> np.ndarray:
    """Continuous-tone estimate from a {0,1} halftone.

    Gaussian low-pass followed by a translation-invariant one-level Haar
    soft-threshold (threshold from the robust diagonal-band noise estimate,
    cycle-spun over the four half-sample shifts).
    """
    x = np.asarray(halftone, dtype=np.float64)
    if x.max() <= 1.0:
        x = x * 255.0
    smooth = gaussian_filter(x, sigma=sigma, truncate=3.0 / sigma, mode="nearest")
    h, w = smooth.shape
    acc = np.zeros_like(smooth)
    for dy in (0, 1):
        for dx in (0, 1):
            shifted = np.roll(np.roll(smooth, -dy, axis=0), -dx, axis=1)
            dec = lwt_haar_forward(shifted)
            t = np.median(np.abs(dec.cd)) / 0.6745 * shrink_gain
            den = LwtDecomposition(dec.ca, _soft(dec.ch, t), _soft(dec.cv, t),
                                   _soft(dec.cd, t))
            rec = lwt_haar_inverse(den)
            acc += np.roll(np.roll(rec, dy, axis=0), dx, axis=1)
    return np.clip(acc / 4.0, 0.0, 255.0)


def subpixel_shift(moved: np.ndarray, reference: np.ndarray):
    """Displacement (dx, dy) of `moved` relative to `reference`.

    Windowed cross-correlation over the FFT with a parabolic peak fit;
    accurate to a small fraction of a pixel for same-content pairs.
    """
    a = np.asarray(moved, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    h, w = a.shape
    win = np.outer(np.hanning(h), np.hanning(w))
    fa = np.fft.fft2((a - a.mean()) * win)
    fb = np.fft.fft2((b - b.mean()) * win)
    corr = np.real(np.fft.ifft2(fa * np.conj(fb)))
    peak = np.unravel_index(np.argmax(corr), corr.shape)

    def refine(axis):
        idx = list(peak)
        vals = []
        for d in (-1, 0, 1):
            idx[axis] = (peak[axis] + d) % corr.shape[axis]
            vals.append(corr[tuple(idx)])
        denom = vals[0] - 2 * vals[1] + vals[2]
        frac = 0.0 if denom == 0 else 0.5 * (vals[0] - vals[2]) / denom
        pos = peak[axis] + np.clip(frac, -1, 1)
        if pos > corr.shape[axis] / 2:
            pos -= corr.shape[axis]
        return pos

    dy, dx = refine(0), refine(1)
    return float(dx), float(dy)


def reconstruction_shift(plane: np.ndarray):
    """Scan-direction content displacement one halftone/reconstruct pass adds.

    Raster-order error diffusion transports quantization error rightward and
    downward, so the reconstruction sits a fraction of a pixel off its
    source.  Re-halftoning a reconstruction repeats that displacement, which
    makes it measurable at the receiver without the original image.
    """
    again = inverse_halftone(jarvis_halftone(plane))
    return subpixel_shift(again, plane)


def _acm_indices(n):
    r, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return (r + c) % n, (r + 2 * c) % n


def acm_scramble(bits: np.ndarray, iterations: int) -> np.ndarray:
    """Arnold cat map (r,c) -> (r+c, r+2c) mod N applied `iterations` times."""
    m = np.asarray(bits)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix required, got {m.shape}")
    dst_r, dst_c = _acm_indices(m.shape[0])
    out = m
    for _ in range(iterations):
        nxt = np.empty_like(out)
        nxt[dst_r, dst_c] = out
        out = nxt
    return out.copy() if iterations == 0 else out


def acm_unscramble(bits: np.ndarray, iterations: int) -> np.ndarray:
    """Exact inverse of acm_scramble for the same iteration count."""
    m = np.asarray(bits)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix required, got {m.shape}")
    dst_r, dst_c = _acm_indices(m.shape[0])
    out = m
    for _ in range(iterations):
        out = out[dst_r, dst_c]
    return out.copy() if iterations == 0 else out
