"""Lifting wavelet transform, small block DCTs and a JPEG quantization round trip.

The one-level Haar lifting here is the plain predict/update ladder
(d = odd - even, a = even + d/2) without the sqrt(2) normalization step, so
the approximation band stays in gray-level units and the diagonal band holds
double differences.  The embedding thresholds are calibrated against this
scaling.
"""

import numpy as np

__all__ = [
    "LwtDecomposition", "lwt_haar_forward", "lwt_haar_inverse",
    "dct2", "idct2", "jpeg_roundtrip", "block_dct2", "block_idct2",
    "JPEG_LUMA_Q", "JPEG_CHROMA_Q", "jpeg_quant_table",
]

JPEG_LUMA_Q = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

JPEG_CHROMA_Q = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)


def _dct_matrix(n):
    k = np.arange(n)
    c = np.cos(np.pi * (2 * k[None, :] + 1) * k[:, None] / (2 * n))
    c[0] *= np.sqrt(1.0 / n)
    c[1:] *= np.sqrt(2.0 / n)
    return c

_DCT = {2: _dct_matrix(2), 8: _dct_matrix(8)}


class LwtDecomposition:
    """One-level decomposition: four (H/2)x(W/2) sub-bands CA, CH, CV, CD."""

    __slots__ = ("ca", "ch", "cv", "cd")

    def __init__(self, ca, ch, cv, cd):
        shapes = {np.shape(b) for b in (ca, ch, cv, cd)}
        if len(shapes) != 1:
            raise ValueError(f"sub-band shapes differ: {shapes}")
        self.ca, self.ch, self.cv, self.cd = (
            np.asarray(b, dtype=np.float64) for b in (ca, ch, cv, cd))


def lwt_haar_forward(lum: np.ndarray) -> LwtDecomposition:
    """Split/predict/update Haar lifting, rows then columns."""
    x = np.asarray(lum, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError(f"even 2-D input required, got shape {x.shape}")
    # rows: a = (even+odd)/2, d = odd - even
    d = x[:, 1::2] - x[:, 0::2]
    a = x[:, 0::2] + d / 2.0
    # columns of each
    ch = a[1::2] - a[0::2]
    ca = a[0::2] + ch / 2.0
    cd = d[1::2] - d[0::2]
    cv = d[0::2] + cd / 2.0
    return LwtDecomposition(ca, ch, cv, cd)


def lwt_haar_inverse(dec: LwtDecomposition) -> np.ndarray:
    """Exact inverse of lwt_haar_forward."""
    ca, ch, cv, cd = dec.ca, dec.ch, dec.cv, dec.cd
    hh, ww = ca.shape
    a = np.empty((hh * 2, ww))
    a[0::2] = ca - ch / 2.0
    a[1::2] = ch + a[0::2]
    d = np.empty((hh * 2, ww))
    d[0::2] = cv - cd / 2.0
    d[1::2] = cd + d[0::2]
    x = np.empty((hh * 2, ww * 2))
    x[:, 0::2] = a - d / 2.0
    x[:, 1::2] = d + x[:, 0::2]
    return x


def dct2(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a 2x2 or 8x8 block."""
    block = np.asarray(block, dtype=np.float64)
    n = block.shape[0]
    if block.shape != (n, n) or n not in _DCT:
        raise ValueError(f"square block of size 2 or 8 required, got {block.shape}")
    c = _DCT[n]
    return c @ block @ c.T


def idct2(coef: np.ndarray) -> np.ndarray:
    coef = np.asarray(coef, dtype=np.float64)
    n = coef.shape[0]
    if coef.shape != (n, n) or n not in _DCT:
        raise ValueError(f"square block of size 2 or 8 required, got {coef.shape}")
    c = _DCT[n]
    return c.T @ coef @ c


def block_dct2(m: np.ndarray, n: int) -> np.ndarray:
    """Non-overlapping nxn forward DCT over a 2-D matrix; returns (H/n, W/n, n, n)."""
    m = np.asarray(m, dtype=np.float64)
    h, w = m.shape
    blocks = m.reshape(h // n, n, w // n, n).transpose(0, 2, 1, 3)
    c = _DCT[n]
    return np.einsum("ij,abjk,lk->abil", c, blocks, c)


def block_idct2(coefs: np.ndarray) -> np.ndarray:
    """Inverse of block_dct2; coefs shaped (bh, bw, n, n) back to (bh*n, bw*n)."""
    bh, bw, n, _ = coefs.shape
    c = _DCT[n]
    blocks = np.einsum("ji,abjk,kl->abil", c, coefs, c)
    return blocks.transpose(0, 2, 1, 3).reshape(bh * n, bw * n)


def jpeg_quant_table(qf: int, base: np.ndarray) -> np.ndarray:
    """Scale a base quantization table by the conventional quality-factor rule."""
    if not 1 <= qf <= 100:
        raise ValueError(f"quality factor {qf} outside 1..100")
    scale = 5000.0 / qf if qf < 50 else 200.0 - 2.0 * qf
    return np.clip(np.round(base * scale / 100.0), 1, 255)


def jpeg_roundtrip(lum: np.ndarray, qf: int, base: np.ndarray | None = None,
                   clamp: bool = True) -> np.ndarray:
    """Compress/decompress one plane: 8x8 DCT, quantize, dequantize, inverse.

    Entropy coding is lossless and therefore omitted.  clamp=False leaves
    out-of-range samples alone (used for zero-centered chroma planes).
    """
    x = np.asarray(lum, dtype=np.float64)
    if x.shape[0] % 8 or x.shape[1] % 8:
        raise ValueError(f"dims must be multiples of 8, got {x.shape}")
    q = jpeg_quant_table(qf, JPEG_LUMA_Q if base is None else base)
    coef = block_dct2(x - 128.0, 8)
    coef = np.round(coef / q) * q
    out = block_idct2(coef) + 128.0
    return np.clip(out, 0.0, 255.0) if clamp else out
