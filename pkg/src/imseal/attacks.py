"""Deterministic attack simulator: noise, filtering, luminance, JPEG and geometry.

Attack chains are parsed from compact CLI strings like
"sp:0.05;rot:90;jpeg:70" and applied left to right.  Geometric attacks use
nearest-neighbor resampling (except scaling, which is bicubic like common
resize tools) and fill vacated canvas with black; chain_with_validity tracks
which output pixels still show watermarked content so scenario harnesses can
build ground-truth masks.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter, median_filter, uniform_filter

from .raster import Raster, rgb_to_yuv, yuv_to_rgb
from .registration import Transform, warp
from .transforms import JPEG_CHROMA_Q, JPEG_LUMA_Q, jpeg_roundtrip

__all__ = ["AttackSpec", "AttackError", "apply_attack", "chain",
           "chain_with_validity", "parse_attack_chain", "format_attack",
           "attack_transform"]

_GEOMETRIC = {"rotate", "translate", "crop", "scale"}
_SIDES = ("around", "left", "right", "top", "bottom")


class AttackError(ValueError):
    """Malformed attack name or parameters."""


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _APPLIERS:
            raise AttackError(f"unknown attack {self.kind!r}")
        _VALIDATORS[self.kind](self.params)


def _need(params, n, kinds):
    if len(params) != n:
        raise AttackError(f"expected {n} parameter(s), got {params}")
    for p, k in zip(params, kinds):
        if k == "f" and not isinstance(p, (int, float)):
            raise AttackError(f"numeric parameter expected, got {p!r}")
        if k == "s" and not isinstance(p, str):
            raise AttackError(f"string parameter expected, got {p!r}")


_VALIDATORS = {
    "saltpepper": lambda p: (_need(p, 1, "f"),
                             None if 0 <= p[0] <= 1 else _bad("density", p[0])),
    "speckle": lambda p: (_need(p, 1, "f"),
                          None if p[0] >= 0 else _bad("variance", p[0])),
    "gaussian_noise": lambda p: (_need(p, 1, "f"),
                                 None if p[0] >= 0 else _bad("variance", p[0])),
    "sharpen": lambda p: (_need(p, 3, "fff"),
                          None if p[0] >= 3 and p[1] > 0 else _bad("sharpen", p)),
    "histeq": lambda p: _need(p, 0, ""),
    "gaussian_smooth": lambda p: (_need(p, 2, "ff"),
                                  None if p[0] >= 3 and p[1] > 0 else _bad("smooth", p)),
    "jpeg": lambda p: (_need(p, 1, "f"),
                       None if 1 <= p[0] <= 100 else _bad("quality", p[0])),
    "darken": lambda p: (_need(p, 1, "f"),
                         None if p[0] >= 0 else _bad("offset", p[0])),
    "lighten": lambda p: (_need(p, 1, "f"),
                          None if p[0] >= 0 else _bad("offset", p[0])),
    "rotate": lambda p: _need(p, 1, "f"),
    "translate": lambda p: _need(p, 2, "ff"),
    "crop": lambda p: _validate_crop(p),
    "scale": lambda p: (_need(p, 1, "f"),
                        None if p[0] > 0 else _bad("factor", p[0])),
    "median": lambda p: (_need(p, 1, "f"),
                         None if p[0] >= 2 else _bad("size", p[0])),
    "average": lambda p: (_need(p, 1, "f"),
                          None if p[0] >= 2 else _bad("size", p[0])),
}


def _bad(name, value):
    raise AttackError(f"invalid {name}: {value!r}")


def _validate_crop(p):
    if len(p) == 1:
        p = (p[0], "around")
    if len(p) != 2 or not isinstance(p[1], str) or p[1] not in _SIDES:
        raise AttackError(f"crop takes (amount[, side]); side one of {_SIDES}")
    amount = p[0]
    if isinstance(amount, str):
        if not amount.endswith("px"):
            raise AttackError(f"crop amount {amount!r} (use a fraction or '<n>px')")
    elif not 0 < amount < 1:
        raise AttackError(f"crop fraction {amount!r} outside (0, 1)")


# --- individual attacks; each takes (raster, params, rng) -> raster ---------

def _saltpepper(img, params, rng):
    rho = params[0]
    out = img.data.copy()
    hits = rng.random(out.shape) < rho
    salt = rng.random(out.shape) < 0.5
    out[hits & salt] = 255.0
    out[hits & ~salt] = 0.0
    return Raster(out)


def _speckle(img, params, rng):
    var = params[0]
    noise = rng.normal(0.0, math.sqrt(var), size=img.data.shape)
    return Raster(np.clip(img.data * (1.0 + noise), 0, 255))


def _gaussian_noise(img, params, rng):
    sigma = 255.0 * math.sqrt(params[0])   # variance quoted on the [0,1] scale
    noise = rng.normal(0.0, sigma, size=img.data.shape)
    return Raster(np.clip(img.data + noise, 0, 255))


def _gauss_plane(plane, size, sigma):
    radius = (int(size) - 1) // 2
    return gaussian_filter(plane, sigma, truncate=radius / sigma, mode="nearest")


def _sharpen(img, params, rng):
    size, sigma, strength = params
    out = [p + strength * (p - _gauss_plane(p, size, sigma)) for p in img.data]
    return Raster(np.clip(np.stack(out), 0, 255))


def _histeq(img, params, rng):
    out = []
    for p in img.data:
        hist, _ = np.histogram(p, bins=256, range=(0.0, 256.0))
        cdf = hist.cumsum() / p.size
        out.append(np.interp(p, np.arange(256), cdf * 255.0))
    return Raster(np.stack(out))


def _gaussian_smooth(img, params, rng):
    size, sigma = params
    return Raster(np.stack([_gauss_plane(p, size, sigma) for p in img.data]))


def _jpeg(img, params, rng):
    qf = int(params[0])
    if img.is_gray:
        return Raster(jpeg_roundtrip(img.plane(0), qf))
    yuv = rgb_to_yuv(img)
    yuv_planes = [jpeg_roundtrip(yuv.plane(0), qf)]
    for i in (1, 2):
        # chroma is zero-centered; shift for the level offset and skip clamping
        plane = jpeg_roundtrip(yuv.plane(i) + 128.0, qf, base=JPEG_CHROMA_Q,
                               clamp=False)
        yuv_planes.append(plane - 128.0)
    rgb = yuv_to_rgb(Raster(np.stack(yuv_planes)))
    return Raster(np.clip(np.round(rgb.data), 0, 255))


def _darken(img, params, rng):
    return Raster(np.clip(img.data - params[0], 0, 255))


def _lighten(img, params, rng):
    return Raster(np.clip(img.data + params[0], 0, 255))


def _rotation_transform(h, w, degrees):
    """Affine src->dst about the center with a loose output canvas."""
    th = math.radians(degrees)
    c, s = math.cos(th), math.sin(th)
    new_w = int(math.ceil(abs(w * c) + abs(h * s)))
    new_h = int(math.ceil(abs(w * s) + abs(h * c)))
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    ncx, ncy = (new_w - 1) / 2.0, (new_h - 1) / 2.0
    m = np.array([
        [c, -s, ncx - c * cx + s * cy],
        [s, c, ncy - s * cx - c * cy],
        [0, 0, 1.0],
    ])
    return Transform(m), new_h, new_w


def _rotate(img, params, rng):
    t, nh, nw = _rotation_transform(img.height, img.width, params[0])
    return warp(img, t, nh, nw, interp="nearest")


def _translate(img, params, rng):
    dx, dy = int(round(params[0])), int(round(params[1]))
    out = np.zeros_like(img.data)
    h, w = img.height, img.width
    ys = slice(max(dy, 0), min(h + dy, h))
    xs = slice(max(dx, 0), min(w + dx, w))
    ys_src = slice(max(-dy, 0), min(h - dy, h))
    xs_src = slice(max(-dx, 0), min(w - dx, w))
    out[:, ys, xs] = img.data[:, ys_src, xs_src]
    return Raster(out)


def _crop_box(h, w, params):
    amount = params[0]
    side = params[1] if len(params) > 1 else "around"
    if side == "around":
        if isinstance(amount, str):
            band_h = band_w = int(amount[:-2])
        else:
            keep = math.sqrt(1.0 - amount)
            band_h = int(round(h * (1.0 - keep) / 2.0))
            band_w = int(round(w * (1.0 - keep) / 2.0))
        return band_h, h - band_h, band_w, w - band_w
    px = int(amount[:-2]) if isinstance(amount, str) else None
    if side in ("left", "right"):
        cut = px if px is not None else int(round(w * amount))
        return (0, h, cut, w) if side == "left" else (0, h, 0, w - cut)
    cut = px if px is not None else int(round(h * amount))
    return (cut, h, 0, w) if side == "top" else (0, h - cut, 0, w)


def _crop(img, params, rng):
    r0, r1, c0, c1 = _crop_box(img.height, img.width, params)
    out = np.zeros_like(img.data)
    out[:, r0:r1, c0:c1] = img.data[:, r0:r1, c0:c1]
    return Raster(out)


def _scale(img, params, rng):
    factor = params[0]
    nh = max(int(round(img.height * factor)), 1)
    nw = max(int(round(img.width * factor)), 1)
    planes = [np.asarray(Image.fromarray(p.astype(np.float32), mode="F")
                         .resize((nw, nh), Image.BICUBIC), dtype=np.float64)
              for p in img.data]
    return Raster(np.clip(np.stack(planes), 0, 255))


def _median(img, params, rng):
    size = int(params[0])
    return Raster(np.stack([median_filter(p, size=size, mode="nearest")
                            for p in img.data]))


def _average(img, params, rng):
    size = int(params[0])
    return Raster(np.stack([uniform_filter(p, size=size, mode="nearest")
                            for p in img.data]))


_APPLIERS = {
    "saltpepper": _saltpepper,
    "speckle": _speckle,
    "gaussian_noise": _gaussian_noise,
    "sharpen": _sharpen,
    "histeq": _histeq,
    "gaussian_smooth": _gaussian_smooth,
    "jpeg": _jpeg,
    "darken": _darken,
    "lighten": _lighten,
    "rotate": _rotate,
    "translate": _translate,
    "crop": _crop,
    "scale": _scale,
    "median": _median,
    "average": _average,
}


def apply_attack(img: Raster, spec: AttackSpec) -> Raster:
    """Apply one attack; deterministic for a given spec seed."""
    rng = np.random.default_rng(spec.seed)
    return _APPLIERS[spec.kind](img, spec.params, rng)


def _mask_through(mask: np.ndarray, spec: AttackSpec) -> np.ndarray:
    """Propagate a {0,1} content-validity mask through a geometric attack."""
    if spec.kind not in _GEOMETRIC:
        return mask
    r = Raster(mask.astype(np.float64))
    if spec.kind == "scale":
        # nearest so the mask stays crisp through resizing
        factor = spec.params[0]
        nh = max(int(round(mask.shape[0] * factor)), 1)
        nw = max(int(round(mask.shape[1] * factor)), 1)
        im = Image.fromarray(mask.astype(np.uint8) * 255, mode="L")
        out = np.asarray(im.resize((nw, nh), Image.NEAREST), dtype=np.float64) / 255.0
        return (out >= 0.5).astype(np.uint8)
    out = _APPLIERS[spec.kind](r, spec.params, np.random.default_rng(0))
    return (out.plane(0) >= 0.5).astype(np.uint8)


def attack_transform(spec: AttackSpec, h: int, w: int):
    """Exact geometry of one attack: (Transform or None, new_h, new_w).

    The transform maps input coordinates to output coordinates; None means
    the attack leaves pixel positions alone.
    """
    if spec.kind == "rotate":
        t, nh, nw = _rotation_transform(h, w, spec.params[0])
        return t, nh, nw
    if spec.kind == "translate":
        dx, dy = spec.params
        m = np.array([[1, 0, float(dx)], [0, 1, float(dy)], [0, 0, 1.0]])
        return Transform(m), h, w
    if spec.kind == "scale":
        f = spec.params[0]
        nh, nw = max(int(round(h * f)), 1), max(int(round(w * f)), 1)
        # center-aligned resampling: dst = f*src + (f-1)/2
        off = (f - 1.0) / 2.0
        m = np.array([[f, 0, off], [0, f, off], [0, 0, 1.0]])
        return Transform(m), nh, nw
    return None, h, w


def chain(img: Raster, specs) -> Raster:
    """Left-to-right composition of attacks."""
    out = img
    for spec in specs:
        out = apply_attack(out, spec)
    return out


def chain_with_validity(img: Raster, specs):
    """Like chain but also returns the {0,1} mask of surviving content pixels."""
    out = img
    mask = np.ones((img.height, img.width), dtype=np.uint8)
    for spec in specs:
        out = apply_attack(out, spec)
        mask = _mask_through(mask, spec)
    return out, mask


_ALIASES = {
    "sp": "saltpepper", "saltpepper": "saltpepper",
    "speckle": "speckle",
    "gn": "gaussian_noise", "gauss": "gaussian_noise",
    "gaussian_noise": "gaussian_noise",
    "sharpen": "sharpen",
    "histeq": "histeq", "he": "histeq",
    "smooth": "gaussian_smooth", "gs": "gaussian_smooth",
    "gaussian_smooth": "gaussian_smooth",
    "jpeg": "jpeg",
    "darken": "darken", "lighten": "lighten",
    "rot": "rotate", "rotate": "rotate",
    "trans": "translate", "translate": "translate",
    "crop": "crop",
    "scale": "scale",
    "median": "median",
    "avg": "average", "average": "average", "mean": "average",
}


def _parse_value(token: str):
    token = token.strip()
    if token.endswith("px") or token in _SIDES:
        return token
    try:
        return int(token) if token.lstrip("+-").isdigit() else float(token)
    except ValueError as exc:
        raise AttackError(f"bad parameter {token!r}") from exc


def parse_attack_chain(text: str, seed: int = 0):
    """Parse 'name:p1,p2;name:p1' into AttackSpec list; seeds are derived
    per step so every stochastic stage is independently reproducible."""
    specs = []
    if not text.strip():
        return specs
    for i, part in enumerate(text.split(";")):
        part = part.strip()
        if not part:
            continue
        name, _, rest = part.partition(":")
        kind = _ALIASES.get(name.strip().lower())
        if kind is None:
            raise AttackError(f"unknown attack {name.strip()!r}")
        params = tuple(_parse_value(tok) for tok in rest.split(",") if tok.strip())
        specs.append(AttackSpec(kind=kind, params=params, seed=seed + 7919 * i))
    return specs


def format_attack(spec: AttackSpec) -> str:
    params = ",".join(str(p) for p in spec.params)
    return f"{spec.kind}:{params}" if params else spec.kind
