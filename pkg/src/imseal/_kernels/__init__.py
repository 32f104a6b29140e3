"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set IMSEAL_NO_NATIVE=1 to force the fallback (used by the benchmark and tests).
"""

import os

from . import fallback

if os.environ.get("IMSEAL_NO_NATIVE"):
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

diffuse_jarvis = _impl.diffuse_jarvis
warp_affine_plane = _impl.warp_affine_plane

__all__ = ["BACKEND", "diffuse_jarvis", "warp_affine_plane", "fallback"]
