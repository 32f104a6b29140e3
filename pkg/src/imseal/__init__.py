"""Semi-fragile image watermarking with tamper localization and recovery.

Embedding hides one key-derived bit per 4x4 block by correlating the DC
coefficients of 2x2 DCTs over the diagonal wavelet detail band; a halftone
digest travels alongside the image.  The receiver re-registers geometry
against the digest, extracts the bits with a small trained classifier,
XORs against the regenerated watermark to localize tampering, and patches
flagged regions from the digest.
"""

from ._kernels import BACKEND as kernel_backend
from .attacks import AttackSpec, apply_attack, chain, parse_attack_chain
from .authenticator import (AuthenticateConfig, AuthenticationResult,
                            authenticate, block_truth, detect_tamper, expand,
                            postprocess, recover, score)
from .embedder import (EmbedResult, ThresholdParams, WatermarkKey, embed,
                       generate_watermark)
from .halftone import acm_scramble, acm_unscramble, inverse_halftone, jarvis_halftone
from .metrics import ber, mse, nc, nc_normalized, psnr, ssim
from .raster import Raster, load_image, save_image
from .registration import (RegistrationConfig, Transform, estimate_transform,
                           warp)

__version__ = "0.1.0"

__all__ = [
    "AttackSpec", "AuthenticateConfig", "AuthenticationResult", "EmbedResult",
    "Raster", "RegistrationConfig", "ThresholdParams", "Transform",
    "WatermarkKey", "acm_scramble", "acm_unscramble", "apply_attack",
    "authenticate", "ber", "block_truth", "chain", "detect_tamper", "embed",
    "estimate_transform", "expand", "generate_watermark", "inverse_halftone",
    "jarvis_halftone", "kernel_backend", "load_image", "mse", "nc",
    "nc_normalized", "parse_attack_chain", "postprocess", "psnr", "recover",
    "save_image", "score", "ssim", "warp",
]
