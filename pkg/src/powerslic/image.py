"""Image representation, sRGB to CIELAB conversion, and seeded Gaussian noise.

Images are float64 arrays. An RGB image has shape (height, width, 3) with
channels in [0, 1]; a Lab image has the same shape with channels (L*, a*, b*).
Pixel spatial coordinates are integer (column, row) pairs with the origin at
the top-left pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

# sRGB (linear) to CIE XYZ, D65 white point
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise: zero mean, given variance, fixed seed."""

    variance: float
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def validate_rgb(rgb):
    """Check shape and [0,1] channel range; returns the array unchanged."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    if rgb.size and (rgb.min() < 0.0 or rgb.max() > 1.0):
        raise ValueError("RGB channel values must lie in [0, 1]")
    return rgb


def _f_lab(t):
    out = np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0)
    return out


def rgb_to_lab(rgb):
    """Convert an sRGB image in [0,1] to CIELAB (D65 reference white).

    Applies the standard sRGB linearization, the linear-RGB to XYZ matrix,
    and the CIE 1976 L*a*b* formulas. L* lies in [0, 100].
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    srgb = np.where(
        rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4
    )
    xyz = srgb @ _RGB_TO_XYZ.T
    fxyz = _f_lab(xyz / _D65)
    lab = np.empty_like(rgb)
    lab[..., 0] = 116.0 * fxyz[..., 1] - 16.0
    lab[..., 1] = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    lab[..., 2] = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return lab


def add_gaussian_noise(rgb, spec):
    """Perturb every channel by N(0, variance) and clamp to [0, 1].

    Sampling uses a counter-based generator (Philox) and an explicit
    Box-Muller transform, so identical (image, spec) pairs give bitwise
    identical results on any platform and any thread count.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if spec.variance == 0.0:
        return rgb.copy()
    sigma = math.sqrt(spec.variance)
    n = rgb.size
    pairs = (n + 1) // 2
    raw = np.random.Philox(int(spec.seed)).random_raw(2 * pairs)
    # 53-bit uniforms; u1 in (0,1] so the log is finite, u2 in [0,1)
    u1 = ((raw[:pairs] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53
    u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    out = rgb + sigma * z.reshape(rgb.shape)
    np.clip(out, 0.0, 1.0, out=out)
    return out


def read_rgb(path):
    """Read an 8- or 16-bit RGB PNG into a float64 [0,1] array."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise IOError(f"cannot read image: {path}")
    if img.ndim == 2:
        img = np.stack([img, img, img], axis=-1)
    elif img.shape[2] == 4:
        img = img[:, :, :3]
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise IOError(f"unsupported image depth {img.dtype} in {path}")
    rgb = img[:, :, ::-1].astype(np.float64) / scale
    return rgb


def write_rgb(path, rgb):
    """Write a [0,1] RGB array as 8-bit PNG, rounding half-up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    q = np.floor(rgb * 255.0 + 0.5)
    q = np.clip(q, 0.0, 255.0).astype(np.uint8)
    bgr = np.ascontiguousarray(q[:, :, ::-1])
    if not cv2.imwrite(str(path), bgr):
        raise IOError(f"cannot write image: {path}")


def read_labels(path):
    """Read a 16-bit grayscale label PNG into an int32 map."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise IOError(f"cannot read label image: {path}")
    if img.ndim != 2:
        raise IOError(f"label image must be single-channel: {path}")
    return img.astype(np.int32)


def write_labels(path, labels):
    """Write an int32 label map as 16-bit grayscale PNG (label = pixel value)."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("labels must lie in [0, 65535] for 16-bit PNG output")
    if not cv2.imwrite(str(path), labels.astype(np.uint16)):
        raise IOError(f"cannot write label image: {path}")


def read_boundary_map(path):
    """Read a binary boundary PNG: nonzero pixels are boundary."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise IOError(f"cannot read boundary map: {path}")
    if img.ndim == 3:
        img = img.max(axis=2)
    return img > 0


def gt_paths_for(image_path, gt_dir):
    """Ground-truth annotations for image `foo.png` are `foo.gt*.png`."""
    stem = Path(image_path).stem
    return sorted(Path(gt_dir).glob(f"{stem}.gt*.png"))
