"""Stochastic image augmentation: resized crop, flip, color jitter, grayscale.

All operations take and return (H, W, 3) float images in [0, 1] and draw
randomness only from an explicit generator, so a saved generator state
reproduces an augmented batch exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .numerics import luminance

_CROP_ATTEMPTS = 10


@dataclass
class AugmentPolicy:
    crop_area_range: tuple = (0.2, 1.0)
    crop_aspect_range: tuple = (0.75, 4.0 / 3.0)
    flip_prob: float = 0.5
    grayscale_prob: float = 0.2
    jitter_strength: float = 0.4
    flip_enabled: bool = True

    def __post_init__(self):
        for name in ("flip_prob", "grayscale_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        for name in ("crop_area_range", "crop_aspect_range"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi:
                raise ParameterError(f"{name} must be ordered and positive, got ({lo}, {hi})")
        if self.jitter_strength < 0:
            raise ParameterError(f"jitter_strength must be >= 0, got {self.jitter_strength}")

    @classmethod
    def identity(cls) -> "AugmentPolicy":
        """Policy under which augment() is the identity (within bilinear rounding)."""
        return cls(
            crop_area_range=(1.0, 1.0),
            crop_aspect_range=(1.0, 1.0),
            flip_prob=0.0,
            grayscale_prob=0.0,
            jitter_strength=0.0,
            flip_enabled=False,
        )


def _check_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParameterError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    return arr


def horizontal_flip(img: np.ndarray) -> np.ndarray:
    """Reverse column order."""
    return np.asarray(img, dtype=np.float64)[:, ::-1].copy()


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Replace every channel with the luma value (stays 3-channel)."""
    arr = _check_image(img)
    gray = luminance(arr)
    return np.repeat(gray[:, :, None], 3, axis=2)


def _resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-aligned bilinear resize; identity when sizes match."""
    h, w = img.shape[:2]
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    top = img[y0c][:, x0c] * (1.0 - wx) + img[y0c][:, x1c] * wx
    bottom = img[y1c][:, x0c] * (1.0 - wx) + img[y1c][:, x1c] * wx
    return top * (1.0 - wy) + bottom * wy


def random_resized_crop(img: np.ndarray, rng: np.random.Generator, policy: AugmentPolicy) -> np.ndarray:
    """Crop a random area/aspect window and resize back to the input size.

    Falls back to a centered square crop when no sampled window fits
    within the allotted attempts.
    """
    arr = _check_image(img)
    h, w = arr.shape[:2]
    if h < 2 or w < 2:
        raise ParameterError(f"image {arr.shape[:2]} too small to crop")
    area = h * w
    for _ in range(_CROP_ATTEMPTS):
        frac = rng.uniform(*policy.crop_area_range)
        aspect = rng.uniform(*policy.crop_aspect_range)
        target = frac * area
        crop_w = int(round(np.sqrt(target * aspect)))
        crop_h = int(round(np.sqrt(target / aspect)))
        if 0 < crop_w <= w and 0 < crop_h <= h:
            top = int(rng.integers(0, h - crop_h + 1))
            left = int(rng.integers(0, w - crop_w + 1))
            window = arr[top : top + crop_h, left : left + crop_w]
            return _resize_bilinear(window, h, w)
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return _resize_bilinear(arr[top : top + side, left : left + side], h, w)


def _blend(img, target, factor):
    return np.clip(target + factor * (img - target), 0.0, 1.0)


def apply_brightness(img: np.ndarray, factor: float) -> np.ndarray:
    return np.clip(np.asarray(img, dtype=np.float64) * factor, 0.0, 1.0)


def apply_contrast(img: np.ndarray, factor: float) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    return _blend(arr, float(luminance(arr).mean()), factor)


def apply_saturation(img: np.ndarray, factor: float) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    return _blend(arr, luminance(arr)[:, :, None], factor)


def color_jitter(img: np.ndarray, rng: np.random.Generator, strength: float) -> np.ndarray:
    """Brightness, contrast, and saturation scaled by random factors in
    [1 - strength, 1 + strength], applied in random order."""
    if strength < 0:
        raise ParameterError(f"jitter strength must be >= 0, got {strength}")
    out = _check_image(img)
    ops = (apply_brightness, apply_contrast, apply_saturation)
    for op_index in rng.permutation(3):
        factor = rng.uniform(1.0 - strength, 1.0 + strength)
        out = ops[op_index](out, factor)
    return out


def augment(img: np.ndarray, rng: np.random.Generator, policy: AugmentPolicy) -> np.ndarray:
    """Full pipeline: resized crop, maybe flip, color jitter, maybe grayscale.

    When flipping is disabled the flip stage consumes no randomness, so a
    flip-disabled policy's stream matches a pipeline without the stage.
    """
    out = random_resized_crop(img, rng, policy)
    if policy.flip_enabled and rng.uniform() < policy.flip_prob:
        out = horizontal_flip(out)
    out = color_jitter(out, rng, policy.jitter_strength)
    if rng.uniform() < policy.grayscale_prob:
        out = to_grayscale(out)
    return out
