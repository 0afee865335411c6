"""Reference feature extractor: Sobel edge branch + RGB branch.

Images pass through two parallel affine+rectifier branches, one over raw
RGB pixels and one over the Sobel edge magnitude, whose hidden activations
are concatenated and projected to a unit-norm embedding. Small enough to
finite-difference end to end, yet it preserves the edge-emphasis
architecture: color and edge information reach the embedding separately.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ParameterError, StateError
from .numerics import luminance

#: Scale applied to the raw Sobel magnitude; 8 bounds the per-axis response
#: for inputs in [0, 1], keeping outputs in [0, ~1].
SOBEL_SCALE = 8.0


@dataclass(frozen=True)
class EncoderShape:
    height: int
    width: int
    hidden: int
    dim: int

    def __post_init__(self):
        if min(self.height, self.width) < 3:
            raise ParameterError("images must be at least 3x3 for the Sobel branch")
        if self.hidden < 1 or self.dim < 2:
            raise ParameterError(f"invalid hidden={self.hidden} or dim={self.dim}")

    @property
    def rgb_inputs(self) -> int:
        return 3 * self.height * self.width

    @property
    def sobel_inputs(self) -> int:
        return self.height * self.width


@dataclass
class EncoderParams:
    """Weights of both branches and the projection; also reused as the
    container for gradients and momentum buffers (same shapes)."""

    shape: EncoderShape
    w_rgb: np.ndarray     # (hidden, 3*H*W)
    b_rgb: np.ndarray     # (hidden,)
    w_sobel: np.ndarray   # (hidden, H*W)
    b_sobel: np.ndarray   # (hidden,)
    w_proj: np.ndarray    # (dim, 2*hidden)
    b_proj: np.ndarray    # (dim,)
    version: int = field(default=0, compare=False)

    FIELDS = ("w_rgb", "b_rgb", "w_sobel", "b_sobel", "w_proj", "b_proj")

    def arrays(self):
        return [(name, getattr(self, name)) for name in self.FIELDS]

    @classmethod
    def zeros_like(cls, other: "EncoderParams") -> "EncoderParams":
        return cls(other.shape, *(np.zeros_like(getattr(other, name)) for name in cls.FIELDS))

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.shape, *(getattr(self, name).copy() for name in self.FIELDS))


@dataclass
class EncodeCache:
    """Forward intermediates needed for the backward pass, pinned to the
    parameter version they were computed with."""

    params: EncoderParams
    version: int
    x_rgb: np.ndarray
    x_sobel: np.ndarray
    pre_rgb: np.ndarray
    pre_sobel: np.ndarray
    concat: np.ndarray
    pre_norm_len: np.ndarray
    embeddings: np.ndarray


def init_encoder(shape: EncoderShape, seed: int) -> EncoderParams:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)

    def glorot(out_dim, in_dim):
        a = np.sqrt(6.0 / (in_dim + out_dim))
        return rng.uniform(-a, a, size=(out_dim, in_dim))

    return EncoderParams(
        shape=shape,
        w_rgb=glorot(shape.hidden, shape.rgb_inputs),
        b_rgb=np.zeros(shape.hidden),
        w_sobel=glorot(shape.hidden, shape.sobel_inputs),
        b_sobel=np.zeros(shape.hidden),
        w_proj=glorot(shape.dim, 2 * shape.hidden),
        b_proj=np.zeros(shape.dim),
    )


def _sobel_gray(gray: np.ndarray) -> np.ndarray:
    """3x3 Sobel magnitude of (..., H, W) grayscale, zero padded, /8.

    The one-pixel border ring, where the kernel window leaves the image,
    reports zero: a constant image has no edge response anywhere.
    """
    pad_spec = [(0, 0)] * (gray.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(gray, pad_spec)
    right = p[..., :-2, 2:] + 2.0 * p[..., 1:-1, 2:] + p[..., 2:, 2:]
    left = p[..., :-2, :-2] + 2.0 * p[..., 1:-1, :-2] + p[..., 2:, :-2]
    bottom = p[..., 2:, :-2] + 2.0 * p[..., 2:, 1:-1] + p[..., 2:, 2:]
    top = p[..., :-2, :-2] + 2.0 * p[..., :-2, 1:-1] + p[..., :-2, 2:]
    gx = right - left
    gy = bottom - top
    out = np.sqrt(gx * gx + gy * gy) / SOBEL_SCALE
    out[..., 0, :] = 0.0
    out[..., -1, :] = 0.0
    out[..., :, 0] = 0.0
    out[..., :, -1] = 0.0
    return out


def sobel_filter(image: np.ndarray) -> np.ndarray:
    """Edge-magnitude map of an RGB image (luma, Sobel, rescaled)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ParameterError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ParameterError(f"image {img.shape[:2]} smaller than the 3x3 kernel")
    return _sobel_gray(luminance(img))


def encode_batch(params: EncoderParams, images: np.ndarray):
    """Embed a batch of images; returns (n, dim) unit rows and a cache."""
    shape = params.shape
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4 or images.shape[1:] != (shape.height, shape.width, 3):
        raise ParameterError(
            f"expected images of shape (n, {shape.height}, {shape.width}, 3), "
            f"got {images.shape}"
        )
    n = images.shape[0]
    x_rgb = images.reshape(n, -1)
    x_sobel = _sobel_gray(luminance(images)).reshape(n, -1)
    pre_rgb = x_rgb @ params.w_rgb.T + params.b_rgb
    pre_sobel = x_sobel @ params.w_sobel.T + params.b_sobel
    concat = np.concatenate(
        [np.maximum(pre_rgb, 0.0), np.maximum(pre_sobel, 0.0)], axis=1
    )
    raw = concat @ params.w_proj.T + params.b_proj
    lengths = np.linalg.norm(raw, axis=1, keepdims=True)
    if np.any(lengths == 0.0):
        raise DegenerateInputError("encoder produced a zero pre-normalization vector")
    embeddings = raw / lengths
    cache = EncodeCache(
        params=params,
        version=params.version,
        x_rgb=x_rgb,
        x_sobel=x_sobel,
        pre_rgb=pre_rgb,
        pre_sobel=pre_sobel,
        concat=concat,
        pre_norm_len=lengths,
        embeddings=embeddings,
    )
    return embeddings, cache


def encode_forward(params: EncoderParams, image: np.ndarray):
    """Embed a single image; returns a (dim,) unit vector and a cache."""
    image = np.asarray(image, dtype=np.float64)
    embeddings, cache = encode_batch(params, image[None])
    return embeddings[0], cache


def encode_backward_batch(cache: EncodeCache, grad_embeddings: np.ndarray) -> EncoderParams:
    """Exact parameter gradients of sum_i v_i . grad_i, including the
    normalization Jacobian (I - v v^T) / ||raw||."""
    params = cache.params
    if cache.version != params.version:
        raise StateError("stale cache: parameters changed since the forward pass")
    g = np.asarray(grad_embeddings, dtype=np.float64)
    if g.shape != cache.embeddings.shape:
        raise ParameterError(
            f"gradient shape {g.shape} does not match embeddings {cache.embeddings.shape}"
        )
    v = cache.embeddings
    radial = (g * v).sum(axis=1, keepdims=True)
    g_raw = (g - radial * v) / cache.pre_norm_len
    g_concat = g_raw @ params.w_proj
    hidden = params.shape.hidden
    g_pre_rgb = g_concat[:, :hidden] * (cache.pre_rgb > 0.0)
    g_pre_sobel = g_concat[:, hidden:] * (cache.pre_sobel > 0.0)
    return EncoderParams(
        shape=params.shape,
        w_rgb=g_pre_rgb.T @ cache.x_rgb,
        b_rgb=g_pre_rgb.sum(axis=0),
        w_sobel=g_pre_sobel.T @ cache.x_sobel,
        b_sobel=g_pre_sobel.sum(axis=0),
        w_proj=g_raw.T @ cache.concat,
        b_proj=g_raw.sum(axis=0),
    )


def encode_backward(cache: EncodeCache, grad_v: np.ndarray) -> EncoderParams:
    """Single-embedding form of :func:`encode_backward_batch`."""
    grad_v = np.asarray(grad_v, dtype=np.float64)
    return encode_backward_batch(cache, grad_v[None])
