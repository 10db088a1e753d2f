"""Gaussian target heatmaps, argmax decoding and image augmentation.

Images are numpy uint8 arrays of shape (height, width, 3), RGB. Heatmap
grids are float64 arrays of shape (height, width) indexed [y, x], so the
row-major flat index of pixel (x, y) is y * width + x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage
from PIL import ImageFilter

from .geometry import PixelPoint

DEFAULT_SIGMA_PX = 3.0
MODEL_INPUT_SIZE = 224


@dataclass(frozen=True)
class HeatmapParams:
    sigma: float = DEFAULT_SIGMA_PX

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True, eq=False)
class Heatmap:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] <= 0 or v.shape[1] <= 0:
            raise ValueError("heatmap must be a non-empty 2-D grid")
        if np.any(v < 0):
            raise ValueError("heatmap values must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def gaussian_heatmap(p_star: PixelPoint, params: HeatmapParams, width: int, height: int) -> Heatmap:
    """Target heatmap with value exp(-|p - p*|^2 / (2 sigma^2)) at every
    integer pixel p. The peak may lie outside the grid."""
    if width <= 0 or height <= 0:
        raise ValueError("heatmap dimensions must be positive")
    xs = np.arange(width, dtype=float) - p_star.x
    ys = np.arange(height, dtype=float) - p_star.y
    sq = ys[:, None] ** 2 + xs[None, :] ** 2
    return Heatmap(np.exp(-sq / (2.0 * params.sigma ** 2)))


def argmax_point(h: Heatmap) -> tuple[PixelPoint, float]:
    """Integer pixel with the largest value; ties break to the smallest
    row-major index."""
    idx = int(np.argmax(h.values))  # C order == row-major, first max wins
    y, x = divmod(idx, h.width)
    return PixelPoint(float(x), float(y)), float(h.values[y, x])


def heatmap_mse(a: Heatmap, b: Heatmap) -> float:
    if a.values.shape != b.values.shape:
        raise ValueError(f"heatmap shapes differ: {a.values.shape} vs {b.values.shape}")
    return float(np.mean((a.values - b.values) ** 2))


# ---------------------------------------------------------------------------
# compositing and augmentation


def _check_image(img: np.ndarray, name: str) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"{name} must be an (H, W, 3) uint8 array")
    if img.shape[0] <= 0 or img.shape[1] <= 0:
        raise ValueError(f"{name} must be non-empty")
    return img


def luma(image: np.ndarray) -> np.ndarray:
    """Integer BT.601 grayscale: (299 R + 587 G + 114 B) // 1000."""
    image = _check_image(image, "image")
    rgb = image.astype(np.int32)
    return ((299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]) // 1000).astype(np.uint8)


def composite_overlay(render: np.ndarray, overlay: np.ndarray, alpha_source: np.ndarray) -> np.ndarray:
    """Blend ``overlay`` onto ``render`` using the grayscale of
    ``alpha_source`` as the per-pixel alpha channel."""
    render = _check_image(render, "render")
    overlay = _check_image(overlay, "overlay")
    alpha_source = _check_image(alpha_source, "alpha_source")
    if not (render.shape == overlay.shape == alpha_source.shape):
        raise ValueError("render, overlay and alpha_source must share dimensions")
    a = luma(alpha_source).astype(np.int32)[..., None]
    blended = render.astype(np.int32) * (255 - a) + overlay.astype(np.int32) * a
    return ((blended + 127) // 255).astype(np.uint8)  # round(x / 255); x/255 is never half-integer


@dataclass(frozen=True)
class AugmentParams:
    """Random crop + horizontal flip + box blur + resize, matching the
    training-time augmentation. Target heatmaps are regenerated from the
    transformed peak rather than resampled."""

    crop: bool = True
    crop_fraction: float = 0.875  # of the shorter side
    crop_size: int | None = None  # absolute square side; overrides crop_fraction
    flip_prob: float = 0.5
    blur_prob: float = 0.5
    blur_kernels: tuple[int, ...] = (3, 5)
    out_size: int = MODEL_INPUT_SIZE
    sigma: float = DEFAULT_SIGMA_PX

    def __post_init__(self):
        if not (0 < self.crop_fraction <= 1):
            raise ValueError("crop_fraction must be in (0, 1]")
        for p in (self.flip_prob, self.blur_prob):
            if not (0 <= p <= 1):
                raise ValueError("probabilities must be in [0, 1]")
        if any(k < 1 or k % 2 == 0 for k in self.blur_kernels):
            raise ValueError("blur kernels must be odd and positive")
        if self.out_size <= 0 or self.sigma <= 0:
            raise ValueError("out_size and sigma must be positive")


@dataclass(frozen=True)
class _AugOps:
    crop_x: int
    crop_y: int
    crop_w: int
    crop_h: int
    flip: bool
    blur_kernel: int | None
    out_size: int

    def apply_to_point(self, p: PixelPoint) -> PixelPoint:
        x = p.x - self.crop_x
        y = p.y - self.crop_y
        if self.flip:
            x = (self.crop_w - 1) - x
        # pixel-center convention for the bilinear resize
        sx = self.out_size / self.crop_w
        sy = self.out_size / self.crop_h
        return PixelPoint((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5)


def _sample_ops(width: int, height: int, params: AugmentParams, rng: np.random.Generator) -> _AugOps:
    if params.crop:
        side = params.crop_size if params.crop_size is not None \
            else int(round(params.crop_fraction * min(width, height)))
        if side > min(width, height):
            raise ValueError(f"crop of {side} px exceeds the {width}x{height} image")
        if side < 1:
            raise ValueError("crop size must be at least 1 px")
        cx = int(rng.integers(0, width - side + 1))
        cy = int(rng.integers(0, height - side + 1))
        cw = ch = side
    else:
        cx = cy = 0
        cw, ch = width, height
    flip = bool(rng.uniform() < params.flip_prob)
    kernel = None
    if rng.uniform() < params.blur_prob:
        kernel = int(params.blur_kernels[int(rng.integers(0, len(params.blur_kernels)))])
    return _AugOps(cx, cy, cw, ch, flip, kernel, params.out_size)


def _apply_ops_to_image(image: np.ndarray, ops: _AugOps) -> np.ndarray:
    out = image[ops.crop_y:ops.crop_y + ops.crop_h, ops.crop_x:ops.crop_x + ops.crop_w]
    if ops.flip:
        out = out[:, ::-1]
    pil = PILImage.fromarray(np.ascontiguousarray(out))
    if ops.blur_kernel is not None:
        pil = pil.filter(ImageFilter.BoxBlur((ops.blur_kernel - 1) // 2))
    if pil.size != (ops.out_size, ops.out_size):
        pil = pil.resize((ops.out_size, ops.out_size), PILImage.BILINEAR)
    return np.asarray(pil)


def augment_with_points(image: np.ndarray, points: list[PixelPoint], params: AugmentParams,
                        rng: np.random.Generator) -> tuple[np.ndarray, list[PixelPoint]]:
    """Augment an image and map annotation points through the same crop,
    flip and resize. Blur applies to the image only."""
    image = _check_image(image, "image")
    ops = _sample_ops(image.shape[1], image.shape[0], params, rng)
    return _apply_ops_to_image(image, ops), [ops.apply_to_point(p) for p in points]


def augment(image: np.ndarray, targets: list[Heatmap], params: AugmentParams,
            rng: np.random.Generator) -> tuple[np.ndarray, list[Heatmap]]:
    """Augment an image together with its target heatmaps.

    Heatmap peaks are transformed through the sampled crop/flip/resize and
    the targets regenerated at the new peak, keeping them exact Gaussian
    targets after the geometric transform.
    """
    image = _check_image(image, "image")
    h, w = image.shape[:2]
    for t in targets:
        if (t.height, t.width) != (h, w):
            raise ValueError("targets must share the image dimensions")
    peaks = [argmax_point(t)[0] for t in targets]
    out_image, moved = augment_with_points(image, peaks, params, rng)
    hp = HeatmapParams(sigma=params.sigma)
    out_targets = [gaussian_heatmap(p, hp, params.out_size, params.out_size) for p in moved]
    return out_image, out_targets
