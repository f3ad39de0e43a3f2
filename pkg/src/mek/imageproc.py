"""Grayscale preprocessing chain: contrast enhancement, K-means
segmentation, and Canny edge detection.

Images are 2-D float64 numpy arrays in row-major order with intensities
in [0, 255]. Values stay real-valued through the chain and are rounded
half-up only when an image leaves the process (PNG output or the
explicit quantize step). Edge maps are uint8 arrays with values {0, 255}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DegenerateImage,
    ImageTooSmall,
    InvalidTargets,
    TooFewDistinctValues,
)

GRAY_MAX = 255.0

# ITU-R BT.601 luma weights for RGB input
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class CannyParams:
    """Thresholds are ratios of the maximum suppressed gradient magnitude."""

    gaussian_sigma: float = 1.4
    low_threshold_ratio: float = 0.05
    high_threshold_ratio: float = 0.15

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be > 0")
        if not (0.0 < self.low_threshold_ratio < 1.0):
            raise ValueError("low_threshold_ratio must be in (0, 1)")
        if not (0.0 < self.high_threshold_ratio < 1.0):
            raise ValueError("high_threshold_ratio must be in (0, 1)")
        if not self.low_threshold_ratio < self.high_threshold_ratio:
            raise ValueError("low_threshold_ratio must be < high_threshold_ratio")


@dataclass(frozen=True)
class BcetTargets:
    target_min: float = 0.0
    target_max: float = 255.0
    target_mean: float = 110.0


@dataclass
class SegmentationResult:
    """Per-pixel cluster labels with centroids sorted ascending."""

    labels: np.ndarray  # int array, same shape as the source image
    centroids: np.ndarray  # (k,) float, ascending
    inertia: float

    @property
    def k(self) -> int:
        return len(self.centroids)


def _as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("expected a non-empty 2-D intensity raster")
    if arr.min() < 0.0 or arr.max() > GRAY_MAX:
        raise ValueError("intensities must lie in [0, 255]")
    return arr


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Round half-up and clip to the 8-bit range."""
    return np.clip(np.floor(np.asarray(img, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def bcet(
    img,
    target_min: float = 0.0,
    target_max: float = 255.0,
    target_mean: float = 110.0,
) -> np.ndarray:
    """Balance contrast enhancement: parabolic remap pinning output min,
    max, and mean to the requested targets.

    Fits y = a*(x - b)**2 + c from the input min l, max h, mean e, and
    mean square s. Falls back to the linear stretch when the parabola
    degenerates (the linear map is the limit case and already meets the
    attainable constraints there).
    """
    x = _as_image(img)
    if not (0.0 <= target_min < target_mean < target_max <= GRAY_MAX):
        raise InvalidTargets(
            f"need 0 <= min < mean < max <= 255, got ({target_min}, {target_mean}, {target_max})"
        )
    l = float(x.min())
    h = float(x.max())
    if l == h:
        raise DegenerateImage("constant image has no contrast to balance")
    e = float(x.mean())
    s = float(np.mean(x * x))
    L, H, E = float(target_min), float(target_max), float(target_mean)

    num = h * h * (E - L) - s * (H - L) + l * l * (H - E)
    den = 2.0 * (h * (E - L) - e * (H - L) + l * (H - E))
    scale = max(abs(h), 1.0) * (H - L)
    if abs(den) < 1e-12 * max(scale, 1.0):
        y = L + (H - L) * (x - l) / (h - l)
    else:
        b = num / den
        if abs(h + l - 2.0 * b) < 1e-9:
            # vertex at mid-range: no monotone parabola exists
            y = L + (H - L) * (x - l) / (h - l)
        else:
            a = (H - L) / ((h - l) * (h + l - 2.0 * b))
            c = L - a * (l - b) ** 2
            y = a * (x - b) ** 2 + c
    return np.clip(y, min(L, H), max(L, H))


def farthest_point_init(intensities, k: int, seed: int) -> np.ndarray:
    """Seed k centroids on the distinct intensity values: a seeded random
    first pick, then repeatedly the value farthest from the chosen set."""
    values = np.unique(np.asarray(intensities, dtype=np.float64))
    if len(values) < k:
        raise TooFewDistinctValues(f"{len(values)} distinct values < k={k}")
    rng = np.random.default_rng(seed)
    centers = [float(values[rng.integers(len(values))])]
    dist = np.abs(values - centers[0])
    while len(centers) < k:
        nxt = float(values[int(np.argmax(dist))])
        centers.append(nxt)
        dist = np.minimum(dist, np.abs(values - nxt))
    return np.array(centers)


def kmeans_segment(
    img,
    k: int = 4,
    max_iter: int = 100,
    tol: float = 1e-4,
    seed: int = 0,
) -> SegmentationResult:
    """Lloyd's algorithm on the 1-D intensity distribution.

    Deterministic for a fixed seed; centroids are returned sorted
    ascending with labels remapped to match.
    """
    arr = _as_image(img)
    if k < 2:
        raise ValueError("k must be >= 2")
    x = arr.ravel()
    centers = farthest_point_init(x, k, seed)
    for _ in range(max_iter):
        labels = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
        counts = np.bincount(labels, minlength=k)
        sums = np.bincount(labels, weights=x, minlength=k)
        new_centers = np.where(counts > 0, sums / np.maximum(counts, 1), centers)
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < tol:
            break
    labels = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
    inertia = float(np.sum((x - centers[labels]) ** 2))

    order = np.argsort(centers, kind="stable")
    inverse = np.empty(k, dtype=np.intp)
    inverse[order] = np.arange(k)
    return SegmentationResult(
        labels=inverse[labels].reshape(arr.shape),
        centroids=centers[order],
        inertia=inertia,
    )


def remap_to_centroids(seg: SegmentationResult) -> np.ndarray:
    """Replace every pixel by its cluster centroid, rounded to the
    nearest integer (half-up)."""
    rounded = np.floor(seg.centroids + 0.5)
    return rounded[seg.labels].astype(np.float64)


def gaussian_kernel_5x5(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    offsets = np.arange(-2, 3, dtype=np.float64)
    dx, dy = np.meshgrid(offsets, offsets)
    kernel = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur_5x5(img, sigma: float = 1.4) -> np.ndarray:
    """5x5 Gaussian smoothing with edge-replicated borders."""
    arr = _as_image(img)
    kernel = gaussian_kernel_5x5(sigma)
    padded = np.pad(arr, 2, mode="edge")
    out = np.zeros_like(arr)
    h, w = arr.shape
    for dy in range(5):
        for dx in range(5):
            out += kernel[dy, dx] * padded[dy : dy + h, dx : dx + w]
    return out


def sobel_gradients(img) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients with edge-replicated borders.

    Returns (magnitude, direction) where direction = atan2(gy, gx) with
    rows growing downward.
    """
    arr = _as_image(img)
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ImageTooSmall(f"need at least 3x3, got {arr.shape[0]}x{arr.shape[1]}")
    p = np.pad(arr, 1, mode="edge")
    tl, tm, tr = p[:-2, :-2], p[:-2, 1:-1], p[:-2, 2:]
    ml, mr = p[1:-1, :-2], p[1:-1, 2:]
    bl, bm, br = p[2:, :-2], p[2:, 1:-1], p[2:, 2:]
    gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl)
    gy = (bl + 2.0 * bm + br) - (tl + 2.0 * tm + tr)
    return np.hypot(gx, gy), np.arctan2(gy, gx)


def non_max_suppression(magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Thin gradient ridges to single-pixel width.

    Directions are quantized to 4 bins (0/45/90/135 degrees); a pixel
    survives when its magnitude beats the backward neighbour strictly
    and the forward neighbour at least weakly, so plateau ties resolve
    toward the lower-index side. The outermost ring is always zero.
    """
    mag = np.asarray(magnitude, dtype=np.float64)
    if mag.shape != np.asarray(direction).shape:
        raise ValueError("magnitude and direction shapes differ")
    out = np.zeros_like(mag)
    if mag.shape[0] < 3 or mag.shape[1] < 3:
        return out
    angle = np.degrees(direction) % 180.0

    c = mag[1:-1, 1:-1]
    left, right = mag[1:-1, :-2], mag[1:-1, 2:]
    up, down = mag[:-2, 1:-1], mag[2:, 1:-1]
    ul, dr = mag[:-2, :-2], mag[2:, 2:]
    ur, dl = mag[:-2, 2:], mag[2:, :-2]
    a = angle[1:-1, 1:-1]

    bin0 = (a < 22.5) | (a >= 157.5)  # horizontal gradient
    bin1 = (a >= 22.5) & (a < 67.5)  # down-right gradient
    bin2 = (a >= 67.5) & (a < 112.5)  # vertical gradient
    bin3 = (a >= 112.5) & (a < 157.5)  # down-left gradient

    keep = (
        (bin0 & (c > left) & (c >= right))
        | (bin1 & (c > ul) & (c >= dr))
        | (bin2 & (c > up) & (c >= down))
        | (bin3 & (c > ur) & (c >= dl))
    )
    out[1:-1, 1:-1] = np.where(keep, c, 0.0)
    return out


def hysteresis_threshold(
    suppressed: np.ndarray,
    low_ratio: float,
    high_ratio: float,
) -> np.ndarray:
    """Double threshold on the suppressed magnitudes plus hysteresis:
    weak pixels survive only when 8-adjacent to a strong pixel.

    Thresholds are ratios of the maximum suppressed magnitude; equal
    ratios degenerate to plain thresholding.
    """
    if not (0.0 < low_ratio <= high_ratio < 1.0):
        raise ValueError("need 0 < low_ratio <= high_ratio < 1")
    nms = np.asarray(suppressed, dtype=np.float64)
    peak = float(nms.max(initial=0.0))
    out = np.zeros(nms.shape, dtype=np.uint8)
    if peak <= 0.0:
        return out
    strong = nms >= high_ratio * peak
    weak = (nms >= low_ratio * peak) & ~strong

    s = np.pad(strong, 1)
    near_strong = (
        s[:-2, :-2] | s[:-2, 1:-1] | s[:-2, 2:]
        | s[1:-1, :-2] | s[1:-1, 2:]
        | s[2:, :-2] | s[2:, 1:-1] | s[2:, 2:]
    )
    out[strong | (weak & near_strong)] = 255
    return out


def canny(img, params: CannyParams = CannyParams()) -> np.ndarray:
    """Full edge detector: 5x5 Gaussian blur, 3x3 Sobel, non-maximum
    suppression, double threshold with hysteresis. Output is {0, 255}."""
    arr = _as_image(img)
    if arr.shape[0] < 5 or arr.shape[1] < 5:
        raise ImageTooSmall(f"need at least 5x5, got {arr.shape[0]}x{arr.shape[1]}")
    blurred = gaussian_blur_5x5(arr, params.gaussian_sigma)
    magnitude, direction = sobel_gradients(blurred)
    suppressed = non_max_suppression(magnitude, direction)
    return hysteresis_threshold(
        suppressed, params.low_threshold_ratio, params.high_threshold_ratio
    )


def edge_pipeline(
    img,
    k: int = 4,
    canny_params: CannyParams = CannyParams(),
    bcet_targets: BcetTargets = BcetTargets(),
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> np.ndarray:
    """Contrast enhancement, K-means segmentation, centroid remap, then
    Canny, in that order."""
    enhanced = bcet(
        img,
        bcet_targets.target_min,
        bcet_targets.target_max,
        bcet_targets.target_mean,
    )
    seg = kmeans_segment(enhanced, k=k, max_iter=max_iter, tol=tol, seed=seed)
    return canny(remap_to_centroids(seg), canny_params)


def read_gray(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale or RGB image as a float raster; RGB is
    reduced with the 0.299/0.587/0.114 luma weights."""
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64)
        if im.mode in ("I", "I;16", "F"):
            return np.asarray(im.convert("L"), dtype=np.float64)
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    return rgb @ np.array(LUMA_WEIGHTS)


def write_gray(path: str | Path, img) -> None:
    Image.fromarray(quantize_u8(img), mode="L").save(path, format="PNG")


def write_edges(path: str | Path, edges: np.ndarray) -> None:
    arr = np.asarray(edges, dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
