"""HOG descriptors for the classical classifiers.

Unsigned gradients (0-180 degrees), per-cell orientation histograms with
bilinear interpolation between neighbouring bins, and block-wise L2-Hys
normalization. Descriptors of constant images are zero vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import IncompatibleDimensions


@dataclass(frozen=True)
class HogParams:
    resize_to: int = 128  # square target; 0 keeps the native size
    cell_size: int = 8
    block_cells: int = 2  # cells per block side
    block_stride: int = 1  # stride between blocks, in cells
    bins: int = 9
    clip: float = 0.2
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.resize_to < 0:
            raise ValueError("resize_to must be >= 0")
        if self.cell_size < 2:
            raise ValueError("cell_size must be >= 2")
        if self.block_cells < 1 or self.block_stride < 1:
            raise ValueError("block_cells and block_stride must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if not (0.0 < self.clip <= 1.0):
            raise ValueError("clip must be in (0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


def resize_bilinear(img: np.ndarray, size: int) -> np.ndarray:
    im = Image.fromarray(np.asarray(img, dtype=np.float32), mode="F")
    return np.asarray(im.resize((size, size), Image.Resampling.BILINEAR), dtype=np.float64)


def _grid_shape(params: HogParams, width: int, height: int) -> tuple[int, int, int, int]:
    if params.resize_to:
        width = height = params.resize_to
    if width % params.cell_size or height % params.cell_size:
        raise IncompatibleDimensions(
            f"{width}x{height} not divisible by cell_size {params.cell_size}"
        )
    cells_x = width // params.cell_size
    cells_y = height // params.cell_size
    blocks_x = (cells_x - params.block_cells) // params.block_stride + 1
    blocks_y = (cells_y - params.block_cells) // params.block_stride + 1
    if blocks_x < 1 or blocks_y < 1:
        raise IncompatibleDimensions(
            f"{cells_x}x{cells_y} cells cannot hold a {params.block_cells}-cell block"
        )
    return cells_x, cells_y, blocks_x, blocks_y


def hog_dim(params: HogParams, width: int, height: int) -> int:
    """Descriptor length for the given raster size, without computing it."""
    _, _, blocks_x, blocks_y = _grid_shape(params, width, height)
    return blocks_x * blocks_y * params.block_cells ** 2 * params.bins


def hog(img, params: HogParams = HogParams()) -> np.ndarray:
    """Extract the HOG descriptor as a flat float vector.

    Blocks are concatenated row-major; each block is L2-normalized,
    clipped at params.clip, and renormalized (L2-Hys). Zero-gradient
    blocks come out as zero vectors rather than raising.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D intensity raster")
    if params.resize_to:
        arr = resize_bilinear(arr, params.resize_to)
    height, width = arr.shape
    cells_x, cells_y, blocks_x, blocks_y = _grid_shape(params, width, height)
    cell = params.cell_size
    nbins = params.bins

    gy, gx = np.gradient(arr)
    magnitude = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0

    # split each vote between the two nearest bin centers, wrapping at 180
    bin_width = 180.0 / nbins
    pos = angle / bin_width - 0.5
    low = np.floor(pos)
    frac = pos - low
    low_bin = (low.astype(np.int64)) % nbins
    high_bin = (low_bin + 1) % nbins

    rows, cols = np.indices(arr.shape)
    cell_index = (rows // cell) * cells_x + (cols // cell)
    hist = np.bincount(
        (cell_index * nbins + low_bin).ravel(),
        weights=(magnitude * (1.0 - frac)).ravel(),
        minlength=cells_y * cells_x * nbins,
    )
    hist += np.bincount(
        (cell_index * nbins + high_bin).ravel(),
        weights=(magnitude * frac).ravel(),
        minlength=cells_y * cells_x * nbins,
    )
    hist = hist.reshape(cells_y, cells_x, nbins)

    windows = np.lib.stride_tricks.sliding_window_view(
        hist, (params.block_cells, params.block_cells, nbins)
    )[:: params.block_stride, :: params.block_stride, 0]
    blocks = windows.reshape(blocks_y * blocks_x, -1)

    eps2 = params.epsilon ** 2
    norm = np.sqrt((blocks * blocks).sum(axis=1) + eps2)
    blocks = blocks / norm[:, None]
    blocks = np.minimum(blocks, params.clip)
    norm = np.sqrt((blocks * blocks).sum(axis=1) + eps2)
    blocks = blocks / norm[:, None]
    return blocks.ravel()
