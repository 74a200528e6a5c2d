"""Edge-response channel maps and their summed-area tables.

An input image is converted into 8 per-pixel channels:

    c1 = Gh            signed horizontal edge response
    c2 = Gv            signed vertical edge response
    c3 = |Gh|          unsigned horizontal response
    c4 = |Gv|          unsigned vertical response
    c5..c8             quadrant indicator maps (one-hot per pixel from
                       the signs of Gv and Gh)

Each channel carries an integral image so any rectangle sum costs four
table lookups.  A ninth integral over the raw intensities supports the
Haar-like baseline.
"""

from dataclasses import dataclass

import numpy as np

N_CHANNELS = 8


def as_gray(img) -> np.ndarray:
    """Validate and coerce an image to a 2-D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return arr


def compute_gradients(img) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference edge responses with replicate padding.

    Returns (gh, gv): horizontal and vertical responses, same shape as
    the input.  Kernel is [-1, 0, +1] without the 1/2 factor, so values
    stay integral for integer-valued inputs.  A 1-pixel-wide axis yields
    zero response along that axis.
    """
    arr = as_gray(img)
    padded = np.pad(arr, 1, mode="edge")
    gh = padded[1:-1, 2:] - padded[1:-1, :-2]
    gv = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return gh, gv


def quadrant_code(gv: float, gh: float) -> int:
    """Quadrant bin in {1,2,3,4} from the signs of (gv, gh).

    Zero counts as non-negative, so (0, 0) lands in bin 1.
    """
    return 1 + (gh < 0) + 2 * (gv < 0)


def quadrant_maps(gv: np.ndarray, gh: np.ndarray) -> np.ndarray:
    """One-hot indicator maps, shape (4, H, W); map i-1 is bin i."""
    code = (gh < 0).astype(np.int64) + 2 * (gv < 0)
    maps = np.zeros((4,) + gv.shape, dtype=np.float64)
    for i in range(4):
        maps[i] = code == i
    return maps


def integral_table(channel: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero border: shape (H+1, W+1).

    ii[r, c] = sum of channel[:r, :c].
    """
    h, w = channel.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(channel, axis=0, out=ii[1:, 1:], dtype=np.float64)
    np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
    return ii


@dataclass(frozen=True)
class ChannelStack:
    """Immutable per-image channel maps plus their integral tables.

    channels: (8, H, W); integrals: (8, H+1, W+1); raw_integral covers
    the original intensities for Haar features.
    """

    channels: np.ndarray
    integrals: np.ndarray
    raw_integral: np.ndarray

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]


def build_channels(img) -> ChannelStack:
    """Compute all 8 channels and the 9 integral tables for an image."""
    arr = as_gray(img)
    gh, gv = compute_gradients(arr)
    channels = np.empty((N_CHANNELS,) + arr.shape, dtype=np.float64)
    channels[0] = gh
    channels[1] = gv
    channels[2] = np.abs(gh)
    channels[3] = np.abs(gv)
    channels[4:8] = quadrant_maps(gv, gh)
    integrals = np.stack([integral_table(channels[i]) for i in range(N_CHANNELS)])
    raw_integral = integral_table(arr)
    return ChannelStack(channels=channels, integrals=integrals, raw_integral=raw_integral)


def box_sum(ii: np.ndarray, x: int, y: int, w: int, h: int) -> float:
    """Sum of the underlying channel over [x, x+w) x [y, y+h).

    The rectangle must lie inside the image the table was built from.
    """
    height, width = ii.shape[0] - 1, ii.shape[1] - 1
    if w < 1 or h < 1:
        raise ValueError(f"rectangle must have positive size, got w={w} h={h}")
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(
            f"rectangle ({x},{y},{w},{h}) outside {width}x{height} image"
        )
    return float(ii[y + h, x + w] - ii[y, x + w] - ii[y + h, x] + ii[y, x])


def box_sum_grid(ii: np.ndarray, xs: np.ndarray, ys: np.ndarray, w: int, h: int) -> np.ndarray:
    """Vectorized box_sum at many top-left corners (no bounds check)."""
    return ii[ys + h, xs + w] - ii[ys, xs + w] - ii[ys + h, xs] + ii[ys, xs]


def build_channels_batch(imgs: np.ndarray) -> np.ndarray:
    """Integral tables for a batch of same-size images.

    imgs: (n, H, W) -> (n, 9, H+1, W+1); index 0..7 are the channel
    integrals, index 8 the raw-intensity integral.
    """
    imgs = np.asarray(imgs, dtype=np.float64)
    n, h, w = imgs.shape
    padded = np.pad(imgs, ((0, 0), (1, 1), (1, 1)), mode="edge")
    gh = padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]
    gv = padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]
    code = (gh < 0).astype(np.int64) + 2 * (gv < 0)
    chans = np.empty((n, 9, h, w), dtype=np.float64)
    chans[:, 0] = gh
    chans[:, 1] = gv
    chans[:, 2] = np.abs(gh)
    chans[:, 3] = np.abs(gv)
    for i in range(4):
        chans[:, 4 + i] = code == i
    chans[:, 8] = imgs
    tables = np.zeros((n, 9, h + 1, w + 1), dtype=np.float64)
    np.cumsum(chans, axis=2, out=tables[:, :, 1:, 1:])
    np.cumsum(tables[:, :, 1:, 1:], axis=3, out=tables[:, :, 1:, 1:])
    return tables
