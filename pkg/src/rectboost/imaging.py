"""Small image-resampling helpers shared by training and the harness."""

import numpy as np
from scipy import ndimage


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment and edge clamping."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    tl = img[np.ix_(y0, x0)]
    tr = img[np.ix_(y0, x1)]
    bl = img[np.ix_(y1, x0)]
    br = img[np.ix_(y1, x1)]
    top = tl * (1 - fx) + tr * fx
    bot = bl * (1 - fx) + br * fx
    return top * (1 - fy) + bot * fy


def rotate_patch(patch: np.ndarray, angle_deg: float) -> np.ndarray:
    """In-plane rotation about the center, bilinear, replicate border."""
    return ndimage.rotate(
        np.asarray(patch, dtype=np.float64),
        angle_deg,
        reshape=False,
        order=1,
        mode="nearest",
    )


def translate_patch(patch: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer shift with replicate border; +dx moves content right."""
    patch = np.asarray(patch, dtype=np.float64)
    h, w = patch.shape
    padded = np.pad(patch, ((abs(dy), abs(dy)), (abs(dx), abs(dx))), mode="edge")
    y0 = abs(dy) - dy
    x0 = abs(dx) - dx
    return padded[y0 : y0 + h, x0 : x0 + w]


def illuminate_patch(patch: np.ndarray, gain: float, bias: float) -> np.ndarray:
    """Affine intensity map clamped to [0, 255]."""
    return np.clip(np.asarray(patch, dtype=np.float64) * gain + bias, 0.0, 255.0)
