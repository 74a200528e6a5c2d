"""Rectangular feature pools, 8-D block descriptors and the Haar baseline."""

from dataclasses import dataclass

import numpy as np

from .channels import ChannelStack, box_sum

NORM_EPS = 1e-6

# Upright Viola-Jones kinds.  "Filled" regions (positive sign) are the
# right / bottom / center sub-rectangles, and the two off-diagonal
# quadrants for the four-rectangle kind.
HAAR_KINDS = (
    "two-rect-horizontal",
    "two-rect-vertical",
    "three-rect-horizontal",
    "three-rect-vertical",
    "four-rect-diagonal",
)
_HAAR_SPLIT = {
    "two-rect-horizontal": (2, 1),
    "two-rect-vertical": (1, 2),
    "three-rect-horizontal": (3, 1),
    "three-rect-vertical": (1, 3),
    "four-rect-diagonal": (2, 2),
}


@dataclass(frozen=True, order=True)
class RectFeature:
    """A block inside the training window, as a (x, y, w, h) 4-tuple."""

    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class HaarFeature:
    kind: str
    x: int
    y: int
    w: int
    h: int


def rect_sum(ii: np.ndarray, rect: RectFeature) -> float:
    return box_sum(ii, rect.x, rect.y, rect.w, rect.h)


def block_descriptor(stack: ChannelStack, rect: RectFeature, eps: float = NORM_EPS) -> np.ndarray:
    """8-D descriptor of a rectangle: normalized HOG half | normalized EBP half.

    Order is (sum Gh, sum Gv, sum |Gh|, sum |Gv|, phi1..phi4); each
    4-vector is scaled by 1/(l2 norm + eps), so an all-zero HOG half
    stays zero while the EBP half (counts summing to w*h) is unit
    length to within the stabilizer.
    """
    raw = np.array([rect_sum(stack.integrals[i], rect) for i in range(8)])
    hog, ebp = raw[:4], raw[4:]
    out = np.empty(8)
    out[:4] = hog / (np.linalg.norm(hog) + eps)
    out[4:] = ebp / (np.linalg.norm(ebp) + eps)
    return out


def enumerate_rect_pool(
    window_w: int,
    window_h: int,
    min_size: int = 4,
    size_step: int = 4,
    pos_stride: int = 2,
) -> list[RectFeature]:
    """All blocks on the (size, position) grid that fit the window.

    Deterministic row-major ordering by (w, h, x, y).  A window smaller
    than min_size yields an empty pool.
    """
    pool = []
    for w in range(min_size, window_w + 1, size_step):
        for h in range(min_size, window_h + 1, size_step):
            for x in range(0, window_w - w + 1, pos_stride):
                for y in range(0, window_h - h + 1, pos_stride):
                    pool.append(RectFeature(x, y, w, h))
    return pool


def enumerate_haar_pool(
    window_w: int,
    window_h: int,
    min_size: int = 4,
    size_step: int = 4,
    pos_stride: int = 2,
) -> list[HaarFeature]:
    """All Haar features of the 5 upright kinds on the same grid.

    Outer sizes come from the rect-pool grid, filtered per kind so the
    split divides evenly; ordering is (kind, w, h, x, y).
    """
    pool = []
    for kind in HAAR_KINDS:
        sx, sy = _HAAR_SPLIT[kind]
        for w in range(min_size, window_w + 1, size_step):
            if w % sx:
                continue
            for h in range(min_size, window_h + 1, size_step):
                if h % sy:
                    continue
                for x in range(0, window_w - w + 1, pos_stride):
                    for y in range(0, window_h - h + 1, pos_stride):
                        pool.append(HaarFeature(kind, x, y, w, h))
    return pool


def haar_value(raw_ii: np.ndarray, feat: HaarFeature) -> float:
    """Filled-minus-unfilled intensity difference for one Haar feature."""
    x, y, w, h = feat.x, feat.y, feat.w, feat.h
    k = feat.kind
    if k == "two-rect-horizontal":
        half = w // 2
        return box_sum(raw_ii, x + half, y, half, h) - box_sum(raw_ii, x, y, half, h)
    if k == "two-rect-vertical":
        half = h // 2
        return box_sum(raw_ii, x, y + half, w, half) - box_sum(raw_ii, x, y, w, half)
    if k == "three-rect-horizontal":
        third = w // 3
        center = box_sum(raw_ii, x + third, y, third, h)
        # center counted twice so a uniform region nets zero
        return 3.0 * center - box_sum(raw_ii, x, y, w, h)
    if k == "three-rect-vertical":
        third = h // 3
        center = box_sum(raw_ii, x, y + third, w, third)
        return 3.0 * center - box_sum(raw_ii, x, y, w, h)
    if k == "four-rect-diagonal":
        hw, hh = w // 2, h // 2
        tr = box_sum(raw_ii, x + hw, y, hw, hh)
        bl = box_sum(raw_ii, x, y + hh, hw, hh)
        tl = box_sum(raw_ii, x, y, hw, hh)
        br = box_sum(raw_ii, x + hw, y + hh, hw, hh)
        return tr + bl - tl - br
    raise ValueError(f"unknown Haar kind: {k}")


def _corner_indices(rects: list[RectFeature]) -> tuple[np.ndarray, ...]:
    x1 = np.array([r.x for r in rects])
    y1 = np.array([r.y for r in rects])
    x2 = np.array([r.x + r.w for r in rects])
    y2 = np.array([r.y + r.h for r in rects])
    return x1, y1, x2, y2


def descriptor_matrix(
    imgs: np.ndarray,
    rects: list[RectFeature],
    eps: float = NORM_EPS,
    dtype=np.float64,
    chunk: int = 512,
) -> np.ndarray:
    """Block descriptors of every rect for every image: (n, len(rects), 8).

    Images must share one shape; work proceeds in sample chunks to bound
    the transient integral-table memory.
    """
    from .channels import build_channels_batch

    imgs = np.asarray(imgs, dtype=np.float64)
    n = imgs.shape[0]
    x1, y1, x2, y2 = _corner_indices(rects)
    out = np.empty((n, len(rects), 8), dtype=dtype)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        tables = build_channels_batch(imgs[lo:hi])[:, :8]
        raw = (
            tables[:, :, y2, x2]
            - tables[:, :, y1, x2]
            - tables[:, :, y2, x1]
            + tables[:, :, y1, x1]
        )  # (chunk, 8, R)
        raw = np.moveaxis(raw, 1, 2)  # (chunk, R, 8)
        hog_n = np.linalg.norm(raw[:, :, :4], axis=2, keepdims=True) + eps
        ebp_n = np.linalg.norm(raw[:, :, 4:], axis=2, keepdims=True) + eps
        raw[:, :, :4] /= hog_n
        raw[:, :, 4:] /= ebp_n
        out[lo:hi] = raw
    return out


def haar_matrix(
    imgs: np.ndarray,
    feats: list[HaarFeature],
    dtype=np.float64,
    chunk: int = 512,
) -> np.ndarray:
    """Haar values of every feature for every image: (n, len(feats))."""
    from .channels import build_channels_batch

    imgs = np.asarray(imgs, dtype=np.float64)
    n = imgs.shape[0]
    out = np.empty((n, len(feats)), dtype=dtype)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        raw_ii = build_channels_batch(imgs[lo:hi])[:, 8]
        for j, f in enumerate(feats):
            out[lo:hi, j] = _haar_value_batch(raw_ii, f)
    return out


def _box_batch(tabs: np.ndarray, x: int, y: int, w: int, h: int) -> np.ndarray:
    return tabs[:, y + h, x + w] - tabs[:, y, x + w] - tabs[:, y + h, x] + tabs[:, y, x]


def _haar_value_batch(raw_ii: np.ndarray, feat: HaarFeature) -> np.ndarray:
    x, y, w, h = feat.x, feat.y, feat.w, feat.h
    k = feat.kind
    if k == "two-rect-horizontal":
        half = w // 2
        return _box_batch(raw_ii, x + half, y, half, h) - _box_batch(raw_ii, x, y, half, h)
    if k == "two-rect-vertical":
        half = h // 2
        return _box_batch(raw_ii, x, y + half, w, half) - _box_batch(raw_ii, x, y, w, half)
    if k == "three-rect-horizontal":
        third = w // 3
        return 3.0 * _box_batch(raw_ii, x + third, y, third, h) - _box_batch(raw_ii, x, y, w, h)
    if k == "three-rect-vertical":
        third = h // 3
        return 3.0 * _box_batch(raw_ii, x, y + third, w, third) - _box_batch(raw_ii, x, y, w, h)
    if k == "four-rect-diagonal":
        hw, hh = w // 2, h // 2
        return (
            _box_batch(raw_ii, x + hw, y, hw, hh)
            + _box_batch(raw_ii, x, y + hh, hw, hh)
            - _box_batch(raw_ii, x, y, hw, hh)
            - _box_batch(raw_ii, x + hw, y + hh, hw, hh)
        )
    raise ValueError(f"unknown Haar kind: {k}")
