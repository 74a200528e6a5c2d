"""Deterministic synthetic corpus and the R/M/L patch manipulations.

The corpus is a desk-scale stand-in for a face training set: positives
carry a fixed dark "T" bar structure over textured noise, negatives are
the same texture without the structure.  Every randomized step derives
its generator from (seed, stream, index), so parallel and serial runs
produce identical bytes.
"""

from dataclasses import dataclass, field

import numpy as np

from scipy.ndimage import gaussian_filter

from .imaging import illuminate_patch, resize_bilinear, rotate_patch, translate_patch

PATCH = 24
# dark-bar layout of the positive structure (inclusive pixel ranges)
HBAR_ROWS = (6, 9)
HBAR_COLS = (4, 19)
VBAR_COLS = (10, 13)
VBAR_ROWS = (9, 19)
BAR_DROP = 90.0  # gray levels subtracted under the bars


@dataclass
class TrainingSet:
    positives: np.ndarray  # (n_pos, 24, 24)
    negatives: np.ndarray  # (n_neg, 24, 24)
    seed: int
    provenance: dict = field(default_factory=dict)

    @property
    def images(self) -> np.ndarray:
        return np.concatenate([self.positives, self.negatives])

    @property
    def labels(self) -> np.ndarray:
        return np.concatenate(
            [np.ones(len(self.positives)), -np.ones(len(self.negatives))]
        )


def bar_template(patch: int = PATCH, which: str = "HV") -> np.ndarray:
    """Binary mask of the bar structure (1 under the requested bars)."""
    mask = np.zeros((patch, patch))
    if "H" in which:
        mask[HBAR_ROWS[0] : HBAR_ROWS[1] + 1, HBAR_COLS[0] : HBAR_COLS[1] + 1] = 1.0
    if "V" in which:
        mask[VBAR_ROWS[0] : VBAR_ROWS[1] + 1, VBAR_COLS[0] : VBAR_COLS[1] + 1] = 1.0
    return mask


def _textured_noise(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Mid-gray background with low-frequency structure, fine grain and
    random dark clutter bars (present in both classes)."""
    coarse = rng.normal(0.0, 18.0, size=(max(2, h // 4), max(2, w // 4)))
    base = 128.0 + resize_bilinear(coarse, h, w) + rng.normal(0.0, 10.0, size=(h, w))
    # planar shading ramp: uneven illumination across the patch
    sy, sx = rng.uniform(-2.5, 2.5, size=2)
    ys, xs = np.arange(h) - (h - 1) / 2.0, np.arange(w) - (w - 1) / 2.0
    base += sy * ys[:, None] + sx * xs[None, :]
    n_bars = int(rng.integers(1, 4)) * max(1, (h * w) // (PATCH * PATCH))
    clutter = np.zeros((h, w))
    for _ in range(n_bars):
        thick = int(rng.integers(3, 7))
        length = int(rng.integers(8, 17))
        drop = rng.uniform(50.0, 110.0)
        if rng.integers(2):
            bh, bw = thick, length
        else:
            bh, bw = length, thick
        y = int(rng.integers(0, max(1, h - bh + 1)))
        x = int(rng.integers(0, max(1, w - bw + 1)))
        clutter[y : y + bh, x : x + bw] = np.maximum(clutter[y : y + bh, x : x + bw], drop)
    # soft edges: clutter matches the bar structure in intensity terms
    # but carries much weaker gradients than the sharp positive bars
    base -= gaussian_filter(clutter, sigma=1.5)
    return np.clip(base, 20.0, 235.0)


def _synth_patch(rng: np.random.Generator, positive: bool) -> np.ndarray:
    patch = _textured_noise(rng, PATCH, PATCH)
    if positive:
        which = "HV"
    else:
        # half the negatives carry one sharp bar: only the co-occurrence
        # of both bars marks a positive
        which = ("H", "V", "", "")[int(rng.integers(4))]
    if which:
        mask = bar_template(which=which)
        dx, dy = int(rng.integers(-1, 2)), int(rng.integers(-1, 2))
        mask = translate_patch(mask, dx, dy)
        drop = rng.uniform(60.0, BAR_DROP + 30.0)
        patch = np.where(mask > 0.5, np.maximum(patch - drop, 5.0), patch)
    gain = rng.uniform(0.55, 1.45)
    offset = rng.uniform(-25.0, 25.0)
    return np.clip(patch * gain + offset, 0.0, 255.0)


def synth_corpus(seed: int, n_pos: int, n_neg: int) -> TrainingSet:
    """Deterministic labeled 24x24 corpus; positive and negative streams
    draw from disjoint sub-seeds."""
    if n_pos < 1 or n_neg < 1:
        raise ValueError("need at least one sample per class")
    positives = np.stack(
        [_synth_patch(np.random.default_rng([seed, 0, i]), True) for i in range(n_pos)]
    )
    negatives = np.stack(
        [_synth_patch(np.random.default_rng([seed, 1, i]), False) for i in range(n_neg)]
    )
    return TrainingSet(
        positives=positives,
        negatives=negatives,
        seed=seed,
        provenance={"source": "synthetic-bar-corpus", "n_pos": n_pos, "n_neg": n_neg},
    )


def synth_negative_images(seed: int, count: int, size: int = 100) -> list[np.ndarray]:
    """Full-size textured negative images for cascade bootstrapping.

    Sharp single-bar distractors (the hard-negative structure of the
    patch corpus) are scattered over the texture so later cascade layers
    have something to mine.
    """
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, 2, i])
        img = _textured_noise(rng, size, size)
        n_bars = max(1, (size * size) // (3 * PATCH * PATCH))
        for _ in range(n_bars):
            thick = int(rng.integers(3, 7))
            length = int(rng.integers(10, 17))
            drop = rng.uniform(60.0, BAR_DROP + 30.0)
            if rng.integers(2):
                bh, bw = thick, length
            else:
                bh, bw = length, thick
            y = int(rng.integers(0, max(1, img.shape[0] - bh + 1)))
            x = int(rng.integers(0, max(1, img.shape[1] - bw + 1)))
            img[y : y + bh, x : x + bw] = np.maximum(img[y : y + bh, x : x + bw] - drop, 5.0)
        out.append(img)
    return out


def augment(patches: np.ndarray, flags: str, seed: int) -> np.ndarray:
    """Apply the R (rotate), M (translate), L (illumination) manipulations.

    Flags compose in R, M, L order regardless of the order given.
    R: uniform angle in [-15, +15] degrees, bilinear, replicate border.
    M: per-axis integer shift in [-2, +2].
    L: p -> clamp(a p + b) with a in [0.6, 1.4], b in [-25, +25].
    """
    flags = flags.upper()
    unknown = set(flags) - set("RML")
    if unknown:
        raise ValueError(f"unknown augmentation flags: {sorted(unknown)}")
    patches = np.asarray(patches, dtype=np.float64)
    out = np.empty_like(patches)
    for i, patch in enumerate(patches):
        rng = np.random.default_rng([seed, 3, i])
        p = patch
        if "R" in flags:
            p = rotate_patch(p, float(rng.uniform(-15.0, 15.0)))
        if "M" in flags:
            p = translate_patch(p, int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
        if "L" in flags:
            p = illuminate_patch(p, float(rng.uniform(0.6, 1.4)), float(rng.uniform(-25.0, 25.0)))
        out[i] = p
    return out
