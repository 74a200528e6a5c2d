import numpy as np
import pytest

from rectboost.channels import build_channels, integral_table
from rectboost.features import (
    HAAR_KINDS,
    HaarFeature,
    RectFeature,
    block_descriptor,
    descriptor_matrix,
    enumerate_haar_pool,
    enumerate_rect_pool,
    haar_matrix,
    haar_value,
)


def test_constant_window_descriptor():
    stack = build_channels(np.full((24, 24), 128.0))
    d = block_descriptor(stack, RectFeature(4, 4, 8, 8))
    assert np.all(d[:4] == 0)
    # all zero gradients land in phi1, so the EBP half is (~1, 0, 0, 0)
    assert d[4] == pytest.approx(1.0, abs=1e-4)
    assert np.all(d[5:] == 0)


def test_vertical_edge_descriptor():
    img = np.zeros((24, 24))
    img[:, 12:] = 255.0
    stack = build_channels(img)
    d = block_descriptor(stack, RectFeature(8, 8, 8, 8))
    # gh >= 0 everywhere and gv = 0: hog = (s, 0, s, 0)/||.||, ebp = phi1 only
    assert d[0] == pytest.approx(1 / np.sqrt(2), abs=1e-4)
    assert d[1] == pytest.approx(0.0, abs=1e-9)
    assert d[2] == pytest.approx(1 / np.sqrt(2), abs=1e-4)
    assert d[3] == pytest.approx(0.0, abs=1e-9)
    assert d[4] == pytest.approx(1.0, abs=1e-4)


def test_descriptor_halves_are_unit_norm():
    rng = np.random.default_rng(5)
    stack = build_channels(rng.uniform(0, 255, (24, 24)))
    for _ in range(50):
        w = int(rng.integers(2, 20))
        h = int(rng.integers(2, 20))
        x = int(rng.integers(0, 24 - w))
        y = int(rng.integers(0, 24 - h))
        d = block_descriptor(stack, RectFeature(x, y, w, h))
        assert np.linalg.norm(d[:4]) == pytest.approx(1.0, abs=1e-4)
        assert np.linalg.norm(d[4:]) == pytest.approx(1.0, abs=1e-4)


def test_descriptor_gain_offset_invariance():
    rng = np.random.default_rng(9)
    # intensities kept in [40, 215] so +/-30 offsets don't clip
    img = rng.uniform(40, 215, (24, 24))
    rect = RectFeature(2, 6, 12, 8)
    base = block_descriptor(build_channels(img), rect)
    for alpha in (0.5, 2.0, 10.0):
        for beta in (-30.0, 30.0):
            d = block_descriptor(build_channels(alpha * img + beta), rect)
            assert np.max(np.abs(d - base)) <= 1e-6


def test_rect_pool_count_and_order():
    pool = enumerate_rect_pool(24, 24)
    # sizes 4,8,...,24 at stride 2: sum over w of positions = 11+9+...+1 = 36
    assert len(pool) == 36 * 36 == 1296
    assert pool[0] == RectFeature(0, 0, 4, 4)
    assert pool[-1] == RectFeature(0, 0, 24, 24)
    keys = [(r.w, r.h, r.x, r.y) for r in pool]
    assert keys == sorted(keys)
    assert len(set(pool)) == len(pool)


def test_rect_pool_small_window_empty():
    assert enumerate_rect_pool(3, 3) == []


def test_haar_pool_matches_independent_enumeration():
    pool = enumerate_haar_pool(24, 24)
    # independent reconstruction with a different loop structure
    splits = {
        "two-rect-horizontal": (2, 1),
        "two-rect-vertical": (1, 2),
        "three-rect-horizontal": (3, 1),
        "three-rect-vertical": (1, 3),
        "four-rect-diagonal": (2, 2),
    }
    expected = set()
    for kind in HAAR_KINDS:
        sx, sy = splits[kind]
        for w in range(4, 25, 4):
            for h in range(4, 25, 4):
                if w % sx or h % sy:
                    continue
                for x in range(0, 25 - w, 2):
                    for y in range(0, 25 - h, 2):
                        expected.add(HaarFeature(kind, x, y, w, h))
    assert set(pool) == expected
    assert len(pool) == len(expected)
    # three-rect kinds only admit sizes divisible by 3 from the grid (12, 24)
    assert all(f.w in (12, 24) for f in pool if f.kind == "three-rect-horizontal")


def test_haar_values_on_flat_image_are_zero():
    ii = integral_table(np.full((24, 24), 200.0))
    for kind, w, h in [
        ("two-rect-horizontal", 8, 4),
        ("two-rect-vertical", 4, 8),
        ("three-rect-horizontal", 12, 4),
        ("three-rect-vertical", 4, 12),
        ("four-rect-diagonal", 8, 8),
    ]:
        assert haar_value(ii, HaarFeature(kind, 2, 2, w, h)) == pytest.approx(0.0)


def test_haar_two_rect_step_edge():
    img = np.zeros((8, 8))
    img[:, 4:] = 255.0
    ii = integral_table(img)
    feat = HaarFeature("two-rect-horizontal", 0, 0, 8, 8)
    # filled right half sums 255*32, unfilled left half is 0
    assert haar_value(ii, feat) == 255.0 * 32


def _haar_brute(img, feat):
    x, y, w, h = feat.x, feat.y, feat.w, feat.h
    sub = img[y : y + h, x : x + w]
    if feat.kind == "two-rect-horizontal":
        return sub[:, w // 2 :].sum() - sub[:, : w // 2].sum()
    if feat.kind == "two-rect-vertical":
        return sub[h // 2 :, :].sum() - sub[: h // 2, :].sum()
    if feat.kind == "three-rect-horizontal":
        t = w // 3
        return 2 * sub[:, t : 2 * t].sum() - sub[:, :t].sum() - sub[:, 2 * t :].sum()
    if feat.kind == "three-rect-vertical":
        t = h // 3
        return 2 * sub[t : 2 * t, :].sum() - sub[:t, :].sum() - sub[2 * t :, :].sum()
    hw, hh = w // 2, h // 2
    return (
        sub[:hh, hw:].sum() + sub[hh:, :hw].sum() - sub[:hh, :hw].sum() - sub[hh:, hw:].sum()
    )


def test_haar_values_match_brute_force():
    rng = np.random.default_rng(17)
    img = rng.uniform(0, 255, (24, 24))
    ii = integral_table(img)
    pool = enumerate_haar_pool(24, 24)
    idx = rng.choice(len(pool), size=200, replace=False)
    for i in idx:
        feat = pool[i]
        assert haar_value(ii, feat) == pytest.approx(_haar_brute(img, feat), rel=1e-9, abs=1e-6)


def test_descriptor_matrix_matches_scalar_path():
    rng = np.random.default_rng(23)
    imgs = rng.uniform(0, 255, (4, 24, 24))
    rects = [RectFeature(0, 0, 4, 4), RectFeature(3, 5, 10, 6), RectFeature(0, 0, 24, 24)]
    mat = descriptor_matrix(imgs, rects)
    for i in range(4):
        stack = build_channels(imgs[i])
        for j, r in enumerate(rects):
            assert np.allclose(mat[i, j], block_descriptor(stack, r), atol=1e-9)


def test_haar_matrix_matches_scalar_path():
    rng = np.random.default_rng(29)
    imgs = rng.uniform(0, 255, (3, 24, 24))
    feats = [
        HaarFeature("two-rect-horizontal", 0, 0, 8, 4),
        HaarFeature("three-rect-vertical", 4, 0, 4, 12),
        HaarFeature("four-rect-diagonal", 8, 8, 8, 8),
    ]
    mat = haar_matrix(imgs, feats)
    for i in range(3):
        ii = integral_table(imgs[i])
        for j, f in enumerate(feats):
            assert mat[i, j] == pytest.approx(haar_value(ii, f), rel=1e-9)
