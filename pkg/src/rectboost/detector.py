"""Scale-pyramid sliding-window scanning, merging and ground-truth matching.

Channels and integrals are built once per image; window scaling is done
by scaling each learner's rectangles (with round-half-up discretization)
rather than resampling the image.  Descriptor normalization keeps the
values comparable across scales; Haar values are rescaled by the area
ratio of the scaled feature.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .boosting import Cascade, HaarStumpLearner, StrongClassifier
from .channels import ChannelStack, build_channels
from .features import NORM_EPS, _HAAR_SPLIT
from .weak import JointLearner, MultiDimStump

SCALE_FACTOR = 1.2
BASE_WINDOW = 24
MERGE_IOU = 0.3
MATCH_CENTER_TOL = 0.25
MATCH_SIZE_RATIO = 1.5


def iround(x: float) -> int:
    """Round half up; all scale discretization goes through here."""
    return int(math.floor(x + 0.5))


@dataclass
class Detection:
    x: float
    y: float
    w: float
    h: float
    score: float


@dataclass
class MatchReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    per_face_counts: list[int] = field(default_factory=list)


def _scaled_rect(rect, scale: float, wsize: int) -> tuple[int, int, int, int]:
    rx = min(iround(rect.x * scale), wsize - 1)
    ry = min(iround(rect.y * scale), wsize - 1)
    rw = max(1, iround(rect.w * scale))
    rh = max(1, iround(rect.h * scale))
    rw = min(rw, wsize - rx)
    rh = min(rh, wsize - ry)
    return rx, ry, rw, rh


def _rect_descriptors(
    stack: ChannelStack, rect, scale: float, wsize: int, wxs: np.ndarray, wys: np.ndarray
) -> np.ndarray:
    """(n_windows, 8) normalized block descriptors of one scaled rect."""
    rx, ry, rw, rh = _scaled_rect(rect, scale, wsize)
    x1 = wxs + rx
    y1 = wys + ry
    x2 = x1 + rw
    y2 = y1 + rh
    ii = stack.integrals
    raw = (
        ii[:, y2, x2] - ii[:, y1, x2] - ii[:, y2, x1] + ii[:, y1, x1]
    ).T  # (n, 8)
    hog_n = np.linalg.norm(raw[:, :4], axis=1, keepdims=True) + NORM_EPS
    ebp_n = np.linalg.norm(raw[:, 4:], axis=1, keepdims=True) + NORM_EPS
    out = np.empty_like(raw)
    out[:, :4] = raw[:, :4] / hog_n
    out[:, 4:] = raw[:, 4:] / ebp_n
    return out


def _box(ii: np.ndarray, xs: np.ndarray, ys: np.ndarray, w: int, h: int) -> np.ndarray:
    return ii[ys + h, xs + w] - ii[ys, xs + w] - ii[ys + h, xs] + ii[ys, xs]


def _haar_values(
    stack: ChannelStack, feat, scale: float, wsize: int, wxs: np.ndarray, wys: np.ndarray
) -> np.ndarray:
    sx, sy = _HAAR_SPLIT[feat.kind]
    rx = min(iround(feat.x * scale), wsize - 1)
    ry = min(iround(feat.y * scale), wsize - 1)
    rw = (min(max(sx, iround(feat.w * scale)), wsize - rx) // sx) * sx
    rh = (min(max(sy, iround(feat.h * scale)), wsize - ry) // sy) * sy
    if rw < sx or rh < sy:
        rx = max(0, wsize - sx)
        ry = max(0, wsize - sy)
        rw, rh = sx, sy
    ii = stack.raw_integral
    x = wxs + rx
    y = wys + ry
    k = feat.kind
    if k == "two-rect-horizontal":
        half = rw // 2
        v = _box(ii, x + half, y, half, rh) - _box(ii, x, y, half, rh)
    elif k == "two-rect-vertical":
        half = rh // 2
        v = _box(ii, x, y + half, rw, half) - _box(ii, x, y, rw, half)
    elif k == "three-rect-horizontal":
        third = rw // 3
        v = 3.0 * _box(ii, x + third, y, third, rh) - _box(ii, x, y, rw, rh)
    elif k == "three-rect-vertical":
        third = rh // 3
        v = 3.0 * _box(ii, x, y + third, rw, third) - _box(ii, x, y, rw, rh)
    elif k == "four-rect-diagonal":
        hw, hh = rw // 2, rh // 2
        v = (
            _box(ii, x + hw, y, hw, hh)
            + _box(ii, x, y + hh, hw, hh)
            - _box(ii, x, y, hw, hh)
            - _box(ii, x + hw, y + hh, hw, hh)
        )
    else:
        raise ValueError(f"unknown Haar kind: {k}")
    return v * ((feat.w * feat.h) / (rw * rh))


def stage_raw_scores(
    sc: StrongClassifier,
    stack: ChannelStack,
    wxs: np.ndarray,
    wys: np.ndarray,
    scale: float,
    wsize: int,
) -> np.ndarray:
    """Raw ensemble scores for windows of one scale at given corners."""
    scores = np.zeros(wxs.size)
    for learner, alpha in sc.rounds:
        if isinstance(learner, MultiDimStump):
            d = _rect_descriptors(stack, learner.rect, scale, wsize, wxs, wys)
            pred = learner.predict(d)
        elif isinstance(learner, JointLearner):
            cols = np.column_stack(
                [
                    _rect_descriptors(stack, rect, scale, wsize, wxs, wys)[:, dim]
                    for rect, dim in learner.refs
                ]
            )
            pred = learner.predict_from_columns(cols)
        elif isinstance(learner, HaarStumpLearner):
            v = _haar_values(stack, learner.feature, scale, wsize, wxs, wys)
            pred = learner.stump.predict(v)
        else:
            raise TypeError(f"unknown learner type {type(learner)!r}")
        scores += alpha * pred
    return scores


def pyramid_sizes(width: int, height: int, base: int = BASE_WINDOW,
                  scale_factor: float = SCALE_FACTOR) -> list[int]:
    sizes = []
    j = 0
    while True:
        size = iround(base * scale_factor**j)
        if size > min(width, height):
            break
        sizes.append(size)
        j += 1
    return sizes


def scan(
    img,
    cascade: Cascade,
    scale_factor: float = SCALE_FACTOR,
    step: float = 1.0,
) -> list[Detection]:
    """All windows of the scale pyramid accepted by every cascade stage.

    Results come back in deterministic (scale, y, x) order with the sum
    of stage margins as the score.
    """
    img = np.asarray(img, dtype=np.float64)
    H, W = img.shape
    if min(H, W) < cascade.window:
        return []
    stack = build_channels(img)
    detections: list[Detection] = []
    j = 0
    while True:
        size = iround(cascade.window * scale_factor**j)
        if size > min(W, H):
            break
        stride = max(1, iround(step * scale_factor**j))
        xs = np.arange(0, W - size + 1, stride)
        ys = np.arange(0, H - size + 1, stride)
        YY, XX = np.meshgrid(ys, xs, indexing="ij")
        wxs = XX.ravel()
        wys = YY.ravel()
        scale = size / cascade.window

        ok = np.ones(wxs.size, dtype=bool)
        margins = np.zeros(wxs.size)
        for stage in cascade.stages:
            if not ok.any():
                break
            raw = stage_raw_scores(stage, stack, wxs[ok], wys[ok], scale, size)
            margins[ok] += raw - stage.threshold
            sub = ok.copy()
            sub[ok] = raw >= stage.threshold
            ok = sub
        for i in np.flatnonzero(ok):
            detections.append(
                Detection(float(wxs[i]), float(wys[i]), float(size), float(size),
                          float(margins[i]))
            )
        j += 1
    return detections


def iou(a: Detection, b: Detection) -> float:
    x1 = max(a.x, b.x)
    y1 = max(a.y, b.y)
    x2 = min(a.x + a.w, b.x + b.w)
    y2 = min(a.y + a.h, b.y + b.h)
    inter = max(0.0, x2 - x1) * max(0.0, y2 - y1)
    union = a.w * a.h + b.w * b.h - inter
    return inter / union if union > 0 else 0.0


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def merge_detections(dets: list[Detection], iou_thresh: float = MERGE_IOU) -> list[Detection]:
    """Group by the transitive closure of IoU overlap; one box per group.

    Each group's output box averages the member corners and keeps the
    maximum score; groups are emitted in first-member order.
    """
    n = len(dets)
    if n == 0:
        return []
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if iou(dets[i], dets[j]) >= iou_thresh:
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    merged = []
    for root in sorted(groups):
        members = [dets[i] for i in groups[root]]
        x1 = float(np.mean([d.x for d in members]))
        y1 = float(np.mean([d.y for d in members]))
        x2 = float(np.mean([d.x + d.w for d in members]))
        y2 = float(np.mean([d.y + d.h for d in members]))
        merged.append(
            Detection(x1, y1, x2 - x1, y2 - y1, max(d.score for d in members))
        )
    return merged


def match_detections(
    merged: list[Detection],
    ground_truth: list[tuple[float, float, float, float]],
    match_tol: float = MATCH_CENTER_TOL,
    size_ratio: float = MATCH_SIZE_RATIO,
) -> MatchReport:
    """Score detections against ground truth, one TP per face.

    A detection matches a face when the center distance is within
    match_tol * face width and the size ratio within [1/size_ratio,
    size_ratio].  Detections are consumed by descending score; extra
    detections of an already-matched face count as false positives.
    """
    faces = [tuple(map(float, g)) for g in ground_truth]
    matched = [False] * len(faces)
    counts = [0] * len(faces)
    tp = fp = 0
    order = sorted(range(len(merged)), key=lambda i: -merged[i].score)
    for i in order:
        d = merged[i]
        dcx, dcy = d.x + d.w / 2.0, d.y + d.h / 2.0
        best_face, best_dist = -1, float("inf")
        for fi, (fx, fy, fw, fh) in enumerate(faces):
            fcx, fcy = fx + fw / 2.0, fy + fh / 2.0
            dist = math.hypot(dcx - fcx, dcy - fcy)
            ratio = d.w / fw
            if dist <= match_tol * fw and 1.0 / size_ratio <= ratio <= size_ratio:
                if dist < best_dist:
                    best_face, best_dist = fi, dist
        if best_face < 0:
            fp += 1
        else:
            counts[best_face] += 1
            if matched[best_face]:
                fp += 1
            else:
                matched[best_face] = True
                tp += 1
    fn = matched.count(False)
    return MatchReport(tp, fp, fn, counts)
