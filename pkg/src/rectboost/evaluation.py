"""Threshold-sweep curves, CSV/figure emission and ground-truth files."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import Cascade, StrongClassifier, score_patches

CSV_HEADER = "threshold,detection_rate,false_positives"


@dataclass
class CurvePoint:
    threshold: float
    detection_rate: float
    false_positives: int


def model_scores(model, imgs) -> np.ndarray:
    """Final-classifier raw scores; for a cascade, windows rejected by an
    earlier stage score -inf so the sweep only moves the last threshold."""
    if isinstance(model, StrongClassifier):
        return score_patches(model, imgs)
    if isinstance(model, Cascade):
        imgs = np.asarray(imgs, dtype=np.float64)
        n = imgs.shape[0]
        ok = np.ones(n, dtype=bool)
        for stage in model.stages[:-1]:
            if not ok.any():
                break
            raw = score_patches(stage, imgs[ok])
            sub = ok.copy()
            sub[ok] = raw >= stage.threshold
            ok = sub
        out = np.full(n, -np.inf)
        if ok.any():
            out[ok] = score_patches(model.stages[-1], imgs[ok])
        return out
    raise TypeError(f"unsupported model type {type(model)!r}")


def sweep_scores(pos_scores, neg_scores) -> list[CurvePoint]:
    """One curve point per distinct score, descending threshold."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 and neg.size == 0:
        raise ValueError("test set is empty")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    points = []
    for t in thresholds:
        det = float(np.mean(pos >= t)) if pos.size else 0.0
        fp = int(np.sum(neg >= t))
        points.append(CurvePoint(float(t), det, fp))
    return points


def evaluate_curves(
    model,
    pos_imgs,
    neg_imgs,
    csv_path=None,
    fig_path=None,
) -> list[CurvePoint]:
    """Sweep the final-classifier threshold over a labeled patch test set.

    Optionally writes the delimited curve and a rendered figure next to it.
    """
    pos_imgs = np.asarray(pos_imgs, dtype=np.float64)
    neg_imgs = np.asarray(neg_imgs, dtype=np.float64)
    if pos_imgs.shape[0] == 0 or neg_imgs.shape[0] == 0:
        raise ValueError("test set must contain both classes")
    points = sweep_scores(model_scores(model, pos_imgs), model_scores(model, neg_imgs))
    if csv_path is not None:
        write_curve_csv(points, csv_path)
    if fig_path is not None:
        plot_curve(points, fig_path)
    return points


def test_error_at(model, pos_imgs, neg_imgs, threshold: float) -> float:
    ps = model_scores(model, pos_imgs)
    ns = model_scores(model, neg_imgs)
    wrong = int(np.sum(ps < threshold)) + int(np.sum(ns >= threshold))
    return wrong / (ps.size + ns.size)


def detection_rate_at_fp(points: list[CurvePoint], fp_budget: int) -> float:
    """Highest detection rate among sweep points with at most fp_budget
    false positives."""
    rates = [p.detection_rate for p in points if p.false_positives <= fp_budget]
    return max(rates) if rates else 0.0


def write_curve_csv(points: list[CurvePoint], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for p in points:
            fh.write(f"{p.threshold:.9g},{p.detection_rate:.9g},{p.false_positives}\n")


def read_curve_csv(path) -> list[CurvePoint]:
    points = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            t, d, f = line.strip().split(",")
            points.append(CurvePoint(float(t), float(d), int(f)))
    return points


def plot_curve(points: list[CurvePoint], path) -> None:
    """Render the sweep as false positives vs detection rate."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    fps = [p.false_positives for p in points]
    det = [p.detection_rate for p in points]
    ax.plot(fps, det, marker=".", lw=1.2)
    ax.set_xlabel("false positives")
    ax.set_ylabel("detection rate")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def load_ground_truth(path) -> dict[str, list[tuple[int, int, int, int]]]:
    """Parse `filename x y w h` lines into per-image face boxes."""
    boxes: dict[str, list[tuple[int, int, int, int]]] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 'filename x y w h'")
            name = parts[0]
            x, y, w, h = (int(v) for v in parts[1:])
            boxes.setdefault(name, []).append((x, y, w, h))
    return boxes


def write_detections(dets, path) -> None:
    from .detector import iround

    with open(path, "w", encoding="ascii") as fh:
        for d in dets:
            fh.write(f"{iround(d.x)} {iround(d.y)} {iround(d.w)} {iround(d.h)} {d.score:.9g}\n")
