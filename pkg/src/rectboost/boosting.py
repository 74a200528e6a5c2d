"""AdaBoost strong classifiers and bootstrapped cascades.

A "feature space" wraps one weak-learner family over a fixed training
sample: it owns the precomputed value matrices and answers one question
per boosting round — the best weak learner under the current weights.
Candidate search runs in float32 on presorted matrices for speed; the
selected learner is refit in float64 so reported errors are exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .features import (
    HaarFeature,
    RectFeature,
    descriptor_matrix,
    enumerate_haar_pool,
    enumerate_rect_pool,
    haar_matrix,
)
from .imaging import resize_bilinear
from .weak import (
    JointLearner,
    MultiDimStump,
    PresortedColumns,
    Stump1D,
    greedy_sparse_lsq,
    train_multidim_stump,
    train_stump_1d,
    weighted_error,
)

EPS_CLAMP = 1e-10
WINDOW = 24


@dataclass
class HaarStumpLearner:
    """A 1-D stump on one Haar feature (the baseline weak learner)."""

    feature: HaarFeature
    stump: Stump1D
    trained_error: float = float("nan")


@dataclass
class RoundRecord:
    epsilon: float
    alpha: float
    bound: float
    train_error: float
    weight_sum: float


@dataclass
class StrongClassifier:
    rounds: list  # (learner, alpha) pairs
    threshold: float
    feature_kind: str  # rect-single | rect-joint | haar
    joint_k: int | None = None
    window: int = WINDOW
    history: list = field(default_factory=list)  # RoundRecord, not serialized
    diagnostics: list = field(default_factory=list)


@dataclass
class Cascade:
    stages: list
    window: int = WINDOW
    training_log: list = field(default_factory=list)


@dataclass
class CascadeConfig:
    rounds_per_layer: int = 20
    target_d: float = 0.995
    neg_per_layer: int | None = None  # default: number of positives
    max_layers: int = 10
    feature_kind: str = "rect-single"
    joint_k: int = 2
    min_size: int = 4
    size_step: int = 4
    pos_stride: int = 2
    bootstrap_attempt_factor: int = 1000


class RectSingleSpace:
    """Per-round search over projection stumps, one per pooled rectangle."""

    kind = "rect-single"

    def __init__(self, imgs, labels, rects: list[RectFeature], ridge: float = 1e-8):
        self.rects = rects
        self.labels = np.asarray(labels, dtype=np.float64)
        self.D32 = descriptor_matrix(imgs, rects, dtype=np.float32)  # (n, R, 8)
        self.n, self.R = self.D32.shape[:2]
        self.ridge = ridge
        ones = np.ones((self.n, self.R, 1), dtype=np.float32)
        # (R, n, 9) layout for batched normal equations
        self.Da = np.ascontiguousarray(
            np.concatenate([self.D32, ones], axis=2).transpose(1, 0, 2)
        )

    def _batched_scores(self, y: np.ndarray, w: np.ndarray, chunk: int = 256) -> np.ndarray:
        w32 = w.astype(np.float32)
        wy32 = (w * y).astype(np.float32)
        scores = np.empty((self.n, self.R), dtype=np.float32)
        eye = self.ridge * np.eye(9)
        for lo in range(0, self.R, chunk):
            hi = min(lo + chunk, self.R)
            Da = self.Da[lo:hi]                       # (c, n, 9)
            WDa = Da * w32[None, :, None]
            A = np.matmul(Da.transpose(0, 2, 1), WDa).astype(np.float64) + eye
            b = np.matmul(Da.transpose(0, 2, 1), wy32[None, :, None].astype(np.float32))
            beta = np.linalg.solve(A, b.astype(np.float64))  # (c, 9, 1)
            scores[:, lo:hi] = np.matmul(Da, beta.astype(np.float32))[:, :, 0].T
        return scores

    def best_round(self, w: np.ndarray):
        y = self.labels
        scores = self._batched_scores(y, w)
        pre = PresortedColumns(scores, y)
        _, _, err = pre.search(w.astype(np.float32))
        r = int(np.argmin(err))
        D64 = self.D32[:, r, :].astype(np.float64)
        learner = train_multidim_stump(D64, y, w, self.rects[r])
        learner.pool_index = r
        pred = learner.predict(D64)
        eps = weighted_error(pred, y, w)
        return learner, eps, pred


class RectJointSpace:
    """Per-round joint learner over the flattened scalar descriptor pool."""

    def __init__(self, imgs, labels, rects: list[RectFeature], k: int):
        self.rects = rects
        self.k = k
        self.kind = "rect-joint"
        self.labels = np.asarray(labels, dtype=np.float64)
        D = descriptor_matrix(imgs, rects, dtype=np.float32)
        self.n = D.shape[0]
        self.V = np.ascontiguousarray(D.reshape(self.n, -1))  # (n, R*8)
        self.refs = [(rect, dim) for rect in rects for dim in range(8)]
        if not 1 <= k <= len(self.refs):
            raise ValueError(f"joint cardinality {k} exceeds pool size {len(self.refs)}")
        self.pre = PresortedColumns(self.V, self.labels)

    def best_round(self, w: np.ndarray):
        y = self.labels
        thr, pol, _ = self.pre.search(w.astype(np.float32))
        Z = np.where(self.V >= thr[None, :].astype(np.float32), np.float32(1), np.float32(-1))
        Z *= pol
        support, beta, residual = greedy_sparse_lsq(Z, y, w, self.k)
        stumps = [Stump1D(threshold=float(thr[j]), polarity=int(pol[j])) for j in support]
        learner = JointLearner(
            support=support,
            stumps=stumps,
            beta=beta[:-1],
            beta0=float(beta[-1]),
            residual=residual,
        )
        learner.refs = [self.refs[j] for j in support]
        pred = learner.predict_from_columns(self.V[:, support].astype(np.float64))
        eps = weighted_error(pred, y, w)
        learner.trained_error = eps
        learner.degenerate = eps >= 0.5
        return learner, eps, pred


class HaarSpace:
    """Per-round search over plain stumps on the Haar feature pool."""

    kind = "haar"

    def __init__(self, imgs, labels, feats: list[HaarFeature]):
        self.feats = feats
        self.labels = np.asarray(labels, dtype=np.float64)
        self.V = haar_matrix(imgs, feats, dtype=np.float32)
        self.pre = PresortedColumns(self.V, self.labels)

    def best_round(self, w: np.ndarray):
        y = self.labels
        _, _, err = self.pre.search(w.astype(np.float32))
        j = int(np.argmin(err))
        col = self.V[:, j].astype(np.float64)
        stump = train_stump_1d(col, y, w)
        learner = HaarStumpLearner(feature=self.feats[j], stump=stump,
                                   trained_error=stump.trained_error)
        learner.pool_index = j
        pred = stump.predict(col)
        eps = weighted_error(pred, y, w)
        return learner, eps, pred


def make_space(kind, imgs, labels, window: int = WINDOW, joint_k: int = 2,
               min_size: int = 4, size_step: int = 4, pos_stride: int = 2):
    if kind == "rect-single":
        rects = enumerate_rect_pool(window, window, min_size, size_step, pos_stride)
        return RectSingleSpace(imgs, labels, rects)
    if kind == "rect-joint":
        rects = enumerate_rect_pool(window, window, min_size, size_step, pos_stride)
        return RectJointSpace(imgs, labels, rects, joint_k)
    if kind == "haar":
        feats = enumerate_haar_pool(window, window, min_size, size_step, pos_stride)
        return HaarSpace(imgs, labels, feats)
    raise ValueError(f"unknown feature kind: {kind}")


def train_adaboost(space, T: int) -> StrongClassifier:
    """Discrete AdaBoost over the given feature space.

    A round whose best weak learner still has weighted error >= 0.5 is
    aborted with a diagnostic and training stops there.  The standard
    error bound prod_t 2 sqrt(eps (1 - eps)) is checked every round.
    """
    y = space.labels
    n = y.size
    if T < 1:
        raise ValueError("T must be >= 1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training sample must contain both classes")

    w = np.full(n, 1.0 / n)
    sc = StrongClassifier(
        rounds=[], threshold=0.0, feature_kind=space.kind,
        joint_k=getattr(space, "k", None),
    )
    agg = np.zeros(n)
    bound = 1.0
    for t in range(T):
        learner, eps, pred = space.best_round(w)
        if eps >= 0.5:
            sc.diagnostics.append(
                f"round {t}: best weak learner error {eps:.6f} >= 0.5, aborting"
            )
            break
        eps_c = min(max(eps, EPS_CLAMP), 1.0 - EPS_CLAMP)
        alpha = 0.5 * math.log((1.0 - eps_c) / eps_c)
        sc.rounds.append((learner, alpha))
        agg += alpha * pred
        train_error = float(np.mean(np.where(agg >= 0, 1.0, -1.0) != y))
        bound *= 2.0 * math.sqrt(eps_c * (1.0 - eps_c))
        w = w * np.exp(-alpha * y * pred)
        w /= w.sum()
        sc.history.append(RoundRecord(eps, alpha, bound, train_error, float(w.sum())))
        if train_error > bound + 1e-9:
            raise RuntimeError(
                f"round {t}: training error {train_error} exceeds bound {bound}"
            )
    return sc


def required_rects(sc: StrongClassifier) -> list[RectFeature]:
    rects = []
    for learner, _ in sc.rounds:
        if isinstance(learner, MultiDimStump):
            rects.append(learner.rect)
        elif isinstance(learner, JointLearner):
            rects.extend(rect for rect, _ in learner.refs)
    seen, out = set(), []
    for r in rects:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def score_patches(sc: StrongClassifier, imgs) -> np.ndarray:
    """Raw ensemble scores sum_t alpha_t h_t for a batch of 24x24 patches."""
    imgs = np.asarray(imgs, dtype=np.float64)
    n = imgs.shape[0]
    rects = required_rects(sc)
    rect_idx = {r: i for i, r in enumerate(rects)}
    D = descriptor_matrix(imgs, rects) if rects else None
    feats = [l.feature for l, _ in sc.rounds if isinstance(l, HaarStumpLearner)]
    feats = list(dict.fromkeys(feats))
    H = haar_matrix(imgs, feats) if feats else None
    feat_idx = {f: i for i, f in enumerate(feats)}

    scores = np.zeros(n)
    for learner, alpha in sc.rounds:
        if isinstance(learner, MultiDimStump):
            pred = learner.predict(D[:, rect_idx[learner.rect], :])
        elif isinstance(learner, JointLearner):
            cols = np.column_stack(
                [D[:, rect_idx[rect], dim] for rect, dim in learner.refs]
            )
            pred = learner.predict_from_columns(cols)
        elif isinstance(learner, HaarStumpLearner):
            pred = learner.stump.predict(H[:, feat_idx[learner.feature]])
        else:
            raise TypeError(f"unknown learner type {type(learner)!r}")
        scores += alpha * pred
    return scores


def detection_threshold(pos_scores, target_d: float) -> float:
    """Largest threshold keeping at least ceil(target_d * P) positives."""
    s = np.sort(np.asarray(pos_scores, dtype=np.float64))[::-1]
    if s.size == 0:
        raise ValueError("validation positive set is empty")
    if not 0.0 < target_d <= 1.0:
        raise ValueError(f"target detection rate must be in (0, 1], got {target_d}")
    need = math.ceil(target_d * s.size)
    return float(s[need - 1])


def adjust_threshold(sc: StrongClassifier, validation_positives, target_d: float) -> float:
    """Set the operating threshold from validation positive patches."""
    scores = score_patches(sc, validation_positives)
    sc.threshold = detection_threshold(scores, target_d)
    return sc.threshold


def cascade_scores(cascade: Cascade, imgs) -> tuple[np.ndarray, np.ndarray]:
    """(accepted mask, summed stage margins) for a batch of patches."""
    imgs = np.asarray(imgs, dtype=np.float64)
    n = imgs.shape[0]
    ok = np.ones(n, dtype=bool)
    margins = np.zeros(n)
    for stage in cascade.stages:
        if not ok.any():
            break
        raw = score_patches(stage, imgs[ok])
        m = raw - stage.threshold
        margins[ok] += m
        sub = ok.copy()
        sub[ok] = raw >= stage.threshold
        ok = sub
    return ok, margins


_SCALE_FACTOR = 1.2


def bootstrap_negatives(
    stages: list[StrongClassifier],
    negative_images: list[np.ndarray],
    n: int,
    rng_seed,
    window: int = WINDOW,
    attempt_factor: int = 1000,
    batch: int = 512,
) -> tuple[np.ndarray, bool]:
    """Random windows from negative images that pass every existing stage.

    Returns (windows, shortfall): shortfall is set when fewer than n
    windows were found within attempt_factor * n sampled candidates.
    """
    rng = np.random.default_rng(rng_seed)
    cascade = Cascade(stages=list(stages), window=window)
    per_image_sizes = []
    for img in negative_images:
        short = min(img.shape)
        sizes = []
        j = 0
        while True:
            size = int(math.floor(window * _SCALE_FACTOR**j + 0.5))
            if size > short:
                break
            sizes.append(size)
            j += 1
        per_image_sizes.append(sizes)
    usable = [i for i, s in enumerate(per_image_sizes) if s]
    if not usable:
        return np.empty((0, window, window)), True

    kept = []
    attempts = 0
    max_attempts = attempt_factor * n
    while len(kept) < n and attempts < max_attempts:
        b = min(batch, max_attempts - attempts)
        patches = np.empty((b, window, window))
        for i in range(b):
            img_i = usable[rng.integers(len(usable))]
            img = negative_images[img_i]
            size = per_image_sizes[img_i][rng.integers(len(per_image_sizes[img_i]))]
            x = int(rng.integers(img.shape[1] - size + 1))
            y = int(rng.integers(img.shape[0] - size + 1))
            crop = img[y : y + size, x : x + size]
            patches[i] = crop if size == window else resize_bilinear(crop, window, window)
        attempts += b
        ok, _ = cascade_scores(cascade, patches)
        kept.extend(patches[ok])
    shortfall = len(kept) < n
    if kept:
        out = np.stack(kept[:n])
    else:
        out = np.empty((0, window, window))
    return out, shortfall


def train_cascade(
    positives: np.ndarray,
    negative_images: list[np.ndarray],
    cfg: CascadeConfig,
    seed: int = 0,
) -> Cascade:
    """Layer-wise cascade training with hard-negative bootstrapping.

    Each layer trains on 2/3 of the positives plus freshly bootstrapped
    negatives; the remaining third (rotating per layer) sets the stage
    threshold.  Training stops at max_layers or when bootstrapping finds
    fewer than 10% of the requested negatives.
    """
    positives = np.asarray(positives, dtype=np.float64)
    n_pos = positives.shape[0]
    if n_pos < 3:
        raise ValueError("need at least 3 positives for a validation split")
    if not negative_images:
        raise ValueError("negative image pool is empty")
    neg_per_layer = cfg.neg_per_layer or n_pos

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_pos)
    folds = [perm[i::3] for i in range(3)]

    cascade = Cascade(stages=[], window=WINDOW)
    for layer in range(cfg.max_layers):
        negs, shortfall = bootstrap_negatives(
            cascade.stages, negative_images, neg_per_layer,
            rng_seed=[seed, layer], attempt_factor=cfg.bootstrap_attempt_factor,
        )
        if negs.shape[0] < 0.1 * neg_per_layer:
            if layer == 0:
                raise ValueError(
                    "bootstrap starvation at layer 1: negative pool cannot seed training"
                )
            cascade.training_log.append(
                {"layer": layer, "event": "starvation", "found": int(negs.shape[0])}
            )
            break
        val_idx = folds[layer % 3]
        train_idx = np.concatenate([folds[i] for i in range(3) if i != layer % 3])
        train_pos = positives[train_idx]
        val_pos = positives[val_idx]

        imgs = np.concatenate([train_pos, negs])
        labels = np.concatenate([np.ones(len(train_pos)), -np.ones(len(negs))])
        space = make_space(
            cfg.feature_kind, imgs, labels, joint_k=cfg.joint_k,
            min_size=cfg.min_size, size_step=cfg.size_step, pos_stride=cfg.pos_stride,
        )
        stage = train_adaboost(space, cfg.rounds_per_layer)
        adjust_threshold(stage, val_pos, cfg.target_d)

        val_scores = score_patches(stage, val_pos)
        neg_scores = score_patches(stage, negs)
        cascade.stages.append(stage)
        cascade.training_log.append(
            {
                "layer": layer,
                "rounds": len(stage.rounds),
                "threshold": stage.threshold,
                "val_detection_rate": float(np.mean(val_scores >= stage.threshold)),
                "stage_fp_rate": float(np.mean(neg_scores >= stage.threshold)),
                "bootstrap_found": int(negs.shape[0]),
                "bootstrap_shortfall": bool(shortfall),
            }
        )
    return cascade
