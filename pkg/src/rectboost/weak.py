"""Weak classifiers: 1-D stumps, 8-D projection stumps and joint learners.

All three forms share two engines: a batched decision-stump search over
columns of a value matrix, and a ridge-stabilized weighted least-squares
solver.  Joint learners add a forward-greedy cardinality-constrained
selection on top of the stump responses.
"""

from dataclasses import dataclass, field

import numpy as np

from .features import RectFeature

DEFAULT_RIDGE = 1e-8
WEIGHT_SUM_TOL = 1e-8


@dataclass
class Stump1D:
    """Threshold classifier on one scalar: polarity * sign(v - threshold).

    sign(0) counts as +1.  threshold may be +-inf (constant output).
    """

    threshold: float
    polarity: int
    trained_error: float = float("nan")

    def predict(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values)
        raw = np.where(v >= self.threshold, 1.0, -1.0)
        return self.polarity * raw


@dataclass
class MultiDimStump:
    """Weighted-LSQ projection of an 8-D block descriptor plus a stump."""

    rect: RectFeature
    projection: np.ndarray
    bias: float
    stump: Stump1D
    trained_error: float = float("nan")

    def score(self, descriptors: np.ndarray) -> np.ndarray:
        return np.asarray(descriptors) @ self.projection + self.bias

    def predict(self, descriptors: np.ndarray) -> np.ndarray:
        return self.stump.predict(self.score(descriptors))


@dataclass
class JointLearner:
    """Sign of a sparse weighted-LSQ combination of k binary stump responses."""

    support: list[int]
    stumps: list[Stump1D]
    beta: np.ndarray
    beta0: float
    trained_error: float = float("nan")
    degenerate: bool = False
    residual: float = float("nan")

    def predict_from_columns(self, columns: np.ndarray) -> np.ndarray:
        """columns: (n, k) raw scalar values of the support features."""
        cols = np.atleast_2d(np.asarray(columns, dtype=np.float64))
        z = np.column_stack([s.predict(cols[:, j]) for j, s in enumerate(self.stumps)])
        score = z @ self.beta + self.beta0
        return np.where(score >= 0, 1.0, -1.0)


class PresortedColumns:
    """Column-wise sorted view of a value matrix for repeated stump searches.

    Sorting and the label layout are done once; each search under new
    sample weights only gathers and scans cumulative sums, so boosting
    rounds over a fixed feature matrix stay cheap.
    """

    def __init__(self, values: np.ndarray, labels: np.ndarray, chunk: int = 1024):
        V = np.ascontiguousarray(values)
        self.n, self.m = V.shape
        self.chunk = chunk
        self.dtype = V.dtype
        self.order = np.argsort(V, axis=0, kind="stable").astype(np.int32)
        self.sorted_values = np.take_along_axis(V, self.order, axis=0)
        ypos = np.asarray(labels) > 0
        self.ys_pos = ypos[self.order]
        self.wpos_mask = ypos
        # splits between equal neighbours carry no threshold
        self.mid_valid = self.sorted_values[1:] > self.sorted_values[:-1]

    def search(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Best (threshold, polarity, weighted error) per column.

        Ties break toward the smallest threshold, then polarity +1.
        Arithmetic runs in the matrix dtype; callers needing an exact
        error can re-evaluate the returned stump directly.
        """
        w = np.asarray(weights, dtype=self.dtype)
        n, m = self.n, self.m
        total = self.dtype.type(w.sum())
        wpos = self.dtype.type(w[self.wpos_mask].sum())
        wneg = total - wpos

        thr = np.empty(m, dtype=np.float64)
        pol = np.empty(m, dtype=np.int8)
        err = np.empty(m, dtype=np.float64)
        for lo in range(0, m, self.chunk):
            hi = min(lo + self.chunk, m)
            c = hi - lo
            ws = w[self.order[:, lo:hi]]
            cw = np.cumsum(ws, axis=0, dtype=self.dtype)
            np.multiply(ws, self.ys_pos[:, lo:hi], out=ws)
            cpos = np.cumsum(ws, axis=0, dtype=self.dtype)

            # split s: samples [0, s) predicted -1 for polarity +1
            ep = np.empty((n + 1, c), dtype=self.dtype)
            em = np.empty((n + 1, c), dtype=self.dtype)
            ep[0] = wneg
            em[0] = wpos
            np.subtract(2.0 * cpos, cw, out=ep[1:])
            ep[1:] += wneg
            np.subtract(cw, 2.0 * cpos, out=em[1:])
            em[1:] += wpos
            invalid = ~self.mid_valid[:, lo:hi]
            ep[1:n][invalid] = np.inf
            em[1:n][invalid] = np.inf

            bp = np.argmin(ep, axis=0)
            bm = np.argmin(em, axis=0)
            cols = np.arange(c)
            e_p = ep[bp, cols].astype(np.float64)
            e_m = em[bm, cols].astype(np.float64)

            use_plus = (e_p < e_m) | ((e_p == e_m) & (bp <= bm))
            best = np.where(use_plus, bp, bm)
            err[lo:hi] = np.where(use_plus, e_p, e_m)
            pol[lo:hi] = np.where(use_plus, 1, -1)
            t = np.full(c, -np.inf)
            at_top = best == n
            interior = (best > 0) & ~at_top
            if n > 1:  # interior splits need two samples
                vs = self.sorted_values[:, lo:hi]
                ii = np.where(interior, best, 1)
                mids = (vs[ii - 1, cols].astype(np.float64) + vs[ii, cols]) / 2.0
                t[interior] = mids[interior]
            t[at_top] = np.inf
            thr[lo:hi] = t
        return thr, pol, err


def check_weights(weights: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def weighted_error(predictions: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(weights[np.asarray(predictions) != np.asarray(labels)]))


def train_stump_1d(values, labels, weights) -> Stump1D:
    """Exact minimum-weighted-error stump over one scalar feature.

    Candidate thresholds are the midpoints of sorted distinct values
    plus +-inf; ties break by smallest threshold, then polarity +1.
    Weights must be normalized.
    """
    v = np.asarray(values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("values must be a nonempty 1-D array")
    w = check_weights(weights, v.size)
    pre = PresortedColumns(v[:, None], y)
    thr, pol, _ = pre.search(w)
    stump = Stump1D(threshold=float(thr[0]), polarity=int(pol[0]))
    stump.trained_error = weighted_error(stump.predict(v), y, w)
    return stump


def weighted_lsq(Z, y, w, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Ridge-stabilized weighted least squares with an implicit intercept.

    Minimizes sum_i w_i (y_i - Z_i . beta - beta0)^2 + ridge ||beta||^2
    via normal equations; weights are normalized internally, so scaling
    them leaves the solution unchanged.  Returns (m+1,) with the
    intercept last.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.ndim != 2:
        raise ValueError("design must be 2-D")
    n, m = Z.shape
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    wn = w / w.sum()
    Za = np.column_stack([Z, np.ones(n)])
    A = Za.T @ (Za * wn[:, None]) + ridge * np.eye(m + 1)
    b = Za.T @ (wn * y)
    return np.linalg.solve(A, b)


def lsq_residual(Z, y, w, beta: np.ndarray) -> float:
    """Weighted sum of squared residuals under normalized weights."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    wn = np.asarray(w, dtype=np.float64)
    wn = wn / wn.sum()
    fit = Z @ beta[:-1] + beta[-1]
    r = np.asarray(y, dtype=np.float64) - fit
    return float(np.sum(wn * r * r))


def greedy_sparse_lsq(
    Z, y, w, k: int, ridge: float = DEFAULT_RIDGE
) -> tuple[list[int], np.ndarray, float]:
    """Forward-greedy weighted LSQ under a cardinality-k constraint.

    Starting from the empty support, each step adds the column whose
    inclusion (refitting on the candidate support) gives the smallest
    weighted residual; ties break by lowest column index.  Returns
    (support, beta with intercept last, residual).
    """
    Z = np.atleast_2d(np.asarray(Z))
    n, m = Z.shape
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    y = np.asarray(y, dtype=np.float64)
    wn = np.asarray(w, dtype=np.float64)
    wn = wn / wn.sum()
    wy = wn * y
    y_wy = float(wy @ y)
    ones = np.ones(n)

    d = np.einsum("nm,n,nm->m", Z, wn, Z)
    e = wy @ Z

    support: list[int] = []
    for _ in range(k):
        s = len(support)
        B = np.column_stack([ones] + [np.asarray(Z[:, j], dtype=np.float64) for j in support])
        WB = B * wn[:, None]
        G = B.T @ WB                                   # (s+1, s+1)
        g = B.T @ wy
        c = WB.T @ Z                                   # (s+1, m)

        A = np.empty((m, s + 2, s + 2))
        A[:, : s + 1, : s + 1] = G
        A[:, : s + 1, s + 1] = c.T
        A[:, s + 1, : s + 1] = c.T
        A[:, s + 1, s + 1] = d
        A += ridge * np.eye(s + 2)
        b = np.empty((m, s + 2))
        b[:, : s + 1] = g
        b[:, s + 1] = e
        beta_c = np.linalg.solve(A, b[:, :, None])[:, :, 0]
        ssr = y_wy - np.einsum("mj,mj->m", beta_c, b) - ridge * np.einsum(
            "mj,mj->m", beta_c, beta_c
        )
        ssr[support] = np.inf
        j = int(np.argmin(ssr))
        support.append(j)

    Zs = np.asarray(Z[:, support], dtype=np.float64)
    beta = weighted_lsq(Zs, y, wn, ridge=ridge)
    residual = lsq_residual(Zs, y, wn, beta)
    return support, beta, residual


def train_multidim_stump(descriptors, labels, weights, rect: RectFeature) -> MultiDimStump:
    """Fit a weighted-LSQ projection of the descriptors, then stump it."""
    D = np.atleast_2d(np.asarray(descriptors, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    wn = w / w.sum()
    beta = weighted_lsq(D, y, wn)
    scores = D @ beta[:-1] + beta[-1]
    stump = train_stump_1d(scores, y, wn)
    learner = MultiDimStump(
        rect=rect,
        projection=beta[:-1],
        bias=float(beta[-1]),
        stump=stump,
        trained_error=stump.trained_error,
    )
    return learner


def train_joint_learner(columns, labels, weights, k: int) -> JointLearner:
    """Stump every scalar column, then greedily combine k binary responses.

    columns: (n, m) raw scalar feature values.  Prediction is
    sign(sum_j beta_j z_j + beta0) with sign(0) = +1.
    """
    V = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    n, m = V.shape
    if m < 1:
        raise ValueError("feature pool is empty")
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    wn = w / w.sum()

    pre = PresortedColumns(V, y)
    thr, pol, _ = pre.search(wn)
    Z = np.where(V >= thr, 1.0, -1.0) * pol

    support, beta, residual = greedy_sparse_lsq(Z, y, wn, k)
    stumps = [Stump1D(threshold=float(thr[j]), polarity=int(pol[j])) for j in support]
    learner = JointLearner(
        support=support,
        stumps=stumps,
        beta=beta[:-1],
        beta0=float(beta[-1]),
        residual=residual,
    )
    pred = learner.predict_from_columns(V[:, support])
    learner.trained_error = weighted_error(pred, y, wn)
    learner.degenerate = learner.trained_error >= 0.5
    return learner
