"""Canonical JSON model files (version 1).

Serialization is byte-stable: keys are sorted, floats use Python's
shortest round-trip repr, and non-finite thresholds are encoded as the
strings "inf"/"-inf".  save -> load -> save reproduces the file exactly.
"""

import json
import math

import numpy as np

from .boosting import Cascade, HaarStumpLearner, StrongClassifier
from .features import HaarFeature, RectFeature
from .weak import JointLearner, MultiDimStump, Stump1D

MODEL_VERSION = 1

DESIGN_DECISIONS = {
    "gradientKernel": "central-difference, replicate padding",
    "zeroGradientBin": "phi1",
    "descriptorOrder": "Gh,Gv,|Gh|,|Gv|,phi1..phi4",
    "normalization": "per-half l2 with eps 1e-6",
    "scanMode": "feature-rect-scaling",
    "mergeOverlap": "iou>=0.3 transitive",
    "haarFilledRegion": "right/bottom/center",
}


class ModelFormatError(ValueError):
    pass


def _enc_float(x: float):
    x = float(x)
    if math.isnan(x):
        raise ModelFormatError("model contains NaN values")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _dec_float(v) -> float:
    if isinstance(v, str):
        if v in ("inf", "-inf"):
            return float(v)
        raise ModelFormatError(f"bad float encoding {v!r}")
    return float(v)


def _learner_dict(learner) -> dict:
    if isinstance(learner, HaarStumpLearner):
        f = learner.feature
        return {
            "type": "haar-stump",
            "kind": f.kind,
            "rects": [[f.x, f.y, f.w, f.h]],
            "thresholds": [_enc_float(learner.stump.threshold)],
            "polarities": [int(learner.stump.polarity)],
        }
    if isinstance(learner, MultiDimStump):
        r = learner.rect
        return {
            "type": "multidim-stump",
            "rects": [[r.x, r.y, r.w, r.h]],
            "projection": [_enc_float(v) for v in learner.projection],
            "bias": _enc_float(learner.bias),
            "thresholds": [_enc_float(learner.stump.threshold)],
            "polarities": [int(learner.stump.polarity)],
        }
    if isinstance(learner, JointLearner):
        refs = getattr(learner, "refs", None)
        if refs is None:
            raise ModelFormatError("joint learner lacks feature references")
        return {
            "type": "joint",
            "support": [int(j) for j in learner.support],
            "rects": [[r.x, r.y, r.w, r.h] for r, _ in refs],
            "dims": [int(d) for _, d in refs],
            "thresholds": [_enc_float(s.threshold) for s in learner.stumps],
            "polarities": [int(s.polarity) for s in learner.stumps],
            "beta": [_enc_float(b) for b in learner.beta],
            "beta0": _enc_float(learner.beta0),
        }
    raise ModelFormatError(f"cannot serialize learner of type {type(learner)!r}")


def _learner_from_dict(d: dict):
    try:
        t = d["type"]
        if t == "haar-stump":
            (x, y, w, h), = d["rects"]
            return HaarStumpLearner(
                feature=HaarFeature(d["kind"], x, y, w, h),
                stump=Stump1D(_dec_float(d["thresholds"][0]), int(d["polarities"][0])),
            )
        if t == "multidim-stump":
            (x, y, w, h), = d["rects"]
            return MultiDimStump(
                rect=RectFeature(x, y, w, h),
                projection=np.array([_dec_float(v) for v in d["projection"]]),
                bias=_dec_float(d["bias"]),
                stump=Stump1D(_dec_float(d["thresholds"][0]), int(d["polarities"][0])),
            )
        if t == "joint":
            stumps = [
                Stump1D(_dec_float(th), int(p))
                for th, p in zip(d["thresholds"], d["polarities"])
            ]
            learner = JointLearner(
                support=[int(j) for j in d["support"]],
                stumps=stumps,
                beta=np.array([_dec_float(b) for b in d["beta"]]),
                beta0=_dec_float(d["beta0"]),
            )
            learner.refs = [
                (RectFeature(*rect), int(dim)) for rect, dim in zip(d["rects"], d["dims"])
            ]
            return learner
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed learner record: {exc}") from exc
    raise ModelFormatError(f"unknown learner type {d.get('type')!r}")


def model_to_dict(model) -> dict:
    if isinstance(model, StrongClassifier):
        stages = [model]
        window = model.window
        kind = model.feature_kind
        joint_k = model.joint_k
    elif isinstance(model, Cascade):
        if not model.stages:
            raise ModelFormatError("cannot serialize an empty cascade")
        stages = model.stages
        window = model.window
        kind = stages[0].feature_kind
        joint_k = stages[0].joint_k
    else:
        raise ModelFormatError(f"cannot serialize {type(model)!r}")
    return {
        "version": MODEL_VERSION,
        "window": [window, window],
        "featureKind": kind,
        "jointK": joint_k,
        "designDecisions": DESIGN_DECISIONS,
        "stages": [
            {
                "threshold": _enc_float(s.threshold),
                "rounds": [
                    {"alpha": _enc_float(a), "learner": _learner_dict(l)}
                    for l, a in s.rounds
                ],
            }
            for s in stages
        ],
    }


def save_model(model, path) -> None:
    doc = model_to_dict(model)
    try:
        text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    except ValueError as exc:
        raise ModelFormatError(f"non-finite value in model: {exc}") from exc
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
        fh.write("\n")


def load_model(path) -> Cascade:
    """Load a model file; single strong classifiers come back as a
    one-stage cascade."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError(f"{path}: missing version field")
    if doc["version"] != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported version {doc['version']!r} (expected {MODEL_VERSION})"
        )
    try:
        window = int(doc["window"][0])
        kind = doc["featureKind"]
        joint_k = doc.get("jointK")
        stages = []
        for s in doc["stages"]:
            rounds = [
                (_learner_from_dict(r["learner"]), _dec_float(r["alpha"]))
                for r in s["rounds"]
            ]
            stages.append(
                StrongClassifier(
                    rounds=rounds,
                    threshold=_dec_float(s["threshold"]),
                    feature_kind=kind,
                    joint_k=joint_k,
                    window=window,
                )
            )
    except (KeyError, TypeError, IndexError) as exc:
        raise ModelFormatError(f"{path}: schema violation: {exc}") from exc
    return Cascade(stages=stages, window=window)
