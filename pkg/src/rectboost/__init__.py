"""Boosted-cascade detection with integral-image edge-channel features."""

from .boosting import (
    Cascade,
    CascadeConfig,
    StrongClassifier,
    adjust_threshold,
    bootstrap_negatives,
    detection_threshold,
    make_space,
    score_patches,
    train_adaboost,
    train_cascade,
)
from .channels import ChannelStack, box_sum, build_channels, compute_gradients, quadrant_code
from .detector import Detection, MatchReport, match_detections, merge_detections, scan
from .features import (
    HaarFeature,
    RectFeature,
    block_descriptor,
    enumerate_haar_pool,
    enumerate_rect_pool,
    haar_value,
)
from .model_io import ModelFormatError, load_model, save_model
from .pgm import PgmError, load_pgm, save_pgm
from .synth import TrainingSet, augment, synth_corpus, synth_negative_images
from .weak import (
    JointLearner,
    MultiDimStump,
    Stump1D,
    greedy_sparse_lsq,
    train_joint_learner,
    train_multidim_stump,
    train_stump_1d,
    weighted_lsq,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
