"""Fall anticipation from skeletal keypoints.

An LSTM movement predictor rolls 2-D pose features up to 15 frames (500 ms
at 30 fps) into the future; a directed graph network over joints and bones
classifies each frame's gait state (stable / transient / fall).  Includes
the keypoint preprocessing chain, training and evaluation protocols, PCA
transient analysis, a synthetic gait generator, and a CLI.
"""

__version__ = "0.1.0"

from .anticipator import (AnticipatorModel, TrainConfig, anticipation_error,
                          predict_next, rollout, train_anticipator)
from .classifier import (ClassifierTrainConfig, DgnnModel, classify_features,
                         classify_window, train_classifier)
from .data import DatasetManifest, load_manifest, load_sequences, save_dataset, split
from .optim import AdamState, LrSchedule, ParamStore, adam_step
from .pipeline import (AnticipationResult, HORIZONS, anticipate_fall,
                       evaluate_accuracy, evaluate_anticipation, measure_latency)
from .preprocess import (FilterCoefficients, PreprocessConfig, butterworth_design,
                         correct_outliers, fill_missing, lowpass_filter,
                         preprocess_sequence)
from .skeleton import (BoneGraph, LabeledSequence, SkeletonFrame, bone_features,
                       to_relative, upper_body_center, window)
from .synth import SynthConfig, synth_gait
from .tensorlib import Tensor, backward, cross_entropy, smooth_l1, xavier_init
from .transient import (TransientMap, class_centroids, fit_pca, project,
                        trajectory_metrics)
