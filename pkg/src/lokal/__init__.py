"""Localized multiple kernel learning: gated kernel combinations, an in-repo
SMO solver for SVC/SVR, kernel k-means, and a reproducible benchmark harness.

Training methods: ``uniform`` (global average baseline), ``lmkl`` (softmax
gating learned by alternating SVM solves and gradient steps), ``swmkl``
(regression-smoothed per-kernel success gating), ``ldmkl`` (gated per-kernel
vote with retraining), ``clmkl`` (cluster-gated kernel weights).
"""

from lokal.data import Dataset, SplitSpec, load_libsvm, parse_libsvm, scale_features, split
from lokal.kernels import KernelSpec, gram, gram_cross, parse_kernel_spec, uniform_gram
from lokal.solver import SvmModel, SvmParams, SvrModel, train_svc, train_svr
from lokal.lkl import LklModel, TrainConfig, predict, support_fraction, train
from lokal.harness import ExperimentConfig, run_experiment, synth_fig1

__all__ = [
    "Dataset",
    "SplitSpec",
    "load_libsvm",
    "parse_libsvm",
    "scale_features",
    "split",
    "KernelSpec",
    "gram",
    "gram_cross",
    "parse_kernel_spec",
    "uniform_gram",
    "SvmModel",
    "SvmParams",
    "SvrModel",
    "train_svc",
    "train_svr",
    "LklModel",
    "TrainConfig",
    "predict",
    "support_fraction",
    "train",
    "ExperimentConfig",
    "run_experiment",
    "synth_fig1",
]

__version__ = "0.1.0"
