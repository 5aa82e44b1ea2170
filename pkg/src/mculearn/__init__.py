"""Learning multi-class classifiers from multi-complementary labels and
unlabeled data via unbiased risk estimation."""

from .datasets import (
    FiniteDistribution,
    LabeledDataset,
    load_csv,
    load_idx,
    minmax_scale,
    split,
    synth_blobs,
    synth_mixture,
)
from .kernels import BACKEND
from .losses import RiskBreakdown, cl_risk, mc_loss, mcl_risk, mcul_risk, ordinary_risk
from .model import LinearModel, MLPModel, load_checkpoint, make_model, save_checkpoint
from .numerics import cumulative_loss, log_sum_exp, softmax_ce
from .trainer import TrainConfig, evaluate, train
from .weaklabel import (
    MixtureWeights,
    WeakDataset,
    WeakSample,
    default_alpha,
    default_size_dist,
    estimate_priors,
    load_weak,
    save_weak,
    weaken,
)

__version__ = "0.1.0"
