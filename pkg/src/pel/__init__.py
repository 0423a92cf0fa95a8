"""Prototype-enhanced soft targets for fine-grained classification, in numpy."""

from .label_enhancer import fuse_labels, one_hot, smooth_labels
from .mathcore import cross_entropy, kl_loss, l2_normalize, tempered_softmax
from .model import DivergenceError, MlpModel, backward, forward, load_model, predict, save_model, sgd_step
from .prototype_bank import (PrototypeBank, batch_class_means, ema_update, init_bank, load_bank,
                             save_bank, similarity_scores)
from .synth_data import Dataset, SyntheticSpec, generate, inject_label_noise, load_csv, save_csv
from .trainer import MetricsLog, TrainConfig, evaluate, run_beta_sweep, train

__version__ = "0.1.0"
