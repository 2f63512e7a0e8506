"""surroguard: smoothness-risk OOD detection and hybrid routing for surrogates.

Train a cheap surrogate (feedforward net or Gaussian process) against an
expensive simulator, score each query's local-smoothness risk, and route
risky queries back to the simulator.  See README.md for the pipeline walk
through and the CLI.
"""

__version__ = "0.1.0"

from .design import DesignSpace, lhs_sample
from .oracles import OracleSpec, make_oracle, oracle_eval
from .data import Dataset, NormalizationStats, kfold_split, load_csv, save_csv
from .fnn import FnnArchitecture, FnnModel, TrainConfig, fnn_train, grid_search_cv
from .gp import GpFitConfig, GpModel, RbfKernel, gp_fit, gp_predict
from .sensitivity import PerturbationSpec, SensitivityProfile, profile, profile_batch
from .labeling import ConfidenceInterval, bootstrap_ci, label_ood
from .oversample import OversampleConfig, oversample
from .gbdt import DetectorModel, GbdtConfig, gbdt_predict_proba, gbdt_train
from .clsmetrics import aupr, classification_report, pr_curve
from .detector import detector_cv_tune
from .baseline import (baseline_detect, baseline_tune_neighbors,
                       calibrate_sigma_t, neighbor_sigma)
from .hybrid import (RouterConfig, TimingModel, decr_err, evaluate_hybrid,
                     nrmse, route_predict, speedup_hybrid, speedup_pure)

__all__ = [
    "DesignSpace",
    "lhs_sample",
    "OracleSpec",
    "make_oracle",
    "oracle_eval",
    "Dataset",
    "NormalizationStats",
    "kfold_split",
    "load_csv",
    "save_csv",
    "FnnArchitecture",
    "FnnModel",
    "TrainConfig",
    "fnn_train",
    "grid_search_cv",
    "GpFitConfig",
    "GpModel",
    "RbfKernel",
    "gp_fit",
    "gp_predict",
    "PerturbationSpec",
    "SensitivityProfile",
    "profile",
    "profile_batch",
    "ConfidenceInterval",
    "bootstrap_ci",
    "label_ood",
    "OversampleConfig",
    "oversample",
    "DetectorModel",
    "GbdtConfig",
    "gbdt_predict_proba",
    "gbdt_train",
    "aupr",
    "classification_report",
    "pr_curve",
    "detector_cv_tune",
    "baseline_detect",
    "baseline_tune_neighbors",
    "calibrate_sigma_t",
    "neighbor_sigma",
    "RouterConfig",
    "TimingModel",
    "decr_err",
    "evaluate_hybrid",
    "nrmse",
    "route_predict",
    "speedup_hybrid",
    "speedup_pure",
]
