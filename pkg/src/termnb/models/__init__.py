"""The five tweet classifiers and their on-disk format."""
from .ensemble import Ensemble, FingerprintMismatch, ensemble_predict, majority_vote
from .logistic import LogisticModel, train_logistic
from .svm import SvmConvergenceError, SvmModel, SvmParams, rbf_kernel, train_svm
from .tree import DecisionTree, train_tree
from .zeror import ZeroR, train_zeror

CLASSIFIERS = ("zeror", "tree", "logistic", "svm", "ensemble")

__all__ = [
    "CLASSIFIERS", "DecisionTree", "Ensemble", "FingerprintMismatch", "LogisticModel",
    "SvmConvergenceError", "SvmModel", "SvmParams", "ZeroR", "ensemble_predict",
    "majority_vote", "rbf_kernel", "train_logistic", "train_svm", "train_tree", "train_zeror",
]
