"""Classifiers and model selection: SMO-trained SVM, softmax GBDT, grid search."""

from .gbdt import GbdtModel, GbdtParams, Tree, build_tree, fit_gbdt, predict_gbdt
from .grid import (FittedClassifier, GridPoint, GridResult, GridSearchLearner,
                   default_gbdt_grid, default_svm_grid, fit_params, grid_search,
                   params_dict, predict_model, tie_key)
from .scaling import Standardizer
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .svm import (BinarySvm, Kernel, SvmModel, SvmParams, fit_svm, kernel_matrix,
                  predict_svm, smo_solve)

__all__ = [
    "BinarySvm", "FittedClassifier", "GbdtModel", "GbdtParams", "GridPoint",
    "GridResult", "GridSearchLearner", "Kernel", "Standardizer", "SvmModel",
    "SvmParams", "Tree", "build_tree", "default_gbdt_grid", "default_svm_grid",
    "fit_gbdt", "fit_params", "fit_svm", "grid_search", "kernel_matrix",
    "load_model", "model_from_dict", "model_to_dict", "params_dict",
    "predict_gbdt", "predict_model", "predict_svm", "save_model", "smo_solve",
    "tie_key",
]
