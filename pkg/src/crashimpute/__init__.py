"""Crash-likelihood classification under missing features and class imbalance.

Submodules: ``data`` (masked tables, scaling, CSV), ``imputers`` (mean,
k-means, LS-PCA, PPCA, VBPCA), ``imbalance`` (COST, SMOTE, matched
case-control), ``classifiers`` (SVM, AdaBoost, random-forest importance),
``evaluation`` (masks, RMSE, ROC/AUC, cross-validation), ``synth``
(factor-model data) and ``experiments`` (sensitivity analyses).
"""

__version__ = "0.1.0"
