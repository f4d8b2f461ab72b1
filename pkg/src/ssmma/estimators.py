"""scikit-learn style wrappers around the classifier and the decomposer."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .classifier import LABELS, Thresholds, classify_kernel
from .decomposer import component_scales, decompose
from .kernels import GridSpec
from .quadrature import LinearCombination


def _grid(est, kernel):
    return GridSpec.for_kernel(kernel, est.n_x_nodes, u_window=est.u_window, u_step=est.u_step)


def _thresholds(est):
    return Thresholds(pfsm_tol=est.pfsm_tol, cf_tol=est.cf_tol, hopf_octaves=est.hopf_octaves)


class FlowComponentClassifier(BaseEstimator):
    """Label each x-node of a kernel as dissipative, fixed, cyclic or conservative.

    ``fit`` takes a :class:`~ssmma.kernels.KernelSpec` in place of a design
    matrix.  ``predict`` maps arbitrary x to the label of the nearest node.
    """

    def __init__(self, n_x_nodes=64, u_window=50.0, u_step=0.05, pfsm_tol=1e-6, cf_tol=1e-6,
                 hopf_octaves=8, n_jobs=1):
        self.n_x_nodes = n_x_nodes
        self.u_window = u_window
        self.u_step = u_step
        self.pfsm_tol = pfsm_tol
        self.cf_tol = cf_tol
        self.hopf_octaves = hopf_octaves
        self.n_jobs = n_jobs

    def fit(self, kernel, y=None):
        self.grid_ = _grid(self, kernel)
        self.report_ = classify_kernel(kernel, self.grid_, _thresholds(self), self.n_jobs)
        self.labels_ = np.array(self.report_.labels)
        self.x_nodes_ = np.asarray(self.grid_.x)
        self.fractions_ = self.report_.fractions
        return self

    def predict(self, x):
        check_is_fitted(self, "report_")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.abs(x[:, None] - self.x_nodes_[None, :]).argmin(axis=1)
        return self.labels_[idx]


class FourComponentDecomposer(TransformerMixin, BaseEstimator):
    """Split a kernel into its four flow components.

    ``transform`` maps a sequence of linear combinations ``(theta, times)`` to
    an ``(n, 4)`` array of component ``sigma^alpha`` in the order of
    ``component_labels_``.  Pass a fitted ``classifier`` to reuse its report.
    """

    def __init__(self, n_x_nodes=64, u_window=50.0, u_step=0.05, pfsm_tol=1e-6, cf_tol=1e-6,
                 hopf_octaves=8, n_jobs=1, classifier=None):
        self.n_x_nodes = n_x_nodes
        self.u_window = u_window
        self.u_step = u_step
        self.pfsm_tol = pfsm_tol
        self.cf_tol = cf_tol
        self.hopf_octaves = hopf_octaves
        self.n_jobs = n_jobs
        self.classifier = classifier

    def fit(self, kernel, y=None):
        if self.classifier is not None:
            check_is_fitted(self.classifier, "report_")
            report = self.classifier.report_
        else:
            report = classify_kernel(kernel, _grid(self, kernel), _thresholds(self), self.n_jobs)
        self.decomposition_ = decompose(kernel, report)
        self.component_labels_ = LABELS
        return self

    def transform(self, combs):
        check_is_fitted(self, "decomposition_")
        rows = []
        for comb in combs:
            comb = comb if isinstance(comb, LinearCombination) else LinearCombination(*comb)
            parts = component_scales(self.decomposition_, comb)
            rows.append([parts[lab] for lab in LABELS])
        return np.array(rows, dtype=float).reshape(-1, len(LABELS))
