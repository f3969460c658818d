"""scikit-learn estimators.

:class:`CombinationKernel` turns drug combinations into kernel values against
the combinations it was fitted on, so it chains with
:class:`~combo_kernel_lab.svm.PrecomputedKernelSVC` in a
:class:`sklearn.pipeline.Pipeline`::

    pipe = make_pipeline(CombinationKernel("gm", sds=S), PrecomputedKernelSVC())
    pipe.fit(train_combos, y)
    pipe.decision_function(test_combos)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .kernels import PSD_TOLERANCE, KernelFamily, KernelSpec, cross_similarity, psd_repair, similarity_matrix
from .sds import SdsKind
from .svm import PrecomputedKernelSVC
from .validation import check_combinations, check_similarity, max_drug_index

__all__ = ["CombinationKernel", "PrecomputedKernelSVC"]


class CombinationKernel(TransformerMixin, BaseEstimator):
    """Kernel features for drug combinations.

    ``fit_transform`` returns the PSD-repaired Gram matrix of the training
    combinations; ``transform`` returns rows of kernel values between new
    combinations and the training ones. Repair only touches the training
    diagonal, so the cross block is the raw pairwise similarity.

    Parameters
    ----------
    kernel : {"gm", "cd1", "cd2", "ds", "pb"}, default="gm"
    sds : array-like of shape (n_drugs, n_drugs), default=None
        Single-drug similarity, required by gm, ds and pb.
    psd_tolerance : float, default=1e-8
    pb_ridge, pb_cov_ridge : float
        Regularizers of the pb family.
    repair : bool, default=True
        Apply the eigenvalue shift in ``fit_transform``.
    """

    def __init__(self, kernel="gm", sds=None, psd_tolerance=PSD_TOLERANCE,
                 pb_ridge=1e-6, pb_cov_ridge=1e-3, repair=True):
        self.kernel = kernel
        self.sds = sds
        self.psd_tolerance = psd_tolerance
        self.pb_ridge = pb_ridge
        self.pb_cov_ridge = pb_cov_ridge
        self.repair = repair

    def _spec(self) -> KernelSpec:
        family = KernelFamily(str(self.kernel).upper())
        kind = SdsKind.NONE if family in (KernelFamily.CD1, KernelFamily.CD2) else SdsKind.SDS_CM
        return KernelSpec(family, kind, self.psd_tolerance, self.pb_ridge, self.pb_cov_ridge)

    def _sds(self, combos):
        spec = self._spec()
        if not spec.needs_sds:
            return None
        if self.sds is None:
            raise ValueError(f"kernel {self.kernel!r} needs a drug similarity matrix")
        return check_similarity(self.sds, max_drug_index(combos) + 1)

    def fit(self, X, y=None):
        self.fit_transform(X, y)
        return self

    def fit_transform(self, X, y=None):
        combos = check_combinations(X)
        spec = self._spec()
        sim = similarity_matrix(combos, spec, self._sds(combos))
        if self.repair:
            gram = psd_repair(sim, spec.psd_tolerance)
            self.shift_ = gram.shift
            values = gram.values
        else:
            self.shift_ = 0.0
            values = sim.values
        self.combinations_ = combos
        self.n_features_in_ = len(combos)
        return np.array(values)

    def transform(self, X):
        check_is_fitted(self, "combinations_")
        combos = check_combinations(X)
        sds = self._sds(combos + self.combinations_)
        return cross_similarity(combos, self.combinations_, self._spec(), sds)
