"""Kernels between drug combinations and PSD repair of similarity matrices.

Families:

``GM``
    Graph matching. Each combination is a complete graph over its drugs;
    the similarity is the summed single-drug similarity along the optimal
    one-to-one drug matching (costs ``1 - sds``).
``CD1`` / ``CD2``
    Tanimoto over the drug sets, or over drugs plus drug pairs.
``DS``
    Mean single-drug similarity over all cross pairs.
``PB``
    Bhattacharyya affinity between Gaussians fitted to the two drug sets
    after embedding drugs through a Cholesky factor of the drug kernel.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DrugCombination, KernelMatrix, SymmetricMatrix
from .exceptions import (
    FactorizationFailure,
    IndexOutOfRange,
    NotPositiveDefinite,
    OutOfRange,
    ValidationError,
)
from .linalg import cholesky, min_eigenvalue
from .lsap import solve_lsap
from .sds import SdsKind, tanimoto

PSD_TOLERANCE = 1e-8


class KernelFamily(str, enum.Enum):
    GM = "GM"
    CD1 = "CD1"
    CD2 = "CD2"
    DS = "DS"
    PB = "PB"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    sds_kind: SdsKind = SdsKind.NONE
    psd_tolerance: float = PSD_TOLERANCE
    pb_ridge: float = 1e-6
    pb_cov_ridge: float = 1e-3

    def __post_init__(self):
        fam = KernelFamily(self.family)
        kind = SdsKind(self.sds_kind)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "sds_kind", kind)
        if fam in (KernelFamily.CD1, KernelFamily.CD2):
            if kind is not SdsKind.NONE:
                raise ValidationError(f"{fam.value} does not use a single-drug similarity")
        elif kind is SdsKind.NONE:
            raise ValidationError(f"{fam.value} needs sds_kind SDS_2D or SDS_CM")
        if self.psd_tolerance < 0:
            raise ValidationError("psd_tolerance must be non-negative")
        if not (self.pb_ridge > 0 and self.pb_cov_ridge > 0):
            raise ValidationError("pb_ridge and pb_cov_ridge must be positive")

    @property
    def needs_sds(self) -> bool:
        return self.sds_kind is not SdsKind.NONE


def match_cost(sds_value: float) -> float:
    if not 0.0 <= sds_value <= 1.0:
        raise OutOfRange(f"similarity {sds_value} outside [0, 1]")
    return 1.0 - sds_value


def _sds_values(sds) -> np.ndarray:
    return sds.values if isinstance(sds, (SymmetricMatrix, KernelMatrix)) else np.asarray(sds)


def _check_indices(combo: DrugCombination, n: int):
    if combo.drugs[-1] >= n:
        raise IndexOutOfRange(f"drug index {combo.drugs[-1]} outside similarity matrix of size {n}")


def s_gm(d_p: DrugCombination, d_q: DrugCombination, sds) -> float:
    """Summed similarity over the optimal drug matching; at most
    ``min(len(d_p), len(d_q))``."""
    values = _sds_values(sds)
    n = values.shape[0]
    _check_indices(d_p, n)
    _check_indices(d_q, n)
    # fixed orientation keeps the result bit-symmetric under ties
    if d_q < d_p:
        d_p, d_q = d_q, d_p
    block = values[np.ix_(d_p.drugs, d_q.drugs)]
    if block.size and not (block.min() >= 0.0 and block.max() <= 1.0):
        raise OutOfRange("single-drug similarities must lie in [0, 1] for graph matching")
    if min(block.shape) == 1:
        return float(block.max())
    assignment = solve_lsap(1.0 - block)
    return math.fsum(float(block[r, c]) for r, c in assignment.pairs)


def k_cd1(d_p: DrugCombination, d_q: DrugCombination) -> float:
    return tanimoto(d_p.drugs, d_q.drugs)


def expand_order2(d: DrugCombination) -> frozenset:
    """Single drugs plus all unordered drug pairs, ``k(k+1)/2`` features."""
    return frozenset(d.drugs) | frozenset(itertools.combinations(d.drugs, 2))


def k_cd2(d_p: DrugCombination, d_q: DrugCombination) -> float:
    return tanimoto(expand_order2(d_p), expand_order2(d_q))


def k_ds(d_p: DrugCombination, d_q: DrugCombination, sds) -> float:
    values = _sds_values(sds)
    n = values.shape[0]
    _check_indices(d_p, n)
    _check_indices(d_q, n)
    return float(values[np.ix_(d_p.drugs, d_q.drugs)].mean())


def _gaussian(points: np.ndarray, cov_ridge: float):
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / points.shape[0]
    cov[np.diag_indices_from(cov)] += cov_ridge
    return mean, cov


def k_pb(d_p: DrugCombination, d_q: DrugCombination, sds, ridge: float = 1e-6,
         cov_ridge: float = 1e-3) -> float:
    values = _sds_values(sds)
    n = values.shape[0]
    _check_indices(d_p, n)
    _check_indices(d_q, n)
    if d_p == d_q:
        return 1.0
    union = sorted(set(d_p.drugs) | set(d_q.drugs))
    pos = {d: i for i, d in enumerate(union)}
    gram = values[np.ix_(union, union)].copy()
    gram[np.diag_indices_from(gram)] += ridge
    try:
        embed = cholesky(gram)
    except NotPositiveDefinite as exc:
        raise FactorizationFailure(f"drug kernel not positive definite with ridge {ridge}: {exc}") from exc
    mu_p, cov_p = _gaussian(embed[[pos[d] for d in d_p.drugs]], cov_ridge)
    mu_q, cov_q = _gaussian(embed[[pos[d] for d in d_q.drugs]], cov_ridge)
    cov_mid = 0.5 * (cov_p + cov_q)
    diff = mu_p - mu_q
    maha = float(diff @ np.linalg.solve(cov_mid, diff))
    _, logdet_mid = np.linalg.slogdet(cov_mid)
    _, logdet_p = np.linalg.slogdet(cov_p)
    _, logdet_q = np.linalg.slogdet(cov_q)
    log_aff = -0.125 * maha - 0.5 * logdet_mid + 0.25 * (logdet_p + logdet_q)
    return min(1.0, math.exp(log_aff))


def psd_repair(s, tol: float = PSD_TOLERANCE, method: str = "auto") -> KernelMatrix:
    """Shift the diagonal by ``|lambda_min|`` when ``lambda_min < -tol``.

    Equivalent to subtracting the most negative eigenvalue from the spectrum
    and reconstructing; off-diagonal entries are untouched.
    """
    base = s if isinstance(s, SymmetricMatrix) else SymmetricMatrix(s)
    if base.n == 0:
        return KernelMatrix(base, 0.0)
    lam = min_eigenvalue(base.values, method=method)
    shift = -lam if lam < -tol else 0.0
    return KernelMatrix(base, shift)


def _pair_function(spec: KernelSpec, sds):
    fam = spec.family
    if fam is KernelFamily.CD1:
        return k_cd1
    if fam is KernelFamily.CD2:
        return k_cd2
    if sds is None:
        raise ValidationError(f"{fam.value} needs a single-drug similarity matrix")
    values = _sds_values(sds)
    if fam is KernelFamily.GM:
        return lambda p, q: s_gm(p, q, values)
    # DS and PB assume a valid base kernel
    values = psd_repair(values, spec.psd_tolerance).values
    if fam is KernelFamily.DS:
        return lambda p, q: k_ds(p, q, values)
    return lambda p, q: k_pb(p, q, values, spec.pb_ridge, spec.pb_cov_ridge)


def similarity_matrix(instances: Sequence[DrugCombination], spec: KernelSpec,
                      sds=None) -> SymmetricMatrix:
    """Pairwise family values over ``instances`` (upper triangle, mirrored).

    The result is not PSD-repaired; see :func:`psd_repair`.
    """
    fn = _pair_function(spec, sds)
    combos = list(instances)
    return SymmetricMatrix.from_upper(len(combos), lambda p, q: fn(combos[p], combos[q]))


def cross_similarity(rows: Sequence[DrugCombination], cols: Sequence[DrugCombination],
                     spec: KernelSpec, sds=None) -> np.ndarray:
    """Rectangular block of family values, ``len(rows) x len(cols)``."""
    fn = _pair_function(spec, sds)
    out = np.empty((len(rows), len(cols)), dtype=np.float64)
    for i, p in enumerate(rows):
        for j, q in enumerate(cols):
            out[i, j] = fn(p, q)
    return out


def k_pb_matrix(instances: Sequence[DrugCombination], sds, ridge: float = 1e-6,
                cov_ridge: float = 1e-3, tol: float = PSD_TOLERANCE) -> KernelMatrix:
    spec = KernelSpec(KernelFamily.PB, SdsKind.SDS_CM, tol, ridge, cov_ridge)
    return psd_repair(similarity_matrix(instances, spec, sds), tol)


def kernel_matrix(instances: Sequence[DrugCombination], spec: KernelSpec,
                  sds=None) -> KernelMatrix:
    """Similarity matrix over ``instances`` followed by PSD repair."""
    return psd_repair(similarity_matrix(instances, spec, sds), spec.psd_tolerance)
