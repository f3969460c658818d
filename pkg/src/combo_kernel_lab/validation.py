"""Input checks shared by the estimators."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .core import DrugCombination, KernelMatrix, SymmetricMatrix, canonicalize
from .exceptions import ShapeMismatch, ValidationError


def check_combinations(X) -> list[DrugCombination]:
    """Coerce ``X`` to a list of :class:`DrugCombination`.

    Each item may be a combination already or any iterable of drug indices.
    """
    if isinstance(X, (str, bytes)):
        raise ValidationError("expected a sequence of drug combinations")
    out = []
    for item in X:
        if isinstance(item, DrugCombination):
            out.append(item)
        elif isinstance(item, Iterable) and not isinstance(item, (str, bytes)):
            out.append(canonicalize(item))
        else:
            raise ValidationError(f"cannot interpret {item!r} as a drug combination")
    if not out:
        raise ValidationError("no drug combinations given")
    return out


def check_similarity(sds, n_drugs=None) -> np.ndarray:
    """Square, finite, symmetric drug similarity as an array."""
    if isinstance(sds, (SymmetricMatrix, KernelMatrix)):
        values = np.asarray(sds.values)
    else:
        values = np.asarray(sds, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ShapeMismatch(f"similarity must be square, got {values.shape}")
        if not np.array_equal(values, values.T):
            raise ValidationError("similarity matrix is not symmetric")
    if not np.all(np.isfinite(values)):
        raise ValidationError("similarity matrix has non-finite entries")
    if n_drugs is not None and values.shape[0] < n_drugs:
        raise ShapeMismatch(f"similarity covers {values.shape[0]} drugs, need {n_drugs}")
    return values


def max_drug_index(combos) -> int:
    return max(c.drugs[-1] for c in combos)
