"""Shared data types: drugs, drug combinations, events, labeled instances and
the dense matrices every kernel is stored in."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .exceptions import EmptyCombination, IndexOutOfRange, ValidationError


@dataclass(frozen=True)
class Drug:
    id: str
    index: int

    def __post_init__(self):
        if not self.id:
            raise ValidationError("drug id must be non-empty")
        if self.index < 0:
            raise ValidationError("drug index must be non-negative")


@dataclass(frozen=True, order=True)
class DrugCombination:
    """An unordered set of drug indices, stored sorted.

    Build instances through :func:`canonicalize`; the constructor only checks
    that the tuple is already canonical.
    """

    drugs: tuple[int, ...]

    def __post_init__(self):
        d = self.drugs
        if not d:
            raise EmptyCombination("a drug combination needs at least one drug")
        if any(a >= b for a, b in zip(d, d[1:])):
            raise ValidationError(f"drug indices must be strictly increasing: {d}")
        if d[0] < 0:
            raise IndexOutOfRange(f"negative drug index in {d}")

    @property
    def order(self) -> int:
        return len(self.drugs)

    def __len__(self):
        return len(self.drugs)

    def __iter__(self):
        return iter(self.drugs)

    def __contains__(self, item):
        return item in self.drugs


def canonicalize(drug_list: Iterable[int]) -> DrugCombination:
    """Sort and deduplicate ``drug_list`` into a :class:`DrugCombination`.

    >>> canonicalize([3, 1, 3, 2]).drugs
    (1, 2, 3)
    """
    unique = sorted({int(d) for d in drug_list})
    if not unique:
        raise EmptyCombination("empty drug list")
    return DrugCombination(tuple(unique))


class DrugRegistry:
    """Assigns dense indices to drug ids in order of first appearance."""

    def __init__(self, ids: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        self._ids: list[str] = []
        for drug_id in ids:
            self.intern(drug_id)

    def intern(self, drug_id: str) -> int:
        idx = self._index.get(drug_id)
        if idx is None:
            if not drug_id:
                raise ValidationError("drug id must be non-empty")
            idx = len(self._ids)
            self._index[drug_id] = idx
            self._ids.append(drug_id)
        return idx

    def index_of(self, drug_id: str) -> int:
        try:
            return self._index[drug_id]
        except KeyError:
            raise IndexOutOfRange(f"unknown drug id {drug_id!r}") from None

    def id_of(self, index: int) -> str:
        if not 0 <= index < len(self._ids):
            raise IndexOutOfRange(f"drug index {index} out of range")
        return self._ids[index]

    def get(self, drug_id: str) -> Optional[int]:
        return self._index.get(drug_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    @property
    def drugs(self) -> tuple[Drug, ...]:
        return tuple(Drug(d, i) for i, d in enumerate(self._ids))

    def __len__(self):
        return len(self._ids)

    def __contains__(self, drug_id):
        return drug_id in self._index


class CombinationInterner:
    """Maps each distinct combination to a dense dataset-local index."""

    def __init__(self):
        self._index: dict[DrugCombination, int] = {}
        self.combinations: list[DrugCombination] = []

    def intern(self, combo: DrugCombination) -> int:
        idx = self._index.get(combo)
        if idx is None:
            idx = len(self.combinations)
            self._index[combo] = idx
            self.combinations.append(combo)
        return idx

    def __len__(self):
        return len(self.combinations)


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    combination: DrugCombination
    adr: bool


class Source(str, enum.Enum):
    M_PLUS = "M_PLUS"
    M_ZERO = "M_ZERO"
    N_ZERO = "N_ZERO"
    N_MINUS = "N_MINUS"
    SYNTHETIC = "SYNTHETIC"


_POSITIVE_SOURCES = {Source.M_PLUS, Source.M_ZERO}
_NEGATIVE_SOURCES = {Source.N_ZERO, Source.N_MINUS}
_OR_SOURCES = {Source.M_ZERO, Source.N_ZERO}


@dataclass(frozen=True)
class LabeledInstance:
    combination: DrugCombination
    label: int
    source: Source
    frequency: int
    odds_ratio: Optional[float] = None

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValidationError(f"label must be -1 or +1, got {self.label}")
        src = Source(self.source)
        object.__setattr__(self, "source", src)
        if src in _POSITIVE_SOURCES and self.label != 1:
            raise ValidationError(f"{src.value} instances are positive")
        if src in _NEGATIVE_SOURCES and self.label != -1:
            raise ValidationError(f"{src.value} instances are negative")
        if self.frequency < 0:
            raise ValidationError("frequency must be non-negative")
        has_or = self.odds_ratio is not None
        if has_or != (src in _OR_SOURCES):
            raise ValidationError(
                f"odds_ratio must be present exactly for M_ZERO/N_ZERO, got {src.value}"
            )
        if has_or and not self.odds_ratio > 0:
            raise ValidationError("odds_ratio must be positive")


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Dense symmetric matrix; ``values[i, j] == values[j, i]`` exactly.

    The array is copied and frozen on construction.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {v.shape}")
        if not np.array_equal(v, v.T):
            raise ValidationError("matrix is not exactly symmetric")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_upper(cls, n: int, entry: Callable[[int, int], float]) -> "SymmetricMatrix":
        """Evaluate ``entry(p, q)`` for ``p <= q`` and mirror."""
        v = np.empty((n, n), dtype=np.float64)
        for p in range(n):
            for q in range(p, n):
                v[p, q] = v[q, p] = entry(p, q)
        return cls(v)

    @classmethod
    def symmetrized(cls, values) -> "SymmetricMatrix":
        """Copy the upper triangle over the lower one."""
        v = np.array(values, dtype=np.float64)
        upper = np.triu(v)
        return cls(upper + np.triu(v, 1).T)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __getitem__(self, key):
        return self.values[key]

    def submatrix(self, index: Sequence[int]) -> "SymmetricMatrix":
        idx = np.asarray(index, dtype=np.intp)
        return SymmetricMatrix(self.values[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """A similarity matrix plus the diagonal shift that makes it PSD."""

    base: SymmetricMatrix
    shift: float = 0.0
    _values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.shift < 0:
            raise ValidationError("shift must be non-negative")
        v = self.base.values.copy()
        if self.shift:
            v[np.diag_indices_from(v)] += self.shift
        v.setflags(write=False)
        object.__setattr__(self, "_values", v)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self.base.n

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 counts: ``n1``/``m1`` events taking D with/without the ADR,
    ``n2``/``m2`` events not taking D with/without the ADR."""

    n1: int
    m1: int
    n2: int
    m2: int

    def __post_init__(self):
        for name in ("n1", "m1", "n2", "m2"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.n1 + self.m1 + self.n2 + self.m2
