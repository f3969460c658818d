"""Single-drug similarities.

Two sources are supported: structural similarity (Tanimoto over fingerprint
bits) and co-medication similarity (cosine between per-drug co-occurrence
distributions, kept separate for case and control events).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import EventRecord, SymmetricMatrix
from .exceptions import (
    IndexOutOfRange,
    LengthMismatch,
    MissingFingerprint,
    ValidationError,
    WidthMismatch,
)

DEFAULT_FINGERPRINT_WIDTH = 2048


class SdsKind(str, enum.Enum):
    SDS_2D = "SDS_2D"
    SDS_CM = "SDS_CM"
    NONE = "NONE"


def tanimoto(set_a, set_b) -> float:
    """|A & B| / (|A| + |B| - |A & B|), with two empty sets scoring 1."""
    a, b = set(set_a), set(set_b)
    inter = len(a & b)
    union = len(a) + len(b) - inter
    if union == 0:
        return 1.0
    return inter / union


@dataclass(frozen=True, eq=False)
class Fingerprint:
    bits: np.ndarray
    popcount: int = field(init=False)

    def __post_init__(self):
        bits = np.asarray(self.bits).astype(bool)
        if bits.ndim != 1:
            raise ValidationError("fingerprint must be a 1-d bit vector")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "popcount", int(np.count_nonzero(bits)))

    @classmethod
    def from_bitstring(cls, text: str, width: int = DEFAULT_FINGERPRINT_WIDTH) -> "Fingerprint":
        if len(text) != width:
            raise WidthMismatch(f"expected {width} bits, got {len(text)}")
        if set(text) - {"0", "1"}:
            raise ValidationError("fingerprint bitstring may contain only 0 and 1")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) == ord("1"))

    @classmethod
    def from_positions(cls, positions: Iterable[int], width: int = DEFAULT_FINGERPRINT_WIDTH):
        bits = np.zeros(width, dtype=bool)
        bits[list(positions)] = True
        return cls(bits)

    @property
    def width(self) -> int:
        return self.bits.shape[0]

    def to_bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    __hash__ = None


def sds_2d(fp_i: Fingerprint, fp_j: Fingerprint) -> float:
    if fp_i.width != fp_j.width:
        raise WidthMismatch(f"fingerprint widths differ: {fp_i.width} vs {fp_j.width}")
    inter = int(np.count_nonzero(fp_i.bits & fp_j.bits))
    union = fp_i.popcount + fp_j.popcount - inter
    if union == 0:
        return 1.0
    return inter / union


@dataclass(frozen=True, eq=False)
class CoMedProfile:
    """Normalized co-medication distribution of one drug over case events
    (``c_plus``) and control events (``c_minus``), and their concatenation."""

    c_plus: np.ndarray
    c_minus: np.ndarray
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cp = np.asarray(self.c_plus, dtype=np.float64)
        cm = np.asarray(self.c_minus, dtype=np.float64)
        if cp.shape != cm.shape or cp.ndim != 1:
            raise LengthMismatch("c_plus and c_minus must be 1-d of equal length")
        c = np.concatenate([cp, cm])
        for arr in (cp, cm, c):
            arr.setflags(write=False)
        object.__setattr__(self, "c_plus", cp)
        object.__setattr__(self, "c_minus", cm)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.c_plus.shape[0]


def comedication_counts(events: Iterable[EventRecord], n_drugs: int):
    """Raw pair counts ``(plus, minus)``, each ``n_drugs x n_drugs`` with a
    zero diagonal. Every event adds one to each unordered pair it contains."""
    plus = np.zeros((n_drugs, n_drugs), dtype=np.int64)
    minus = np.zeros((n_drugs, n_drugs), dtype=np.int64)
    for ev in events:
        drugs = ev.combination.drugs
        if drugs[-1] >= n_drugs:
            raise IndexOutOfRange(f"event {ev.event_id}: drug index {drugs[-1]} >= {n_drugs}")
        if len(drugs) < 2:
            continue
        idx = np.asarray(drugs, dtype=np.intp)
        target = plus if ev.adr else minus
        target[np.ix_(idx, idx)] += 1
    np.fill_diagonal(plus, 0)
    np.fill_diagonal(minus, 0)
    return plus, minus


def _normalize_rows(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True).astype(np.float64)
    out = np.zeros(counts.shape, dtype=np.float64)
    np.divide(counts, totals, out=out, where=totals > 0)
    return out


def build_comed_profiles(events: Iterable[EventRecord], n_drugs: int) -> list[CoMedProfile]:
    plus, minus = comedication_counts(events, n_drugs)
    cp, cm = _normalize_rows(plus), _normalize_rows(minus)
    return [CoMedProfile(cp[i], cm[i]) for i in range(n_drugs)]


def sds_cm(p_i: CoMedProfile, p_j: CoMedProfile) -> float:
    if p_i.c.shape != p_j.c.shape:
        raise LengthMismatch(f"profile lengths differ: {p_i.c.shape[0]} vs {p_j.c.shape[0]}")
    ni = float(np.linalg.norm(p_i.c))
    nj = float(np.linalg.norm(p_j.c))
    if ni == 0.0 or nj == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(np.dot(p_i.c, p_j.c)) / (ni * nj)))


def _fingerprint_matrix(fingerprints, drug_ids: Sequence[str]) -> np.ndarray:
    rows = []
    width = None
    for i, drug_id in enumerate(drug_ids):
        if isinstance(fingerprints, Mapping):
            fp = fingerprints.get(drug_id)
        else:
            fp = fingerprints[i] if i < len(fingerprints) else None
        if fp is None:
            raise MissingFingerprint(drug_id)
        if width is None:
            width = fp.width
        elif fp.width != width:
            raise WidthMismatch(f"fingerprint for {drug_id!r} has width {fp.width}, expected {width}")
        rows.append(fp.bits)
    return np.array(rows, dtype=np.int64).reshape(len(drug_ids), width or 0)


def sds_matrix(
    kind,
    *,
    fingerprints=None,
    drug_ids: Optional[Sequence[str]] = None,
    events: Optional[Iterable[EventRecord]] = None,
    n_drugs: Optional[int] = None,
    profiles: Optional[Sequence[CoMedProfile]] = None,
) -> SymmetricMatrix:
    """Drug-by-drug similarity matrix with a unit diagonal.

    ``SDS_2D`` needs ``fingerprints`` (a mapping from drug id, or a sequence
    aligned with drug indices) and ``drug_ids``. ``SDS_CM`` needs either
    ``events`` and ``n_drugs`` or prebuilt ``profiles``.
    """
    kind = SdsKind(kind)
    if kind is SdsKind.SDS_2D:
        if fingerprints is None or drug_ids is None:
            raise ValidationError("SDS_2D needs fingerprints and drug_ids")
        bits = _fingerprint_matrix(fingerprints, drug_ids)
        inter = bits @ bits.T
        pop = np.diag(inter)
        union = pop[:, None] + pop[None, :] - inter
        sim = np.ones(inter.shape, dtype=np.float64)
        np.divide(inter, union, out=sim, where=union > 0)
    elif kind is SdsKind.SDS_CM:
        if profiles is None:
            if events is None or n_drugs is None:
                raise ValidationError("SDS_CM needs events and n_drugs, or profiles")
            profiles = build_comed_profiles(events, n_drugs)
        if not profiles:
            return SymmetricMatrix(np.zeros((0, 0)))
        c = np.vstack([p.c for p in profiles])
        norms = np.linalg.norm(c, axis=1)
        sim = np.zeros((len(profiles), len(profiles)), dtype=np.float64)
        outer = norms[:, None] * norms[None, :]
        np.divide(c @ c.T, outer, out=sim, where=outer > 0)
        np.clip(sim, 0.0, 1.0, out=sim)
    else:
        raise ValidationError("sds_matrix needs a concrete kind (SDS_2D or SDS_CM)")
    np.fill_diagonal(sim, 1.0)
    return SymmetricMatrix.symmetrized(sim)
