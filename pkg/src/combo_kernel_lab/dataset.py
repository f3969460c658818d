"""Mine combination statistics from event logs and build labeled datasets.

An event "takes" combination D only when its drug set equals D exactly, so
every event contributes to exactly one combination's counts.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    ContingencyTable,
    DrugCombination,
    EventRecord,
    LabeledInstance,
    Source,
    canonicalize,
)
from .exceptions import ConfigInvalid, EmptyPartition, ValidationError
from .stats import fisher_right_tail, odds_ratio

logger = logging.getLogger(__name__)


class DatasetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ComboStats:
    combination: DrugCombination
    contingency: ContingencyTable
    odds_ratio: Optional[float] = None
    fisher_p: Optional[float] = None

    @property
    def case_count(self) -> int:
        return self.contingency.n1

    @property
    def control_count(self) -> int:
        return self.contingency.m1

    @property
    def frequency(self) -> int:
        return self.contingency.n1 + self.contingency.m1

    @property
    def or_undefined(self) -> bool:
        """Seen in both case and control events, yet the odds ratio has a
        zero denominator."""
        return self.case_count > 0 and self.control_count > 0 and self.odds_ratio is None


def mine(events: Iterable[EventRecord]) -> list[ComboStats]:
    """One :class:`ComboStats` per distinct combination, sorted by drug list."""
    cases: Counter = Counter()
    controls: Counter = Counter()
    for ev in events:
        (cases if ev.adr else controls)[ev.combination] += 1
    total_case = sum(cases.values())
    total_control = sum(controls.values())
    if total_case + total_control == 0:
        raise ValidationError("no events to mine")
    out = []
    for combo in sorted(set(cases) | set(controls)):
        n1, m1 = cases[combo], controls[combo]
        ct = ContingencyTable(n1, m1, total_case - n1, total_control - m1)
        ratio = p = None
        if n1 > 0 and m1 > 0:
            p = fisher_right_tail(ct)
            if ct.n2 > 0 and ct.m2 > 0:
                ratio = odds_ratio(ct)
        out.append(ComboStats(combo, ct, ratio, p))
    return out


@dataclass
class Partitions:
    m_plus: list[ComboStats] = field(default_factory=list)
    m_zero: list[ComboStats] = field(default_factory=list)
    n_zero: list[ComboStats] = field(default_factory=list)
    n_minus: list[ComboStats] = field(default_factory=list)
    excluded_or_one: int = 0
    excluded_or_undefined: int = 0

    def counts(self) -> dict[str, int]:
        return {
            "M_PLUS": len(self.m_plus),
            "M_ZERO": len(self.m_zero),
            "N_ZERO": len(self.n_zero),
            "N_MINUS": len(self.n_minus),
            "excluded_or_one": self.excluded_or_one,
            "excluded_or_undefined": self.excluded_or_undefined,
        }


def partition(stats: Iterable[ComboStats]) -> Partitions:
    parts = Partitions()
    for st in stats:
        n1, m1 = st.case_count, st.control_count
        if n1 > 0 and m1 == 0:
            parts.m_plus.append(st)
        elif m1 > 0 and n1 == 0:
            parts.n_minus.append(st)
        elif st.odds_ratio is None:
            parts.excluded_or_undefined += 1
        elif st.odds_ratio > 1:
            parts.m_zero.append(st)
        elif st.odds_ratio < 1:
            parts.n_zero.append(st)
        else:
            parts.excluded_or_one += 1
    return parts


class Preset(str, enum.Enum):
    D_STAR = "D_STAR"
    D4000 = "D4000"
    D2000 = "D2000"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class PruneConfig:
    """How many combinations to keep from each quadrant.

    ``top_mzero_by_or`` / ``top_nzero_by_or``: ``None`` keeps every eligible
    combination, an integer keeps that many ranked by odds ratio (largest
    for M0, smallest for N0), and ``0`` drops the quadrant.
    """

    preset: Preset = Preset.D_STAR
    top_mplus: int = 1000
    alpha: float = 0.05
    n_nminus: int = 2200
    top_mzero_by_or: Optional[int] = None
    top_nzero_by_or: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "preset", Preset(self.preset))
        if self.top_mplus < 0 or self.n_nminus < 0:
            raise ConfigInvalid("quadrant sizes must be non-negative")
        if not 0 < self.alpha <= 1:
            raise ConfigInvalid("alpha must lie in (0, 1]")
        for name in ("top_mzero_by_or", "top_nzero_by_or"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigInvalid(f"{name} must be non-negative")

    @classmethod
    def from_preset(cls, preset, **overrides) -> "PruneConfig":
        preset = Preset(preset)
        base = {
            Preset.D_STAR: cls(Preset.D_STAR, 1000, 0.05, 2200, None, None),
            Preset.D4000: cls(Preset.D4000, 1000, 0.05, 1000, 1000, 1000),
            Preset.D2000: cls(Preset.D2000, 1000, 0.05, 1000, 0, 0),
            Preset.CUSTOM: cls(Preset.CUSTOM),
        }[preset]
        return replace(base, **overrides) if overrides else base


def _by_frequency(stats: Sequence[ComboStats]) -> list[ComboStats]:
    return sorted(stats, key=lambda s: (-s.frequency, s.combination.drugs))


def _take(items: list, n: Optional[int], what: str, warn: list) -> list:
    if n is None:
        return items
    if n > len(items):
        msg = f"{what}: requested {n}, only {len(items)} available"
        warn.append(msg)
        warnings.warn(msg, DatasetWarning, stacklevel=3)
        return items
    return items[:n]


def build_dataset(parts: Partitions, cfg: PruneConfig = PruneConfig(),
                  warnings_out: Optional[list] = None) -> list[LabeledInstance]:
    """Prune quadrants per ``cfg`` and label them (M side +1, N side -1).

    Frequency rankings break ties by ascending drug list, odds-ratio
    rankings likewise. Capping a request at availability emits a
    :class:`DatasetWarning` and appends the message to ``warnings_out``.
    """
    warn = warnings_out if warnings_out is not None else []
    if cfg.top_mplus > 0 and not parts.m_plus:
        raise EmptyPartition("M_PLUS is empty")
    if cfg.n_nminus > 0 and not parts.n_minus:
        raise EmptyPartition("N_MINUS is empty")

    m_plus = _take(_by_frequency(parts.m_plus), cfg.top_mplus, "M_PLUS", warn)

    significant = [s for s in parts.m_zero if s.odds_ratio > 1 and s.fisher_p < cfg.alpha]
    significant.sort(key=lambda s: (-s.odds_ratio, s.combination.drugs))
    m_zero = _take(significant, cfg.top_mzero_by_or, "M_ZERO", warn)

    n_zero = sorted(parts.n_zero, key=lambda s: (s.odds_ratio, s.combination.drugs))
    n_zero = _take(n_zero, cfg.top_nzero_by_or, "N_ZERO", warn)

    n_minus = _take(_by_frequency(parts.n_minus), cfg.n_nminus, "N_MINUS", warn)

    for name, chosen, requested in (("M_ZERO", m_zero, cfg.top_mzero_by_or),
                                    ("N_ZERO", n_zero, cfg.top_nzero_by_or)):
        if not chosen and requested != 0:
            msg = f"{name}: no eligible combinations"
            warn.append(msg)
            warnings.warn(msg, DatasetWarning, stacklevel=2)

    out = []
    out += [LabeledInstance(s.combination, 1, Source.M_PLUS, s.frequency) for s in m_plus]
    out += [LabeledInstance(s.combination, 1, Source.M_ZERO, s.frequency, s.odds_ratio) for s in m_zero]
    out += [LabeledInstance(s.combination, -1, Source.N_ZERO, s.frequency, s.odds_ratio) for s in n_zero]
    out += [LabeledInstance(s.combination, -1, Source.N_MINUS, s.frequency) for s in n_minus]
    return out


@dataclass(frozen=True)
class SynthConfig:
    """Planted-signal event generator settings.

    Events are drawn from a pool of ``n_patterns`` prescription patterns
    (default ``n_events // 4``) so combinations recur. A share
    ``signal_share`` of patterns is seeded with two risky drugs. An event is
    a case with probability 0.9 if its combination holds at least two risky
    drugs and 0.1 otherwise.
    """

    n_drugs: int = 60
    n_events: int = 2000
    risky_drug_fraction: float = 0.15
    mean_order: float = 3.0
    seed: int = 0
    n_patterns: Optional[int] = None
    signal_share: float = 0.5

    def __post_init__(self):
        if self.n_drugs < 4:
            raise ConfigInvalid("n_drugs must be at least 4")
        if self.n_events < 1:
            raise ConfigInvalid("n_events must be positive")
        if not 0 <= self.risky_drug_fraction <= 1:
            raise ConfigInvalid("risky_drug_fraction must lie in [0, 1]")
        if not 2 <= self.mean_order <= self.n_drugs:
            raise ConfigInvalid("mean_order must lie in [2, n_drugs]")
        if self.n_patterns is not None and self.n_patterns < 1:
            raise ConfigInvalid("n_patterns must be positive")
        if not 0 <= self.signal_share <= 1:
            raise ConfigInvalid("signal_share must lie in [0, 1]")


CASE_PROB_RISKY = 0.9
CASE_PROB_BASE = 0.1


def synth_drug_ids(n_drugs: int) -> list[str]:
    width = max(3, len(str(n_drugs - 1)))
    return [f"D{i:0{width}d}" for i in range(n_drugs)]


def risky_drugs(cfg: SynthConfig) -> list[int]:
    n_risky = int(round(cfg.risky_drug_fraction * cfg.n_drugs))
    rng = np.random.default_rng([cfg.seed, 1])
    return sorted(int(d) for d in rng.choice(cfg.n_drugs, size=n_risky, replace=False))


def synth_generate(cfg: SynthConfig) -> list[EventRecord]:
    """Deterministic synthetic event log for ``cfg``; drug ``i`` has id
    ``synth_drug_ids(n)[i]`` and :func:`risky_drugs` lists the risky ones."""
    rng = np.random.default_rng([cfg.seed, 0])
    risky = risky_drugs(cfg)
    risky_set = set(risky)
    n_patterns = cfg.n_patterns or max(1, cfg.n_events // 4)
    patterns = []
    for _ in range(n_patterns):
        order = int(min(cfg.n_drugs, 2 + rng.poisson(cfg.mean_order - 2)))
        if len(risky) >= 2 and rng.random() < cfg.signal_share:
            seed_pair = rng.choice(risky, size=2, replace=False).tolist()
            rest = [d for d in range(cfg.n_drugs) if d not in seed_pair]
            extra = rng.choice(rest, size=order - 2, replace=False).tolist()
            drugs = seed_pair + extra
        else:
            drugs = rng.choice(cfg.n_drugs, size=order, replace=False).tolist()
        patterns.append(canonicalize(drugs))
    picks = rng.integers(0, n_patterns, size=cfg.n_events)
    coins = rng.random(cfg.n_events)
    width = len(str(cfg.n_events))
    events = []
    for e, (k, coin) in enumerate(zip(picks, coins)):
        combo = patterns[int(k)]
        n_risky = sum(1 for d in combo.drugs if d in risky_set)
        p_case = CASE_PROB_RISKY if n_risky >= 2 else CASE_PROB_BASE
        events.append(EventRecord(f"E{e:0{width}d}", combo, bool(coin < p_case)))
    return events
