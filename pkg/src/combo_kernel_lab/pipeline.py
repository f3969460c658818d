"""Cross-validated training over a precomputed combination kernel and the
text reports written from the result."""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import LabeledInstance, SymmetricMatrix
from .dataset import PruneConfig
from .exceptions import ConfigInvalid, DegenerateFolds, ValidationError
from .io import ensure_dir, write_records, write_table
from .kernels import KernelSpec, psd_repair, similarity_matrix
from .sds import DEFAULT_FINGERPRINT_WIDTH, SdsKind
from .stats import MetricsReport, auc_score, classification_metrics, dmyo_percentage, mean_metrics
from .svm import TrainConfig, decision_values, train

logger = logging.getLogger(__name__)

MAX_RESHUFFLES = 20
INNER_FOLDS = 4


class PsdMode(str, enum.Enum):
    FULL_MATRIX = "FULL_MATRIX"
    TRAIN_ONLY = "TRAIN_ONLY"


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelSpec
    svm: TrainConfig = TrainConfig()
    folds: int = 5
    seed: int = 0
    psd_mode: PsdMode = PsdMode.FULL_MATRIX
    c_grid: tuple = ()
    prune: PruneConfig = PruneConfig()
    events: Optional[str] = None
    fingerprints: Optional[str] = None
    dmyo: Optional[str] = None
    dataset: Optional[str] = None
    out_dir: Optional[str] = None
    fingerprint_width: int = DEFAULT_FINGERPRINT_WIDTH
    top_k: int = 10
    eigen_method: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "psd_mode", PsdMode(self.psd_mode))
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if self.folds < 2:
            raise ConfigInvalid("folds must be at least 2")
        if any(c <= 0 for c in self.c_grid):
            raise ConfigInvalid("C grid values must be positive")
        if self.top_k < 0:
            raise ConfigInvalid("top_k must be non-negative")
        if self.eigen_method not in ("auto", "jacobi", "lapack"):
            raise ConfigInvalid(f"unknown eigen_method {self.eigen_method!r}")

    def check_inputs(self) -> None:
        """Referenced input files exist; fingerprints iff the kernel uses
        structural similarity."""
        uses_2d = self.kernel.sds_kind is SdsKind.SDS_2D
        if uses_2d and not self.fingerprints:
            raise ConfigInvalid("kernel uses SDS_2D but no fingerprints file is configured")
        if not uses_2d and self.fingerprints:
            raise ConfigInvalid("fingerprints given but the kernel does not use SDS_2D")
        for name in ("events", "fingerprints", "dmyo", "dataset"):
            path = getattr(self, name)
            if path and not os.path.exists(path):
                raise ConfigInvalid(f"{name} file {path} does not exist")

    def echo(self) -> list[tuple[str, str]]:
        k, s, p = self.kernel, self.svm, self.prune
        return [
            ("kernel", k.family.value),
            ("sds", k.sds_kind.value),
            ("psd_tolerance", repr(k.psd_tolerance)),
            ("pb_ridge", repr(k.pb_ridge)),
            ("pb_cov_ridge", repr(k.pb_cov_ridge)),
            ("C", repr(s.C)),
            ("kkt_tol", repr(s.kkt_tol)),
            ("max_passes", str(s.max_passes)),
            ("c_grid", ",".join(repr(c) for c in self.c_grid) or "none"),
            ("folds", str(self.folds)),
            ("seed", str(self.seed)),
            ("psd_mode", self.psd_mode.value),
            ("preset", p.preset.value),
            ("top_mplus", str(p.top_mplus)),
            ("alpha", repr(p.alpha)),
            ("n_nminus", str(p.n_nminus)),
            ("top_mzero_by_or", "all" if p.top_mzero_by_or is None else str(p.top_mzero_by_or)),
            ("top_nzero_by_or", "all" if p.top_nzero_by_or is None else str(p.top_nzero_by_or)),
            ("eigen_method", self.eigen_method),
        ]


@dataclass
class CvReport:
    per_fold: list[MetricsReport]
    mean: MetricsReport
    config: list[tuple[str, str]]
    psd_mode: PsdMode
    psd_shifts: list[float]
    seed: int
    folds: list[list[int]]
    decision_values: list[float]
    chosen_C: list[float]
    converged: list[bool]
    warnings: list[str] = field(default_factory=list)

    @property
    def fold_of(self) -> list[int]:
        out = [0] * len(self.decision_values)
        for f, idx in enumerate(self.folds):
            for i in idx:
                out[i] = f
        return out

    def to_json(self) -> str:
        d = asdict(self)
        d["psd_mode"] = self.psd_mode.value
        return json.dumps(d, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CvReport":
        d = json.loads(text)

        def metrics(m):
            m["flags"] = tuple(m["flags"])
            return MetricsReport(**m)

        return cls(
            per_fold=[metrics(m) for m in d["per_fold"]],
            mean=metrics(d["mean"]),
            config=[tuple(kv) for kv in d["config"]],
            psd_mode=PsdMode(d["psd_mode"]),
            psd_shifts=d["psd_shifts"],
            seed=d["seed"],
            folds=d["folds"],
            decision_values=d["decision_values"],
            chosen_C=d["chosen_C"],
            converged=d["converged"],
            warnings=d["warnings"],
        )


def make_folds(labels, n_folds: int, seed: int, max_reshuffles: int = MAX_RESHUFFLES):
    """Seeded shuffle then contiguous slicing into ``n_folds`` near-equal
    folds; reshuffles until every fold holds both classes."""
    y = np.asarray(labels)
    n = y.shape[0]
    if n < n_folds:
        raise DegenerateFolds(f"{n} instances cannot fill {n_folds} folds")
    rng = np.random.default_rng(seed)
    for _ in range(max_reshuffles + 1):
        perm = rng.permutation(n)
        folds = [np.sort(f) for f in np.array_split(perm, n_folds)]
        if all(np.unique(y[f]).size == 2 for f in folds):
            return folds
    raise DegenerateFolds(f"no fold assignment with both classes in every fold after {max_reshuffles} reshuffles")


def _select_C(K: np.ndarray, y: np.ndarray, cfg: RunConfig, seed: int) -> float:
    best_c, best_auc = cfg.svm.C, -np.inf
    inner = make_folds(y, INNER_FOLDS, seed)
    for c in cfg.c_grid:
        tcfg = TrainConfig(c, cfg.svm.kkt_tol, cfg.svm.max_passes)
        aucs = []
        for test in inner:
            tr = np.setdiff1d(np.arange(y.shape[0]), test)
            model = train(K[np.ix_(tr, tr)], y[tr], tcfg, check_psd=False)
            aucs.append(auc_score(decision_values(model, K[np.ix_(test, tr)]), y[test]))
        score = float(np.mean(aucs))
        if score > best_auc:
            best_c, best_auc = c, score
    return best_c


def cv_run(dataset: Sequence[LabeledInstance], cfg: RunConfig, sds=None,
           similarity: Optional[SymmetricMatrix] = None,
           warnings: Optional[list] = None) -> CvReport:
    """k-fold cross-validation of the SVM over the configured kernel.

    ``similarity`` (the unrepaired instance-by-instance matrix) is computed
    from ``sds`` when not given.
    """
    y = np.array([inst.label for inst in dataset])
    if np.unique(y).size < 2:
        raise ValidationError("dataset needs both classes")
    if similarity is None:
        similarity = similarity_matrix([inst.combination for inst in dataset], cfg.kernel, sds)
    S = similarity.values if isinstance(similarity, SymmetricMatrix) else np.asarray(similarity)
    if S.shape != (y.shape[0], y.shape[0]):
        raise ValidationError(f"similarity shape {S.shape} does not match {y.shape[0]} instances")
    tol = cfg.kernel.psd_tolerance

    folds = make_folds(y, cfg.folds, cfg.seed)
    shifts = []
    if cfg.psd_mode is PsdMode.FULL_MATRIX:
        repaired = psd_repair(S, tol, method=cfg.eigen_method)
        K = repaired.values
        shifts.append(repaired.shift)

    values = np.zeros(y.shape[0])
    per_fold, chosen, converged = [], [], []
    all_idx = np.arange(y.shape[0])
    for f, test in enumerate(folds):
        tr = np.setdiff1d(all_idx, test)
        if cfg.psd_mode is PsdMode.FULL_MATRIX:
            k_train = K[np.ix_(tr, tr)]
            k_test = K[np.ix_(test, tr)]
        else:
            repaired = psd_repair(S[np.ix_(tr, tr)], tol, method=cfg.eigen_method)
            shifts.append(repaired.shift)
            k_train = repaired.values
            k_test = S[np.ix_(test, tr)]
        c = _select_C(k_train, y[tr], cfg, cfg.seed + 1000 * (f + 1)) if cfg.c_grid else cfg.svm.C
        tcfg = TrainConfig(c, cfg.svm.kkt_tol, cfg.svm.max_passes)
        model = train(k_train, y[tr], tcfg, check_psd=False)
        f_test = decision_values(model, k_test)
        values[test] = f_test
        per_fold.append(classification_metrics(f_test, y[test]))
        chosen.append(c)
        converged.append(bool(model.converged))
        logger.info("fold %d: auc=%.4f C=%g", f + 1, per_fold[-1].auc, c)

    return CvReport(
        per_fold=per_fold,
        mean=mean_metrics(per_fold),
        config=cfg.echo(),
        psd_mode=cfg.psd_mode,
        psd_shifts=[float(s) for s in shifts],
        seed=cfg.seed,
        folds=[[int(i) for i in f] for f in folds],
        decision_values=[float(v) for v in values],
        chosen_C=chosen,
        converged=converged,
        warnings=list(warnings or []),
    )


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _metric_records(prefix: str, m: MetricsReport):
    for name in MetricsReport.METRICS:
        yield f"{prefix}.{name}", _fmt(getattr(m, name))
    for name in ("tp", "fp", "tn", "fn"):
        yield f"{prefix}.{name}", getattr(m, name)
    if m.flags:
        yield f"{prefix}.flags", ",".join(m.flags)


@dataclass(frozen=True)
class _Row:
    index: int
    prd: float
    inst: LabeledInstance
    fold: int
    dmyo_pct: Optional[float]

    @property
    def correct(self) -> bool:
        return (self.prd >= 0) == (self.inst.label == 1)


def _mean_pct(rows) -> Optional[float]:
    pcts = [r.dmyo_pct for r in rows]
    if not rows or any(p is None for p in pcts):
        return None
    return float(np.mean(pcts))


def emit_report(report: CvReport, dataset: Sequence[LabeledInstance], out_dir,
                drug_ids: Optional[Sequence[str]] = None, dmyo=None, top_k: int = 10) -> list[Path]:
    """Write the metrics record, prediction tables, D_Myo enrichment and
    scatter data into ``out_dir``. Returns the written paths."""
    if len(dataset) != len(report.decision_values):
        raise ValidationError("dataset does not match the report")
    out = ensure_dir(out_dir)
    dmyo = set(dmyo) if dmyo is not None else None
    fold_of = report.fold_of
    rows = [
        _Row(i, float(report.decision_values[i]), inst, fold_of[i],
             dmyo_percentage(inst.combination.drugs, dmyo) if dmyo is not None else None)
        for i, inst in enumerate(dataset)
    ]
    name = (lambda d: drug_ids[d]) if drug_ids is not None else str
    ranked = sorted(rows, key=lambda r: -r.prd)  # stable: ties keep dataset order

    def table_rows(selected):
        for rank, r in enumerate(selected, start=1):
            yield [rank, _fmt(r.prd), r.inst.frequency, _fmt(r.inst.odds_ratio), r.inst.source.value,
                   ";".join(name(d) for d in r.inst.combination.drugs), _fmt(r.dmyo_pct),
                   f"{r.inst.label:+d}", r.fold + 1]

    header = ["rank", "prd", "frq", "OR", "source", "drugs", "dmyo_pct", "label", "fold"]
    written = []

    def table(fname, selected):
        path = out / fname
        write_table(path, header, table_rows(selected))
        written.append(path)

    positives = [r for r in ranked if r.inst.label == 1]
    negatives = [r for r in ranked if r.inst.label == -1]
    pos_correct = [r for r in positives if r.correct]
    pos_wrong = [r for r in positives if not r.correct]
    neg_correct = [r for r in negatives if r.correct]
    neg_wrong = [r for r in negatives if not r.correct]

    table("predictions.tsv", ranked)
    table("top_positives.tsv", pos_correct[:top_k])
    table("top_misclassified_negatives.tsv", neg_wrong[:top_k])
    if dmyo is not None:
        table("top_positives_without_dmyo.tsv", [r for r in pos_correct if r.dmyo_pct == 0.0][:top_k])

        def lowest_first(rs):
            return sorted(rs, key=lambda r: r.prd)

        groups = [
            ("M_mis_top", lowest_first(pos_wrong)[:top_k]),
            ("M_mis", pos_wrong),
            ("M_pos", positives),
            ("M_top", pos_correct[:top_k]),
            ("N_mis_top", neg_wrong[:top_k]),
            ("N_mis", neg_wrong),
            ("N_neg", negatives),
            ("N_top", lowest_first(neg_correct)[:top_k]),
        ]
        path = out / "enrichment.tsv"
        write_table(path, ["group", "n", "dmyo_pct"],
                    ([g, len(rs), _fmt(_mean_pct(rs))] for g, rs in groups))
        written.append(path)

    path = out / "scatter.tsv"
    write_table(path, ["source", "order", "frequency", "odds_ratio", "prd"],
                ([r.inst.source.value, r.inst.combination.order, r.inst.frequency,
                  _fmt(r.inst.odds_ratio), _fmt(r.prd)] for r in rows))
    written.append(path)

    records = [(f"config.{k}", v) for k, v in report.config]
    records += [("psd_mode", report.psd_mode.value),
                ("psd_shift", ",".join(repr(s) for s in report.psd_shifts)),
                ("seed", report.seed),
                ("n_instances", len(dataset)),
                ("n_positive", len(positives)),
                ("n_negative", len(negatives))]
    for f, m in enumerate(report.per_fold, start=1):
        records += [(f"fold{f}.size", len(report.folds[f - 1])),
                    (f"fold{f}.C", repr(report.chosen_C[f - 1])),
                    (f"fold{f}.converged", str(report.converged[f - 1]).lower())]
        records += list(_metric_records(f"fold{f}", m))
    records += list(_metric_records("mean", report.mean))
    records += [(f"warning.{i}", w) for i, w in enumerate(report.warnings, start=1)]
    path = out / "metrics.txt"
    write_records(path, records)
    written.append(path)
    return written
