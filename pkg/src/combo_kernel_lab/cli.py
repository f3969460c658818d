"""``combo-kernel-lab`` command line entry point.

Every subcommand reads an optional flat ``key = value`` config file; the
``--seed``, ``--kernel``, ``--sds``, ``--psd-mode``, ``--folds`` and ``--out``
flags override the matching keys. Exit status is 0 on success, 1 on invalid
input or configuration, 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional

from . import io
from .core import DrugRegistry
from .dataset import (
    PruneConfig,
    SynthConfig,
    build_dataset,
    mine,
    partition,
    risky_drugs,
    synth_drug_ids,
    synth_generate,
)
from .exceptions import ComboKernelError, ConfigInvalid, ValidationError
from .kernels import KernelFamily, KernelSpec, psd_repair, similarity_matrix
from .pipeline import CvReport, PsdMode, RunConfig, cv_run, emit_report
from .sds import SdsKind, sds_matrix
from .svm import TrainConfig

logger = logging.getLogger("combo_kernel_lab")

KERNELS = {"gm": KernelFamily.GM, "cd1": KernelFamily.CD1, "cd2": KernelFamily.CD2,
           "ds": KernelFamily.DS, "pb": KernelFamily.PB}
SDS_KINDS = {"2d": SdsKind.SDS_2D, "cm": SdsKind.SDS_CM, "none": SdsKind.NONE}
PSD_MODES = {"full": PsdMode.FULL_MATRIX, "train-only": PsdMode.TRAIN_ONLY}

KNOWN_KEYS = {
    "events", "fingerprints", "dmyo", "dataset", "sds_matrix", "out",
    "kernel", "sds", "psd_mode", "folds", "seed", "C", "kkt_tol", "max_passes", "c_grid",
    "preset", "top_mplus", "alpha", "n_nminus", "top_mzero_by_or", "top_nzero_by_or",
    "fingerprint_width", "psd_tolerance", "pb_ridge", "pb_cov_ridge", "top_k", "eigen_method",
    "n_drugs", "n_events", "risky_drug_fraction", "mean_order", "n_patterns", "signal_share",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="combo-kernel-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "synth": "generate a planted-signal event log (events.csv, dmyo.txt)",
        "ingest": "index drugs and mine combination statistics",
        "dataset": "build a labeled dataset TSV from an event log",
        "sds": "compute the single-drug similarity matrix",
        "kernel": "compute the PSD-repaired combination kernel for a dataset",
        "cv": "cross-validate the SVM and write the report",
        "report": "re-emit report files from a saved cv_report.json",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--kernel", choices=sorted(KERNELS))
        p.add_argument("--sds", choices=sorted(SDS_KINDS))
        p.add_argument("--psd-mode", choices=sorted(PSD_MODES))
        p.add_argument("--folds", type=int)
        p.add_argument("--out", help="output directory")
    return parser


class Settings:
    """Config-file values with CLI overrides and typed accessors."""

    def __init__(self, values: dict[str, str]):
        unknown = sorted(set(values) - KNOWN_KEYS)
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {', '.join(unknown)}")
        self.values = values

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v in (None, "") else v

    def _typed(self, key, cast, default):
        v = self.get(key)
        if v is None:
            return default
        try:
            return cast(v)
        except ValueError:
            raise ConfigInvalid(f"invalid value for {key}: {v!r}") from None

    def int(self, key, default=None):
        return self._typed(key, int, default)

    def float(self, key, default=None):
        return self._typed(key, float, default)

    def optional_count(self, key, default):
        v = self.get(key)
        if v is None:
            return default
        if v.lower() == "all":
            return None
        return self._typed(key, int, default)

    def choice(self, key, table, default):
        v = self.get(key)
        if v is None:
            return default
        try:
            return table[v.lower()]
        except KeyError:
            raise ConfigInvalid(f"{key} must be one of {', '.join(sorted(table))}, got {v!r}") from None

    def path(self, key, required=False) -> Optional[str]:
        v = self.get(key)
        if v is None and required:
            raise ConfigInvalid(f"missing required config key {key!r}")
        return v


def _settings(args) -> Settings:
    values = io.read_config(args.config) if args.config else {}
    overrides = {"seed": args.seed, "kernel": args.kernel, "sds": args.sds,
                 "psd_mode": args.psd_mode, "folds": args.folds, "out": args.out}
    for key, val in overrides.items():
        if val is not None:
            values[key] = str(val)
    return Settings(values)


def _kernel_spec(s: Settings) -> KernelSpec:
    family = s.choice("kernel", KERNELS, KernelFamily.GM)
    default_kind = SdsKind.NONE if family in (KernelFamily.CD1, KernelFamily.CD2) else SdsKind.SDS_CM
    kind = s.choice("sds", SDS_KINDS, default_kind)
    if family in (KernelFamily.CD1, KernelFamily.CD2):
        kind = SdsKind.NONE
    return KernelSpec(family, kind,
                      s.float("psd_tolerance", 1e-8),
                      s.float("pb_ridge", 1e-6),
                      s.float("pb_cov_ridge", 1e-3))


def _prune_config(s: Settings) -> PruneConfig:
    presets = {"d_star": "D_STAR", "dstar": "D_STAR", "d4000": "D4000", "d2000": "D2000", "custom": "CUSTOM"}
    base = PruneConfig.from_preset(s.choice("preset", presets, "D_STAR"))
    return PruneConfig(
        base.preset,
        s.int("top_mplus", base.top_mplus),
        s.float("alpha", base.alpha),
        s.int("n_nminus", base.n_nminus),
        s.optional_count("top_mzero_by_or", base.top_mzero_by_or),
        s.optional_count("top_nzero_by_or", base.top_nzero_by_or),
    )


def _run_config(s: Settings) -> RunConfig:
    grid = s.get("c_grid")
    try:
        c_grid = tuple(float(c) for c in grid.split(",")) if grid else ()
    except ValueError:
        raise ConfigInvalid(f"invalid c_grid {grid!r}") from None
    cfg = RunConfig(
        kernel=_kernel_spec(s),
        svm=TrainConfig(s.float("C", 1.0), s.float("kkt_tol", 1e-3), s.int("max_passes", 200)),
        folds=s.int("folds", 5),
        seed=s.int("seed", 0),
        psd_mode=s.choice("psd_mode", PSD_MODES, PsdMode.FULL_MATRIX),
        c_grid=c_grid,
        prune=_prune_config(s),
        events=s.path("events"),
        fingerprints=s.path("fingerprints"),
        dmyo=s.path("dmyo"),
        dataset=s.path("dataset"),
        out_dir=s.path("out") or ".",
        fingerprint_width=s.int("fingerprint_width", 2048),
        top_k=s.int("top_k", 10),
        eigen_method=s.get("eigen_method", "auto"),
    )
    return cfg


def _load_events(cfg: RunConfig) -> io.EventLog:
    if not cfg.events:
        raise ConfigInvalid("missing required config key 'events'")
    return io.read_events(cfg.events)


def _dataset(cfg: RunConfig, log: io.EventLog, warn: list):
    if cfg.dataset:
        return io.read_dataset(cfg.dataset, log.registry), None
    parts = partition(mine(log.events))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        data = build_dataset(parts, cfg.prune, warnings_out=warn)
    return data, parts


def _sds(cfg: RunConfig, s: Settings, log: io.EventLog):
    spec = cfg.kernel
    if not spec.needs_sds:
        return None
    if s.path("sds_matrix"):
        sds = io.read_matrix(s.path("sds_matrix"))
        if sds.n < log.n_drugs:
            raise ValidationError(f"sds matrix has {sds.n} rows, event log has {log.n_drugs} drugs")
        return sds
    if spec.sds_kind is SdsKind.SDS_2D:
        fps = io.read_fingerprints(cfg.fingerprints, cfg.fingerprint_width)
        return sds_matrix(SdsKind.SDS_2D, fingerprints=fps, drug_ids=log.registry.ids)
    return sds_matrix(SdsKind.SDS_CM, events=log.events, n_drugs=log.n_drugs)


def _dmyo_indices(cfg: RunConfig, log: io.EventLog, warn: list):
    if not cfg.dmyo:
        return None
    ids = io.read_drug_list(cfg.dmyo)
    missing = [d for d in ids if d not in log.registry]
    if missing:
        warn.append(f"{len(missing)} D_Myo drug ids not present in the event log")
    return {log.registry.index_of(d) for d in ids if d in log.registry}


def cmd_synth(s: Settings) -> int:
    cfg = SynthConfig(
        n_drugs=s.int("n_drugs", 60),
        n_events=s.int("n_events", 2000),
        risky_drug_fraction=s.float("risky_drug_fraction", 0.15),
        mean_order=s.float("mean_order", 3.0),
        seed=s.int("seed", 0),
        n_patterns=s.int("n_patterns", None),
        signal_share=s.float("signal_share", 0.5),
    )
    out = io.ensure_dir(s.path("out") or ".")
    ids = synth_drug_ids(cfg.n_drugs)
    io.write_events(out / "events.csv", synth_generate(cfg), ids)
    io.write_drug_list(out / "dmyo.txt", [ids[d] for d in risky_drugs(cfg)])
    print(f"wrote {out / 'events.csv'} and {out / 'dmyo.txt'}")
    return 0


def cmd_ingest(s: Settings) -> int:
    cfg = _run_config(s)
    cfg.check_inputs()
    log = _load_events(cfg)
    out = io.ensure_dir(cfg.out_dir)
    io.write_table(out / "drugs.tsv", ["index", "drug_id"], enumerate(log.registry.ids))
    stats = mine(log.events)
    parts = partition(stats)
    quadrant = {}
    for name, group in (("M_PLUS", parts.m_plus), ("M_ZERO", parts.m_zero),
                        ("N_ZERO", parts.n_zero), ("N_MINUS", parts.n_minus)):
        for st in group:
            quadrant[st.combination] = name

    def fmt(x):
        return "NA" if x is None else repr(x)

    io.write_table(
        out / "combinations.tsv",
        ["drugs", "order", "n1", "m1", "n2", "m2", "odds_ratio", "fisher_p", "quadrant"],
        ([";".join(log.registry.id_of(d) for d in st.combination.drugs), st.combination.order,
          st.contingency.n1, st.contingency.m1, st.contingency.n2, st.contingency.m2,
          fmt(st.odds_ratio), fmt(st.fisher_p), quadrant.get(st.combination, "EXCLUDED")]
         for st in stats),
    )
    io.write_records(out / "ingest_summary.txt",
                     [("events", len(log.events)), ("drugs", log.n_drugs),
                      ("case_events", sum(e.adr for e in log.events)),
                      ("combinations", len(stats))] + list(parts.counts().items()))
    print(f"{len(log.events)} events, {log.n_drugs} drugs, {len(stats)} combinations")
    return 0


def cmd_dataset(s: Settings) -> int:
    cfg = _run_config(s)
    cfg.check_inputs()
    log = _load_events(cfg)
    out = io.ensure_dir(cfg.out_dir)
    warn: list = []
    parts = partition(mine(log.events))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        data = build_dataset(parts, cfg.prune, warnings_out=warn)
    io.write_dataset(out / "dataset.tsv", data, log.registry.ids)
    counts: dict = {}
    for inst in data:
        counts[inst.source.value] = counts.get(inst.source.value, 0) + 1
    records = [(f"partition.{k}", v) for k, v in parts.counts().items()]
    records += [(f"dataset.{k}", counts.get(k, 0)) for k in ("M_PLUS", "M_ZERO", "N_ZERO", "N_MINUS")]
    records += [(f"warning.{i}", w) for i, w in enumerate(warn, start=1)]
    io.write_records(out / "dataset_summary.txt", records)
    for w in warn:
        logger.warning(w)
    print(f"wrote {len(data)} instances to {out / 'dataset.tsv'}")
    return 0


def cmd_sds(s: Settings) -> int:
    cfg = _run_config(s)
    cfg.check_inputs()
    if not cfg.kernel.needs_sds:
        raise ConfigInvalid("choose an sds kind (2d or cm) for the sds subcommand")
    log = _load_events(cfg)
    out = io.ensure_dir(cfg.out_dir)
    io.write_matrix(out / "sds.csv", _sds(cfg, s, log))
    print(f"wrote {out / 'sds.csv'} ({log.n_drugs} drugs)")
    return 0


def cmd_kernel(s: Settings) -> int:
    cfg = _run_config(s)
    cfg.check_inputs()
    log = _load_events(cfg)
    out = io.ensure_dir(cfg.out_dir)
    warn: list = []
    data, _ = _dataset(cfg, log, warn)
    sim = similarity_matrix([d.combination for d in data], cfg.kernel, _sds(cfg, s, log))
    km = psd_repair(sim, cfg.kernel.psd_tolerance, method=cfg.eigen_method)
    io.write_matrix(out / "kernel.csv", km.values)
    io.write_records(out / "kernel_info.txt",
                     cfg.echo()[:5] + [("n", km.n), ("psd_shift", repr(km.shift))])
    print(f"wrote {out / 'kernel.csv'} (n={km.n}, shift={km.shift:.3g})")
    return 0


def cmd_cv(s: Settings) -> int:
    cfg = _run_config(s)
    cfg.check_inputs()
    log = _load_events(cfg)
    out = io.ensure_dir(cfg.out_dir)
    warn: list = []
    data, _ = _dataset(cfg, log, warn)
    if not cfg.dataset:
        io.write_dataset(out / "dataset.tsv", data, log.registry.ids)
    dmyo = _dmyo_indices(cfg, log, warn)
    report = cv_run(data, cfg, sds=_sds(cfg, s, log), warnings=warn)
    (out / "cv_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    emit_report(report, data, out, drug_ids=log.registry.ids, dmyo=dmyo, top_k=cfg.top_k)
    m = report.mean
    print(f"mean over {cfg.folds} folds: acc={m.accuracy:.4f} pre={m.precision:.4f} "
          f"rec={m.recall:.4f} F1={m.f1:.4f} AUC={m.auc:.4f}")
    return 0


def cmd_report(s: Settings) -> int:
    cfg = _run_config(s)
    out = Path(cfg.out_dir)
    state = out / "cv_report.json"
    if not state.exists():
        raise ConfigInvalid(f"{state} not found; run the cv subcommand first")
    report = CvReport.from_json(state.read_text(encoding="utf-8"))
    dataset_path = cfg.dataset or str(out / "dataset.tsv")
    registry = io.read_events(cfg.events).registry if cfg.events else DrugRegistry()
    data = io.read_dataset(dataset_path, registry)
    warn: list = []
    dmyo = None
    if cfg.dmyo:
        ids = io.read_drug_list(cfg.dmyo)
        dmyo = {registry.index_of(d) for d in ids if d in registry}
    emit_report(report, data, out, drug_ids=registry.ids, dmyo=dmyo, top_k=cfg.top_k)
    print(f"re-emitted report files in {out}")
    return 0


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "dataset": cmd_dataset, "sds": cmd_sds,
            "kernel": cmd_kernel, "cv": cmd_cv, "report": cmd_report}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](_settings(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ComboKernelError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
