"""Acceptance gate: one check per release criterion at its stated tolerance.

Each check prints a single ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts. Run standalone with ``python tests/test_acceptance.py``.
"""

import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from combo_kernel_lab.cli import main as cli_main
from combo_kernel_lab.core import ContingencyTable, Source
from combo_kernel_lab.dataset import (
    DatasetWarning,
    PruneConfig,
    SynthConfig,
    build_dataset,
    mine,
    partition,
    synth_generate,
)
from combo_kernel_lab.kernels import KernelFamily, KernelSpec, psd_repair, s_gm, similarity_matrix
from combo_kernel_lab.linalg import cholesky, eigen_symmetric
from combo_kernel_lab.lsap import brute_force_lsap, solve_lsap
from combo_kernel_lab.pipeline import RunConfig, cv_run
from combo_kernel_lab.sds import SdsKind, sds_matrix
from combo_kernel_lab.stats import auc_score, fisher_right_tail
from combo_kernel_lab.svm import TrainConfig, decision_values, kkt_violations, predict_labels, train

from conftest import quadrant_event_log, random_combinations, random_sds


def check_lsap():
    r = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    shapes = set()
    n = 0
    for rows in range(1, 8):
        for cols in range(1, 8):
            for _ in range(6):
                c = r.random((rows, cols))
                n += 1
                shapes.add((rows, cols))
                if solve_lsap(c).total_cost != brute_force_lsap(c).total_cost:
                    mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and n >= 200 and elapsed < 5.0
    return ok, f"{n} matrices over {len(shapes)} shapes, {mismatches} mismatches, {elapsed:.2f}s (< 5s)"


def check_psd_repair():
    r = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = math.inf
    bad_off = bad_diag = 0
    for _ in range(100):
        n = int(r.integers(1, 51))
        a = r.uniform(-1, 1, size=(n, n))
        s = np.triu(a) + np.triu(a, 1).T
        k = psd_repair(s)
        off = ~np.eye(n, dtype=bool)
        bad_off += not np.array_equal(k.values[off], s[off])
        bad_diag += not np.array_equal(np.diag(k.values), np.diag(s) + k.shift)
        worst = min(worst, np.linalg.eigvalsh(k.values)[0])
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-8 and bad_off == 0 and bad_diag == 0 and elapsed < 10.0
    return ok, (f"min eigenvalue {worst:.3e} (>= -1e-8), off-diagonal changes {bad_off}, "
                f"non-uniform shifts {bad_diag}, {elapsed:.2f}s (< 10s)")


def check_kernel_validity():
    r = np.random.default_rng(11)
    worst = {}
    for fam in (KernelFamily.CD1, KernelFamily.CD2, KernelFamily.DS):
        kind = SdsKind.SDS_CM if fam is KernelFamily.DS else SdsKind.NONE
        lam = math.inf
        for _ in range(10):
            sds = psd_repair(random_sds(r, 30)).values
            gram = similarity_matrix(random_combinations(r, 40, 30, 6), KernelSpec(fam, kind), sds)
            lam = min(lam, np.linalg.eigvalsh(gram.values)[0])
        worst[fam.value] = lam
    ok = all(v >= -1e-8 for v in worst.values())
    return ok, ", ".join(f"{k} min eigenvalue {v:.2e}" for k, v in worst.items()) + " (>= -1e-8, unrepaired)"


def check_s_gm():
    r = np.random.default_rng(13)
    sds = random_sds(r, 25)
    combos = random_combinations(r, 100, 25, 8)
    self_exact = all(s_gm(d, d, sds) == len(d) for d in combos)
    sym = bounded = True
    for p, q in zip(combos, combos[1:] + combos[:1]):
        v = s_gm(p, q, sds)
        sym &= v == s_gm(q, p, sds)
        bounded &= 0.0 <= v <= min(len(p), len(q))
    ok = self_exact and sym and bounded
    return ok, f"self == |D| exactly: {self_exact}, symmetric: {sym}, <= min(k_p, k_q): {bounded} (100 combos)"


def check_eigen_cholesky():
    r = np.random.default_rng(17)
    recon = trace = chol = 0.0
    for n in [1, 2, 5, 10, 20, 35, 50, 60]:
        a = r.uniform(-2, 2, size=(n, n))
        s = np.triu(a) + np.triu(a, 1).T
        e = eigen_symmetric(s, method="jacobi")
        recon = max(recon, np.abs(e.reconstruct() - s).max())
        trace = max(trace, abs(e.eigenvalues.sum() - np.trace(s)) / max(1.0, abs(np.trace(s))))
        spd = a @ a.T + 1e-2 * np.eye(n)
        low = cholesky(spd)
        chol = max(chol, np.abs(low @ low.T - spd).max() / np.abs(spd).max())
    ok = recon <= 1e-7 and chol <= 1e-9 and trace <= 1e-8
    return ok, (f"reconstruction {recon:.1e} (<= 1e-7), L*L' {chol:.1e} (<= 1e-9 rel), "
                f"trace {trace:.1e} (<= 1e-8 rel), n <= 60")


def pair_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y != 1]
    credit = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return credit / (len(pos) * len(neg))


def check_auc():
    r = np.random.default_rng(19)
    worst = 0.0
    n_cases = 0
    while n_cases < 100:
        n = int(r.integers(2, 201))
        scores = np.round(r.normal(size=n), int(r.integers(0, 3)))  # rounding forces ties
        labels = r.choice([-1, 1], size=n)
        if np.unique(labels).size < 2:
            continue
        worst = max(worst, abs(auc_score(scores, labels) - pair_auc(scores.tolist(), labels.tolist())))
        n_cases += 1
    return worst <= 1e-12, f"max |rank AUC - pair enumeration| {worst:.1e} over 100 vectors with ties (<= 1e-12)"


def check_fisher():
    worst = 0.0
    n_tables = 0
    for taking in range(0, 31):
        for adr in range(0, 31):
            for rest in range(0, 31):
                total = adr + rest
                if total == 0 or taking > total:
                    continue
                denom = math.comb(total, taking)
                lo, hi = max(0, taking - rest), min(adr, taking)
                tail = 0
                for x in range(hi, lo - 1, -1):
                    tail += math.comb(adr, x) * math.comb(rest, taking - x)
                    ct = ContingencyTable(x, taking - x, adr - x, rest - taking + x)
                    worst = max(worst, abs(fisher_right_tail(ct) - float(Fraction(tail, denom))))
                    n_tables += 1
    example = fisher_right_tail(ContingencyTable(3, 1, 1, 3))
    ok = worst <= 1e-10 and abs(example - 17 / 70) <= 1e-12
    return ok, (f"{n_tables} tables with margins <= 30, max error {worst:.1e} (<= 1e-10); "
                f"[[3,1],[1,3]] -> {example:.15f} vs 17/70")


def check_svm():
    r = np.random.default_rng(23)
    n = 40
    y = np.array([1] * 20 + [-1] * 20)
    x = np.zeros((n, 8))
    x[:20, :4] = r.uniform(0.5, 1.0, size=(20, 4))
    x[20:, 4:] = r.uniform(0.5, 1.0, size=(20, 4))
    k = x @ x.T
    cfg = TrainConfig(C=1.0)
    m = train(k, y, cfg, record_objective=True)
    acc = float(np.mean(predict_labels(decision_values(m, k)) == y))
    viol = float(kkt_violations(m, k).max())
    eq = abs(float(m.alphas @ y))
    mono = bool(np.all(np.diff(m.objective_trace) >= 0))
    ok = acc == 1.0 and viol <= 1e-3 and eq <= 1e-8 * cfg.C * n and mono
    return ok, (f"train accuracy {acc}, max KKT violation {viol:.1e} (<= 1e-3), "
                f"|sum a*y| {eq:.1e} (<= {1e-8 * n:.0e}), objective non-decreasing: {mono}")


def check_end_to_end():
    t0 = time.perf_counter()
    cfg = SynthConfig(n_drugs=60, n_events=2000, risky_drug_fraction=0.15, seed=42)
    events = synth_generate(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DatasetWarning)
        data = build_dataset(partition(mine(events)), PruneConfig.from_preset("D_STAR"))
    sds = sds_matrix(SdsKind.SDS_CM, events=events, n_drugs=cfg.n_drugs)
    gm = cv_run(data, RunConfig(KernelSpec(KernelFamily.GM, SdsKind.SDS_CM), folds=5, seed=42), sds=sds)
    elapsed = time.perf_counter() - t0
    cd1 = cv_run(data, RunConfig(KernelSpec(KernelFamily.CD1), folds=5, seed=42))
    same_split = gm.folds == cd1.folds
    ok = elapsed < 120 and gm.mean.auc >= 0.90 and gm.mean.auc > cd1.mean.auc and same_split
    return ok, (f"{len(data)} instances, GM+SDScm AUC {gm.mean.auc:.4f} (>= 0.90), "
                f"CD1 AUC {cd1.mean.auc:.4f} on the same split, GM run {elapsed:.1f}s (< 120s)")


def check_structure():
    parts = partition(mine(quadrant_event_log()))
    sig = sum(1 for s in parts.m_zero if s.fisher_p < 0.05)

    def counts(preset):
        data = build_dataset(parts, PruneConfig.from_preset(preset))
        return {src: sum(i.source is src for i in data) for src in Source if src is not Source.SYNTHETIC}, data

    star, star_data = counts("D_STAR")
    p_of = {st.combination: st.fisher_p for st in parts.m_zero}
    only_sig = all(i.odds_ratio > 1 and p_of[i.combination] < 0.05
                   for i in star_data if i.source is Source.M_ZERO)
    d2000, _ = counts("D2000")
    d4000, _ = counts("D4000")
    ok = (star[Source.M_PLUS] == 1000 and star[Source.N_MINUS] == 2200
          and star[Source.N_ZERO] == len(parts.n_zero) and star[Source.M_ZERO] == sig < len(parts.m_zero)
          and only_sig
          and d2000 == {Source.M_PLUS: 1000, Source.M_ZERO: 0, Source.N_ZERO: 0, Source.N_MINUS: 1000}
          and all(v == 1000 for v in d4000.values()))

    def fmt(c):
        return "/".join(str(c[s]) for s in (Source.M_PLUS, Source.M_ZERO, Source.N_ZERO, Source.N_MINUS))

    return ok, (f"M+/M0/N0/N- D_STAR {fmt(star)} (M0 significant {sig} of {len(parts.m_zero)}, "
                f"N0 all {len(parts.n_zero)}), D2000 {fmt(d2000)}, D4000 {fmt(d4000)}")


def check_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"events = {tmp_path / 'events.csv'}\ndmyo = {tmp_path / 'dmyo.txt'}\n"
                   "n_events = 800\nkernel = gm\nsds = cm\nseed = 42\n")
    if cli_main(["synth", "--config", str(cfg), "--out", str(tmp_path)]) != 0:
        return False, "synth failed"
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        if cli_main(["cv", "--config", str(cfg), "--out", str(out)]) != 0:
            return False, "cv failed"
    names = sorted(p.name for p in outs[0].iterdir())
    same = [n for n in names if (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()]
    ok = len(names) >= 8 and same == names
    return ok, f"{len(same)}/{len(names)} report files byte-identical across two runs"


CRITERIA = [
    ("LSAP optimality", check_lsap),
    ("PSD repair", check_psd_repair),
    ("Kernel validity without repair", check_kernel_validity),
    ("S_gm contracts", check_s_gm),
    ("Eigen/Cholesky oracles", check_eigen_cholesky),
    ("AUC oracle", check_auc),
    ("Fisher oracle", check_fisher),
    ("SVM correctness", check_svm),
    ("End-to-end synthetic", check_end_to_end),
    ("Structural fidelity", check_structure),
    ("Determinism", check_determinism),
]


def _report(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("name,check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, check, tmp_path, capsys):
    args = (tmp_path,) if check is check_determinism else ()
    ok, detail = check(*args)
    with capsys.disabled():
        print("\n" + _report(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for name, check in CRITERIA:
        with tempfile.TemporaryDirectory() as d:
            ok, detail = check(Path(d)) if check is check_determinism else check()
        failed += not ok
        print(_report(name, ok, detail))
    sys.exit(1 if failed else 0)
