import subprocess
import sys

import pytest

from combo_kernel_lab.cli import main

REPORT_FILES = ["metrics.txt", "predictions.tsv", "top_positives.tsv", "top_misclassified_negatives.tsv",
                "top_positives_without_dmyo.tsv", "enrichment.tsv", "scatter.tsv", "cv_report.json"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--seed", "3", "--out", str(d), "--config", str(_cfg(d, n_events=600))]) == 0
    return d


def _cfg(d, name="synth.cfg", **values):
    path = d / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    return path


def run_cfg(d, **extra):
    return _cfg(d, "run.cfg", events=d / "events.csv", dmyo=d / "dmyo.txt", **extra)


def test_synth_outputs(workdir):
    lines = (workdir / "events.csv").read_text().splitlines()
    assert lines[0] == "event_id,adr,drugs" and len(lines) == 601
    assert (workdir / "dmyo.txt").read_text().count("\n") == 9


def test_ingest(workdir):
    out = workdir / "ingest"
    assert main(["ingest", "--config", str(run_cfg(workdir)), "--out", str(out)]) == 0
    header = (out / "combinations.tsv").read_text().splitlines()[0].split("\t")
    assert header[-1] == "quadrant" and (out / "drugs.tsv").exists()


def test_dataset_and_kernel(workdir):
    out = workdir / "ds"
    cfg = run_cfg(workdir)
    assert main(["dataset", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "dataset.tsv").read_text().startswith("label\tsource")
    cfg2 = _cfg(workdir, "k.cfg", events=workdir / "events.csv", dataset=out / "dataset.tsv")
    assert main(["kernel", "--config", str(cfg2), "--kernel", "cd2", "--out", str(out)]) == 0
    n = int((out / "kernel.csv").read_text().splitlines()[0])
    assert n == (out / "dataset.tsv").read_text().count("\n") - 1


def test_sds(workdir):
    out = workdir / "sds"
    assert main(["sds", "--config", str(run_cfg(workdir)), "--sds", "cm", "--out", str(out)]) == 0
    lines = (workdir / "events.csv").read_text().splitlines()[1:]
    n_drugs = len({d for ln in lines for d in ln.split(",")[2].split(";")})
    assert (out / "sds.csv").read_text().splitlines()[0] == str(n_drugs)


def test_cv_deterministic_and_report(workdir):
    cfg = run_cfg(workdir)
    a, b = workdir / "cv_a", workdir / "cv_b"
    for out in (a, b):
        assert main(["cv", "--config", str(cfg), "--seed", "5", "--kernel", "cd1", "--out", str(out)]) == 0
    for name in REPORT_FILES:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    before = {name: (a / name).read_bytes() for name in REPORT_FILES}
    assert main(["report", "--config", str(cfg), "--out", str(a)]) == 0
    for name in REPORT_FILES:
        assert (a / name).read_bytes() == before[name], name


def test_cv_train_only_records_mode(workdir):
    out = workdir / "cv_t"
    cfg = run_cfg(workdir, folds=3)
    assert main(["cv", "--config", str(cfg), "--psd-mode", "train-only", "--out", str(out)]) == 0
    text = (out / "metrics.txt").read_text()
    assert "psd_mode = TRAIN_ONLY" in text and "fold3.auc" in text and "fold4" not in text


@pytest.mark.parametrize("argv_tail,extra", [
    (["--folds", "1"], {}),
    ([], {"bogus_key": 1}),
    ([], {"C": "abc"}),
    (["--sds", "2d"], {}),
])
def test_validation_errors_exit_1(workdir, argv_tail, extra, capsys):
    cfg = run_cfg(workdir, **extra)
    assert main(["cv", "--config", str(cfg), "--out", str(workdir / "bad")] + argv_tail) == 1
    assert "error" in capsys.readouterr().err


def test_missing_events_exit_1(tmp_path):
    assert main(["ingest", "--out", str(tmp_path)]) == 1


def test_report_without_cv_exit_1(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 1


def test_runtime_error_exit_2(tmp_path):
    # 6 instances cannot fill 10 folds
    ev = tmp_path / "ev.csv"
    ev.write_text("event_id,adr,drugs\n" + "".join(
        f"e{i},{i % 2},A{i};B{i}\n" for i in range(6)))
    cfg = _cfg(tmp_path, events=ev, kernel="cd1")
    assert main(["cv", "--config", str(cfg), "--folds", "10", "--out", str(tmp_path / "o")]) == 2


def test_argparse_errors_exit_1():
    proc = subprocess.run([sys.executable, "-m", "combo_kernel_lab.cli", "cv", "--kernel", "nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "combo_kernel_lab.cli"], capture_output=True, text=True)
    assert proc.returncode == 1
