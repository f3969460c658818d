"""Readers and writers for every on-disk format.

Formats
-------
events CSV
    header ``event_id,adr,drugs``; ``adr`` is 0 or 1; ``drugs`` is a
    ``;``-separated list of drug ids.
fingerprints
    ``drug_id<TAB>bitstring`` per line, bitstring of exactly ``width`` 0/1.
D_Myo list
    one drug id per line; blank lines and ``#`` comments ignored.
matrix CSV
    first line ``n``, then ``n`` rows of ``n`` comma-separated values
    printed with 17 significant digits.
dataset TSV
    header, then ``label  source  frequency  odds_ratio|NA  drug;drug;...``.
config
    flat ``key = value`` lines, ``#`` comments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import (
    DrugRegistry,
    EventRecord,
    LabeledInstance,
    Source,
    SymmetricMatrix,
    canonicalize,
)
from .exceptions import ConfigInvalid, IoFailure, ValidationError
from .sds import DEFAULT_FINGERPRINT_WIDTH, Fingerprint

EVENT_HEADER = ["event_id", "adr", "drugs"]
DATASET_HEADER = ["label", "source", "frequency", "odds_ratio", "drugs"]


@dataclass
class EventLog:
    registry: DrugRegistry
    events: list[EventRecord]

    @property
    def n_drugs(self) -> int:
        return len(self.registry)


def _open_text(path, mode="r"):
    try:
        return open(path, mode, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc


def parse_events(lines: Iterable[str], registry: Optional[DrugRegistry] = None) -> EventLog:
    registry = registry if registry is not None else DrugRegistry()
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != EVENT_HEADER:
        raise ValidationError(f"events header must be {','.join(EVENT_HEADER)}, got {header}")
    events = []
    seen_ids = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValidationError(f"line {lineno}: expected 3 fields, got {len(row)}")
        event_id, adr, drugs = row
        if adr not in ("0", "1"):
            raise ValidationError(f"line {lineno}: adr must be 0 or 1, got {adr!r}")
        if event_id in seen_ids:
            raise ValidationError(f"line {lineno}: duplicate event id {event_id!r}")
        seen_ids.add(event_id)
        ids = drugs.split(";")
        if any(not d for d in ids):
            raise ValidationError(f"line {lineno}: empty drug id")
        combo = canonicalize(registry.intern(d) for d in ids)
        events.append(EventRecord(event_id, combo, adr == "1"))
    return EventLog(registry, events)


def read_events(path, registry: Optional[DrugRegistry] = None) -> EventLog:
    with _open_text(path) as fh:
        return parse_events(fh, registry)


def write_events(path, events: Sequence[EventRecord], drug_ids: Sequence[str]) -> None:
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENT_HEADER)
        for ev in events:
            writer.writerow([ev.event_id, "1" if ev.adr else "0",
                             ";".join(drug_ids[d] for d in ev.combination.drugs)])


def read_fingerprints(path, width: int = DEFAULT_FINGERPRINT_WIDTH) -> dict[str, Fingerprint]:
    out = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected drug_id<TAB>bitstring")
            out[parts[0]] = Fingerprint.from_bitstring(parts[1], width)
    return out


def write_fingerprints(path, fingerprints: Mapping[str, Fingerprint]) -> None:
    with _open_text(path, "w") as fh:
        for drug_id, fp in fingerprints.items():
            fh.write(f"{drug_id}\t{fp.to_bitstring()}\n")


def read_drug_list(path) -> list[str]:
    out = []
    with _open_text(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line)
    return out


def write_drug_list(path, drug_ids: Iterable[str]) -> None:
    with _open_text(path, "w") as fh:
        for d in drug_ids:
            fh.write(f"{d}\n")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix(path, matrix) -> None:
    values = np.asarray(matrix.values if hasattr(matrix, "values") else matrix, dtype=np.float64)
    n = values.shape[0]
    with _open_text(path, "w") as fh:
        fh.write(f"{n}\n")
        for row in values:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def read_matrix(path) -> SymmetricMatrix:
    with _open_text(path) as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty matrix file")
    n = int(lines[0])
    if len(lines) - 1 != n:
        raise ValidationError(f"{path}: expected {n} rows, got {len(lines) - 1}")
    values = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(n, n)
    return SymmetricMatrix(values)


def _format_or(x: Optional[float]) -> str:
    return "NA" if x is None else repr(float(x))


def write_dataset(path, instances: Sequence[LabeledInstance], drug_ids: Sequence[str]) -> None:
    with _open_text(path, "w") as fh:
        fh.write("\t".join(DATASET_HEADER) + "\n")
        for inst in instances:
            fh.write("\t".join([
                f"{inst.label:+d}",
                inst.source.value,
                str(inst.frequency),
                _format_or(inst.odds_ratio),
                ";".join(drug_ids[d] for d in inst.combination.drugs),
            ]) + "\n")


def read_dataset(path, registry: DrugRegistry) -> list[LabeledInstance]:
    """Drug ids unknown to ``registry`` are added to it."""
    out = []
    with _open_text(path) as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        if header != DATASET_HEADER:
            raise ValidationError(f"{path}: dataset header must be {DATASET_HEADER}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 fields")
            label, source, freq, ratio, drugs = fields
            out.append(LabeledInstance(
                canonicalize(registry.intern(d) for d in drugs.split(";")),
                int(label),
                Source(source),
                int(freq),
                None if ratio == "NA" else float(ratio),
            ))
    return out


def read_config(path) -> dict[str, str]:
    out = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigInvalid(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigInvalid(f"{path}:{lineno}: empty key")
            out[key] = value
    return out


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _open_text(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def write_records(path, records: Iterable[tuple[str, object]]) -> None:
    with _open_text(path, "w") as fh:
        for key, value in records:
            fh.write(f"{key} = {value}\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {p}: {exc}") from exc
    return p
