"""Dataset manifest: one row per clean/corrupted pair.

Stored as CSV with header `pair,clean,corrupted,trajectory,severity,split`;
file paths are relative to the manifest's directory.
"""

import csv
from dataclasses import dataclass

from .errors import FormatError

FIELDS = ("pair", "clean", "corrupted", "trajectory", "severity", "split")


@dataclass(frozen=True)
class PairRecord:
    pair: str
    clean: str
    corrupted: str
    trajectory: str
    severity: float
    split: str


def write_manifest(path, records):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(FIELDS)
        for r in records:
            writer.writerow([r.pair, r.clean, r.corrupted, r.trajectory,
                             repr(float(r.severity)), r.split])


def read_manifest(path):
    records = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != list(FIELDS):
            raise FormatError(f"{path}: bad manifest header {header!r}")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FIELDS):
                raise FormatError(f"{path}:{ln}: expected {len(FIELDS)} fields, got {len(row)}")
            try:
                sev = float(row[4])
            except ValueError:
                raise FormatError(f"{path}:{ln}: bad severity {row[4]!r}")
            records.append(PairRecord(row[0], row[1], row[2], row[3], sev, row[5]))
    return records


def load_pairs(manifest_path, split):
    """(corrupted, clean) image pairs for one split, in manifest order."""
    import os

    from .core import load_image

    base = os.path.dirname(os.path.abspath(manifest_path))
    pairs = []
    for rec in read_manifest(manifest_path):
        if rec.split != split:
            continue
        pairs.append((load_image(os.path.join(base, rec.corrupted)),
                      load_image(os.path.join(base, rec.clean))))
    return pairs
