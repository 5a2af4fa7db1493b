"""Sample manifests: the CSV dataset inventory shared by every command.

Format: optional ``# key = value`` metadata lines, then a ``path,label,mos``
header and one row per image.  The ``mos`` column is either filled for every
row (quality training) or empty everywhere.
"""

from __future__ import annotations

import csv
import io
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .atomicio import atomic_write_text
from .classifier import LabelRegistry
from .errors import DataError

HEADER = ("path", "label", "mos")
IMAGE_SUFFIXES = (".ppm", ".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: str
    mos: float | None = None

    def __post_init__(self):
        if not self.path:
            raise DataError("manifest row with an empty path")
        if self.mos is not None and not 0.0 <= self.mos <= 1.0:
            raise DataError(f"{self.path}: quality score {self.mos} outside [0, 1]")


@dataclass
class SampleManifest:
    rows: list[ManifestRow]
    registry_name: str | None = None
    declared_total: int | None = None

    def __post_init__(self):
        with_mos = sum(r.mos is not None for r in self.rows)
        if 0 < with_mos < len(self.rows):
            raise DataError(f"{with_mos} of {len(self.rows)} rows carry a quality "
                            f"score; it must be all rows or none")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def has_mos(self) -> bool:
        return bool(self.rows) and self.rows[0].mos is not None

    @property
    def paths(self) -> list[str]:
        return [r.path for r in self.rows]

    def mos_array(self) -> np.ndarray:
        if not self.has_mos:
            raise DataError("manifest has no quality scores")
        return np.array([r.mos for r in self.rows], dtype=np.float64)

    def label_indices(self, registry: LabelRegistry) -> np.ndarray:
        try:
            return np.array([registry.index(r.label) for r in self.rows], dtype=np.int64)
        except KeyError as e:
            raise DataError(str(e)) from None

    def class_counts(self, registry: LabelRegistry) -> dict[str, int]:
        counts = dict.fromkeys(registry.names, 0)
        for r in self.rows:
            if r.label in counts:
                counts[r.label] += 1
        return counts


def write_manifest(manifest: SampleManifest, path) -> None:
    buf = io.StringIO()
    if manifest.registry_name is not None:
        buf.write(f"# registry = {manifest.registry_name}\n")
    if manifest.declared_total is not None:
        buf.write(f"# declared_total = {manifest.declared_total}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in manifest.rows:
        writer.writerow([r.path, r.label, "" if r.mos is None else repr(r.mos)])
    atomic_write_text(path, buf.getvalue())


def read_manifest(path) -> SampleManifest:
    meta: dict[str, str] = {}
    body: list[str] = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            for line in f:
                if line.startswith("#"):
                    key, sep, value = line[1:].partition("=")
                    if sep:
                        meta[key.strip()] = value.strip()
                elif line.strip():
                    body.append(line)
    except OSError as e:
        raise DataError(f"cannot read manifest {path}: {e}") from None
    reader = csv.reader(body)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise DataError(f"{path}: empty manifest") from None
    if header != HEADER:
        raise DataError(f"{path}: expected header {','.join(HEADER)}, got {','.join(header)}")
    rows = []
    for parts in reader:
        if len(parts) != 3:
            raise DataError(f"{path}: row {len(rows) + 2} has {len(parts)} fields, not 3")
        p, label, mos = parts
        try:
            rows.append(ManifestRow(p, label, float(mos) if mos else None))
        except ValueError:
            raise DataError(f"{path}: bad quality score {mos!r} for {p}") from None
    declared = None
    if "declared_total" in meta:
        try:
            declared = int(meta["declared_total"])
        except ValueError:
            raise DataError(f"{path}: bad declared_total {meta['declared_total']!r}") from None
    return SampleManifest(rows, meta.get("registry") or None, declared)


def check_declared_total(total_rows: int, declared_total: int | None) -> str | None:
    """The count-mismatch message, or None when the totals agree."""
    if declared_total is not None and total_rows != declared_total:
        return (f"manifest holds {total_rows} rows but the declared total is "
                f"{declared_total}; keeping the rows as ground truth")
    return None


def validate_manifest(manifest: SampleManifest,
                      registry: LabelRegistry) -> list[str]:
    """Consistency findings as warning strings (also emitted via warnings)."""
    findings = []
    counts = manifest.class_counts(registry)
    known = set(registry.names)
    unknown = sorted({r.label for r in manifest.rows} - known)
    if unknown:
        findings.append(f"{len(unknown)} labels not in the registry: "
                        f"{', '.join(unknown[:5])}{'...' if len(unknown) > 5 else ''}")
    empty = [name for name, c in counts.items() if c == 0]
    if empty:
        findings.append(f"{len(empty)} registry classes have no rows: "
                        f"{', '.join(empty[:5])}{'...' if len(empty) > 5 else ''}")
    declared = manifest.declared_total
    if declared is None:
        declared = registry.declared_total
    mismatch = check_declared_total(len(manifest), declared)
    if mismatch:
        findings.append(mismatch)
    for finding in findings:
        warnings.warn(finding)
    return findings


@dataclass
class IngestReport:
    per_class: dict[str, int]
    unmapped: list[str] = field(default_factory=list)
    undecodable: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def ingest(root, registry: LabelRegistry,
           decode_check=None) -> tuple[SampleManifest, IngestReport]:
    """Build a manifest from a class-per-subdirectory tree.

    Rows are sorted by path, so identical trees yield identical manifests.
    ``decode_check(path) -> bool`` can verify files are actually decodable;
    by default any file with a known image suffix is accepted.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise DataError(f"dataset root {root!r} is not a readable directory")
    report = IngestReport(per_class=dict.fromkeys(registry.names, 0))
    rows = []
    for entry in sorted(os.listdir(root)):
        sub = os.path.join(root, entry)
        if not os.path.isdir(sub):
            continue
        if entry not in report.per_class:
            report.unmapped.append(entry)
            continue
        for name in sorted(os.listdir(sub)):
            path = os.path.join(sub, name)
            if not os.path.isfile(path) or not name.lower().endswith(IMAGE_SUFFIXES):
                continue
            if decode_check is not None and not decode_check(path):
                report.undecodable.append(path)
                continue
            rows.append(ManifestRow(path, entry))
            report.per_class[entry] += 1
    rows.sort(key=lambda r: r.path)
    manifest = SampleManifest(rows, declared_total=registry.declared_total)
    for name, count in report.per_class.items():
        if count == 0:
            report.warnings.append(f"class {name!r} has no images")
    if report.unmapped:
        report.warnings.append(f"{len(report.unmapped)} directories not in the "
                               f"registry: {', '.join(report.unmapped[:5])}")
    mismatch = check_declared_total(len(rows), registry.declared_total)
    if mismatch:
        report.warnings.append(mismatch)
    for finding in report.warnings:
        warnings.warn(finding)
    return manifest, report
