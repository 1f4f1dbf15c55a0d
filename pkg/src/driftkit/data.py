"""Sample records, manifest/NDJSON serialization, and stream splits.

Formats:
  - manifest CSV, header ``sample_id,subject_id,timestamp,label,source``
    (label empty when unknown; source is a WAV path or an embeddings-NDJSON
    path).
  - embeddings NDJSON, one object per sample:
    ``{"sample_id","subject_id","timestamp","label","segments":[[...],...]}``.

Timestamps are ISO-8601 UTC.  Serialization uses repr-exact floats so a
write -> read -> write cycle is byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DuplicateIdError, ParseError, TooFewSubjectsError
from .model import pooled_mean

MANIFEST_FIELDS = ("sample_id", "subject_id", "timestamp", "label", "source")


@dataclass(eq=False)
class Sample:
    sample_id: str
    subject_id: str
    timestamp: datetime  # timezone-aware, UTC
    label: int | None
    segments: np.ndarray  # (n_segments, dim)

    def __post_init__(self):
        self.segments = np.atleast_2d(np.asarray(self.segments, dtype=np.float64))
        if self.timestamp.tzinfo is None:
            self.timestamp = self.timestamp.replace(tzinfo=timezone.utc)
        else:
            self.timestamp = self.timestamp.astimezone(timezone.utc)
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0/1/None, got {self.label!r}")

    @cached_property
    def pooled(self) -> np.ndarray:
        """Mean over segment embeddings (the monitored representation)."""
        return pooled_mean(self.segments)

    @property
    def dim(self) -> int:
        return self.segments.shape[1]


def sort_samples(samples: list[Sample]) -> list[Sample]:
    return sorted(samples, key=lambda s: (s.timestamp, s.sample_id))


def check_unique_ids(samples: list[Sample]) -> None:
    seen: set[str] = set()
    for s in samples:
        if s.sample_id in seen:
            raise DuplicateIdError(f"duplicate sample_id {s.sample_id!r}")
        seen.add(s.sample_id)


def parse_timestamp(text: str, context: str = "") -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"unparseable timestamp {text!r}{context}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


def sample_to_json(s: Sample) -> str:
    obj = {
        "sample_id": s.sample_id,
        "subject_id": s.subject_id,
        "timestamp": format_timestamp(s.timestamp),
        "label": s.label,
        "segments": s.segments.tolist(),
    }
    return json.dumps(obj, separators=(",", ":"))


def write_embeddings_ndjson(samples: list[Sample], path) -> None:
    lines = [sample_to_json(s) for s in samples]
    Path(path).write_text("\n".join(lines) + "\n" if lines else "")


def read_embeddings_ndjson(path) -> list[Sample]:
    path = Path(path)
    samples: list[Sample] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON") from exc
        try:
            label = obj["label"]
            samples.append(Sample(
                sample_id=str(obj["sample_id"]),
                subject_id=str(obj["subject_id"]),
                timestamp=parse_timestamp(obj["timestamp"], f" ({path}:{lineno})"),
                label=None if label is None else int(label),
                segments=np.asarray(obj["segments"], dtype=np.float64),
            ))
        except KeyError as exc:
            raise ParseError(f"{path}:{lineno}: missing field {exc}") from exc
    return samples


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    subject_id: str
    timestamp: datetime
    label: int | None
    source: str


def read_manifest(path) -> list[ManifestRow]:
    path = Path(path)
    rows: list[ManifestRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise ParseError(
                f"{path}: expected header {','.join(MANIFEST_FIELDS)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            if any(row.get(k) is None for k in MANIFEST_FIELDS):
                raise ParseError(f"{path}: row {lineno}: wrong number of columns")
            label_text = row["label"].strip()
            if label_text == "":
                label = None
            elif label_text in ("0", "1"):
                label = int(label_text)
            else:
                raise ParseError(f"{path}: row {lineno}: bad label {label_text!r}")
            rows.append(ManifestRow(
                sample_id=row["sample_id"],
                subject_id=row["subject_id"],
                timestamp=parse_timestamp(row["timestamp"], f" ({path}: row {lineno})"),
                label=label,
                source=row["source"],
            ))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return rows


def write_manifest(rows, path) -> None:
    """rows: iterable of ManifestRow or (Sample, source) pairs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for row in rows:
            if isinstance(row, tuple):
                s, source = row
                writer.writerow([s.sample_id, s.subject_id, format_timestamp(s.timestamp),
                                 "" if s.label is None else s.label, source])
            else:
                writer.writerow([row.sample_id, row.subject_id, format_timestamp(row.timestamp),
                                 "" if row.label is None else row.label, row.source])


def _majority_bins(samples: list[Sample], boundaries: list[int]) -> list[int]:
    # initial bin per chronological index, then move every subject wholly to
    # the bin holding most of its samples (ties -> earliest bin)
    n = len(samples)
    bin_of = np.zeros(n, dtype=int)
    for b, cut in enumerate(boundaries):
        bin_of[cut:] = b + 1
    counts: dict[str, np.ndarray] = {}
    n_bins = len(boundaries) + 1
    for i, s in enumerate(samples):
        counts.setdefault(s.subject_id, np.zeros(n_bins, dtype=int))[bin_of[i]] += 1
    subject_bin = {subj: int(np.argmax(c)) for subj, c in counts.items()}
    return [subject_bin[s.subject_id] for s in samples]


def split_by_fractions(samples: list[Sample], fractions) -> list[list[Sample]]:
    """Chronological split with subject-disjoint bins via the majority rule.

    Cut indices come from cumulative fractions; a subject straddling a cut
    has all samples moved to the bin holding the majority of them (earliest
    bin on ties).  Raises TooFewSubjects when a bin comes out empty.
    """
    fractions = list(fractions)
    if not fractions or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    samples = sort_samples(samples)
    n = len(samples)
    cum = np.cumsum(fractions)[:-1]
    # 1e-9 slack so float dust in c*n (e.g. 0.7*10 -> 6.999...) cannot shift the cut
    boundaries = [int(np.floor(c * n + 1e-9)) for c in cum]
    bins = _majority_bins(samples, boundaries)
    out: list[list[Sample]] = [[] for _ in fractions]
    for s, b in zip(samples, bins):
        out[b].append(s)
    for i, part in enumerate(out):
        if not part:
            raise TooFewSubjectsError(f"split bin {i} is empty after subject reassignment")
    return out


def chronological_split(samples: list[Sample], ratio: float = 0.7) -> tuple[list[Sample], list[Sample]]:
    """70:30-style development/post-development split, subject-disjoint."""
    dev, post = split_by_fractions(samples, [ratio, 1.0 - ratio])
    return dev, post


def subjects_disjoint(*groups: list[Sample]) -> bool:
    seen: set[str] = set()
    for group in groups:
        here = {s.subject_id for s in group}
        if here & seen:
            return False
        seen |= here
    return True
