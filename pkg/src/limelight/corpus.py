"""Corpus loading, preprocessing and stratified splitting.

Input is a Davidson-style CSV (numeric class column, tweet text column);
output is a list of labeled, token-normalized documents plus a
70:20:10 train/test/validation split stratified by class.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

from .errors import DataError
from .text import preprocess

logger = logging.getLogger(__name__)

SPLIT_RATIOS = (0.7, 0.2, 0.1)


class ClassLabel(IntEnum):
    """The three classes, in fixed matrix-index order."""

    HATE = 0
    OFFENSIVE = 1
    NONE = 2

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def from_name(cls, name: str) -> "ClassLabel":
        try:
            return _BY_NAME[name.strip().lower()]
        except KeyError:
            raise DataError(f"unknown class name: {name!r}") from None


_DISPLAY = {ClassLabel.HATE: "Hate", ClassLabel.OFFENSIVE: "Offensive", ClassLabel.NONE: "None"}
_BY_NAME = {"hate": ClassLabel.HATE, "offensive": ClassLabel.OFFENSIVE, "none": ClassLabel.NONE}

CLASS_NAMES = tuple(label.display for label in ClassLabel)

# Davidson coding: 0 = hate speech, 1 = offensive language, 2 = neither.
DEFAULT_LABEL_MAP = {0: ClassLabel.HATE, 1: ClassLabel.OFFENSIVE, 2: ClassLabel.NONE}


@dataclass(frozen=True)
class RawRecord:
    id: int
    text: str
    label: ClassLabel


@dataclass(frozen=True)
class LabeledDocument:
    id: int
    label: ClassLabel
    raw_text: str
    tokens: tuple[str, ...]


@dataclass
class DatasetSplit:
    train: list[LabeledDocument]
    test: list[LabeledDocument]
    validation: list[LabeledDocument]
    seed: int

    def __iter__(self):
        return iter((self.train, self.test, self.validation))


@dataclass
class ColumnMapping:
    """Where to find things in the CSV; defaults match the Davidson layout."""

    text_column: str = "tweet"
    label_column: str = "class"
    id_column: str | None = None
    label_map: dict[int, ClassLabel] = field(default_factory=lambda: dict(DEFAULT_LABEL_MAP))


def load_corpus(path: str | Path, mapping: ColumnMapping | None = None,
                strict: bool = False) -> list[RawRecord]:
    """Read one RawRecord per CSV data row.

    Malformed rows (missing column, empty text, non-integer label) are
    reported with their row number and skipped, or abort the load when
    `strict` is set. A label integer outside the declared mapping always
    aborts: it means the file does not use the expected coding.
    """
    mapping = mapping or ColumnMapping()
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")

    records: list[RawRecord] = []
    seen_ids: set[int] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            logger.warning("empty corpus file: %s", path)
            return []
        for missing in (mapping.text_column, mapping.label_column):
            if missing not in reader.fieldnames:
                raise DataError(f"column {missing!r} not in header {reader.fieldnames}")
        for row_num, row in enumerate(reader, start=2):  # header is line 1
            try:
                record = _parse_row(row, row_num, mapping, len(records), seen_ids)
            except DataError as exc:
                if "unknown label value" in str(exc) or strict:
                    raise
                logger.warning("%s (row skipped)", exc)
                continue
            records.append(record)
            seen_ids.add(record.id)
    if not records:
        logger.warning("no data rows in %s", path)
    logger.info("loaded %d records from %s", len(records), path)
    return records


def _parse_row(row: dict, row_num: int, mapping: ColumnMapping,
               position: int, seen_ids: set[int]) -> RawRecord:
    text = (row.get(mapping.text_column) or "").strip()
    if not text:
        raise DataError(f"row {row_num}: empty text")
    raw_label = (row.get(mapping.label_column) or "").strip()
    try:
        value = int(raw_label)
    except ValueError:
        raise DataError(f"row {row_num}: label {raw_label!r} is not an integer") from None
    if value not in mapping.label_map:
        raise DataError(f"row {row_num}: unknown label value {value}")
    if mapping.id_column is not None:
        raw_id = (row.get(mapping.id_column) or "").strip()
        try:
            rec_id = int(raw_id)
        except ValueError:
            raise DataError(f"row {row_num}: id {raw_id!r} is not an integer") from None
    else:
        rec_id = position
    if rec_id in seen_ids:
        raise DataError(f"row {row_num}: duplicate id {rec_id}")
    return RawRecord(id=rec_id, text=text, label=mapping.label_map[value])


def preprocess_corpus(records: list[RawRecord]) -> list[LabeledDocument]:
    """Run the token pipeline over every record (empty docs are kept)."""
    return [
        LabeledDocument(id=r.id, label=r.label, raw_text=r.text,
                        tokens=tuple(preprocess(r.text)))
        for r in records
    ]


def stratified_split(records: list, ratios: tuple[float, float, float] = SPLIT_RATIOS,
                     seed: int = 42) -> DatasetSplit:
    """Per-class shuffle, then contiguous 70:20:10 assignment.

    Within each class the ratio shares are floored and the remainder
    (at most two documents) is handed out train-first, then test, then
    validation, so the split always partitions the input exactly.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    by_class: dict[ClassLabel, list] = {label: [] for label in ClassLabel}
    for rec in records:
        by_class[rec.label].append(rec)
    for label, group in by_class.items():
        if 0 < len(group) < 3:
            raise DataError(
                f"class {label.display} has only {len(group)} records; "
                f"need at least 3 to fill all splits"
            )

    rng = random.Random(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for label in ClassLabel:
        group = list(by_class[label])
        rng.shuffle(group)
        n = len(group)
        counts = [int(n * r) for r in ratios]
        for i in range(n - sum(counts)):  # remainder: train, then test, then validation
            counts[i] += 1
        start = 0
        for part, count in zip(parts, counts):
            part.extend(group[start:start + count])
            start += count
    return DatasetSplit(train=parts[0], test=parts[1], validation=parts[2], seed=seed)


def split_sizes(class_counts: dict[ClassLabel, int],
                ratios: tuple[float, float, float] = SPLIT_RATIOS) -> tuple[int, int, int]:
    """Split sizes the rounding rule yields for given per-class counts."""
    totals = [0, 0, 0]
    for n in class_counts.values():
        counts = [int(n * r) for r in ratios]
        for i in range(n - sum(counts)):
            counts[i] += 1
        for i in range(3):
            totals[i] += counts[i]
    return tuple(totals)


class Vocabulary:
    """Dense token index plus per-token document frequencies.

    Built from the train split only; tokens are indexed in lexicographic
    order so the mapping is independent of document order.
    """

    def __init__(self, index: dict[str, int], doc_freq: dict[str, int], n_docs: int):
        self.index = index
        self.doc_freq = doc_freq
        self.n_docs = n_docs

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @classmethod
    def from_documents(cls, docs: list[LabeledDocument]) -> "Vocabulary":
        if not docs:
            raise DataError("cannot build a vocabulary from an empty corpus")
        doc_freq: dict[str, int] = {}
        for doc in docs:
            for token in set(doc.tokens):
                doc_freq[token] = doc_freq.get(token, 0) + 1
        index = {token: i for i, token in enumerate(sorted(doc_freq))}
        return cls(index=index, doc_freq=doc_freq, n_docs=len(docs))


def write_jsonl(docs: list[LabeledDocument], path: str | Path) -> None:
    """One document per line: {"id", "label", "raw_text", "tokens"}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(
                {"id": doc.id, "label": doc.label.display,
                 "raw_text": doc.raw_text, "tokens": list(doc.tokens)},
                ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[LabeledDocument]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    docs = []
    with path.open(encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                docs.append(LabeledDocument(
                    id=int(obj["id"]),
                    label=ClassLabel.from_name(obj["label"]),
                    raw_text=obj["raw_text"],
                    tokens=tuple(obj["tokens"]),
                ))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{line_num}: bad document line ({exc})") from None
    return docs
