"""Record datasets and gold-standard match labels.

Files are comma-delimited with a header row.  Record files carry an ``id``
column plus one column per schema field; gold files carry two id columns
(A id first).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "CorpusError",
    "Schema",
    "Record",
    "Dataset",
    "GoldLabels",
    "load_records",
    "write_records",
    "load_gold_pairs",
    "write_gold_pairs",
    "read_pairs",
    "write_pairs",
]

ID_COLUMN = "id"


class CorpusError(ValueError):
    """Malformed record or gold file."""


@dataclass(frozen=True)
class Schema:
    field_names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.field_names)
        object.__setattr__(self, "field_names", names)
        if not names:
            raise CorpusError("schema needs at least one field")
        if len(set(names)) != len(names):
            raise CorpusError(f"duplicate field names in schema: {names}")
        if ID_COLUMN in names:
            raise CorpusError(f"'{ID_COLUMN}' is reserved for the record id")

    @property
    def k(self) -> int:
        return len(self.field_names)


@dataclass(frozen=True)
class Record:
    id: str
    values: tuple[str, ...]


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    records: tuple[Record, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        index = {}
        for rec in records:
            if len(rec.values) != self.schema.k:
                raise CorpusError(
                    f"record {rec.id!r} has {len(rec.values)} values, schema has {self.schema.k}"
                )
            if rec.id in index:
                raise CorpusError(f"duplicate record id {rec.id!r}")
            index[rec.id] = rec
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, rid) -> bool:
        return rid in self._index

    def get(self, rid: str) -> Record:
        try:
            return self._index[rid]
        except KeyError:
            raise KeyError(f"unknown record id {rid!r}") from None

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def column(self, i: int) -> list[str]:
        return [r.values[i] for r in self.records]


@dataclass(frozen=True)
class GoldLabels:
    pairs: frozenset

    @property
    def m(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs


def load_records(path, schema: Schema) -> Dataset:
    """Parse a record file into a :class:`Dataset`.

    Missing cells (an empty string) are kept as empty text.  A row whose
    cell count differs from the header raises :class:`CorpusError` naming
    its line number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: missing header row") from None
        missing = [c for c in (ID_COLUMN, *schema.field_names) if c not in header]
        if missing:
            raise CorpusError(f"{path}: header lacks columns {missing}")
        id_col = header.index(ID_COLUMN)
        cols = [header.index(name) for name in schema.field_names]
        records = []
        seen = set()
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise CorpusError(
                    f"{path}: line {line}: expected {len(header)} cells, got {len(row)}"
                )
            rid = row[id_col]
            if rid in seen:
                raise CorpusError(f"{path}: line {line}: duplicate id {rid!r}")
            seen.add(rid)
            records.append(Record(rid, tuple(row[c] for c in cols)))
    return Dataset(schema, tuple(records))


def write_records(dataset: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([ID_COLUMN, *dataset.schema.field_names])
        for rec in dataset.records:
            writer.writerow([rec.id, *rec.values])


def read_pairs(path) -> list[tuple[str, str]]:
    """Read the first two columns of a delimited pair file (header skipped)."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        for row in reader:
            if not row:
                continue
            if len(row) < 2:
                raise CorpusError(f"{path}: line {reader.line_num}: expected two ids")
            out.append((row[0], row[1]))
    return out


def write_pairs(pairs: Iterable[Sequence[str]], path, header=("id_a", "id_b")) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for pair in pairs:
            writer.writerow(pair)


def load_gold_pairs(path, a: Dataset, b: Dataset) -> GoldLabels:
    """Load gold match pairs; duplicates collapse silently.

    Either column order is accepted per row as long as one id resolves in
    ``a`` and the other in ``b``; pairs are stored as ``(id_a, id_b)``.
    """
    pairs = set()
    for x, y in read_pairs(path):
        if x in a and y in b:
            pairs.add((x, y))
        elif y in a and x in b:
            pairs.add((y, x))
        else:
            bad = x if x not in a else y
            raise CorpusError(f"{path}: gold id {bad!r} not found in datasets")
    return GoldLabels(frozenset(pairs))


def write_gold_pairs(gold: GoldLabels, path) -> None:
    write_pairs(sorted(gold.pairs), path)

