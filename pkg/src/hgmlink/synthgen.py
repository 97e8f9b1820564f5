"""Census-like synthetic linkage corpora with known duplicates.

Base records are drawn in households that share a surname, house number
and street, which makes same-household non-matches hard negatives.  List
A holds base records; list B holds corrupted copies of some A records
plus fresh base records.  The copies are the gold pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .corpus import Dataset, GoldLabels, Record, Schema
from .rng import stage_rng

__all__ = [
    "DEFAULT_FIELDS",
    "DEFAULT_INTENSITY",
    "EDIT_KINDS",
    "SynthConfig",
    "lexicon",
    "corrupt",
    "generate_corpus",
]

DEFAULT_FIELDS = ("last_name", "first_name", "middle_initial", "house_number", "street")
# expected edits per field in a duplicate
DEFAULT_INTENSITY = (0.8, 0.8, 0.25, 0.4, 1.0)
EDIT_KINDS = ("swap", "delete", "insert", "ocr", "transpose")

# characters commonly confused by OCR, both directions
_OCR = {
    "o": "0", "0": "o", "l": "1", "1": "l", "i": "l", "s": "5", "5": "s",
    "b": "8", "8": "b", "e": "c", "c": "e", "m": "n", "n": "m", "u": "v",
    "v": "u", "g": "9", "9": "g", "z": "2", "2": "z", "h": "b", "a": "e",
    "r": "n", "t": "f", "f": "t", "d": "cl", "3": "8", "6": "b", "7": "1", "4": "a",
}
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``intensity`` gives the expected number of edits per field of a
    duplicate; ``household_size`` caps how many base records share an
    address.
    """

    record_count: int = 864
    duplicate_fraction: float = 0.13
    intensity: tuple = DEFAULT_INTENSITY
    field_names: tuple = DEFAULT_FIELDS
    household_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.record_count < 2:
            raise ValueError("record_count must be at least 2")
        if not 0.0 <= self.duplicate_fraction <= 1.0:
            raise ValueError("duplicate_fraction must lie in [0, 1]")
        if len(self.intensity) != len(self.field_names):
            raise ValueError("need one corruption intensity per field")
        if any(x < 0 for x in self.intensity):
            raise ValueError("corruption intensities must be nonnegative")
        if tuple(self.field_names) != DEFAULT_FIELDS:
            raise ValueError(f"the generator produces the fields {DEFAULT_FIELDS}")
        if self.household_size < 1:
            raise ValueError("household_size must be at least 1")


@lru_cache(maxsize=None)
def lexicon(name: str) -> tuple[str, ...]:
    """Bundled word list: ``surnames``, ``first_names`` or ``streets``."""
    text = resources.files("hgmlink").joinpath("data", f"{name}.txt").read_text("utf-8")
    return tuple(line for line in text.splitlines() if line)


def _edit(value: str, kind: str, rng: np.random.Generator) -> str:
    n = len(value)
    if kind == "transpose":
        tokens = value.split()
        if len(tokens) < 2:
            kind = "swap"
        else:
            i = int(rng.integers(len(tokens) - 1))
            tokens[i], tokens[i + 1] = tokens[i + 1], tokens[i]
            return " ".join(tokens)
    if kind == "swap" and n < 2:
        kind = "ocr"
    if kind == "delete" and n < 2:
        kind = "ocr"
    if kind == "swap":
        i = int(rng.integers(n - 1))
        return value[:i] + value[i + 1] + value[i] + value[i + 2:]
    if kind == "delete":
        i = int(rng.integers(n))
        return value[:i] + value[i + 1:]
    if kind == "insert":
        i = int(rng.integers(n + 1))
        c = _LETTERS[int(rng.integers(26))] if not value.isdigit() else str(int(rng.integers(10)))
        return value[:i] + c + value[i:]
    # ocr: replace one confusable character, else any character
    spots = [i for i, c in enumerate(value) if c.lower() in _OCR]
    if spots:
        i = spots[int(rng.integers(len(spots)))]
        rep = _OCR[value[i].lower()]
        if value[i].isupper():
            rep = rep.upper()
    else:
        i = int(rng.integers(n))
        rep = _LETTERS[int(rng.integers(26))].upper()
    return value[:i] + rep + value[i + 1:]


def corrupt(value: str, intensity: float, rng: np.random.Generator) -> tuple[str, list[str]]:
    """Apply ``Poisson(intensity)`` random edits; never returns empty text."""
    edits = int(rng.poisson(intensity)) if intensity > 0 else 0
    kinds = []
    for _ in range(edits):
        kind = EDIT_KINDS[int(rng.integers(len(EDIT_KINDS)))]
        kinds.append(kind)
        value = _edit(value, kind, rng)
    return value, kinds


def _base_records(count: int, household_size: int, rng: np.random.Generator) -> list[tuple]:
    surnames, firsts, streets = lexicon("surnames"), lexicon("first_names"), lexicon("streets")
    out = []
    while len(out) < count:
        last = surnames[int(rng.integers(len(surnames)))]
        number = str(int(rng.integers(1, 10000)))
        street = streets[int(rng.integers(len(streets)))]
        size = int(rng.integers(1, household_size + 1))
        for _ in range(min(size, count - len(out))):
            first = firsts[int(rng.integers(len(firsts)))]
            middle = _LETTERS[int(rng.integers(26))].upper()
            out.append((last, first, middle, number, street))
    return out


def generate_corpus(config: SynthConfig = SynthConfig()) -> tuple[Dataset, Dataset, GoldLabels]:
    """Generate lists A and B and their gold duplicate pairs.

    A has ``record_count // 2`` records and B the rest.  The number of
    duplicates is ``round(duplicate_fraction * record_count)``, capped by
    the size of each list.
    """
    n_a = config.record_count // 2
    n_b = config.record_count - n_a
    want = config.duplicate_fraction * config.record_count
    if 0 < want < 1:
        warnings.warn("duplicate_fraction * record_count < 1: generating no duplicates",
                      stacklevel=2)
    m = min(int(round(want)) if want >= 1 else 0, n_a, n_b)

    base_rng = stage_rng(config.seed, "synth.base")
    base = _base_records(n_a + n_b - m, config.household_size, base_rng)
    # households are contiguous; shuffle before splitting so they straddle A and B
    order = base_rng.permutation(len(base))
    base = [base[i] for i in order]
    a_values, b_fresh = base[:n_a], base[n_a:]

    pick_rng = stage_rng(config.seed, "synth.duplicates")
    sources = np.sort(pick_rng.choice(n_a, size=m, replace=False)) if m else np.array([], int)

    cor_rng = stage_rng(config.seed, "synth.corrupt")
    copies = []
    for s in sources:
        vals = tuple(corrupt(v, lam, cor_rng)[0]
                     for v, lam in zip(a_values[s], config.intensity))
        copies.append((int(s), vals))

    b_rows = [(None, v) for v in b_fresh] + copies
    b_order = stage_rng(config.seed, "synth.order").permutation(len(b_rows))
    b_rows = [b_rows[i] for i in b_order]

    width_a, width_b = len(str(n_a)), len(str(n_b))
    a_ids = [f"a{i:0{width_a}d}" for i in range(n_a)]
    schema = Schema(tuple(config.field_names))
    a = Dataset(schema, tuple(Record(a_ids[i], v) for i, v in enumerate(a_values)))
    b_records, gold = [], []
    for j, (src, vals) in enumerate(b_rows):
        bid = f"b{j:0{width_b}d}"
        b_records.append(Record(bid, vals))
        if src is not None:
            gold.append((a_ids[src], bid))
    b = Dataset(schema, tuple(b_records))
    return a, b, GoldLabels(frozenset(gold))
