"""Pipeline configuration: a ``key = value`` file plus overrides.

Every key, its type and default are listed in :data:`SCHEMA`; unknown
keys and malformed values are errors that carry the line number.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .serialize import ParseError

__all__ = ["SCHEMA", "ConfigError", "PipelineConfig", "parse_config", "load_config"]


class ConfigError(ParseError):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _names(text: str) -> tuple:
    return tuple(x for x in text.replace(",", " ").split())


def _path(text: str):
    return text or None


# key -> (parser, default, description)
SCHEMA = {
    "seed": (int, None, "master seed; every stage derives a named sub-stream from it"),
    "out_dir": (str, None, "directory for all pipeline artifacts"),
    "a_path": (_path, None, "records of list A (default: <out_dir>/a.csv)"),
    "b_path": (_path, None, "records of list B (default: <out_dir>/b.csv)"),
    "gold_path": (_path, None, "gold pairs (default: <out_dir>/gold.csv)"),
    "fields": (_names, ("last_name", "first_name", "middle_initial", "house_number", "street"),
               "record fields to compare, in order"),
    "synthesize": (_bool, True, "run the synthetic generator as the first stage of 'all'"),
    "record_count": (int, 864, "synthetic corpus size (A plus B)"),
    "duplicate_fraction": (float, 0.13, "duplicates as a share of record_count"),
    "intensity": (_floats, (0.8, 0.8, 0.25, 0.4, 1.0), "expected edits per field of a duplicate"),
    "household_size": (int, 3, "maximum records sharing one address"),
    "gram_size": (int, 4, "character n-gram length for blocking"),
    "theta": (float, 0.9, "inner Jaro-Winkler threshold of SoftTFIDF"),
    "binary_threshold": (float, 0.8, "agreement threshold for the binary Winkler models"),
    "d": (int, 5, "discretization levels for the latent-forest model"),
    "method": (str, "hgm", "winkler-unsup | winkler-sup | winkler-semisup | gmm | hgm | "
                           "hgm-unconstrained"),
    "monotone": (_bool, False, "order-constrained emissions (hgm)"),
    "bootstrap": (_bool, False, "clamp latent fields to noisy single-field labels (hgm)"),
    "learn_structure": (_bool, True, "Chow-Liu structure updates inside EM (hgm)"),
    "a": (float, 20.0, "sigmoid barrier steepness for monotone fits"),
    "tau_hi": (float, 0.9, "similarity at or above which a field is labeled matching"),
    "tau_lo": (float, 0.3, "similarity at or below which a field is labeled non-matching"),
    "labeled_weight": (float, 1.0, "weight of noisily labeled pairs in EM"),
    "gmm_components": (int, 6, "Gaussian mixture components"),
    "max_iter": (int, 200, "EM iteration cap"),
    "folds": (int, 3, "cross-validation folds for (semi-)supervised methods"),
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    out_dir: str
    a_path: str | None = None
    b_path: str | None = None
    gold_path: str | None = None
    fields: tuple = SCHEMA["fields"][1]
    synthesize: bool = True
    record_count: int = 864
    duplicate_fraction: float = 0.13
    intensity: tuple = SCHEMA["intensity"][1]
    household_size: int = 3
    gram_size: int = 4
    theta: float = 0.9
    binary_threshold: float = 0.8
    d: int = 5
    method: str = "hgm"
    monotone: bool = False
    bootstrap: bool = False
    learn_structure: bool = True
    a: float = 20.0
    tau_hi: float = 0.9
    tau_lo: float = 0.3
    labeled_weight: float = 1.0
    gmm_components: int = 6
    max_iter: int = 200
    folds: int = 3

    def path(self, name: str) -> Path:
        given = {"a.csv": self.a_path, "b.csv": self.b_path, "gold.csv": self.gold_path}.get(name)
        return Path(given) if given else Path(self.out_dir) / name


def _parse_lines(lines, source: str, values: dict) -> None:
    seen = set()
    for lineno, raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected 'key = value', got {raw!r}", lineno)
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{source}: unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"{source}: duplicate key {key!r}", lineno)
        seen.add(key)
        try:
            values[key] = SCHEMA[key][0](text)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}", lineno) from None


def parse_config(text: str = "", overrides=(), source: str = "config") -> PipelineConfig:
    """Build a config from file text, then apply ``key=value`` overrides in order."""
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    _parse_lines(enumerate(text.splitlines(), start=1), source, values)
    for n, item in enumerate(overrides, start=1):
        _parse_lines([(n, item)], "override", values)
    for key in ("seed", "out_dir"):
        if values[key] is None:
            raise ConfigError(f"{source}: required key {key!r} is missing")
    if values["synthesize"] and any(values[k] for k in ("a_path", "b_path", "gold_path")):
        raise ConfigError(f"{source}: set synthesize = false when supplying a_path, b_path "
                          "or gold_path (synth would overwrite them)")
    if values["folds"] < 2:
        raise ConfigError(f"{source}: folds must be at least 2")
    names = {f.name for f in fields(PipelineConfig)}
    return PipelineConfig(**{k: v for k, v in values.items() if k in names})


def load_config(path, overrides=()) -> PipelineConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(p.read_text(encoding="utf-8"), overrides, str(path))
