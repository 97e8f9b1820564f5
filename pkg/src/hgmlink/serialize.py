"""Plain-text ``key = value`` files for fitted models and configs.

Floats are written with 17 significant digits so a load reproduces the
exact binary value.  Lists are space-separated.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["ParseError", "fmt_float", "fmt_array", "dump_kv", "parse_kv", "load_kv"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def fmt_array(arr) -> str:
    arr = np.asarray(arr)
    if arr.dtype.kind in "iub":
        return " ".join(str(int(x)) for x in arr.ravel())
    return " ".join(fmt_float(x) for x in arr.ravel())


def dump_kv(items, path=None) -> str:
    """Render ``(key, value)`` items; write to ``path`` when given."""
    lines = []
    for key, value in items:
        if isinstance(value, (float, np.floating)):
            value = fmt_float(value)
        elif isinstance(value, np.ndarray):
            value = fmt_array(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = value.strip()
    return out


def load_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def floats(value: str) -> np.ndarray:
    return np.array([float(x) for x in value.split()], dtype=float)


def ints(value: str) -> np.ndarray:
    return np.array([int(x) for x in value.split()], dtype=np.int64)
