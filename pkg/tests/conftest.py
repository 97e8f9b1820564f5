import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hgmlink.corpus import Dataset, Record, Schema  # noqa: E402


def make_dataset(rows, fields=("name", "street")):
    """Dataset from ``[(id, value, value, ...), ...]``."""
    schema = Schema(tuple(fields))
    return Dataset(schema, tuple(Record(r[0], tuple(r[1:])) for r in rows))


@pytest.fixture
def tiny_lists():
    a = make_dataset([
        ("a1", "John Smith", "12 Oak Street"),
        ("a2", "Mary Jones", "4 Elm Road"),
        ("a3", "Li", "9 Pine Lane"),
    ])
    b = make_dataset([
        ("b1", "Jon Smith", "12 Oak St"),
        ("b2", "Maria Jonas", "77 Birch Way"),
        ("b3", "Xu", "1 Cedar Court"),
    ])
    return a, b


# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
