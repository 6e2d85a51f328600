from __future__ import annotations

import random
from pathlib import Path

import pytest

from pathtext.data import Table, build_table, parse_table
from pathtext.modules import registry_default

FIXTURES = Path(__file__).parent / "fixtures"

TEXT_POOL = ("red", "blue", "green", "gold", "grey")
COLUMN_NAMES = ("alpha", "beta", "gamma", "delta")


@pytest.fixture(scope="session")
def reg():
    return registry_default()


@pytest.fixture(scope="session")
def t1938_full() -> Table:
    return parse_table((FIXTURES / "t1938_full.json").read_text("utf-8"), "json")


@pytest.fixture(scope="session")
def t1938() -> Table:
    return parse_table((FIXTURES / "t1938_2row.json").read_text("utf-8"), "json")


def random_table(rng: random.Random, max_cols: int = 3, max_rows: int = 4, min_rows: int = 2) -> Table:
    """Small synthetic table: at least one numeric column with distinct values
    (so arg_max/arg_min ties never arise), textual columns drawn from a small
    pool so equality modules stay interesting."""
    n_cols = rng.randint(2, max_cols)
    n_rows = rng.randint(min_rows, max_rows)
    kinds = ["numeric"] + [rng.choice(["numeric", "textual"]) for _ in range(n_cols - 1)]
    rows = [[] for _ in range(n_rows)]
    for kind in kinds:
        if kind == "numeric":
            values = [str(v) for v in rng.sample(range(1, 60), n_rows)]
        else:
            values = [rng.choice(TEXT_POOL) for _ in range(n_rows)]
        for row, v in zip(rows, values):
            row.append(v)
    header = list(COLUMN_NAMES[:n_cols])
    return build_table("synthetic", header, rows)


def shuffle_rows(table: Table, rng: random.Random) -> Table:
    order = list(range(len(table.rows)))
    rng.shuffle(order)
    return table.replace_rows(tuple(table.rows[i] for i in order))
