from __future__ import annotations

from pathlib import Path

import pytest

from spinsat import cnf

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "uf20"


@pytest.fixture(scope="session")
def uf20_paths() -> list[Path]:
    paths = sorted(DATA_DIR.glob("*.cnf"))
    assert paths, f"benchmark instances missing from {DATA_DIR}"
    return paths


@pytest.fixture(scope="session")
def uf20_formulas(uf20_paths) -> list[cnf.Formula]:
    return [cnf.parse_dimacs_file(p) for p in uf20_paths]
