from __future__ import annotations

import numpy as np
import pytest

from condlevel.corpus import Segment, TileGrid
from condlevel.tilemaps import TileDef, TileVocab, load_default_tilemap


@pytest.fixture(scope="session")
def smb_tilemap():
    return load_default_tilemap("SMB")


@pytest.fixture(scope="session")
def ki_tilemap():
    return load_default_tilemap("KI")


@pytest.fixture(scope="session")
def mm_tilemap():
    return load_default_tilemap("MM")


@pytest.fixture(scope="session")
def tiny_vocab():
    return TileVocab(
        game="TINY",
        tiles=(
            TileDef("-", "empty", frozenset({"empty", "passable"})),
            TileDef("X", "block", frozenset({"solid", "ground"})),
            TileDef("o", "coin", frozenset({"coin", "collectable", "reward"})),
        ),
        empty_tile="-",
    )


def seg_from_rows(rows: list[str], vocab: TileVocab) -> Segment:
    return Segment(TileGrid(tuple(rows), vocab))


def empty_rows(vocab: TileVocab, fill: dict[tuple[int, int], str] | None = None) -> list[str]:
    """16x16 grid of the empty tile with optional {(row, col): char} placements."""
    grid = [[vocab.empty_tile] * 16 for _ in range(16)]
    for (r, c), ch in (fill or {}).items():
        grid[r][c] = ch
    return ["".join(row) for row in grid]


@pytest.fixture
def make_smb_segment(smb_tilemap):
    def make(fill: dict[tuple[int, int], str] | None = None,
             ground_rows: int = 0) -> Segment:
        rows = empty_rows(smb_tilemap.vocab, fill)
        for r in range(16 - ground_rows, 16):
            rows[r] = "X" * 16
        if fill:
            grid = [list(row) for row in rows]
            for (r, c), ch in fill.items():
                grid[r][c] = ch
            rows = ["".join(row) for row in grid]
        return seg_from_rows(rows, smb_tilemap.vocab)

    return make


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
