"""VGLC-style level parsing, padding, and 16x16 segment extraction.

Level files are plain text, one character per tile, one row per line. All
functions here are pure: grids are immutable and safe to share across
threads. Serializing a parsed level reproduces the input text exactly,
modulo the trailing-newline policy (output always ends with exactly one
newline).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadLengthError,
    HeightOverflowError,
    RaggedRowsError,
    ShapeMismatchError,
    TooSmallError,
    UnknownTileError,
)
from .tilemaps import TileVocab

log = logging.getLogger(__name__)

SEGMENT_SIZE = 16

# (game, height, expected) combinations already warned about; the padding
# mismatch is a corpus-wide property, one line per game is enough.
_pad_warned: set[tuple[str, int, int]] = set()


@dataclass(frozen=True)
class TileGrid:
    """Rectangular grid of tile characters, row-major, validated against a vocab."""

    rows: tuple[str, ...]
    vocab: TileVocab

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def char_at(self, row: int, col: int) -> str:
        return self.rows[row][col]

    def column(self, col: int) -> str:
        return "".join(row[col] for row in self.rows)

    def crop(self, row0: int, row1: int, col0: int, col1: int) -> "TileGrid":
        if not (0 <= row0 < row1 <= self.height and 0 <= col0 < col1 <= self.width):
            raise ShapeMismatchError(
                f"crop [{row0}:{row1}, {col0}:{col1}] outside {self.height}x{self.width} grid"
            )
        return TileGrid(tuple(r[col0:col1] for r in self.rows[row0:row1]), self.vocab)

    def to_text(self) -> str:
        return "\n".join(self.rows) + "\n"


@dataclass(frozen=True)
class Provenance:
    game: str
    level_id: str
    offset: int  # window start: column for horizontal slides, row for vertical

    def key(self) -> str:
        return f"{self.level_id},{self.offset}"


@dataclass(frozen=True)
class Segment:
    """A 16x16 window from a level, or a generated one (source=None)."""

    grid: TileGrid
    source: Optional[Provenance] = None

    def __post_init__(self):
        if self.grid.height != SEGMENT_SIZE or self.grid.width != SEGMENT_SIZE:
            raise ShapeMismatchError(
                f"segment must be {SEGMENT_SIZE}x{SEGMENT_SIZE}, "
                f"got {self.grid.height}x{self.grid.width}"
            )

    @property
    def vocab(self) -> TileVocab:
        return self.grid.vocab

    def to_text(self) -> str:
        return self.grid.to_text()


def parse_level(text: str, vocab: TileVocab) -> TileGrid:
    """Parse level text into a grid, validating row lengths and characters."""
    if not text.strip("\n"):
        raise TooSmallError("level text is empty")
    rows = text.split("\n")
    while rows and rows[-1] == "":
        rows.pop()
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRowsError(row=r, expected=width, got=len(row))
        for c, char in enumerate(row):
            if char not in vocab:
                raise UnknownTileError(char=char, row=r, col=c)
    return TileGrid(tuple(rows), vocab)


def pad_level(grid: TileGrid, expected_rows: int | None = None, game: str = "?") -> TileGrid:
    """Prepend empty (sky) rows until the grid is 16 tall.

    The amount is derived as 16 - height. When a game's config states how
    many rows its corpus is supposed to need (`expected_rows`) and the
    derived amount differs, a warning is logged; the derived amount wins.
    """
    missing = SEGMENT_SIZE - grid.height
    if missing < 0:
        raise HeightOverflowError(
            f"{game}: grid height {grid.height} exceeds {SEGMENT_SIZE}, cannot pad"
        )
    if expected_rows is not None and missing != expected_rows and missing > 0:
        key = (game, grid.height, expected_rows)
        if key not in _pad_warned:
            _pad_warned.add(key)
            log.warning(
                "%s: deriving %d padding rows from height %d, config expected %d",
                game, missing, grid.height, expected_rows,
            )
    if missing == 0:
        return grid
    sky = grid.vocab.empty_tile * grid.width
    return TileGrid(tuple([sky] * missing) + grid.rows, grid.vocab)


def extract_segments(
    grid: TileGrid,
    stride: int = 1,
    orientation: str = "horizontal",
    game: str = "generated",
    level_id: str = "",
) -> list[Segment]:
    """Slide a 16x16 window over the grid and return the segments in offset order.

    Horizontal levels slide over columns (height must already be 16);
    vertical levels slide over rows (width must be 16). Segment count is
    floor((extent - 16)/stride) + 1.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if orientation == "horizontal":
        if grid.height != SEGMENT_SIZE:
            raise ShapeMismatchError(
                f"{game}/{level_id}: horizontal slide needs height {SEGMENT_SIZE}, got {grid.height}"
            )
        extent = grid.width
    elif orientation == "vertical":
        if grid.width != SEGMENT_SIZE:
            raise ShapeMismatchError(
                f"{game}/{level_id}: vertical slide needs width {SEGMENT_SIZE}, got {grid.width}"
            )
        extent = grid.height
    else:
        raise ValueError(f"bad orientation {orientation!r}")
    if extent < SEGMENT_SIZE:
        raise TooSmallError(
            f"{game}/{level_id}: extent {extent} smaller than window {SEGMENT_SIZE}"
        )
    segments = []
    for offset in range(0, extent - SEGMENT_SIZE + 1, stride):
        if orientation == "horizontal":
            window = grid.crop(0, SEGMENT_SIZE, offset, offset + SEGMENT_SIZE)
        else:
            window = grid.crop(offset, offset + SEGMENT_SIZE, 0, SEGMENT_SIZE)
        segments.append(Segment(window, Provenance(game, level_id, offset)))
    return segments


# --- tensorization ---

def _ascii_lookup(vocab: TileVocab) -> np.ndarray | None:
    """Codepoint -> vocab index table (255 = unknown); None for non-ASCII vocabs."""
    table = np.full(128, 255, dtype=np.uint8)
    for i, tile in enumerate(vocab.tiles):
        cp = ord(tile.char)
        if cp >= 128:
            return None
        table[cp] = i
    return table


def grid_to_indices(grid: TileGrid, vocab: TileVocab) -> np.ndarray:
    """(H,W) uint8 array of vocab indices for any grid."""
    table = _ascii_lookup(vocab)
    if table is not None:
        try:
            raw = np.frombuffer("".join(grid.rows).encode("ascii"), dtype=np.uint8)
        except UnicodeEncodeError:
            raw = None
        if raw is not None:
            idx = table[raw].reshape(grid.height, grid.width)
            if (idx == 255).any():
                r, c = map(int, np.argwhere(idx == 255)[0])
                raise UnknownTileError(char=grid.rows[r][c], row=r, col=c)
            return idx
    out = np.empty((grid.height, grid.width), dtype=np.uint8)
    for r, row in enumerate(grid.rows):
        for c, char in enumerate(row):
            if char not in vocab:
                raise UnknownTileError(char=char, row=r, col=c)
            out[r, c] = vocab.index(char)
    return out


def segment_to_indices(segment: Segment, vocab: TileVocab | None = None) -> np.ndarray:
    """(16,16) uint8 array of vocab indices."""
    vocab = vocab or segment.vocab
    return grid_to_indices(segment.grid, vocab)


def indices_to_segment(indices: np.ndarray, vocab: TileVocab) -> Segment:
    if indices.shape != (SEGMENT_SIZE, SEGMENT_SIZE):
        raise ShapeMismatchError(f"expected (16,16) indices, got {indices.shape}")
    rows = tuple(
        "".join(vocab.char_at(int(i)) for i in indices[r]) for r in range(SEGMENT_SIZE)
    )
    return Segment(TileGrid(rows, vocab), source=None)


def one_hot_encode(segment: Segment, vocab: TileVocab | None = None) -> np.ndarray:
    """Flattened one-hot feature vector of length 256*|vocab|."""
    vocab = vocab or segment.vocab
    idx = segment_to_indices(segment, vocab)
    flat = idx.reshape(-1)
    out = np.zeros((flat.size, len(vocab)), dtype=np.float64)
    out[np.arange(flat.size), flat] = 1.0
    return out.reshape(-1)


def one_hot_batch(tiles: np.ndarray, vocab_size: int) -> np.ndarray:
    """One-hot a (B,16,16) uint8 index batch into (B, 256*vocab_size) float64."""
    b = tiles.shape[0]
    flat = tiles.reshape(b, -1)
    out = np.zeros((b, flat.shape[1], vocab_size), dtype=np.float64)
    out[np.arange(b)[:, None], np.arange(flat.shape[1])[None, :], flat] = 1.0
    return out.reshape(b, -1)


def logits_to_indices(features: np.ndarray, vocab_size: int) -> np.ndarray:
    """Argmax each vocab-sized channel block; ties go to the lowest index."""
    if features.size % vocab_size != 0:
        raise BadLengthError(
            f"feature length {features.size} not divisible by vocab size {vocab_size}"
        )
    return np.argmax(features.reshape(-1, vocab_size), axis=1)


def one_hot_decode(features: np.ndarray, vocab: TileVocab) -> Segment:
    """Inverse of one_hot_encode; accepts arbitrary reals (e.g. decoder logits)."""
    features = np.asarray(features, dtype=np.float64).reshape(-1)
    expected = SEGMENT_SIZE * SEGMENT_SIZE * len(vocab)
    if features.size != expected:
        raise BadLengthError(f"expected length {expected}, got {features.size}")
    idx = logits_to_indices(features, len(vocab))
    return indices_to_segment(
        idx.reshape(SEGMENT_SIZE, SEGMENT_SIZE).astype(np.uint8), vocab
    )
