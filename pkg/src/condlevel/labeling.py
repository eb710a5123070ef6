"""Binary conditioning labels: game elements, SMB design patterns, blends.

Element labels mark the presence of per-game element categories inside a
segment. Design-pattern labels come from deterministic detectors that
automate the ten SMB patterns; a manual override table can replace any
detector output to reproduce hand-assigned labels. Blend labels are one-hot
game indicators (SMB=100, KI=010, MM=001).

Bit order is always the scheme's declared order, and the integer encoding
reads the bit string big-endian (leftmost bit = most significant).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import SEGMENT_SIZE, Segment
from .errors import BadOverrideError, OutOfRangeError, SchemeMismatchError
from .tilemaps import TileMap

PATTERN_IDS = ("EH", "G", "PV", "GV", "NV", "EV", "MP", "RR", "SU", "SD")

BLEND_GAMES = ("SMB", "KI", "MM")


@dataclass(frozen=True)
class LabelScheme:
    id: str                      # elements-smb | elements-ki | elements-mm | patterns-smb | blend
    bit_names: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.bit_names)

    @property
    def n_labels(self) -> int:
        return 1 << self.length


BLEND_SCHEME = LabelScheme("blend", BLEND_GAMES)
PATTERN_SCHEME = LabelScheme("patterns-smb", PATTERN_IDS)


def element_scheme(tilemap: TileMap) -> LabelScheme:
    return LabelScheme(f"elements-{tilemap.game.lower()}", tilemap.element_names())


@dataclass(frozen=True)
class Label:
    bits: tuple[int, ...]
    scheme: LabelScheme

    def __post_init__(self):
        if len(self.bits) != self.scheme.length:
            raise SchemeMismatchError(
                f"label length {len(self.bits)} != scheme {self.scheme.id} length {self.scheme.length}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise SchemeMismatchError(f"label bits must be 0/1, got {self.bits}")

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    @classmethod
    def from_string(cls, bits: str, scheme: LabelScheme) -> "Label":
        if not set(bits) <= {"0", "1"}:
            raise SchemeMismatchError(f"label string must be binary, got {bits!r}")
        return cls(tuple(int(b) for b in bits), scheme)


def label_to_int(label: Label) -> int:
    """Big-endian integer encoding, e.g. 10011 -> 19."""
    n = 0
    for b in label.bits:
        n = (n << 1) | b
    return n


def int_to_label(n: int, scheme: LabelScheme) -> Label:
    if not 0 <= n < scheme.n_labels:
        raise OutOfRangeError(f"{n} outside [0, {scheme.n_labels}) for scheme {scheme.id}")
    bits = tuple((n >> (scheme.length - 1 - i)) & 1 for i in range(scheme.length))
    return Label(bits, scheme)


def all_labels(scheme: LabelScheme) -> list[Label]:
    return [int_to_label(n, scheme) for n in range(scheme.n_labels)]


# --- element labels ---

def element_label(segment: Segment, tilemap: TileMap) -> Label:
    """Bit i is 1 iff any tile of element category i occurs in the segment."""
    present = set()
    for row in segment.grid.rows:
        present.update(row)
    bits = tuple(
        1 if (chars & present) else 0 for chars in tilemap.element_chars()
    )
    return Label(bits, element_scheme(tilemap))


def blend_label(game: str) -> Label:
    if game not in BLEND_GAMES:
        raise SchemeMismatchError(f"blend labels cover {BLEND_GAMES}, got {game!r}")
    bits = tuple(1 if g == game else 0 for g in BLEND_GAMES)
    return Label(bits, BLEND_SCHEME)


# --- design-pattern detectors ---
#
# The ten SMB patterns are detected with the most literal reading of their
# one-line definitions; each rule is frozen by golden tests against
# hand-audited fixtures. Column "height" below means the number of rows from
# the topmost solid tile down to the floor: height = 16 - topmost_solid_row,
# and 0 for a column with no solid tile.

def _solid_mask(segment: Segment) -> np.ndarray:
    solid = segment.vocab.chars_with_tag("solid")
    return np.array(
        [[c in solid for c in row] for row in segment.grid.rows], dtype=bool
    )


def _column_heights(segment: Segment) -> np.ndarray:
    mask = _solid_mask(segment)
    heights = np.zeros(SEGMENT_SIZE, dtype=int)
    for col in range(SEGMENT_SIZE):
        rows = np.nonzero(mask[:, col])[0]
        heights[col] = SEGMENT_SIZE - rows[0] if rows.size else 0
    return heights


def _tiles_with_tag(segment: Segment, tag: str) -> list[tuple[int, int]]:
    chars = segment.vocab.chars_with_tag(tag)
    return [
        (r, c)
        for r, row in enumerate(segment.grid.rows)
        for c, char in enumerate(row)
        if char in chars
    ]


def _gap_columns(segment: Segment) -> np.ndarray:
    """Columns whose bottom row is not solid (open floor)."""
    mask = _solid_mask(segment)
    return ~mask[SEGMENT_SIZE - 1, :]


def _valleys(segment: Segment) -> list[tuple[int, int]]:
    """Maximal runs of equal-height local minima bounded by rises >= 2.

    Returns [start, end) column ranges. The bounding columns on both sides
    must be at least 2 tiles higher than the run.
    """
    heights = _column_heights(segment)
    valleys = []
    col = 0
    while col < SEGMENT_SIZE:
        run_start = col
        while col + 1 < SEGMENT_SIZE and heights[col + 1] == heights[run_start]:
            col += 1
        run_end = col + 1
        left_ok = run_start > 0 and heights[run_start - 1] >= heights[run_start] + 2
        right_ok = run_end < SEGMENT_SIZE and heights[run_end] >= heights[run_start] + 2
        if left_ok and right_ok:
            valleys.append((run_start, run_end))
        col = run_end
    return valleys


def _pipe_columns(segment: Segment) -> np.ndarray:
    pipes = segment.vocab.chars_with_tag("pipe")
    return np.array(
        [any(row[col] in pipes for row in segment.grid.rows) for col in range(SEGMENT_SIZE)],
        dtype=bool,
    )


def _has_stair(heights: np.ndarray, step: int) -> bool:
    """>=3 consecutive columns changing by exactly `step`, all solid-capped."""
    run = 1
    for col in range(1, SEGMENT_SIZE):
        if heights[col - 1] > 0 and heights[col] > 0 and heights[col] - heights[col - 1] == step:
            run += 1
            if run >= 3:
                return True
        else:
            run = 1
    return False


def detect_pattern(segment: Segment, pattern_id: str) -> bool:
    if pattern_id not in PATTERN_IDS:
        raise SchemeMismatchError(f"unknown pattern id {pattern_id!r}")
    heights = None

    if pattern_id == "EH":
        enemies = _tiles_with_tag(segment, "enemy")
        return any(
            max(abs(r1 - r2), abs(c1 - c2)) <= 2
            for i, (r1, c1) in enumerate(enemies)
            for (r2, c2) in enemies[i + 1:]
        )
    if pattern_id == "G":
        # a gap is a hole in otherwise-present ground: some bottom-row
        # columns open, but not all of them (an all-empty segment has no
        # ground for a gap to interrupt)
        gaps = _gap_columns(segment)
        return bool(gaps.any() and not gaps.all())
    if pattern_id == "PV":
        pipe_cols = np.nonzero(_pipe_columns(segment))[0]
        for i in range(len(pipe_cols) - 1):
            span = pipe_cols[i + 1] - pipe_cols[i] - 1
            if span >= 2:
                return True
        return False
    if pattern_id in ("GV", "NV", "EV"):
        valleys = _valleys(segment)
        if not valleys:
            return False
        gaps = _gap_columns(segment)
        enemy_cols = {c for _, c in _tiles_with_tag(segment, "enemy")}
        for start, end in valleys:
            has_gap = bool(gaps[start:end].any())
            has_enemy = any(start <= c < end for c in enemy_cols)
            if pattern_id == "GV" and has_gap:
                return True
            if pattern_id == "NV" and not has_enemy:
                return True
            if pattern_id == "EV" and has_enemy:
                return True
        return False
    if pattern_id == "MP":
        mask = _solid_mask(segment)
        for r in range(1, SEGMENT_SIZE - 1):
            run = 0
            for c in range(SEGMENT_SIZE):
                floating = mask[r, c] and not mask[r + 1, c] and not mask[r - 1, c]
                run = run + 1 if floating else 0
                if run >= 3:
                    return True
        return False
    if pattern_id == "RR":
        rewards = _tiles_with_tag(segment, "collectable")
        enemies = _tiles_with_tag(segment, "enemy")
        return any(
            max(abs(r1 - r2), abs(c1 - c2)) <= 2
            for (r1, c1) in rewards
            for (r2, c2) in enemies
        )
    heights = _column_heights(segment)
    if pattern_id == "SU":
        return _has_stair(heights, +1)
    return _has_stair(heights, -1)  # SD


def pattern_label(segment: Segment, overrides: dict[str, Label] | None = None) -> Label:
    """10-bit pattern label; a manual override for this segment's provenance wins."""
    if overrides and segment.source is not None:
        hit = overrides.get(segment.source.key())
        if hit is not None:
            return hit
    bits = tuple(int(detect_pattern(segment, pid)) for pid in PATTERN_IDS)
    return Label(bits, PATTERN_SCHEME)


def load_overrides(path: str | Path) -> dict[str, Label]:
    """Parse manual pattern labels: lines of `level-id,offset,bitstring`."""
    table: dict[str, Label] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise BadOverrideError(f"line {lineno}: expected level-id,offset,bits, got {line!r}")
        level_id, offset, bits = (p.strip() for p in parts)
        if len(bits) != PATTERN_SCHEME.length or not set(bits) <= {"0", "1"}:
            raise BadOverrideError(
                f"line {lineno}: need {PATTERN_SCHEME.length} binary digits, got {bits!r}"
            )
        if not offset.lstrip("-").isdigit():
            raise BadOverrideError(f"line {lineno}: bad offset {offset!r}")
        table[f"{level_id},{int(offset)}"] = Label.from_string(bits, PATTERN_SCHEME)
    return table
