"""Tile vocabularies and per-game tile-map configs.

A tile map is a YAML file describing one game's corpus: the tile alphabet
(character, name, tags), the element categories that drive conditioning
labels, where the level files live, and how non-rectangular levels are split
into horizontal/vertical sections. Defaults for SMB, SMB2 Lost Levels,
Kid Icarus and Mega Man ship inside the package; users can point at their
own configs to cover other corpora.

The tile order in the config is load-bearing: one-hot channel index equals
list position, and the vocab hash recorded in checkpoints is computed over
that order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError

GAMES = ("SMB", "SMB2LL", "KI", "MM")

# tags with meaning elsewhere in the toolkit (metrics, rendering, detectors)
KNOWN_TAGS = frozenset({
    "empty", "passable", "solid", "ground", "breakable", "question",
    "enemy", "hazard", "pipe", "coin", "collectable", "reward",
    "door", "ladder", "climbable", "platform", "moving-platform",
    "fixed-platform", "cannon", "void",
})


@dataclass(frozen=True)
class TileDef:
    char: str
    name: str
    tags: frozenset[str]

    def has(self, tag: str) -> bool:
        return tag in self.tags


@dataclass(frozen=True)
class TileVocab:
    """Ordered tile alphabet for one game (or a blend union)."""

    game: str
    tiles: tuple[TileDef, ...]
    empty_tile: str

    def __post_init__(self):
        chars = [t.char for t in self.tiles]
        if len(set(chars)) != len(chars):
            raise ConfigError(f"{self.game}: duplicate tile characters in vocab")
        if self.empty_tile not in set(chars):
            raise ConfigError(f"{self.game}: empty tile {self.empty_tile!r} not in vocab")
        object.__setattr__(self, "_index", {t.char: i for i, t in enumerate(self.tiles)})

    def __len__(self) -> int:
        return len(self.tiles)

    def __contains__(self, char: str) -> bool:
        return char in self._index

    def index(self, char: str) -> int:
        return self._index[char]

    def char_at(self, i: int) -> str:
        return self.tiles[i].char

    def tile(self, char: str) -> TileDef:
        return self.tiles[self._index[char]]

    def chars_with_tag(self, tag: str) -> frozenset[str]:
        return frozenset(t.char for t in self.tiles if tag in t.tags)

    @property
    def empty_index(self) -> int:
        return self._index[self.empty_tile]

    def to_jsonable(self) -> dict:
        return {
            "game": self.game,
            "empty_tile": self.empty_tile,
            "tiles": [
                {"char": t.char, "name": t.name, "tags": sorted(t.tags)}
                for t in self.tiles
            ],
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "TileVocab":
        tiles = tuple(
            TileDef(t["char"], t["name"], frozenset(t["tags"])) for t in data["tiles"]
        )
        return cls(game=data["game"], tiles=tiles, empty_tile=data["empty_tile"])

    def content_hash(self) -> str:
        """Stable hash over the ordered alphabet; stored in checkpoints."""
        blob = json.dumps(self.to_jsonable(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Section:
    """One rectangular slice of a level, slid over in one direction."""

    row0: int
    row1: int
    col0: int
    col1: int
    orientation: str  # horizontal | vertical


@dataclass(frozen=True)
class TileMap:
    """Full per-game config: vocab + element categories + corpus layout."""

    vocab: TileVocab
    elements: tuple[tuple[str, frozenset[str]], ...]  # (category name, chars), bit order
    orientation: str          # horizontal | vertical | sections
    expected_padding: int     # rows the source paper adds for this game
    levels_dir: str
    levels_glob: str
    sections: dict[str, tuple[Section, ...]] = field(default_factory=dict)

    @property
    def game(self) -> str:
        return self.vocab.game

    def element_chars(self) -> tuple[frozenset[str], ...]:
        return tuple(chars for _, chars in self.elements)

    def element_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.elements)


def _parse_tiles(game: str, raw_tiles: list) -> tuple[TileDef, ...]:
    tiles = []
    for entry in raw_tiles:
        char = str(entry["char"])
        if len(char) != 1:
            raise ConfigError(f"{game}: tile char must be a single character, got {char!r}")
        tags = frozenset(str(t) for t in entry.get("tags", []))
        unknown = tags - KNOWN_TAGS
        if unknown:
            raise ConfigError(f"{game}: unknown tile tags {sorted(unknown)} on {char!r}")
        tiles.append(TileDef(char=char, name=str(entry["name"]), tags=tags))
    return tuple(tiles)


def load_tilemap(path: str | Path) -> TileMap:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"tile map not found: {path}")
    raw = yaml.safe_load(path.read_text())
    return tilemap_from_dict(raw)


def tilemap_from_dict(raw: dict) -> TileMap:
    game = str(raw["game"])
    vocab = TileVocab(
        game=game,
        tiles=_parse_tiles(game, raw["tiles"]),
        empty_tile=str(raw["empty_tile"]),
    )
    elements = []
    for entry in raw.get("elements", []):
        chars = frozenset(str(c) for c in entry["chars"])
        missing = chars - {t.char for t in vocab.tiles}
        if missing:
            raise ConfigError(f"{game}: element {entry['name']} uses unknown chars {sorted(missing)}")
        elements.append((str(entry["name"]), chars))
    sections: dict[str, tuple[Section, ...]] = {}
    for fname, entries in (raw.get("sections") or {}).items():
        parsed = []
        for s in entries:
            orient = str(s["orientation"])
            if orient not in ("horizontal", "vertical"):
                raise ConfigError(f"{game}: bad section orientation {orient!r} in {fname}")
            parsed.append(Section(
                row0=int(s["rows"][0]), row1=int(s["rows"][1]),
                col0=int(s["cols"][0]), col1=int(s["cols"][1]),
                orientation=orient,
            ))
        sections[str(fname)] = tuple(parsed)
    levels = raw.get("levels", {})
    return TileMap(
        vocab=vocab,
        elements=tuple(elements),
        orientation=str(raw.get("orientation", "horizontal")),
        expected_padding=int(raw.get("expected_padding", 0)),
        levels_dir=str(levels.get("dir", game.lower())),
        levels_glob=str(levels.get("glob", "*.txt")),
        sections=sections,
    )


def default_tilemap_path(game: str) -> Path:
    if game not in GAMES:
        raise ConfigError(f"unknown game {game!r}, expected one of {GAMES}")
    ref = resources.files("condlevel") / "data" / "tilemaps" / f"{game.lower()}.yaml"
    return Path(str(ref))


def load_default_tilemap(game: str) -> TileMap:
    return load_tilemap(default_tilemap_path(game))


def union_vocab(maps: list[TileMap], name: str = "BLEND") -> TileVocab:
    """Merge game vocabs for the blend model.

    Order is deterministic: tiles appear in the order of the given maps,
    skipping characters already taken. A character shared between games must
    carry identical tags and name, otherwise one-hot channels would be
    semantically ambiguous.
    """
    seen: dict[str, TileDef] = {}
    ordered: list[TileDef] = []
    for m in maps:
        for t in m.vocab.tiles:
            if t.char in seen:
                prev = seen[t.char]
                if prev.tags != t.tags or prev.name != t.name:
                    raise ConfigError(
                        f"blend union conflict on {t.char!r}: "
                        f"{prev.name}/{sorted(prev.tags)} vs {t.name}/{sorted(t.tags)}"
                    )
                continue
            seen[t.char] = t
            ordered.append(t)
    empties = {m.vocab.empty_tile for m in maps}
    if len(empties) != 1:
        raise ConfigError(f"blend union needs a single shared empty tile, got {sorted(empties)}")
    return TileVocab(game=name, tiles=tuple(ordered), empty_tile=empties.pop())
