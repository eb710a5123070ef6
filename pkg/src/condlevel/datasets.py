"""Training datasets: segments + conditioning labels + vocab, built from a corpus.

Dataset ids:
  smb | ki | mm   game-element datasets, dense sliding window (stride 1)
  patterns        SMB + SMB2 Lost Levels, non-overlapping windows (stride 16)
  blend           SMB + KI duplicated 2x + MM under the union vocab, blend labels

Datasets serialize to a small versioned binary container (.clds) whose bytes
are a pure function of the content, so identical builds produce identical
files.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import corpus as cp
from . import labeling as lb
from .errors import CorruptCheckpointError, MissingCorpusError, ConfigError
from .tilemaps import TileMap, TileVocab, load_default_tilemap, load_tilemap, union_vocab

log = logging.getLogger(__name__)

DATASET_IDS = ("smb", "ki", "mm", "patterns", "blend")
CORPUS_ENV = "CONDLEVEL_CORPUS"

_MAGIC = b"CLDS"
_VERSION = 1


def default_corpus_root() -> Path:
    """Explicit env override, else the corpus shipped inside the package."""
    env = os.environ.get(CORPUS_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("condlevel") / "data" / "corpus"))


@dataclass
class Dataset:
    scheme: lb.LabelScheme
    vocab: TileVocab
    tiles: np.ndarray        # (N, 16, 16) uint8 vocab indices
    labels: np.ndarray       # (N, L) uint8
    provenance: list[cp.Provenance]
    stride: int

    def __len__(self) -> int:
        return self.tiles.shape[0]

    def segment(self, i: int) -> cp.Segment:
        seg = cp.indices_to_segment(self.tiles[i], self.vocab)
        return cp.Segment(seg.grid, self.provenance[i])

    def segments(self) -> list[cp.Segment]:
        return [self.segment(i) for i in range(len(self))]

    def counts_by_game(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.provenance:
            counts[p.game] = counts.get(p.game, 0) + 1
        return counts

    def subsample(self, n: int | None = None, per_class: int | None = None,
                  seed: int = 0) -> "Dataset":
        """Deterministic random subsample; per_class stratifies on exact label rows."""
        rng = np.random.default_rng(seed)
        if per_class is not None:
            keys = [tuple(row) for row in self.labels]
            by_key: dict[tuple, list[int]] = {}
            for i, k in enumerate(keys):
                by_key.setdefault(k, []).append(i)
            picked: list[int] = []
            for k in sorted(by_key):
                idx = np.array(by_key[k])
                take = min(per_class, idx.size)
                picked.extend(idx[rng.permutation(idx.size)[:take]].tolist())
            sel = np.array(sorted(picked))
        else:
            if n is None or n >= len(self):
                return self
            sel = np.sort(rng.permutation(len(self))[:n])
        return Dataset(
            scheme=self.scheme,
            vocab=self.vocab,
            tiles=self.tiles[sel].copy(),
            labels=self.labels[sel].copy(),
            provenance=[self.provenance[i] for i in sel],
            stride=self.stride,
        )

    # --- serialization ---

    def save(self, path: str | Path) -> None:
        header = {
            "version": _VERSION,
            "scheme": {"id": self.scheme.id, "bit_names": list(self.scheme.bit_names)},
            "vocab": self.vocab.to_jsonable(),
            "vocab_hash": self.vocab.content_hash(),
            "stride": self.stride,
            "n": len(self),
            "label_len": int(self.labels.shape[1]),
            "provenance": [[p.game, p.level_id, p.offset] for p in self.provenance],
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<II", _VERSION, len(blob)))
            f.write(blob)
            f.write(np.ascontiguousarray(self.tiles, dtype=np.uint8).tobytes())
            f.write(np.ascontiguousarray(self.labels, dtype=np.uint8).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        raw = Path(path).read_bytes()
        if raw[:4] != _MAGIC:
            raise CorruptCheckpointError(f"{path}: not a dataset file")
        version, hlen = struct.unpack("<II", raw[4:12])
        if version != _VERSION:
            raise CorruptCheckpointError(f"{path}: unsupported dataset version {version}")
        header = json.loads(raw[12:12 + hlen])
        n, label_len = header["n"], header["label_len"]
        body = raw[12 + hlen:]
        tiles_size = n * cp.SEGMENT_SIZE * cp.SEGMENT_SIZE
        if len(body) != tiles_size + n * label_len:
            raise CorruptCheckpointError(f"{path}: truncated dataset body")
        vocab = TileVocab.from_jsonable(header["vocab"])
        tiles = np.frombuffer(body[:tiles_size], dtype=np.uint8).reshape(
            n, cp.SEGMENT_SIZE, cp.SEGMENT_SIZE
        ).copy()
        labels = np.frombuffer(body[tiles_size:], dtype=np.uint8).reshape(n, label_len).copy()
        scheme = lb.LabelScheme(header["scheme"]["id"], tuple(header["scheme"]["bit_names"]))
        provenance = [cp.Provenance(g, lv, off) for g, lv, off in header["provenance"]]
        return cls(scheme=scheme, vocab=vocab, tiles=tiles, labels=labels,
                   provenance=provenance, stride=header["stride"])


def level_files(tilemap: TileMap, corpus_root: Path) -> list[Path]:
    d = corpus_root / tilemap.levels_dir
    if not d.is_dir():
        raise MissingCorpusError(f"corpus directory not found: {d}")
    files = sorted(d.glob(tilemap.levels_glob))
    if not files:
        raise MissingCorpusError(f"no level files matching {tilemap.levels_glob!r} in {d}")
    return files


def _level_sections(tilemap: TileMap, level_name: str, grid: cp.TileGrid):
    if tilemap.orientation == "sections":
        secs = tilemap.sections.get(level_name)
        if not secs:
            raise ConfigError(f"{tilemap.game}: no section annotations for {level_name}")
        return secs
    from .tilemaps import Section
    return (Section(0, grid.height, 0, grid.width, tilemap.orientation),)


def game_segments(tilemap: TileMap, corpus_root: Path, stride: int,
                  vocab: TileVocab | None = None) -> list[cp.Segment]:
    """Parse, section, pad and window every level of one game."""
    vocab = vocab or tilemap.vocab
    out: list[cp.Segment] = []
    for path in level_files(tilemap, corpus_root):
        grid = cp.parse_level(path.read_text(), vocab)
        for si, sec in enumerate(_level_sections(tilemap, path.name, grid)):
            piece = grid.crop(sec.row0, sec.row1, sec.col0, sec.col1)
            level_id = path.stem if si == 0 and len(tilemap.sections) == 0 else f"{path.stem}:{si}"
            if sec.orientation == "horizontal":
                piece = cp.pad_level(piece, tilemap.expected_padding, game=tilemap.game)
            out.extend(
                cp.extract_segments(piece, stride, sec.orientation,
                                    game=tilemap.game, level_id=level_id)
            )
    return out


def _assemble(segments: list[cp.Segment], label_rows: list[lb.Label],
              scheme: lb.LabelScheme, vocab: TileVocab, stride: int) -> Dataset:
    n = len(segments)
    tiles = np.empty((n, cp.SEGMENT_SIZE, cp.SEGMENT_SIZE), dtype=np.uint8)
    labels = np.empty((n, scheme.length), dtype=np.uint8)
    for i, (seg, lab) in enumerate(zip(segments, label_rows)):
        tiles[i] = cp.segment_to_indices(seg, vocab)
        labels[i] = lab.to_array()
    return Dataset(scheme=scheme, vocab=vocab, tiles=tiles, labels=labels,
                   provenance=[s.source for s in segments], stride=stride)


def build_dataset(
    dataset_id: str,
    corpus_root: str | Path | None = None,
    stride: int | None = None,
    tilemaps: dict[str, TileMap] | None = None,
    overrides_path: str | Path | None = None,
) -> Dataset:
    """Build one of the five training datasets from the corpus on disk."""
    if dataset_id not in DATASET_IDS:
        raise ConfigError(f"unknown dataset {dataset_id!r}, expected one of {DATASET_IDS}")
    root = Path(corpus_root) if corpus_root else default_corpus_root()
    tilemaps = tilemaps or {}

    def tm(game: str) -> TileMap:
        return tilemaps.get(game) or load_default_tilemap(game)

    if dataset_id in ("smb", "ki", "mm"):
        game = dataset_id.upper()
        tilemap = tm(game)
        stride = 1 if stride is None else stride
        segs = game_segments(tilemap, root, stride)
        labels = [lb.element_label(s, tilemap) for s in segs]
        return _assemble(segs, labels, lb.element_scheme(tilemap), tilemap.vocab, stride)

    if dataset_id == "patterns":
        stride = 16 if stride is None else stride
        smb, smb2 = tm("SMB"), tm("SMB2LL")
        if {t.char for t in smb2.vocab.tiles} - {t.char for t in smb.vocab.tiles}:
            raise ConfigError("SMB2LL vocab must be a subset of the SMB vocab")
        segs = game_segments(smb, root, stride)
        segs += game_segments(smb2, root, stride, vocab=smb.vocab)
        overrides = lb.load_overrides(overrides_path) if overrides_path else None
        labels = [lb.pattern_label(s, overrides) for s in segs]
        return _assemble(segs, labels, lb.PATTERN_SCHEME, smb.vocab, stride)

    # blend
    stride = 1 if stride is None else stride
    maps = [tm("SMB"), tm("KI"), tm("MM")]
    vocab = union_vocab(maps)
    segs: list[cp.Segment] = []
    labels: list[lb.Label] = []
    for m in maps:
        game_segs = game_segments(m, root, stride, vocab=vocab)
        copies = 2 if m.game == "KI" else 1  # balance KI against the larger corpora
        for _ in range(copies):
            segs.extend(game_segs)
            labels.extend(lb.blend_label(m.game) for _ in game_segs)
    return _assemble(segs, labels, lb.BLEND_SCHEME, vocab, stride)
