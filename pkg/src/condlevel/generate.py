"""Conditioned sampling and label-driven editing of segments.

Sampling draws latent vectors from the N(0, I) prior and decodes them under
a conditioning label. Editing re-encodes an existing segment (optionally
under a source label), then decodes the latent under a new target label;
the default uses the posterior mean so edits are repeatable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import (
    SEGMENT_SIZE,
    Segment,
    indices_to_segment,
    logits_to_indices,
    one_hot_encode,
    parse_level,
)
from .cvae import CvaeModel, reparameterize
from .errors import SchemeMismatchError
from .labeling import Label
from .tilemaps import TileMap


def _check_label(model: CvaeModel, label: Label) -> np.ndarray:
    if label.scheme.length != model.scheme.length or label.scheme.id != model.scheme.id:
        raise SchemeMismatchError(
            f"label scheme {label.scheme.id} does not match model scheme {model.scheme.id}"
        )
    return label.to_array().astype(np.float64)


def decode_to_segments(model: CvaeModel, z: np.ndarray, c: np.ndarray) -> list[Segment]:
    logits = model.decode(z, c)
    logits = np.atleast_2d(logits)
    out = []
    for row in logits:
        idx = logits_to_indices(row, model.config.vocab_size)
        out.append(indices_to_segment(
            idx.reshape(SEGMENT_SIZE, SEGMENT_SIZE).astype(np.uint8), model.vocab
        ))
    return out


def sample_conditioned(model: CvaeModel, label: Label, count: int,
                       seed: int = 0) -> list[Segment]:
    """Decode `count` prior samples under one conditioning label."""
    c = _check_label(model, label)
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, model.config.latent_dim))
    return decode_to_segments(model, z, np.tile(c, (count, 1)))


def relabel_segment(model: CvaeModel, segment: Segment, source_label: Label,
                    target_label: Label, mode: str = "mean",
                    seed: int = 0) -> Segment:
    """Re-decode a segment under a new label.

    mode="mean" uses the posterior mean (deterministic); mode="sampled"
    draws one reparameterized sample using `seed`.
    """
    c_src = _check_label(model, source_label)
    c_tgt = _check_label(model, target_label)
    if mode not in ("mean", "sampled"):
        raise ValueError(f"mode must be mean|sampled, got {mode!r}")
    x = one_hot_encode(segment, model.vocab)
    mu, logvar = model.encode(x, c_src)
    if mode == "mean":
        z = mu
    else:
        z = reparameterize(mu, logvar, np.random.default_rng(seed))
    return decode_to_segments(model, z[None, :], c_tgt[None, :])[0]


# --- rendering ---

def render_text(segment: Segment) -> str:
    """16 lines of tile characters; inverse of parse_level for 16x16 grids."""
    return segment.to_text()


def render_cells(segment: Segment, tilemap: TileMap | None = None) -> list[list[dict]]:
    """Grid of {char, name, tags} cells for UIs and plotting."""
    vocab = tilemap.vocab if tilemap is not None else segment.vocab
    cells = []
    for row in segment.grid.rows:
        cells.append([
            {
                "char": ch,
                "name": vocab.tile(ch).name,
                "tags": sorted(vocab.tile(ch).tags),
            }
            for ch in row
        ])
    return cells


def segment_file_text(segment: Segment, label: Label, seed: int, index: int = 0) -> str:
    """Generated-segment file: VGLC text plus a header comment with provenance."""
    header = (
        f"# condlevel generated scheme={label.scheme.id} "
        f"label={label} seed={seed} index={index}\n"
    )
    return header + segment.to_text()


def read_segment_file(path: str | Path, vocab) -> Segment:
    """Read a segment from a VGLC-format file, skipping `#` header comments."""
    lines = [
        line for line in Path(path).read_text().splitlines() if not line.startswith("#")
    ]
    grid = parse_level("\n".join(lines) + "\n", vocab)
    return Segment(grid)
