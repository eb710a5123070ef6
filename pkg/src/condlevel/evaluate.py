"""Evaluation suites: element-label match rates, blend classification,
and energy distance between tile-feature distributions.

Three questions, mirroring the reference experiments:
  * does conditioning on an element label actually produce those elements
    (exact / none match percentages per label)?
  * are segments generated under blend labels classified as the right
    game(s) by a random forest trained on the real segments?
  * how close are generated feature distributions (density, nonlinearity,
    leniency, interestingness) to each game's training distribution?
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import SEGMENT_SIZE, Segment
from .cvae import CvaeModel
from .datasets import Dataset
from .errors import EmptySetError, SchemeMismatchError, TooFewSamplesError
from .generate import decode_to_segments, sample_conditioned
from .labeling import BLEND_GAMES, Label, all_labels, element_label, label_to_int
from .rforest import RandomForest
from .tilemaps import TileMap, TileVocab


# --- tile-based features ---

@dataclass(frozen=True)
class TileFeatures:
    density: float          # solid-tile fraction, in [0, 1]
    nonlinearity: float     # mean squared residual of a line fit to column heights
    leniency: float         # -(enemy/hazard tiles + gap columns) / 16
    interestingness: float  # fraction of reward/decorative tiles, in [0, 1]

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.density, self.nonlinearity, self.leniency, self.interestingness]
        )


def _column_heights(segment: Segment, solid: frozenset[str]) -> np.ndarray:
    heights = np.zeros(SEGMENT_SIZE)
    for col in range(SEGMENT_SIZE):
        h = 0
        for row in range(SEGMENT_SIZE):
            if segment.grid.rows[row][col] in solid:
                h = SEGMENT_SIZE - row
                break
        heights[col] = h
    return heights


def _tag_member(vocab: TileVocab, tag: str) -> np.ndarray:
    return np.array([tag in t.tags for t in vocab.tiles], dtype=bool)


def _heights_from_tiles(tiles: np.ndarray, solid_member: np.ndarray) -> np.ndarray:
    """(N,16) column heights (16 - topmost solid row; 0 when no solid tile)."""
    solid = solid_member[tiles]                       # (N,16,16)
    any_solid = solid.any(axis=1)                     # (N,16)
    first = np.argmax(solid, axis=1)                  # (N,16)
    return np.where(any_solid, SEGMENT_SIZE - first, 0).astype(np.float64)


def features_from_tiles(tiles: np.ndarray, vocab: TileVocab) -> np.ndarray:
    """Vectorized tile features for a (N,16,16) index batch; matches
    tile_features row for row."""
    n = tiles.shape[0]
    area = SEGMENT_SIZE * SEGMENT_SIZE
    solid_m = _tag_member(vocab, "solid")
    hazard_m = _tag_member(vocab, "enemy") | _tag_member(vocab, "hazard")
    reward_m = _tag_member(vocab, "reward")

    density = solid_m[tiles].sum(axis=(1, 2)) / area
    interest = reward_m[tiles].sum(axis=(1, 2)) / area
    hazard_count = hazard_m[tiles].sum(axis=(1, 2)).astype(np.float64)

    heights = _heights_from_tiles(tiles, solid_m)     # (N,16)
    capped = heights > 0
    xs = np.arange(SEGMENT_SIZE, dtype=np.float64)
    w = capped.astype(np.float64)
    cnt = w.sum(axis=1)
    sx = (w * xs).sum(axis=1)
    sy = (w * heights).sum(axis=1)
    sxx = (w * xs * xs).sum(axis=1)
    sxy = (w * xs * heights).sum(axis=1)
    denom = cnt * sxx - sx * sx
    ok = (cnt >= 2) & (denom > 0)
    slope = np.where(ok, np.divide(cnt * sxy - sx * sy, denom, where=denom != 0), 0.0)
    intercept = np.where(cnt > 0, np.divide(sy - slope * sx, cnt, where=cnt != 0), 0.0)
    resid = w * (heights - slope[:, None] * xs[None, :] - intercept[:, None])
    nonlin = np.where(ok, (resid ** 2).sum(axis=1) / np.maximum(cnt, 1.0), 0.0)

    bottom_solid = solid_m[tiles[:, SEGMENT_SIZE - 1, :]]
    gap_cols = SEGMENT_SIZE - bottom_solid.sum(axis=1)
    leniency = -(hazard_count + gap_cols) / SEGMENT_SIZE
    return np.stack([density, nonlin, leniency, interest], axis=1)


def tile_features(segment: Segment, vocab: TileVocab | None = None) -> TileFeatures:
    vocab = vocab or segment.vocab
    solid = vocab.chars_with_tag("solid")
    hazardous = vocab.chars_with_tag("enemy") | vocab.chars_with_tag("hazard")
    rewarding = vocab.chars_with_tag("reward")

    cells = [ch for row in segment.grid.rows for ch in row]
    n = len(cells)
    density = sum(1 for ch in cells if ch in solid) / n
    interest = sum(1 for ch in cells if ch in rewarding) / n
    hazard_count = sum(1 for ch in cells if ch in hazardous)

    heights = _column_heights(segment, solid)
    capped = heights > 0
    if capped.sum() >= 2:
        xs = np.nonzero(capped)[0].astype(np.float64)
        ys = heights[capped]
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        nonlinearity = float((resid ** 2).mean())
    else:
        nonlinearity = 0.0

    gap_cols = sum(
        1 for col in range(SEGMENT_SIZE)
        if segment.grid.rows[SEGMENT_SIZE - 1][col] not in solid
    )
    leniency = -(hazard_count + gap_cols) / SEGMENT_SIZE
    return TileFeatures(density, nonlinearity, leniency, interest)


def _tiles_batch(segments: list[Segment], vocab: TileVocab) -> np.ndarray:
    from .corpus import segment_to_indices

    return np.stack([segment_to_indices(s, vocab) for s in segments])


def feature_matrix(segments: list[Segment], vocab: TileVocab | None = None) -> np.ndarray:
    if not segments:
        return np.zeros((0, 4))
    vocab = vocab or segments[0].vocab
    return features_from_tiles(_tiles_batch(segments, vocab), vocab)


# --- energy distance ---

def e_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Energy distance between two feature samples.

    E = 2*mean||a-b|| - mean||a-a'|| - mean||b-b'|| with Euclidean norms
    over z-scored features; standardization is pooled over both samples so
    incommensurate feature scales do not dominate.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySetError("e_distance needs non-empty samples")
    pooled = np.concatenate([a, b], axis=0)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std[std == 0.0] = 1.0
    az = (a - mean) / std
    bz = (b - mean) / std

    def mean_pair(x, y):
        d = x[:, None, :] - y[None, :, :]
        return float(np.sqrt((d ** 2).sum(axis=2)).mean())

    return 2.0 * mean_pair(az, bz) - mean_pair(az, az) - mean_pair(bz, bz)


# --- element-label match metrics ---

@dataclass
class LabelRow:
    label: str
    label_int: int
    n: int
    exact_pct: float
    none_pct: float
    train_count: int


@dataclass
class MatchReport:
    scheme_id: str
    source: str                     # random | training
    rows: list[LabelRow]
    avg_exact: float                # unweighted mean over all labels
    avg_none: float                 # all-zero label counts as vacuously 100
    avg_none_excl_zero: float       # variant excluding the all-zero label
    most_frequent: list[int] = field(default_factory=list)  # label ints, desc by count


def _derive_bits(segments: list[Segment], tilemap: TileMap) -> list[tuple[int, ...]]:
    return [element_label(s, tilemap).bits for s in segments]


def _none_match(conditioning: tuple[int, ...], derived: tuple[int, ...]) -> bool:
    """True when no element requested by the conditioning label is present."""
    return all(d == 0 for c, d in zip(conditioning, derived) if c == 1)


def label_frequency(dataset: Dataset) -> dict[int, int]:
    """Count of each label (by integer encoding) in the dataset; zero-filled."""
    counts = {n: 0 for n in range(dataset.scheme.n_labels)}
    for row in dataset.labels:
        counts[label_to_int(Label(tuple(int(v) for v in row), dataset.scheme))] += 1
    return counts


def match_metrics(model: CvaeModel, tilemap: TileMap, n_per_label: int, seed: int,
                  source: str = "random", dataset: Dataset | None = None,
                  jobs: int = 1) -> MatchReport:
    """Exact/none match percentages per conditioning label.

    source="random" decodes fresh prior samples; source="training" re-encodes
    training segments (posterior mean) under each label and decodes them,
    which requires `dataset`.
    """
    if not model.scheme.id.startswith("elements-"):
        raise SchemeMismatchError(f"match metrics need an element model, got {model.scheme.id}")
    if source not in ("random", "training"):
        raise ValueError(f"source must be random|training, got {source!r}")
    if source == "training" and dataset is None:
        raise ValueError("source='training' requires the training dataset")

    labels = all_labels(model.scheme)
    freq = label_frequency(dataset) if dataset is not None else {}

    train_x = None
    if source == "training":
        from .corpus import one_hot_batch

        rng = np.random.default_rng(seed)
        take = min(n_per_label, len(dataset))
        pick = rng.permutation(len(dataset))[:take]
        train_x = one_hot_batch(dataset.tiles[pick], len(dataset.vocab))

    def row_for(label: Label) -> LabelRow:
        if source == "random":
            segs = sample_conditioned(model, label, n_per_label,
                                      seed=seed + label_to_int(label))
        else:
            c = np.tile(label.to_array().astype(np.float64), (train_x.shape[0], 1))
            mu, _ = model.encode(train_x, c)
            segs = decode_to_segments(model, mu, c)
        derived = _derive_bits(segs, tilemap)
        exact = sum(1 for d in derived if d == label.bits) / len(segs) * 100.0
        none = sum(1 for d in derived if _none_match(label.bits, d)) / len(segs) * 100.0
        return LabelRow(
            label=str(label),
            label_int=label_to_int(label),
            n=len(segs),
            exact_pct=exact,
            none_pct=none,
            train_count=freq.get(label_to_int(label), 0),
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row_for, labels))
    else:
        rows = [row_for(lab) for lab in labels]
    rows.sort(key=lambda r: r.label_int)

    avg_exact = float(np.mean([r.exact_pct for r in rows]))
    avg_none = float(np.mean([r.none_pct for r in rows]))
    nonzero = [r.none_pct for r in rows if r.label_int != 0]
    avg_none_excl = float(np.mean(nonzero)) if nonzero else 0.0
    most_freq = [r.label_int for r in sorted(rows, key=lambda r: (-r.train_count, r.label_int))]
    return MatchReport(
        scheme_id=model.scheme.id,
        source=source,
        rows=rows,
        avg_exact=avg_exact,
        avg_none=avg_none,
        avg_none_excl_zero=avg_none_excl,
        most_frequent=most_freq,
    )


# --- blend classification ---

SEGMENT_FEATURE_TAGS = (
    "empty", "solid", "ground", "breakable", "question", "enemy", "hazard",
    "pipe", "coin", "collectable", "door", "ladder", "moving-platform",
    "fixed-platform", "cannon", "void",
)


def classifier_features(segment: Segment, vocab: TileVocab) -> np.ndarray:
    """Feature vector for game classification.

    Per-tag tile counts + the four tile features + a 16-bin histogram of
    column heights (bin h-1 counts columns whose topmost solid tile gives
    height h; height-0 columns fall in no bin).
    """
    counts = np.zeros(len(SEGMENT_FEATURE_TAGS))
    tag_chars = [vocab.chars_with_tag(t) for t in SEGMENT_FEATURE_TAGS]
    for row in segment.grid.rows:
        for ch in row:
            for ti, chars in enumerate(tag_chars):
                if ch in chars:
                    counts[ti] += 1
    feats = tile_features(segment, vocab).to_array()
    heights = _column_heights(segment, vocab.chars_with_tag("solid"))
    hist = np.zeros(SEGMENT_SIZE)
    for h in heights:
        if h > 0:
            hist[int(h) - 1] += 1
    return np.concatenate([counts, feats, hist])


def classifier_matrix_from_tiles(tiles: np.ndarray, vocab: TileVocab) -> np.ndarray:
    """Vectorized classifier features for a (N,16,16) index batch."""
    n = tiles.shape[0]
    v = len(vocab)
    flat = tiles.reshape(n, -1).astype(np.int64)
    offset = flat + np.arange(n)[:, None] * v
    char_counts = np.bincount(offset.reshape(-1), minlength=n * v).reshape(n, v)
    member = np.stack([_tag_member(vocab, t) for t in SEGMENT_FEATURE_TAGS], axis=1)
    tag_counts = char_counts @ member.astype(np.float64)

    feats = features_from_tiles(tiles, vocab)

    heights = _heights_from_tiles(tiles, _tag_member(vocab, "solid")).astype(np.int64)
    valid = heights > 0
    bins = (heights - 1) + np.arange(n)[:, None] * SEGMENT_SIZE
    hist = np.bincount(bins[valid].reshape(-1),
                       minlength=n * SEGMENT_SIZE).reshape(n, SEGMENT_SIZE)
    return np.concatenate([tag_counts, feats, hist.astype(np.float64)], axis=1)


def classifier_matrix(segments: list[Segment], vocab: TileVocab) -> np.ndarray:
    if not segments:
        return np.zeros((0, len(SEGMENT_FEATURE_TAGS) + 4 + SEGMENT_SIZE))
    return classifier_matrix_from_tiles(_tiles_batch(segments, vocab), vocab)


def train_rf_classifier(dataset: Dataset, split: float = 0.8, trees: int = 100,
                        seed: int = 0) -> tuple[RandomForest, float]:
    """Fit the game classifier on the blend dataset; returns held-out accuracy.

    The split is stratified per game so each class keeps the same
    train/test proportions.
    """
    if dataset.scheme.id != "blend":
        raise SchemeMismatchError("classifier expects the blend dataset")
    y = np.array([int(np.argmax(row)) for row in dataset.labels])
    n = len(dataset)
    if n < 10:
        raise TooFewSamplesError("blend dataset too small for a train/test split")
    X = classifier_matrix_from_tiles(dataset.tiles, dataset.vocab)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in range(3):
        members = np.nonzero(y == cls)[0]
        perm = members[rng.permutation(members.size)]
        cut = int(round(split * members.size))
        train_idx.extend(perm[:cut])
        test_idx.extend(perm[cut:])
    train_idx = np.array(sorted(train_idx))
    test_idx = np.array(sorted(test_idx))
    forest = RandomForest(n_trees=trees, seed=seed).fit(X[train_idx], y[train_idx])
    accuracy = forest.accuracy(X[test_idx], y[test_idx])
    return forest, accuracy


def blend_table(model: CvaeModel, classifier: RandomForest, n_per_label: int,
                seed: int, jobs: int = 1) -> dict[str, dict[str, float]]:
    """For each 3-bit blend label, the percentage of generated segments
    classified as each game. Rows sum to 100 up to rounding."""
    if model.scheme.id != "blend":
        raise SchemeMismatchError(f"blend table needs a blend model, got {model.scheme.id}")

    def row_for(label: Label) -> tuple[str, dict[str, float]]:
        segs = sample_conditioned(model, label, n_per_label,
                                  seed=seed + label_to_int(label))
        X = classifier_matrix(segs, model.vocab)
        pred = classifier.predict(X)
        shares = {
            game: float((pred == gi).mean() * 100.0)
            for gi, game in enumerate(BLEND_GAMES)
        }
        return str(label), shares

    labels = all_labels(model.scheme)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(row_for, labels))
    else:
        pairs = [row_for(lab) for lab in labels]
    return dict(pairs)


# --- energy-distance report ---

def edist_report(model: CvaeModel, training_features: dict[str, np.ndarray],
                 n_per_label: int, seed: int, jobs: int = 1) -> dict[str, dict[str, float]]:
    """E-distance between generation under each blend label and each game's
    training features; includes a `train:<game>` self-distance baseline row."""
    if model.scheme.id != "blend":
        raise SchemeMismatchError(f"edist report needs a blend model, got {model.scheme.id}")

    def row_for(label: Label) -> tuple[str, dict[str, float]]:
        segs = sample_conditioned(model, label, n_per_label,
                                  seed=seed + label_to_int(label))
        gen = feature_matrix(segs, model.vocab)
        return str(label), {
            game: e_distance(gen, feats) for game, feats in training_features.items()
        }

    labels = all_labels(model.scheme)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(row_for, labels))
    else:
        pairs = [row_for(lab) for lab in labels]
    table = dict(pairs)
    for game, feats in training_features.items():
        table[f"train:{game}"] = {
            g: e_distance(feats, f2) for g, f2 in training_features.items()
        }
    return table
