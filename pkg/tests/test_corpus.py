import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condlevel.corpus import (
    SEGMENT_SIZE,
    Segment,
    TileGrid,
    extract_segments,
    grid_to_indices,
    one_hot_batch,
    one_hot_decode,
    one_hot_encode,
    pad_level,
    parse_level,
    segment_to_indices,
)
from condlevel.datasets import Dataset, build_dataset, default_corpus_root, level_files
from condlevel.errors import (
    BadLengthError,
    HeightOverflowError,
    RaggedRowsError,
    TooSmallError,
    UnknownTileError,
)

from .conftest import empty_rows, seg_from_rows


class TestParseLevel:
    def test_two_line_grid(self, smb_tilemap):
        grid = parse_level("--\nXX", smb_tilemap.vocab)
        assert (grid.height, grid.width) == (2, 2)
        assert grid.rows == ("--", "XX")
        assert grid.vocab.tile(grid.char_at(0, 0)).name == "empty"
        assert grid.vocab.tile(grid.char_at(1, 1)).name == "ground"

    def test_unknown_tile_position(self, smb_tilemap):
        with pytest.raises(UnknownTileError) as err:
            parse_level("--\n-~", smb_tilemap.vocab)
        assert err.value.char == "~"
        assert (err.value.row, err.value.col) == (1, 1)

    def test_ragged_rows(self, smb_tilemap):
        with pytest.raises(RaggedRowsError) as err:
            parse_level("---\n--", smb_tilemap.vocab)
        assert err.value.row == 1

    def test_empty_text(self, smb_tilemap):
        with pytest.raises(TooSmallError):
            parse_level("\n\n", smb_tilemap.vocab)

    def test_full_level_file_dimensions(self, smb_tilemap):
        # oracle: count lines and characters of the corpus file directly
        path = default_corpus_root() / "smb" / "mario-1-1.txt"
        text = path.read_text()
        lines = [ln for ln in text.split("\n") if ln]
        grid = parse_level(text, smb_tilemap.vocab)
        assert grid.height == len(lines) == 14
        assert grid.width == len(lines[0])

    def test_roundtrip_all_corpus_files(self, smb_tilemap, ki_tilemap, mm_tilemap):
        root = default_corpus_root()
        for tilemap in (smb_tilemap, ki_tilemap, mm_tilemap):
            for path in level_files(tilemap, root):
                text = path.read_text()
                grid = parse_level(text, tilemap.vocab)
                assert grid.to_text() == text.rstrip("\n") + "\n"


class TestPadLevel:
    def test_pad_height_15_adds_one_sky_row(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 8] * 15), smb_tilemap.vocab)
        padded = pad_level(grid, expected_rows=1, game="SMB")
        assert padded.height == 16
        assert padded.rows[0] == "-" * 8
        assert padded.rows[1:] == grid.rows

    def test_pad_height_16_identity(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 4] * 16), smb_tilemap.vocab)
        assert pad_level(grid) is grid

    def test_pad_height_14_adds_two_rows(self, mm_tilemap):
        grid = parse_level("\n".join(["#" * 20] * 14), mm_tilemap.vocab)
        padded = pad_level(grid, expected_rows=2, game="MM")
        assert padded.height == 16
        assert padded.rows[0] == padded.rows[1] == "-" * 20

    def test_pad_never_alters_cells(self, smb_tilemap):
        grid = parse_level("\n".join(["XSX?", "-o-E"] * 6), smb_tilemap.vocab)
        padded = pad_level(grid)
        assert padded.rows[-grid.height:] == grid.rows
        assert all(set(r) == {"-"} for r in padded.rows[:16 - grid.height])

    def test_height_overflow(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 4] * 17), smb_tilemap.vocab)
        with pytest.raises(HeightOverflowError):
            pad_level(grid)

    def test_mismatch_logged(self, smb_tilemap, caplog):
        import condlevel.corpus as cp

        cp._pad_warned.clear()
        grid = parse_level("\n".join(["X" * 4] * 13), smb_tilemap.vocab)
        with caplog.at_level("WARNING"):
            pad_level(grid, expected_rows=1, game="SMB-test")
        assert any("expected 1" in m for m in caplog.messages)


class TestExtractSegments:
    def test_width_18_stride_1(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 18] * 16), smb_tilemap.vocab)
        segs = extract_segments(grid, stride=1, game="SMB", level_id="t")
        assert [s.source.offset for s in segs] == [0, 1, 2]

    def test_width_32_stride_16_non_overlapping(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 32] * 16), smb_tilemap.vocab)
        segs = extract_segments(grid, stride=16)
        assert len(segs) == 2
        assert [s.source.offset for s in segs] == [0, 16]

    def test_vertical_slide(self, ki_tilemap):
        grid = parse_level("\n".join(["#" * 16] * 20), ki_tilemap.vocab)
        segs = extract_segments(grid, stride=1, orientation="vertical")
        assert len(segs) == 5
        assert [s.source.offset for s in segs] == [0, 1, 2, 3, 4]

    def test_too_small(self, smb_tilemap):
        grid = parse_level("\n".join(["X" * 10] * 16), smb_tilemap.vocab)
        with pytest.raises(TooSmallError):
            extract_segments(grid, stride=1)

    @given(width=st.integers(16, 120), stride=st.integers(1, 20))
    @settings(max_examples=60, deadline=None)
    def test_count_formula_matches_enumeration(self, width, stride):
        # oracle: brute-force enumeration of window start offsets
        expected_offsets = [
            off for off in range(0, width) if off % stride == 0 and off + 16 <= width
        ]
        from condlevel.tilemaps import TileDef, TileVocab

        vocab = TileVocab("T", (TileDef("-", "empty", frozenset({"empty"})),), "-")
        grid = TileGrid(tuple(["-" * width] * 16), vocab)
        segs = extract_segments(grid, stride=stride)
        assert len(segs) == (width - 16) // stride + 1
        assert [s.source.offset for s in segs] == expected_offsets


class TestOneHot:
    def test_all_empty_ones_at_empty_channel(self, smb_tilemap):
        seg = seg_from_rows(empty_rows(smb_tilemap.vocab), smb_tilemap.vocab)
        vec = one_hot_encode(seg)
        v = len(smb_tilemap.vocab)
        grid = vec.reshape(256, v)
        assert (grid[:, smb_tilemap.vocab.empty_index] == 1).all()
        assert grid.sum() == 256

    def test_roundtrip_on_training_segments(self):
        ds = build_dataset("smb", stride=16)
        for i in range(0, len(ds), 37):
            seg = ds.segment(i)
            back = one_hot_decode(one_hot_encode(seg, ds.vocab), ds.vocab)
            assert back.grid.rows == seg.grid.rows

    def test_mass_is_256(self, rng, smb_tilemap):
        v = len(smb_tilemap.vocab)
        chars = [t.char for t in smb_tilemap.vocab.tiles]
        rows = ["".join(chars[i] for i in rng.integers(0, v, 16)) for _ in range(16)]
        seg = seg_from_rows(rows, smb_tilemap.vocab)
        assert one_hot_encode(seg).sum() == 256

    def test_uniform_vector_decodes_to_first_tile(self, smb_tilemap):
        v = len(smb_tilemap.vocab)
        seg = one_hot_decode(np.full(256 * v, 0.25), smb_tilemap.vocab)
        first = smb_tilemap.vocab.char_at(0)
        assert all(set(row) == {first} for row in seg.grid.rows)

    def test_bad_length(self, smb_tilemap):
        with pytest.raises(BadLengthError):
            one_hot_decode(np.zeros(100), smb_tilemap.vocab)

    def test_one_hot_batch_matches_single(self, smb_tilemap):
        ds = build_dataset("smb", stride=64)
        batch = one_hot_batch(ds.tiles[:5], len(ds.vocab))
        for i in range(5):
            assert (batch[i] == one_hot_encode(ds.segment(i), ds.vocab)).all()

    def test_indices_ascii_fast_path_matches(self, smb_tilemap, rng):
        v = len(smb_tilemap.vocab)
        chars = [t.char for t in smb_tilemap.vocab.tiles]
        rows = ["".join(chars[i] for i in rng.integers(0, v, 16)) for _ in range(16)]
        seg = seg_from_rows(rows, smb_tilemap.vocab)
        idx = segment_to_indices(seg)
        manual = np.array(
            [[smb_tilemap.vocab.index(c) for c in row] for row in rows], dtype=np.uint8
        )
        assert (idx == manual).all()


class TestDatasets:
    def test_segment_provenance_and_stride(self):
        ds = build_dataset("smb", stride=16)
        assert ds.stride == 16
        assert all(p.game == "SMB" for p in ds.provenance)
        assert all(p.offset % 16 == 0 for p in ds.provenance)

    def test_every_dataset_segment_roundtrips(self):
        ds = build_dataset("patterns")
        for i in range(0, len(ds), 13):
            seg = ds.segment(i)
            assert (segment_to_indices(seg, ds.vocab) == ds.tiles[i]).all()

    def test_blend_duplicates_ki(self):
        ds = build_dataset("blend")
        counts = ds.counts_by_game()
        assert counts["KI"] == 2 * 1142
        assert counts["SMB"] == 2643
        assert counts["MM"] == 2983

    def test_save_load_roundtrip(self, tmp_path):
        ds = build_dataset("ki", stride=8)
        path = tmp_path / "ki.clds"
        ds.save(path)
        back = Dataset.load(path)
        assert back.scheme == ds.scheme
        assert (back.tiles == ds.tiles).all()
        assert (back.labels == ds.labels).all()
        assert back.provenance == ds.provenance
        assert back.vocab.content_hash() == ds.vocab.content_hash()

    def test_save_deterministic_bytes(self, tmp_path):
        ds = build_dataset("ki", stride=32)
        a, b = tmp_path / "a.clds", tmp_path / "b.clds"
        ds.save(a)
        ds.save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_subsample_deterministic_and_stratified(self):
        ds = build_dataset("blend", stride=4)
        sub1 = ds.subsample(per_class=50, seed=3)
        sub2 = ds.subsample(per_class=50, seed=3)
        assert (sub1.tiles == sub2.tiles).all()
        assert all(v == 50 for v in sub1.counts_by_game().values())

    def test_missing_corpus(self, tmp_path):
        from condlevel.errors import MissingCorpusError

        with pytest.raises(MissingCorpusError):
            build_dataset("smb", corpus_root=tmp_path)
