import numpy as np
import pytest

from condlevel import evaluate as ev
from condlevel.datasets import build_dataset
from condlevel.errors import EmptySetError, SchemeMismatchError
from condlevel.labeling import Label, all_labels

from .conftest import empty_rows, seg_from_rows


def brute_force_e_distance(a, b):
    """Independent O(n^2) double-loop oracle, including the z-scoring step."""
    pooled = np.concatenate([a, b], axis=0)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    az = [(row - mean) / std for row in a]
    bz = [(row - mean) / std for row in b]

    def avg(xs, ys):
        total = 0.0
        for x in xs:
            for y in ys:
                total += float(np.sqrt(((x - y) ** 2).sum()))
        return total / (len(xs) * len(ys))

    return 2 * avg(az, bz) - avg(az, az) - avg(bz, bz)


class TestTileFeatures:
    def test_all_empty(self, smb_tilemap):
        seg = seg_from_rows(empty_rows(smb_tilemap.vocab), smb_tilemap.vocab)
        f = ev.tile_features(seg)
        assert f.density == 0.0
        assert f.nonlinearity == 0.0
        assert f.leniency == -1.0  # 16 open bottom columns
        assert f.interestingness == 0.0

    def test_full_solid_slab(self, smb_tilemap):
        seg = seg_from_rows(["X" * 16] * 16, smb_tilemap.vocab)
        f = ev.tile_features(seg)
        assert f.density == 1.0
        assert f.nonlinearity == pytest.approx(0.0, abs=1e-18)
        assert f.leniency == 0.0

    def test_staircase_nonlinearity_closed_form(self, smb_tilemap):
        # stair profile: heights 1..16 across the columns -> exactly linear
        rows = []
        for r in range(16):
            rows.append("".join("X" if 16 - r <= c + 1 else "-" for c in range(16)))
        seg = seg_from_rows(rows, smb_tilemap.vocab)
        assert ev.tile_features(seg).nonlinearity == pytest.approx(0.0, abs=1e-18)

    def test_nonlinearity_matches_independent_regression(self, smb_tilemap):
        # bumpy profile; oracle: closed-form least squares computed here
        heights = [1, 1, 5, 1, 1, 9, 1, 1, 2, 7, 1, 1, 3, 1, 6, 1]
        rows = []
        for r in range(16):
            rows.append("".join("X" if 16 - r <= heights[c] else "-" for c in range(16)))
        seg = seg_from_rows(rows, smb_tilemap.vocab)
        xs = np.arange(16.0)
        ys = np.array(heights, dtype=float)
        n = 16
        slope = (n * (xs * ys).sum() - xs.sum() * ys.sum()) / (n * (xs * xs).sum() - xs.sum() ** 2)
        intercept = (ys.sum() - slope * xs.sum()) / n
        expected = float(((ys - slope * xs - intercept) ** 2).mean())
        assert ev.tile_features(seg).nonlinearity == pytest.approx(expected, rel=1e-9)

    def test_ranges(self, smb_tilemap, rng):
        chars = [t.char for t in smb_tilemap.vocab.tiles]
        for _ in range(20):
            rows = ["".join(chars[i] for i in rng.integers(0, len(chars), 16))
                    for _ in range(16)]
            f = ev.tile_features(seg_from_rows(rows, smb_tilemap.vocab))
            assert 0 <= f.density <= 1
            assert 0 <= f.interestingness <= 1
            assert f.nonlinearity >= 0

    def test_mirror_invariance_of_counts(self, smb_tilemap, rng):
        chars = [t.char for t in smb_tilemap.vocab.tiles]
        for _ in range(10):
            rows = ["".join(chars[i] for i in rng.integers(0, len(chars), 16))
                    for _ in range(16)]
            seg = seg_from_rows(rows, smb_tilemap.vocab)
            mirrored = seg_from_rows([r[::-1] for r in rows], smb_tilemap.vocab)
            f1, f2 = ev.tile_features(seg), ev.tile_features(mirrored)
            assert f1.density == f2.density
            assert f1.interestingness == f2.interestingness

    def test_vectorized_matches_scalar(self, mm_tilemap, rng):
        ds = build_dataset("mm", stride=32)
        pick = rng.integers(0, len(ds), 40)
        scalar = np.array([ev.tile_features(ds.segment(int(i)), ds.vocab).to_array()
                           for i in pick])
        vec = ev.features_from_tiles(ds.tiles[pick], ds.vocab)
        assert np.allclose(scalar, vec, atol=1e-10)


class TestEDistance:
    def test_identical_sets_zero(self, rng):
        a = rng.standard_normal((12, 4))
        assert abs(ev.e_distance(a, a.copy())) < 1e-9

    def test_singletons(self):
        p = np.array([[1.0, 2.0, 3.0, 4.0]])
        q = np.array([[2.0, 0.0, 3.0, 8.0]])
        pooled = np.concatenate([p, q])
        std = pooled.std(axis=0)
        std[std == 0] = 1.0
        expected = 2 * np.sqrt((((p - q) / std) ** 2).sum())
        assert ev.e_distance(p, q) == pytest.approx(float(expected), rel=1e-12)

    def test_matches_brute_force_oracle(self, rng):
        for trial in range(8):
            n, m = rng.integers(2, 21), rng.integers(2, 21)
            a = rng.standard_normal((n, 4)) * rng.uniform(0.5, 4)
            b = rng.standard_normal((m, 4)) + rng.uniform(-2, 2)
            fast = ev.e_distance(a, b)
            slow = brute_force_e_distance(a, b)
            assert fast == pytest.approx(slow, abs=1e-9)

    def test_symmetry_and_nonnegativity(self, rng):
        for _ in range(5):
            a = rng.standard_normal((10, 4))
            b = rng.standard_normal((14, 4)) + 0.5
            d1, d2 = ev.e_distance(a, b), ev.e_distance(b, a)
            assert d1 == pytest.approx(d2, abs=1e-12)
            assert d1 >= -1e-12

    def test_empty_set_rejected(self):
        with pytest.raises(EmptySetError):
            ev.e_distance(np.zeros((0, 4)), np.zeros((3, 4)))

    def test_constant_feature_no_nan(self):
        a = np.ones((5, 4))
        b = np.ones((6, 4))
        assert ev.e_distance(a, b) == pytest.approx(0.0, abs=1e-12)


class TestLabelFrequency:
    def test_counts_sum_to_dataset_size(self):
        ds = build_dataset("ki", stride=8)
        freq = ev.label_frequency(ds)
        assert sum(freq.values()) == len(ds)
        assert len(freq) == ds.scheme.n_labels

    def test_empty_dataset_all_zero(self):
        ds = build_dataset("ki", stride=64).subsample(n=0, seed=0)
        assert len(ds) == 0
        assert all(v == 0 for v in ev.label_frequency(ds).values())


class TestMatchMetrics:
    def test_all_zero_label_none_is_vacuous_100(self, smb_tilemap):
        # any model, even untrained: requesting nothing is always "none matched"
        from condlevel import cvae, nn
        from condlevel.labeling import element_scheme

        cfg = cvae.CvaeConfig(latent_dim=4, label_len=5,
                              vocab_size=len(smb_tilemap.vocab), hidden=(24, 16, 12))
        rng = np.random.default_rng(0)
        model = cvae.CvaeModel(cfg, element_scheme(smb_tilemap), smb_tilemap.vocab,
                               nn.mlp_from_dims(cfg.encoder_dims(), "identity", rng),
                               nn.mlp_from_dims(cfg.decoder_dims(), "identity", rng))
        report = ev.match_metrics(model, smb_tilemap, n_per_label=4, seed=0)
        zero_row = next(r for r in report.rows if r.label_int == 0)
        assert zero_row.none_pct == 100.0
        assert len(report.rows) == 32
        assert 0 <= report.avg_exact <= 100

    def test_requires_element_scheme(self):
        from .test_cvae import tiny_model

        model = tiny_model()
        with pytest.raises(SchemeMismatchError):
            ev.match_metrics(model, None, 1, 0)

    def test_none_match_semantics(self):
        assert ev._none_match((1, 0, 1), (0, 1, 0)) is True
        assert ev._none_match((1, 0, 1), (1, 0, 0)) is False
        assert ev._none_match((0, 0, 0), (1, 1, 1)) is True  # vacuous


class TestClassifierPipeline:
    def test_classifier_features_match_scalar(self, rng):
        ds = build_dataset("blend", stride=16)
        pick = rng.integers(0, len(ds), 25)
        scalar = np.array([ev.classifier_features(ds.segment(int(i)), ds.vocab)
                           for i in pick])
        vec = ev.classifier_matrix_from_tiles(ds.tiles[pick], ds.vocab)
        assert np.allclose(scalar, vec, atol=1e-10)

    def test_separable_duplicated_segments(self):
        ds = build_dataset("blend", stride=16)
        # one exactly-duplicated segment per class
        idx_by_game = {g: next(i for i, p in enumerate(ds.provenance) if p.game == g)
                       for g in ("SMB", "KI", "MM")}
        rows = list(idx_by_game.values()) * 40
        sub = ds.subsample(n=len(ds), seed=0)  # copy
        import dataclasses

        tiny = dataclasses.replace(
            ds,
            tiles=ds.tiles[rows],
            labels=ds.labels[rows],
            provenance=[ds.provenance[i] for i in rows],
        )
        forest, acc = ev.train_rf_classifier(tiny, trees=15, seed=0)
        assert acc == 1.0

    def test_permuted_labels_near_chance(self):
        from condlevel.rforest import RandomForest

        rng = np.random.default_rng(5)
        X = rng.standard_normal((240, 8))
        y = rng.integers(0, 3, 240)  # labels independent of features
        cut = 180
        forest = RandomForest(n_trees=25, seed=1).fit(X[:cut], y[:cut])
        acc = forest.accuracy(X[cut:], y[cut:])
        assert abs(acc - 1 / 3) < 0.15

    def test_blend_table_degenerate_classifier(self):
        from .test_cvae import tiny_model

        ds = build_dataset("blend", stride=64)
        from condlevel import cvae, nn
        from condlevel.labeling import BLEND_SCHEME

        cfg = cvae.CvaeConfig(latent_dim=4, label_len=3, vocab_size=len(ds.vocab),
                              hidden=(24, 16, 12))
        rng = np.random.default_rng(0)
        model = cvae.CvaeModel(cfg, BLEND_SCHEME, ds.vocab,
                               nn.mlp_from_dims(cfg.encoder_dims(), "identity", rng),
                               nn.mlp_from_dims(cfg.decoder_dims(), "identity", rng))

        class AlwaysSMB:
            def predict(self, X):
                return np.zeros(len(X), dtype=int)

        table = ev.blend_table(model, AlwaysSMB(), n_per_label=3, seed=0)
        assert len(table) == 8
        for row in table.values():
            assert row["SMB"] == 100.0 and row["KI"] == 0.0 and row["MM"] == 0.0
            assert sum(row.values()) == pytest.approx(100.0)

    def test_training_accuracy_ge_test_on_average(self):
        from condlevel.rforest import RandomForest

        rng = np.random.default_rng(11)
        diffs = []
        for seed in range(3):
            X = rng.standard_normal((150, 6))
            w = rng.standard_normal(6)
            y = ((X @ w + 0.8 * rng.standard_normal(150)) > 0).astype(int)
            forest = RandomForest(n_trees=20, seed=seed).fit(X[:100], y[:100])
            diffs.append(forest.accuracy(X[:100], y[:100]) -
                         forest.accuracy(X[100:], y[100:]))
        assert np.mean(diffs) >= 0


class TestEdistReport:
    def test_self_distance_baseline_rows(self):
        ds = build_dataset("blend", stride=32)
        from condlevel import cvae, nn
        from condlevel.labeling import BLEND_SCHEME

        cfg = cvae.CvaeConfig(latent_dim=4, label_len=3, vocab_size=len(ds.vocab),
                              hidden=(24, 16, 12))
        rng = np.random.default_rng(0)
        model = cvae.CvaeModel(cfg, BLEND_SCHEME, ds.vocab,
                               nn.mlp_from_dims(cfg.encoder_dims(), "identity", rng),
                               nn.mlp_from_dims(cfg.decoder_dims(), "identity", rng))
        feats = {}
        for game in ("SMB", "KI", "MM"):
            idx = [i for i, p in enumerate(ds.provenance) if p.game == game][:30]
            feats[game] = ev.features_from_tiles(ds.tiles[idx], ds.vocab)
        table = ev.edist_report(model, feats, n_per_label=4, seed=0)
        assert len(table) == 8 + 3
        for game in ("SMB", "KI", "MM"):
            assert table[f"train:{game}"][game] == pytest.approx(0.0, abs=1e-9)

    def test_jobs_parallel_report_matches_serial(self):
        ds = build_dataset("blend", stride=48)
        from condlevel import cvae, nn
        from condlevel.labeling import BLEND_SCHEME

        cfg = cvae.CvaeConfig(latent_dim=4, label_len=3, vocab_size=len(ds.vocab),
                              hidden=(16, 12, 10))
        rng = np.random.default_rng(2)
        model = cvae.CvaeModel(cfg, BLEND_SCHEME, ds.vocab,
                               nn.mlp_from_dims(cfg.encoder_dims(), "identity", rng),
                               nn.mlp_from_dims(cfg.decoder_dims(), "identity", rng))
        feats = {g: ev.features_from_tiles(ds.tiles[:20], ds.vocab)
                 for g in ("SMB", "KI", "MM")}
        serial = ev.edist_report(model, feats, n_per_label=3, seed=1, jobs=1)
        parallel = ev.edist_report(model, feats, n_per_label=3, seed=1, jobs=4)
        assert serial == parallel
