import pytest
from fastapi.testclient import TestClient

from condlevel import cvae
from condlevel.datasets import build_dataset
from condlevel.service import create_app

from .conftest import empty_rows


@pytest.fixture(scope="module")
def smb_model():
    ds = build_dataset("smb", stride=64).subsample(n=16, seed=2)
    cfg = cvae.TrainConfig(epochs=2, seed=1, batch_size=8)
    model, _ = cvae.train(ds, cfg, latent_dim=32, hidden=(64, 48, 32))
    return model


@pytest.fixture()
def models_dir(tmp_path, smb_model):
    cvae.save_checkpoint(smb_model, tmp_path / "smb32.ckpt", {"note": "test"})
    return tmp_path


@pytest.fixture()
def client(models_dir):
    return TestClient(create_app(models_dir))


class TestModels:
    def test_empty_dir_lists_nothing(self, tmp_path):
        client = TestClient(create_app(tmp_path))
        body = client.get("/api/models").json()
        assert body["models"] == []

    def test_lists_checkpoints(self, models_dir, smb_model):
        cvae.save_checkpoint(smb_model, models_dir / "second.ckpt")
        client = TestClient(create_app(models_dir))
        body = client.get("/api/models").json()
        ids = [m["id"] for m in body["models"]]
        assert ids == ["second", "smb32"]
        entry = body["models"][0]
        assert entry["scheme"] == "elements-smb"
        assert entry["latent_dim"] == 32
        assert entry["bit_names"] == ["Enemy", "Pipe", "Coin", "Breakable", "Question Mark"]
        assert any(t["char"] == "X" for t in entry["vocab"]["tiles"])

    def test_malformed_checkpoint_excluded_with_warning(self, models_dir):
        (models_dir / "broken.ckpt").write_bytes(b"garbage")
        client = TestClient(create_app(models_dir))
        body = client.get("/api/models").json()
        assert [m["id"] for m in body["models"]] == ["smb32"]
        assert any("broken.ckpt" in w for w in body["warnings"])

    def test_reload_picks_up_new_checkpoint(self, models_dir, smb_model, client):
        assert len(client.get("/api/models").json()["models"]) == 1
        cvae.save_checkpoint(smb_model, models_dir / "later.ckpt")
        reload_body = client.post("/api/admin/reload").json()
        assert "later" in reload_body["models"]
        assert len(client.get("/api/models").json()["models"]) == 2


class TestGenerate:
    def test_generates_text_grids(self, client):
        body = client.post("/api/generate", json={
            "model_id": "smb32", "label": "10011", "count": 3, "seed": 9,
        }).json()
        assert len(body["segments"]) == 3
        assert body["seed"] == 9
        lines = body["segments"][0].splitlines()
        assert len(lines) == 16 and all(len(l) == 16 for l in lines)

    def test_wrong_label_length_400(self, client):
        resp = client.post("/api/generate", json={
            "model_id": "smb32", "label": "101", "count": 1,
        })
        assert resp.status_code == 400
        assert "length" in resp.json()["detail"]

    def test_count_zero_ok(self, client):
        resp = client.post("/api/generate", json={
            "model_id": "smb32", "label": "00000", "count": 0, "seed": 1,
        })
        assert resp.status_code == 200
        assert resp.json()["segments"] == []

    def test_count_cap_400(self, client):
        resp = client.post("/api/generate", json={
            "model_id": "smb32", "label": "00000", "count": 65,
        })
        assert resp.status_code == 400

    def test_unknown_model_404(self, client):
        resp = client.post("/api/generate", json={
            "model_id": "nope", "label": "00000", "count": 1,
        })
        assert resp.status_code == 404

    def test_seed_reproducible(self, client):
        payload = {"model_id": "smb32", "label": "01000", "count": 2, "seed": 77}
        a = client.post("/api/generate", json=payload).json()
        b = client.post("/api/generate", json=payload).json()
        assert a == b

    def test_seed_echoed_when_omitted(self, client):
        body = client.post("/api/generate", json={
            "model_id": "smb32", "label": "00000", "count": 1,
        }).json()
        assert isinstance(body["seed"], int)


class TestRelabel:
    def test_mode_defaults_to_mean(self, client, smb_model):
        seg_text = "\n".join(["-" * 16] * 15 + ["X" * 16]) + "\n"
        payload = {"model_id": "smb32", "segment": seg_text, "target_label": "00000"}
        a = client.post("/api/relabel", json=payload).json()
        b = client.post("/api/relabel", json=payload).json()
        assert a["segment"] == b["segment"]  # mean mode: deterministic
        assert a["source_label"] == "00000"  # derived from the segment itself

    def test_invalid_tile_400(self, client):
        seg_text = "\n".join(["~" * 16] * 16)
        resp = client.post("/api/relabel", json={
            "model_id": "smb32", "segment": seg_text, "target_label": "00000",
        })
        assert resp.status_code == 400
        assert "unknown tile" in resp.json()["detail"]

    def test_bad_mode_400(self, client):
        seg_text = "\n".join(["-" * 16] * 16)
        resp = client.post("/api/relabel", json={
            "model_id": "smb32", "segment": seg_text,
            "target_label": "00000", "mode": "extreme",
        })
        assert resp.status_code == 400


class TestLabelEndpoint:
    def test_all_empty_smb(self, client):
        seg_text = "\n".join(["-" * 16] * 16)
        body = client.post("/api/label", json={"game": "SMB", "segment": seg_text}).json()
        assert body["label"] == "00000"

    def test_smb_figure_example(self, client, smb_tilemap):
        rows = empty_rows(smb_tilemap.vocab, {(5, 5): "E", (6, 6): "S", (7, 7): "?"})
        body = client.post("/api/label", json={
            "game": "SMB", "segment": "\n".join(rows),
        }).json()
        assert body["label"] == "10011"

    def test_ki_four_bits(self, client, ki_tilemap):
        rows = empty_rows(ki_tilemap.vocab, {(4, 4): "H", (6, 2): "D", (9, 9): "T"})
        body = client.post("/api/label", json={
            "game": "KI", "segment": "\n".join(rows),
        }).json()
        assert body["label"] == "1101"
        assert len(body["label"]) == 4

    def test_unknown_game_400(self, client):
        resp = client.post("/api/label", json={"game": "POKEMON", "segment": "-"})
        assert resp.status_code == 400

    def test_cells_endpoint(self, client, smb_tilemap):
        rows = empty_rows(smb_tilemap.vocab, {(3, 4): "E"})
        body = client.post("/api/cells", json={
            "game": "SMB", "segment": "\n".join(rows),
        }).json()
        assert body["cells"][3][4]["name"] == "enemy"
        assert "hazard" in body["cells"][3][4]["tags"]
