"""Desk-scale reference trainings shared by the acceptance suite.

Training the two models the acceptance criteria exercise takes on the order
of an hour each on one CPU core, so trained checkpoints are cached under
.acceptance_cache/ keyed by their recipe. Training is deterministic, so a
cached checkpoint is byte-identical to a fresh retrain with the same recipe;
delete the directory (or set CONDLEVEL_ACCEPT_FRESH=1) to force cold runs.

Run `python3 tests/_desk_models.py smb|blend|all` to warm the cache outside
pytest.
"""

from __future__ import annotations

import os
import sys
import time
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

# Desk-scale recipes: full SMB corpus for >=1000 epochs; the blend model
# trains the same number of epochs on a balanced per-game subsample.
SMB_RECIPE = {
    "dataset": "smb",
    "latent_dim": 32,
    "epochs": 1000,
    "seed": 7,
    "subsample_per_class": None,
    "subsample_seed": 7,
}
BLEND_RECIPE = {
    "dataset": "blend",
    "latent_dim": 32,
    "epochs": 1000,
    "seed": 7,
    "subsample_per_class": 512,
    "subsample_seed": 7,
}


def cache_dir() -> Path:
    d = Path(os.environ.get("CONDLEVEL_ACCEPT_CACHE", REPO_ROOT / ".acceptance_cache"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def checkpoint_path(recipe: dict) -> Path:
    sub = (
        f"sub{recipe['subsample_per_class']}" if recipe["subsample_per_class"] else "full"
    )
    name = (
        f"{recipe['dataset']}{recipe['latent_dim']}_{sub}"
        f"_e{recipe['epochs']}_s{recipe['seed']}.ckpt"
    )
    return cache_dir() / name


def build_recipe_dataset(recipe: dict):
    from condlevel.datasets import build_dataset

    ds = build_dataset(recipe["dataset"])
    if recipe["subsample_per_class"]:
        ds = ds.subsample(per_class=recipe["subsample_per_class"],
                          seed=recipe["subsample_seed"])
    return ds


def train_or_load(recipe: dict):
    """Return (model, train_meta); trains and caches on a cold cache."""
    from condlevel import cvae

    path = checkpoint_path(recipe)
    fresh = os.environ.get("CONDLEVEL_ACCEPT_FRESH") == "1"
    if path.exists() and not fresh:
        model, meta = cvae.load_checkpoint(path)
        return model, meta

    ds = build_recipe_dataset(recipe)
    cfg = cvae.preset_train_config(ds.scheme.id, epochs=recipe["epochs"],
                                   seed=recipe["seed"])
    t0 = time.time()
    model, history = cvae.train(ds, cfg, latent_dim=recipe["latent_dim"])
    meta = {
        "recipe": recipe,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
        "kl_weight": cfg.kl_weight,
        "schedule": {
            "base_lr": cfg.schedule.base_lr,
            "decay_factor": cfg.schedule.decay_factor,
            "decay_every": cfg.schedule.decay_every,
        },
        "dataset_size": len(ds),
        "final_recon": history[-1]["recon"] if history else None,
        "final_kl": history[-1]["kl"] if history else None,
        "train_seconds": round(time.time() - t0, 1),
    }
    cvae.save_checkpoint(model, path, meta)
    log_path = path.with_suffix(".log")
    with open(log_path, "w") as f:
        for h in history:
            f.write(f"{h['epoch']},{h['lr']},{h['recon']},{h['kl']}\n")
    return model, meta


def main() -> None:
    sys.path.insert(0, str(REPO_ROOT / "src"))
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    recipes = {"smb": [SMB_RECIPE], "blend": [BLEND_RECIPE],
               "all": [SMB_RECIPE, BLEND_RECIPE]}[which]
    for recipe in recipes:
        path = checkpoint_path(recipe)
        t0 = time.time()
        train_or_load(recipe)
        print(f"{path.name}: ready ({time.time() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
