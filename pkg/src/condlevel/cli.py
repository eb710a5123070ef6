"""Command-line entry point: dataset builds, training, generation, editing,
evaluation reports, and the HTTP service.

Every command is deterministic given its flags and seed; outputs land in a
run directory with a manifest listing artifact hashes. Exit codes: 0 ok,
1 runtime failure, 2 usage or configuration problem.
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import yaml

from . import cvae
from .datasets import DATASET_IDS, Dataset, build_dataset, default_corpus_root
from .errors import CondlevelError, ConfigError
from .generate import (
    read_segment_file,
    relabel_segment,
    sample_conditioned,
    segment_file_text,
)
from .labeling import Label, label_to_int
from .tilemaps import GAMES, load_default_tilemap, load_tilemap

log = logging.getLogger("condlevel")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    data = yaml.safe_load(p.read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file must be a mapping: {p}")
    return data


def _tilemaps_from_config(cfg: dict) -> dict:
    out = {}
    for game, path in (cfg.get("tilemaps") or {}).items():
        if game not in GAMES:
            raise ConfigError(f"config tilemaps: unknown game {game!r}")
        out[game] = load_tilemap(path)
    return out


def _corpus_root(cfg: dict, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    if cfg.get("corpus"):
        return Path(cfg["corpus"])
    return default_corpus_root()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, params: dict) -> None:
    artifacts = {
        p.name: _sha256(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {"command": command, "params": params, "artifacts": artifacts}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _run_dir(out: str | None, command: str) -> Path:
    d = Path(out) if out else Path("runs") / command
    d.mkdir(parents=True, exist_ok=True)
    return d


@click.group()
@click.option("--config", "config_path", type=str, default=None,
              help="YAML config pinning corpus path, tile maps and presets.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, config_path, verbose):
    """Conditional VAE toolkit for platformer level segments."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = _load_config(config_path)


@main.command("build-dataset")
@click.option("--game", "dataset_id", required=True,
              type=click.Choice(DATASET_IDS), help="Dataset to build.")
@click.option("--stride", type=int, default=None,
              help="Sliding-window stride (defaults: 1, or 16 for patterns).")
@click.option("--corpus", type=str, default=None, help="Corpus root directory.")
@click.option("--overrides", type=str, default=None,
              help="Manual pattern-label override file (patterns only).")
@click.option("--out", type=str, default=None, help="Output dataset file (.clds).")
@click.pass_obj
def cmd_build_dataset(cfg, dataset_id, stride, corpus, overrides, out):
    """Build a dataset from the level corpus and report its size."""
    ds = build_dataset(
        dataset_id,
        corpus_root=_corpus_root(cfg, corpus),
        stride=stride,
        tilemaps=_tilemaps_from_config(cfg),
        overrides_path=overrides,
    )
    click.echo(f"{len(ds)} segments")
    for game, count in sorted(ds.counts_by_game().items()):
        click.echo(f"  {game}: {count}")
    if out:
        ds.save(out)
        click.echo(f"wrote {out}")


@main.command("train")
@click.option("--dataset", "dataset_path", required=True, type=str)
@click.option("--latent", type=click.Choice(["32", "64", "128"]), default="32")
@click.option("--epochs", type=int, default=None,
              help="Defaults to the published schedule for the dataset's scheme.")
@click.option("--seed", type=int, default=0)
@click.option("--batch-size", type=int, default=64)
@click.option("--kl-weight", type=float, default=1.0)
@click.option("--subsample", type=int, default=None, help="Train on N random segments.")
@click.option("--subsample-per-class", type=int, default=None,
              help="Train on N random segments per exact label row.")
@click.option("--out", type=str, default=None, help="Run directory.")
@click.pass_obj
def cmd_train(cfg, dataset_path, latent, epochs, seed, batch_size, kl_weight,
              subsample, subsample_per_class, out):
    """Train a CVAE and write a checkpoint plus the training log."""
    ds = Dataset.load(dataset_path)
    if subsample_per_class or subsample:
        ds = ds.subsample(n=subsample, per_class=subsample_per_class, seed=seed)
        click.echo(f"subsampled to {len(ds)} segments")
    train_cfg = cvae.preset_train_config(ds.scheme.id, epochs=epochs, seed=seed)
    train_cfg.batch_size = batch_size
    train_cfg.kl_weight = kl_weight
    out_dir = _run_dir(out, "train")
    log_file = open(out_dir / "train_log.csv", "w")
    log_file.write("epoch,lr,recon,kl\n")

    def on_epoch(h):
        log_file.write(f"{h['epoch']},{h['lr']},{h['recon']},{h['kl']}\n")

    model, history = cvae.train(ds, train_cfg, latent_dim=int(latent),
                                epoch_callback=on_epoch)
    log_file.close()
    meta = {
        "dataset": str(dataset_path),
        "dataset_size": len(ds),
        "epochs": train_cfg.epochs,
        "batch_size": train_cfg.batch_size,
        "kl_weight": train_cfg.kl_weight,
        "seed": seed,
        "final_recon": history[-1]["recon"] if history else None,
        "final_kl": history[-1]["kl"] if history else None,
    }
    cvae.save_checkpoint(model, out_dir / "model.ckpt", meta)
    from .plots import training_curve

    if history:
        training_curve(history, out_dir / "training_curve.png")
    _write_manifest(out_dir, "train", {
        "dataset": str(dataset_path), "latent": int(latent),
        "epochs": train_cfg.epochs, "seed": seed, "batch_size": batch_size,
        "kl_weight": kl_weight, "subsample": subsample,
        "subsample_per_class": subsample_per_class,
    })
    click.echo(f"checkpoint: {out_dir / 'model.ckpt'}")


def _load_model(path: str):
    model, meta = cvae.load_checkpoint(path)
    return model, meta


def _parse_label(bits: str, model) -> Label:
    if len(bits) != model.scheme.length or not set(bits) <= {"0", "1"}:
        raise click.UsageError(
            f"label must be {model.scheme.length} binary digits for scheme "
            f"{model.scheme.id}, got {bits!r}"
        )
    return Label.from_string(bits, model.scheme)


@main.command("generate")
@click.option("--checkpoint", required=True, type=str)
@click.option("--label", "label_bits", required=True, type=str,
              help="Conditioning label as a bitstring, e.g. 10011.")
@click.option("--count", type=int, default=8)
@click.option("--seed", type=int, default=0)
@click.option("--png", is_flag=True, help="Also render a contact sheet.")
@click.option("--out", type=str, default=None, help="Run directory.")
def cmd_generate(checkpoint, label_bits, count, seed, png, out):
    """Sample segments conditioned on a label."""
    model, _ = _load_model(checkpoint)
    label = _parse_label(label_bits, model)
    segments = sample_conditioned(model, label, count, seed=seed)
    out_dir = _run_dir(out, "generate")
    for i, seg in enumerate(segments):
        (out_dir / f"segment-{i:03d}.txt").write_text(
            segment_file_text(seg, label, seed, i)
        )
    if png and segments:
        from .plots import segment_sheet

        segment_sheet(segments, model.vocab, out_dir / "sheet.png",
                      titles=[f"#{i}" for i in range(len(segments))])
    _write_manifest(out_dir, "generate", {
        "checkpoint": checkpoint, "label": label_bits, "count": count, "seed": seed,
    })
    click.echo(f"{len(segments)} segments -> {out_dir}")


@main.command("relabel")
@click.option("--checkpoint", required=True, type=str)
@click.option("--in", "in_path", required=True, type=str,
              help="Segment file (16 lines, # comments allowed).")
@click.option("--target-label", required=True, type=str)
@click.option("--source-label", type=str, default=None,
              help="Label used on the encoder side; defaults to the segment's own "
                   "derived element label, or the target label otherwise.")
@click.option("--mode", type=click.Choice(["mean", "sampled"]), default="mean")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=str, default=None, help="Output file (stdout if omitted).")
def cmd_relabel(checkpoint, in_path, target_label, source_label, mode, seed, out):
    """Re-decode an existing segment under a new conditioning label."""
    model, _ = _load_model(checkpoint)
    segment = read_segment_file(in_path, model.vocab)
    target = _parse_label(target_label, model)
    if source_label is not None:
        source = _parse_label(source_label, model)
    elif model.scheme.id.startswith("elements-"):
        from .labeling import element_label

        tilemap = load_default_tilemap(model.scheme.id.split("-")[1].upper())
        source = element_label(segment, tilemap)
    else:
        source = target
    edited = relabel_segment(model, segment, source, target, mode=mode, seed=seed)
    text = segment_file_text(edited, target, seed)
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command("evaluate")
@click.option("--checkpoint", required=True, type=str)
@click.option("--suite", required=True, type=click.Choice(["elements", "blend", "edist"]))
@click.option("--dataset", "dataset_path", required=True, type=str,
              help="Training dataset file matching the checkpoint's scheme "
                   "(blend dataset for blend/edist suites).")
@click.option("-n", "--n-per-label", type=int, default=1000)
@click.option("--trees", type=int, default=100, help="Random forest size (blend suite).")
@click.option("--seed", type=int, default=0)
@click.option("--jobs", type=int, default=1, help="Worker threads across labels.")
@click.option("--out", type=str, default=None, help="Run directory.")
def cmd_evaluate(checkpoint, suite, dataset_path, n_per_label, trees, seed, jobs, out):
    """Run an evaluation suite; writes tables, CSV records and figures."""
    from . import evaluate as ev
    from . import plots

    model, _ = _load_model(checkpoint)
    dataset = Dataset.load(dataset_path)
    out_dir = _run_dir(out, f"evaluate-{suite}")
    lines: list[str] = []

    if suite == "elements":
        if dataset.scheme.id != model.scheme.id:
            raise ConfigError(
                f"dataset scheme {dataset.scheme.id} != model scheme {model.scheme.id}"
            )
        game = model.scheme.id.split("-")[1].upper()
        tilemap = load_default_tilemap(game)
        freq = ev.label_frequency(dataset)
        reports = {
            "random": ev.match_metrics(model, tilemap, n_per_label, seed,
                                       source="random", dataset=dataset, jobs=jobs),
            "training": ev.match_metrics(model, tilemap, n_per_label, seed,
                                         source="training", dataset=dataset, jobs=jobs),
        }
        with open(out_dir / "records.csv", "w") as f:
            f.write("source,label,label_int,n,exact_pct,none_pct,train_count\n")
            for source, report in sorted(reports.items()):
                for r in report.rows:
                    f.write(f"{source},{r.label},{r.label_int},{r.n},"
                            f"{r.exact_pct:.4f},{r.none_pct:.4f},{r.train_count}\n")
        for source, report in sorted(reports.items()):
            lines.append(f"[{source}] avg exact {report.avg_exact:.1f}%  "
                         f"avg none {report.avg_none:.1f}%  "
                         f"(excl. all-zero label: {report.avg_none_excl_zero:.1f}%)")
        plots.match_figure(reports, freq, out_dir / "match_rates.png")

    elif suite == "blend":
        classifier, accuracy = ev.train_rf_classifier(dataset, trees=trees, seed=seed)
        lines.append(f"classifier held-out accuracy: {accuracy * 100:.2f}%")
        table = ev.blend_table(model, classifier, n_per_label, seed, jobs=jobs)
        with open(out_dir / "records.csv", "w") as f:
            f.write("label,SMB,KI,MM\n")
            for lab in sorted(table):
                row = table[lab]
                f.write(f"{lab},{row['SMB']:.4f},{row['KI']:.4f},{row['MM']:.4f}\n")
        lines.append(f"{'label':>6}  {'SMB':>6} {'KI':>6} {'MM':>6}")
        for lab in sorted(table):
            row = table[lab]
            lines.append(f"{lab:>6}  {row['SMB']:6.1f} {row['KI']:6.1f} {row['MM']:6.1f}")
        plots.blend_figure(table, out_dir / "blend_table.png")

    else:  # edist
        feats = {}
        for game in ("SMB", "KI", "MM"):
            idx = [i for i, p in enumerate(dataset.provenance) if p.game == game]
            # drop duplicated KI rows for the training distribution
            uniq: list[int] = []
            seen = set()
            for i in idx:
                key = (dataset.provenance[i].level_id, dataset.provenance[i].offset)
                if key not in seen:
                    seen.add(key)
                    uniq.append(i)
            feats[game] = ev.features_from_tiles(dataset.tiles[uniq], dataset.vocab)
        table = ev.edist_report(model, feats, n_per_label, seed, jobs=jobs)
        with open(out_dir / "records.csv", "w") as f:
            f.write("label,vs_SMB,vs_KI,vs_MM\n")
            for lab in sorted(table):
                row = table[lab]
                f.write(f"{lab},{row['SMB']:.6f},{row['KI']:.6f},{row['MM']:.6f}\n")
        lines.append(f"{'label':>10}  {'vs SMB':>8} {'vs KI':>8} {'vs MM':>8}")
        for lab in sorted(table):
            row = table[lab]
            lines.append(f"{lab:>10}  {row['SMB']:8.4f} {row['KI']:8.4f} {row['MM']:8.4f}")
        plots.edist_figure(table, out_dir / "edist.png")

    report_text = "\n".join(lines) + "\n"
    (out_dir / "report.txt").write_text(report_text)
    click.echo(report_text, nl=False)
    _write_manifest(out_dir, f"evaluate-{suite}", {
        "checkpoint": checkpoint, "dataset": dataset_path, "suite": suite,
        "n_per_label": n_per_label, "seed": seed, "trees": trees,
    })
    click.echo(f"report -> {out_dir}")


@main.command("serve")
@click.option("--models-dir", required=True, type=str)
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--cors", is_flag=True, help="Allow cross-origin requests (for the UI).")
def cmd_serve(models_dir, host, port, cors):
    """Serve the JSON API over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(Path(models_dir), cors=cors)
    uvicorn.run(app, host=host, port=port, log_level="info")


def entrypoint(argv: list[str] | None = None) -> int:
    """main() wrapped with the toolkit's exit-code policy."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except (click.UsageError, ConfigError) as e:
        click.echo(f"error: {e}", err=True)
        return 2
    except CondlevelError as e:
        click.echo(f"error: {e}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(entrypoint())
