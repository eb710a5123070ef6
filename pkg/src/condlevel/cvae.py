"""Conditional VAE over one-hot segment tensors with binary label conditioning.

Encoder and decoder are 4-layer fully-connected relu networks. The input
one-hot vector is concatenated with its label before encoding; the same
label is concatenated with the latent vector before decoding. The loss is
per-tile-position categorical cross-entropy plus the Gaussian KL to the
N(0, I) prior; gradients flow through the sampling step via the
reparameterization z = mu + exp(0.5*logvar) * eps.

Checkpoints are a versioned binary: magic, version, JSON header (scheme,
vocab, architecture, training metadata), then all parameters as 64-bit
little-endian floats. Saving and loading round-trips bit-exactly.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import nn
from .corpus import one_hot_batch
from .datasets import Dataset
from .errors import (
    CorruptCheckpointError,
    NonFiniteLossError,
    ShapeMismatchError,
    VersionMismatchError,
    VocabMismatchError,
)
from .labeling import LabelScheme
from .tilemaps import TileVocab

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"CLCK"
CHECKPOINT_VERSION = 1

LATENT_DIMS = (32, 64, 128)
DEFAULT_HIDDEN = (512, 256, 128)


@dataclass(frozen=True)
class CvaeConfig:
    latent_dim: int
    label_len: int
    vocab_size: int
    positions: int = 256                       # tiles per segment (16x16)
    hidden: tuple[int, ...] = DEFAULT_HIDDEN   # encoder funnel; decoder mirrors it

    @property
    def input_dim(self) -> int:
        return self.positions * self.vocab_size

    def encoder_dims(self) -> list[int]:
        return [self.input_dim + self.label_len, *self.hidden, 2 * self.latent_dim]

    def decoder_dims(self) -> list[int]:
        return [self.latent_dim + self.label_len, *reversed(self.hidden), self.input_dim]


@dataclass
class TrainConfig:
    epochs: int
    schedule: nn.LrSchedule = field(default_factory=nn.LrSchedule)
    batch_size: int = 64
    seed: int = 0
    kl_weight: float = 1.0


def preset_train_config(scheme_id: str, epochs: int | None = None,
                        seed: int = 0) -> TrainConfig:
    """Published schedules: 10000 epochs / decay every 2500, except design
    patterns which train 5000 epochs with decay every 1250."""
    if scheme_id == "patterns-smb":
        return TrainConfig(
            epochs=5000 if epochs is None else epochs,
            schedule=nn.LrSchedule(base_lr=1e-3, decay_factor=0.1, decay_every=1250),
            seed=seed,
        )
    return TrainConfig(
        epochs=10000 if epochs is None else epochs,
        schedule=nn.LrSchedule(base_lr=1e-3, decay_factor=0.1, decay_every=2500),
        seed=seed,
    )


class CvaeModel:
    """Immutable after training; share freely across threads."""

    def __init__(self, config: CvaeConfig, scheme: LabelScheme, vocab: TileVocab,
                 encoder: nn.Mlp, decoder: nn.Mlp):
        if encoder.in_dim != config.input_dim + config.label_len:
            raise ShapeMismatchError("encoder input dim does not match config")
        if encoder.out_dim != 2 * config.latent_dim:
            raise ShapeMismatchError("encoder must emit mu and logvar")
        if decoder.in_dim != config.latent_dim + config.label_len:
            raise ShapeMismatchError("decoder input dim does not match config")
        if decoder.out_dim != config.input_dim:
            raise ShapeMismatchError("decoder output dim does not match config")
        if scheme.length != config.label_len:
            raise ShapeMismatchError("scheme length does not match config label_len")
        self.config = config
        self.scheme = scheme
        self.vocab = vocab
        self.encoder = encoder
        self.decoder = decoder

    @classmethod
    def init(cls, config: CvaeConfig, scheme: LabelScheme, vocab: TileVocab,
             seed: int = 0) -> "CvaeModel":
        rng = np.random.default_rng(seed)
        encoder = nn.mlp_from_dims(config.encoder_dims(), "identity", rng)
        decoder = nn.mlp_from_dims(config.decoder_dims(), "identity", rng)
        return cls(config, scheme, vocab, encoder, decoder)

    # --- forward paths ---

    def _join(self, x: np.ndarray, c: np.ndarray, dim: int) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        c = np.atleast_2d(np.asarray(c, dtype=np.float64))
        if c.shape[0] == 1 and x.shape[0] > 1:
            c = np.repeat(c, x.shape[0], axis=0)
        if x.shape[1] != dim or c.shape[1] != self.config.label_len:
            raise ShapeMismatchError(
                f"expected ({dim} + {self.config.label_len}) inputs, "
                f"got {x.shape[1]} + {c.shape[1]}"
            )
        return np.concatenate([x, c], axis=1)

    def encode(self, x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        squeeze = np.asarray(x).ndim == 1
        out = self.encoder.forward(self._join(x, c, self.config.input_dim))
        mu, logvar = out[:, :self.config.latent_dim], out[:, self.config.latent_dim:]
        return (mu[0], logvar[0]) if squeeze else (mu, logvar)

    def decode(self, z: np.ndarray, c: np.ndarray) -> np.ndarray:
        squeeze = np.asarray(z).ndim == 1
        logits = self.decoder.forward(self._join(z, c, self.config.latent_dim))
        return logits[0] if squeeze else logits

    def parameters(self) -> list[np.ndarray]:
        return self.encoder.parameters() + self.decoder.parameters()


def reparameterize(mu: np.ndarray, logvar: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """z = mu + exp(0.5*logvar) * eps with eps ~ N(0, I) drawn from rng."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape:
        raise ShapeMismatchError(f"mu {mu.shape} vs logvar {logvar.shape}")
    eps = rng.standard_normal(mu.shape)
    return mu + np.exp(0.5 * logvar) * eps


def elbo_loss(x: np.ndarray, logits: np.ndarray, mu: np.ndarray, logvar: np.ndarray,
              kl_weight: float = 1.0, vocab_size: int | None = None):
    """(recon, kl, total), averaged over the batch.

    recon: softmax cross-entropy per tile position, summed over positions.
    kl:    -0.5 * sum(1 + logvar - mu^2 - exp(logvar)) against N(0, I).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    mu = np.atleast_2d(mu)
    logvar = np.atleast_2d(logvar)
    if vocab_size is None:
        raise ShapeMismatchError("vocab_size is required to shape tile channels")
    b = x.shape[0]
    lg = logits.reshape(b, -1, vocab_size)
    xt = x.reshape(b, -1, vocab_size)
    with np.errstate(invalid="ignore", over="ignore"):
        m = lg.max(axis=2, keepdims=True)
        logsumexp = m[..., 0] + np.log(np.exp(lg - m).sum(axis=2))
        picked = (lg * xt).sum(axis=2)
        recon = (logsumexp - picked).sum(axis=1)
        kl = -0.5 * (1.0 + logvar - mu ** 2 - np.exp(logvar)).sum(axis=1)
        total = recon + kl_weight * kl
    if not np.all(np.isfinite(total)):
        raise NonFiniteLossError("ELBO loss is not finite")
    return float(recon.mean()), float(kl.mean()), float(total.mean())


def loss_and_grads(model: CvaeModel, x: np.ndarray, c: np.ndarray, eps: np.ndarray,
                   kl_weight: float = 1.0):
    """One forward/backward pass with frozen noise.

    Returns (recon, kl, total, grads) where grads matches model.parameters().
    The pathwise derivative flows through z = mu + exp(0.5*logvar) * eps.
    """
    cfg = model.config
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
    b = x.shape[0]

    enc_cache: list = []
    enc_out = model.encoder.forward(np.concatenate([x, c], axis=1), enc_cache)
    mu, logvar = enc_out[:, :cfg.latent_dim], enc_out[:, cfg.latent_dim:]
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eps

    dec_cache: list = []
    logits = model.decoder.forward(np.concatenate([z, c], axis=1), dec_cache)

    recon, kl, total = elbo_loss(x, logits, mu, logvar, kl_weight, cfg.vocab_size)

    # d total / d logits = (softmax - x) / batch
    lg = logits.reshape(b, -1, cfg.vocab_size)
    m = lg.max(axis=2, keepdims=True)
    e = np.exp(lg - m)
    softmax = e / e.sum(axis=2, keepdims=True)
    dlogits = (softmax - x.reshape(b, -1, cfg.vocab_size)).reshape(b, -1) / b

    dec_grads, d_dec_in = model.decoder.backward(dec_cache, dlogits)
    dz = d_dec_in[:, :cfg.latent_dim]

    dmu = dz + kl_weight * mu / b
    dlogvar = dz * eps * 0.5 * sigma + kl_weight * 0.5 * (np.exp(logvar) - 1.0) / b
    enc_grads, _ = model.encoder.backward(
        enc_cache, np.concatenate([dmu, dlogvar], axis=1), need_input_grad=False
    )

    flat = [g for pair in enc_grads for g in pair] + [g for pair in dec_grads for g in pair]
    return recon, kl, total, flat


def train(dataset: Dataset, train_cfg: TrainConfig, latent_dim: int = 32,
          hidden: tuple[int, ...] = DEFAULT_HIDDEN,
          epoch_callback: Optional[Callable[[dict], None]] = None) -> tuple["CvaeModel", list[dict]]:
    """Train a CVAE on a dataset; deterministic for a given config.

    Runs epochs * ceil(N / batch) Adam steps. Returns the model and the
    per-epoch history (epoch, lr, recon, kl).
    """
    if len(dataset) == 0:
        raise ShapeMismatchError("dataset is empty")
    cfg = CvaeConfig(
        latent_dim=latent_dim,
        label_len=dataset.scheme.length,
        vocab_size=len(dataset.vocab),
        hidden=tuple(hidden),
    )
    rng = np.random.default_rng(train_cfg.seed)
    model = CvaeModel(
        cfg, dataset.scheme, dataset.vocab,
        nn.mlp_from_dims(cfg.encoder_dims(), "identity", rng),
        nn.mlp_from_dims(cfg.decoder_dims(), "identity", rng),
    )
    params = model.parameters()
    adam = nn.AdamState.for_params(params)
    labels = dataset.labels.astype(np.float64)
    n = len(dataset)
    history: list[dict] = []
    for epoch in range(train_cfg.epochs):
        lr = train_cfg.schedule.lr_at(epoch)
        order = rng.permutation(n)
        recon_sum = kl_sum = 0.0
        batches = 0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start:start + train_cfg.batch_size]
            x = one_hot_batch(dataset.tiles[idx], cfg.vocab_size)
            c = labels[idx]
            eps = rng.standard_normal((idx.size, cfg.latent_dim))
            recon, kl, total, grads = loss_and_grads(model, x, c, eps, train_cfg.kl_weight)
            if not np.isfinite(total):
                raise NonFiniteLossError(
                    f"epoch {epoch}: loss diverged (recon={recon}, kl={kl})"
                )
            nn.adam_step(params, grads, adam, lr)
            recon_sum += recon
            kl_sum += kl
            batches += 1
        entry = {
            "epoch": epoch,
            "lr": lr,
            "recon": recon_sum / batches,
            "kl": kl_sum / batches,
        }
        history.append(entry)
        if epoch_callback is not None:
            epoch_callback(entry)
        if epoch % 100 == 0 or epoch == train_cfg.epochs - 1:
            log.info("epoch %d lr %.2e recon %.2f kl %.2f",
                     epoch, lr, entry["recon"], entry["kl"])
    return model, history


# --- checkpoint persistence ---

def save_checkpoint(model: CvaeModel, path: str | Path,
                    train_meta: dict | None = None) -> None:
    layers = []
    for net_name, net in (("encoder", model.encoder), ("decoder", model.decoder)):
        for i, layer in enumerate(net.layers):
            layers.append({
                "net": net_name,
                "index": i,
                "w_shape": list(layer.weights.shape),
                "activation": layer.activation,
            })
    header = {
        "format_version": CHECKPOINT_VERSION,
        "scheme": {"id": model.scheme.id, "bit_names": list(model.scheme.bit_names)},
        "vocab": model.vocab.to_jsonable(),
        "vocab_hash": model.vocab.content_hash(),
        "config": {
            "latent_dim": model.config.latent_dim,
            "label_len": model.config.label_len,
            "vocab_size": model.config.vocab_size,
            "positions": model.config.positions,
            "hidden": list(model.config.hidden),
        },
        "layers": layers,
        "train": train_meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        f.write(blob)
        for p in model.parameters():
            f.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[CvaeModel, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != CHECKPOINT_MAGIC:
        raise CorruptCheckpointError(f"{path}: not a condlevel checkpoint")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"{path}: checkpoint version {version}, supported {CHECKPOINT_VERSION}"
        )
    if len(raw) < 12 + hlen:
        raise CorruptCheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12:12 + hlen])
    except json.JSONDecodeError as e:
        raise CorruptCheckpointError(f"{path}: bad header: {e}") from e
    vocab = TileVocab.from_jsonable(header["vocab"])
    if vocab.content_hash() != header["vocab_hash"]:
        raise VocabMismatchError(
            f"{path}: vocab hash {header['vocab_hash']} does not match embedded vocab"
        )
    cfg = CvaeConfig(
        latent_dim=header["config"]["latent_dim"],
        label_len=header["config"]["label_len"],
        vocab_size=header["config"]["vocab_size"],
        positions=header["config"]["positions"],
        hidden=tuple(header["config"]["hidden"]),
    )
    scheme = LabelScheme(header["scheme"]["id"], tuple(header["scheme"]["bit_names"]))
    body = raw[12 + hlen:]
    offset = 0
    nets: dict[str, list[nn.DenseLayer]] = {"encoder": [], "decoder": []}
    for entry in header["layers"]:
        out_dim, in_dim = entry["w_shape"]
        w_bytes = out_dim * in_dim * 8
        b_bytes = out_dim * 8
        if offset + w_bytes + b_bytes > len(body):
            raise CorruptCheckpointError(f"{path}: truncated parameter blob")
        w = np.frombuffer(body[offset:offset + w_bytes], dtype="<f8").reshape(out_dim, in_dim).copy()
        offset += w_bytes
        b = np.frombuffer(body[offset:offset + b_bytes], dtype="<f8").copy()
        offset += b_bytes
        nets[entry["net"]].append(nn.DenseLayer(w, b, entry["activation"]))
    if offset != len(body):
        raise CorruptCheckpointError(f"{path}: {len(body) - offset} trailing bytes")
    model = CvaeModel(cfg, scheme, vocab, nn.Mlp(nets["encoder"]), nn.Mlp(nets["decoder"]))
    return model, header.get("train", {})
