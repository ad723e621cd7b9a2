"""Ensemble of vector-quantized autoencoders.

Each level maps a two-frame observation to F codeword indices drawn from its
own codebook of N = 2**bits_per_feature entries (message length F*bits).
Training minimizes reconstruction MSE plus a commitment term; gradients
cross the quantizer by the straight-through copy and the codebook follows
exponential-moving-average cluster statistics.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from taskcomm import _kernels
from taskcomm.learnkit.nn import Conv2d, ConvTranspose2d, Linear, ReLU, mse_loss
from taskcomm.learnkit.optim import init_optimizer, optimizer_step
from taskcomm.learnkit.params import ParamSet
from taskcomm.learnkit.rng import generator
from taskcomm.metrics import PSNR_CEILING_DB, perplexity
from taskcomm.render import Frame, Observation, observation_array

log = logging.getLogger(__name__)

LAPLACE_EPS = 1e-5


@dataclass(frozen=True)
class CodecConfig:
    feature_count: int = 8
    codeword_dim: int = 16
    bits_levels: tuple = (1, 2, 3, 4, 5, 6)
    height: int = 48
    width: int = 96
    channels: tuple = (32, 64, 64)
    ema_decay: float = 0.99
    commitment: float = 0.25

    def __post_init__(self):
        if len(set(self.bits_levels)) != len(self.bits_levels):
            raise ValueError("duplicate codec levels in bits_levels")
        for b in self.bits_levels:
            if not 1 <= b <= 6:
                raise ValueError(f"bits per feature must lie in 1..6, got {b}")
        if self.height % 8 or self.width % 8:
            raise ValueError("frame dimensions must be divisible by 8 (three stride-2 stages)")


@dataclass
class Message:
    level_id: int
    indices: np.ndarray  # (F,) int64
    length_bits: int


@dataclass
class CodecTrainReport:
    bits_per_feature: int
    psnr_per_epoch: list = field(default_factory=list)
    perplexity_per_epoch: list = field(default_factory=list)
    usage_histogram: np.ndarray | None = None
    final_holdout_psnr: float = float("nan")
    wall_time_s: float = 0.0


@dataclass
class CodecLevel:
    level_id: int
    bits_per_feature: int
    feature_count: int
    codeword_dim: int
    height: int
    width: int
    channels: tuple
    params: ParamSet             # encoder.* / decoder.* entries
    codebook: np.ndarray         # (N, K) float32
    ema_cluster_size: np.ndarray  # (N,) float32
    ema_embed_sum: np.ndarray    # (N, K) float32

    @property
    def codebook_size(self) -> int:
        return 2 ** self.bits_per_feature

    @property
    def message_bits(self) -> int:
        return self.feature_count * self.bits_per_feature


class EncoderNet:
    def __init__(self, channels, feature_count, codeword_dim, height, width):
        c1, c2, c3 = channels
        self.conv1 = Conv2d("encoder.conv1", 2, c1)
        self.conv2 = Conv2d("encoder.conv2", c1, c2)
        self.conv3 = Conv2d("encoder.conv3", c2, c3)
        self.h8, self.w8 = height // 8, width // 8
        self.f = feature_count
        self.k = codeword_dim
        self.fc = Linear("encoder.fc", c3 * self.h8 * self.w8, feature_count * codeword_dim)

    def init(self, ps, rng):
        for layer in (self.conv1, self.conv2, self.conv3, self.fc):
            layer.init(ps, rng)

    def forward(self, ps, x):
        z, c1 = self.conv1.forward(ps, x)
        z, m1 = ReLU.forward(z)
        z, c2 = self.conv2.forward(ps, z)
        z, m2 = ReLU.forward(z)
        z, c3 = self.conv3.forward(ps, z)
        z, m3 = ReLU.forward(z)
        flat = z.reshape(z.shape[0], -1)
        lat, c4 = self.fc.forward(ps, flat)
        return lat.reshape(-1, self.f, self.k), (c1, m1, c2, m2, c3, m3, c4, z.shape)

    def backward(self, ps, caches, dlat, grads):
        c1, m1, c2, m2, c3, m3, c4, zshape = caches
        dz = self.fc.backward(ps, c4, dlat.reshape(dlat.shape[0], -1), grads)
        dz = dz.reshape(zshape)
        dz = ReLU.backward(m3, dz)
        dz = self.conv3.backward(ps, c3, dz, grads)
        dz = ReLU.backward(m2, dz)
        dz = self.conv2.backward(ps, c2, dz, grads)
        dz = ReLU.backward(m1, dz)
        return self.conv1.backward(ps, c1, dz, grads)


class DecoderNet:
    def __init__(self, channels, feature_count, codeword_dim, height, width):
        c1, c2, c3 = channels
        self.h8, self.w8 = height // 8, width // 8
        self.c3 = c3
        self.fc = Linear("decoder.fc", feature_count * codeword_dim, c3 * self.h8 * self.w8)
        self.deconv1 = ConvTranspose2d("decoder.deconv1", c3, c2)
        self.deconv2 = ConvTranspose2d("decoder.deconv2", c2, c1)
        self.deconv3 = ConvTranspose2d("decoder.deconv3", c1, 2)

    def init(self, ps, rng):
        for layer in (self.fc, self.deconv1, self.deconv2, self.deconv3):
            layer.init(ps, rng)

    def forward(self, ps, z):
        flat = z.reshape(z.shape[0], -1)
        y, c0 = self.fc.forward(ps, flat)
        y, m0 = ReLU.forward(y)
        y = y.reshape(-1, self.c3, self.h8, self.w8)
        y, c1 = self.deconv1.forward(ps, y)
        y, m1 = ReLU.forward(y)
        y, c2 = self.deconv2.forward(ps, y)
        y, m2 = ReLU.forward(y)
        y, c3 = self.deconv3.forward(ps, y)
        return y, (c0, m0, c1, m1, c2, m2, c3)

    def backward(self, ps, caches, dy, grads):
        c0, m0, c1, m1, c2, m2, c3 = caches
        dz = self.deconv3.backward(ps, c3, dy, grads)
        dz = ReLU.backward(m2, dz)
        dz = self.deconv2.backward(ps, c2, dz, grads)
        dz = ReLU.backward(m1, dz)
        dz = self.deconv1.backward(ps, c1, dz, grads)
        dz = dz.reshape(dz.shape[0], -1)
        dz = ReLU.backward(m0, dz)
        dz = self.fc.backward(ps, c0, dz, grads)
        return dz


def _nets(level: CodecLevel):
    enc = EncoderNet(level.channels, level.feature_count, level.codeword_dim, level.height, level.width)
    dec = DecoderNet(level.channels, level.feature_count, level.codeword_dim, level.height, level.width)
    return enc, dec


def build_level(config: CodecConfig, level_id: int, bits: int, seed: int) -> CodecLevel:
    n = 2 ** bits
    ps = ParamSet()
    enc = EncoderNet(config.channels, config.feature_count, config.codeword_dim, config.height, config.width)
    dec = DecoderNet(config.channels, config.feature_count, config.codeword_dim, config.height, config.width)
    rng = generator(seed, "codec", bits, "init")
    enc.init(ps, rng)
    dec.init(ps, rng)
    codebook = rng.normal(0.0, 0.5, (n, config.codeword_dim)).astype(np.float32)
    return CodecLevel(
        level_id=level_id,
        bits_per_feature=bits,
        feature_count=config.feature_count,
        codeword_dim=config.codeword_dim,
        height=config.height,
        width=config.width,
        channels=tuple(config.channels),
        params=ps,
        codebook=codebook,
        ema_cluster_size=np.ones(n, dtype=np.float32),
        ema_embed_sum=codebook.copy(),
    )


def build_ensemble(config: CodecConfig, seed: int) -> list:
    """One fresh level per configured bits value, coarsest first (level_id 1..V)."""
    return [
        build_level(config, i + 1, bits, seed)
        for i, bits in enumerate(sorted(config.bits_levels))
    ]


def quantize_latents(level: CodecLevel, latents: np.ndarray) -> np.ndarray:
    """Nearest-codeword indices for (..., K) latents; ties break to the lowest index."""
    flat = np.ascontiguousarray(latents.reshape(-1, level.codeword_dim), dtype=np.float32)
    idx = _kernels.nearest_codewords(flat, level.codebook)
    return idx.reshape(latents.shape[:-1])


def encode_array(level: CodecLevel, x: np.ndarray):
    """Batched encode: (B,2,H,W) float32 -> latents (B,F,K) and indices (B,F)."""
    if x.shape[1:] != (2, level.height, level.width):
        raise ValueError(
            f"observation shape {x.shape[1:]} does not match level input (2, {level.height}, {level.width})"
        )
    enc, _ = _nets(level)
    lat, _ = enc.forward(level.params, x)
    return lat, quantize_latents(level, lat)


def encode(level: CodecLevel, obs: Observation):
    """Encode one observation; returns (latent (F,K), Message)."""
    x = observation_array(obs)[None]
    lat, idx = encode_array(level, x)
    msg = Message(level_id=level.level_id, indices=idx[0].astype(np.int64), length_bits=level.message_bits)
    return lat[0], msg


def _check_message(level: CodecLevel, msg: Message) -> None:
    if msg.level_id != level.level_id:
        raise ValueError(f"message for level {msg.level_id} given to level {level.level_id}")
    if len(msg.indices) != level.feature_count:
        raise ValueError(f"message carries {len(msg.indices)} indices, expected {level.feature_count}")
    if np.any(msg.indices < 0) or np.any(msg.indices >= level.codebook_size):
        raise ValueError(f"message indices out of range [0, {level.codebook_size})")


def decode_indices(level: CodecLevel, indices: np.ndarray) -> np.ndarray:
    """Batched decode of (B,F) indices to clamped (B,2,H,W) reconstructions."""
    z = level.codebook[indices.reshape(-1)].reshape(-1, level.feature_count, level.codeword_dim)
    _, dec = _nets(level)
    recon, _ = dec.forward(level.params, z)
    return np.clip(recon, 0.0, 1.0)


def decode(level: CodecLevel, msg: Message) -> Observation:
    _check_message(level, msg)
    recon = decode_indices(level, msg.indices[None])[0]
    return Observation(
        prev=Frame(width=level.width, height=level.height, pixels=recon[0]),
        curr=Frame(width=level.width, height=level.height, pixels=recon[1]),
    )


def message_vector(level: CodecLevel, msg: Message) -> np.ndarray:
    """Dequantized message: the F selected codewords concatenated (F*K floats)."""
    _check_message(level, msg)
    return level.codebook[msg.indices].reshape(-1).astype(np.float32, copy=False)


def indices_to_vectors(level: CodecLevel, indices: np.ndarray) -> np.ndarray:
    """(B,F) indices -> (B, F*K) dequantized input batch."""
    return level.codebook[indices.reshape(-1)].reshape(indices.shape[0], -1)


def training_loss_and_grads(level: CodecLevel, x: np.ndarray, commitment: float = 0.25):
    """One training evaluation: loss, parameter grads, indices, diagnostics.

    Network-parameter gradients use the straight-through copy: the gradient
    of the reconstruction loss w.r.t. the quantized vector passes to the
    encoder output unchanged, plus the commitment-term gradient. Does not
    touch the codebook or EMA state.
    """
    enc, dec = _nets(level)
    lat, enc_caches = enc.forward(level.params, x)
    flat = lat.reshape(-1, level.codeword_dim)
    idx = _kernels.nearest_codewords(np.ascontiguousarray(flat), level.codebook)
    quant = level.codebook[idx]
    recon, dec_caches = dec.forward(level.params, quant.reshape(lat.shape))

    loss_recon, drecon = mse_loss(recon, x)
    commit_diff = flat - quant
    loss_commit = commitment * float(np.mean(commit_diff.astype(np.float64) ** 2))

    grads = level.params.zeros_like()
    dquant = dec.backward(level.params, dec_caches, drecon, grads)
    d_lat_recon = dquant.reshape(flat.shape)
    d_lat_commit = np.float32(commitment * 2.0 / commit_diff.size) * commit_diff
    d_lat = (d_lat_recon + d_lat_commit).reshape(lat.shape)
    enc.backward(level.params, enc_caches, d_lat, grads)

    aux = {
        "flat_latents": flat,
        "loss_recon": loss_recon,
        "loss_commit": loss_commit,
        "d_latent": d_lat.reshape(flat.shape),
        "d_latent_recon": d_lat_recon,
        "d_latent_commit": d_lat_commit,
    }
    return loss_recon + loss_commit, grads, idx.reshape(lat.shape[:2]), aux


def straight_through_surrogate_loss(level: CodecLevel, x: np.ndarray, frozen_offset: np.ndarray,
                                    frozen_target: np.ndarray, commitment: float = 0.25) -> float:
    """Loss with the quantizer replaced by adding a frozen offset.

    With frozen_offset = (quantized - latent) and frozen_target = quantized
    captured at the base point, the straight-through parameter gradient is
    the exact gradient of this function, so central differences of it
    validate the analytic backward pass.
    """
    enc, dec = _nets(level)
    lat, _ = enc.forward(level.params, x)
    flat = lat.reshape(-1, level.codeword_dim)
    dec_in = (flat + frozen_offset).reshape(lat.shape)
    recon, _ = dec.forward(level.params, dec_in)
    loss_recon = float(np.mean((recon.astype(np.float64) - x.astype(np.float64)) ** 2))
    diff = flat.astype(np.float64) - frozen_target.astype(np.float64)
    return loss_recon + commitment * float(np.mean(diff ** 2))


def apply_ema_update(level: CodecLevel, flat_latents: np.ndarray, idx: np.ndarray,
                     decay: float = 0.99) -> None:
    """Exponential-moving-average codebook update with Laplace smoothing."""
    n = level.codebook_size
    flat_idx = idx.reshape(-1)
    counts = np.bincount(flat_idx, minlength=n).astype(np.float32)
    sums = np.zeros((n, level.codeword_dim), dtype=np.float32)
    np.add.at(sums, flat_idx, flat_latents.reshape(-1, level.codeword_dim))
    cs = level.ema_cluster_size
    es = level.ema_embed_sum
    cs *= np.float32(decay)
    cs += np.float32(1.0 - decay) * counts
    es *= np.float32(decay)
    es += np.float32(1.0 - decay) * sums
    total = float(cs.sum(dtype=np.float64))
    smoothed = (cs + np.float32(LAPLACE_EPS)) / np.float32(total + n * LAPLACE_EPS) * np.float32(total)
    level.codebook[:] = es / smoothed[:, None]


def _init_codebook_from_data(level: CodecLevel, x: np.ndarray, seed: int) -> None:
    """Seed the codebook with encoder outputs so all codewords start in-distribution."""
    enc, _ = _nets(level)
    lat, _ = enc.forward(level.params, x)
    flat = lat.reshape(-1, level.codeword_dim)
    rng = generator(seed, "codec", level.bits_per_feature, "codebook_init")
    rows = rng.permutation(flat.shape[0])
    n = level.codebook_size
    picks = flat[rows[:n]]
    if picks.shape[0] < n:
        extra = rng.integers(0, flat.shape[0], n - picks.shape[0])
        picks = np.vstack([picks, flat[extra]])
    level.codebook[:] = picks
    level.ema_embed_sum[:] = picks
    level.ema_cluster_size[:] = 1.0


def holdout_psnr(level: CodecLevel, dataset: np.ndarray, ids: np.ndarray, batch: int = 64) -> float:
    """Pooled PSNR of quantized reconstructions over the given dataset rows."""
    sse = 0.0
    count = 0
    for s in range(0, len(ids), batch):
        x = dataset[ids[s:s + batch]].astype(np.float32)
        _, idx = encode_array(level, x)
        recon = decode_indices(level, idx)
        diff = recon.astype(np.float64) - x.astype(np.float64)
        sse += float(np.sum(diff * diff))
        count += diff.size
    err = sse / count
    if err == 0.0:
        return PSNR_CEILING_DB
    return min(float(10.0 * np.log10(1.0 / err)), PSNR_CEILING_DB)


def train_level(level: CodecLevel, dataset: np.ndarray, epochs: int, seed: int,
                batch: int = 32, lr: float = 1e-3, ema_decay: float = 0.99,
                commitment: float = 0.25, holdout_fraction: float = 0.1) -> CodecTrainReport:
    """Train one level in place on (M,2,H,W) observations (uint8 or float)."""
    if len(dataset) == 0:
        raise ValueError("codec training dataset is empty")
    t0 = time.perf_counter()
    rng = generator(seed, "codec", level.bits_per_feature, "train")
    order = rng.permutation(len(dataset))
    n_hold = max(1, int(round(len(dataset) * holdout_fraction)))
    hold_ids, train_ids = order[:n_hold], order[n_hold:]
    if len(train_ids) == 0:
        raise ValueError("holdout fraction leaves no training data")

    _init_codebook_from_data(level, dataset[train_ids[:max(batch, 8)]].astype(np.float32), seed)
    opt = init_optimizer(level.params, lr=lr)
    report = CodecTrainReport(bits_per_feature=level.bits_per_feature)
    usage = np.zeros(level.codebook_size, dtype=np.int64)

    for epoch in range(epochs):
        perm = rng.permutation(train_ids)
        usage[:] = 0
        ep_loss = 0.0
        n_batches = 0
        for s in range(0, len(perm), batch):
            x = dataset[perm[s:s + batch]].astype(np.float32)
            loss, grads, idx, aux = training_loss_and_grads(level, x, commitment=commitment)
            apply_ema_update(level, aux["flat_latents"], idx, decay=ema_decay)
            usage += np.bincount(idx.reshape(-1), minlength=level.codebook_size)
            level.params, opt = optimizer_step(level.params, grads, opt)
            ep_loss += loss
            n_batches += 1
        epoch_psnr = holdout_psnr(level, dataset, hold_ids)
        epoch_perp = perplexity(usage)
        report.psnr_per_epoch.append(epoch_psnr)
        report.perplexity_per_epoch.append(epoch_perp)
        log.info(
            "codec[%db/feat] epoch %d/%d: loss %.5f, holdout PSNR %.2f dB, perplexity %.2f/%d",
            level.bits_per_feature, epoch + 1, epochs, ep_loss / max(n_batches, 1),
            epoch_psnr, epoch_perp, level.codebook_size,
        )
    report.usage_histogram = usage.copy()
    report.final_holdout_psnr = report.psnr_per_epoch[-1]
    report.wall_time_s = time.perf_counter() - t0
    return report
