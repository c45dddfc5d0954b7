"""Desk-scale conditional latent diffusion trainer.

The generative backbone is deliberately tiny and frozen: a fixed random
orthonormal projection stands in for the latent autoencoder, and the
denoiser is a per-frame residual MLP whose condition summary comes from
single-head cross-attention (query from the noised latent, keys/values
from that frame's conditioning tokens). Only the audio mapper and the
attentive pooling parameters receive gradients; the training loop
verifies this by hashing the frozen parameters.

Checkpoints are TTCKPT1 files (see tempokit.media_io): named float32
tensor records for every parameter plus two metadata records,
"schedule.betas" (the noise schedule) and "meta.dims" with the integer
layout [embed_layers, embed_dim, token_dim, time_dim, frames_per_video,
width, height, fps_num, fps_den].
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError, ValidationError
from .media_io import Video, read_named_tensors, write_named_tensors
from .numerics import LinearLayer, Rng, gelu, gelu_grad, softmax
from .tempo_tokens import (MapperParams, PoolingParams, condition_backward,
                           mapper_backward, mapper_forward, pool_backward,
                           pool_forward, window_stack)

_KEY_MAPPER = 1
_KEY_POOLING = 2
_KEY_DENOISER = 3
_KEY_CODEC = 4
_KEY_TRAIN = 5
_KEY_GENERATE = 6


# ---------------------------------------------------------------------------
# Noise schedule
# ---------------------------------------------------------------------------

@dataclass
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def timesteps(self):
        return self.betas.size


def make_schedule(timesteps=100, beta_start=1e-4, beta_end=0.02):
    if timesteps < 1:
        raise ValidationError("timesteps must be >= 1")
    betas = np.linspace(beta_start, beta_end, timesteps)
    if not np.all((betas > 0) & (betas < 1)):
        raise ValidationError("betas must lie strictly in (0, 1)")
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    if not np.all(np.diff(alpha_bars) < 0):
        raise ValidationError("cumulative alphas must strictly decrease")
    return NoiseSchedule(betas, alphas, alpha_bars)


def forward_noise(z0, t, eps, schedule):
    """Noise clean latents to step t: sqrt(abar_t) z0 + sqrt(1-abar_t) eps.

    t is 1-indexed in [1, timesteps]; eps must match z0's shape.
    """
    if not 1 <= t <= schedule.timesteps:
        raise ValidationError(
            f"t={t} outside [1, {schedule.timesteps}]")
    z0 = np.asarray(z0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if z0.shape != eps.shape:
        raise ShapeError("eps must have the same shape as z0")
    abar = schedule.alpha_bars[t - 1]
    return np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps


# ---------------------------------------------------------------------------
# Frozen latent codec
# ---------------------------------------------------------------------------

@dataclass
class LatentCodec:
    """Fixed orthonormal projection between pixel space and latents."""

    encoder: np.ndarray  # (latent_dim, width*height*3), orthonormal rows
    width: int
    height: int

    def __post_init__(self):
        self.encoder = np.asarray(self.encoder, dtype=np.float64)
        if self.encoder.shape[1] != self.width * self.height * 3:
            raise ShapeError("encoder columns must equal width*height*3")
        self.init_hash = params_hash(self.arrays())

    @property
    def latent_dim(self):
        return self.encoder.shape[0]

    def arrays(self):
        return [("codec.encoder", self.encoder)]

    def encode(self, frames):
        """uint8 frames (L, H, W, 3) -> latents (L, latent_dim)."""
        flat = np.asarray(frames, dtype=np.float64).reshape(
            frames.shape[0], -1)
        return (flat / 127.5 - 1.0) @ self.encoder.T

    def decode(self, latents):
        """latents (L, latent_dim) -> uint8 frames (L, H, W, 3)."""
        flat = np.asarray(latents, dtype=np.float64) @ self.encoder
        pixels = np.clip(np.rint((flat + 1.0) * 127.5), 0, 255)
        return pixels.astype(np.uint8).reshape(
            latents.shape[0], self.height, self.width, 3)


def create_codec(width, height, latent_dim, rng):
    pixels = width * height * 3
    if latent_dim > pixels:
        raise ValidationError("latent_dim cannot exceed the pixel count")
    gaussian = rng.normal((pixels, latent_dim))
    q, _ = np.linalg.qr(gaussian)
    return LatentCodec(q.T, width, height)


# ---------------------------------------------------------------------------
# Frozen denoiser
# ---------------------------------------------------------------------------

def time_embedding(t, dim):
    """Sinusoidal embedding of an integer timestep."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = t * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])


@dataclass
class DenoiserParams:
    """Per-frame conditional denoiser; all weights frozen after init.

    Structure: cross-attention summary (query from the noised latent,
    keys/values from the frame's condition tokens) concatenated with the
    latent and a sinusoidal time embedding, then a residual two-layer
    MLP head predicting the noise.
    """

    query_proj: np.ndarray   # (attn_dim, latent_dim)
    query_bias: np.ndarray
    key_proj: np.ndarray     # (attn_dim, token_dim)
    key_bias: np.ndarray
    value_proj: np.ndarray   # (value_dim, token_dim)
    value_bias: np.ndarray
    mlp1: np.ndarray         # (hidden, latent+time+value dims)
    mlp1_bias: np.ndarray
    mlp2: np.ndarray         # (hidden, hidden)
    mlp2_bias: np.ndarray
    out: np.ndarray          # (latent_dim, hidden)
    out_bias: np.ndarray
    summary_skip: np.ndarray  # (latent_dim, value_dim) residual path
    time_dim: int = 8

    def __post_init__(self):
        self.init_hash = params_hash(self.arrays())

    @property
    def latent_dim(self):
        return self.out.shape[0]

    def arrays(self):
        return [
            ("denoiser.query_proj", self.query_proj),
            ("denoiser.query_bias", self.query_bias),
            ("denoiser.key_proj", self.key_proj),
            ("denoiser.key_bias", self.key_bias),
            ("denoiser.value_proj", self.value_proj),
            ("denoiser.value_bias", self.value_bias),
            ("denoiser.mlp1", self.mlp1),
            ("denoiser.mlp1_bias", self.mlp1_bias),
            ("denoiser.mlp2", self.mlp2),
            ("denoiser.mlp2_bias", self.mlp2_bias),
            ("denoiser.out", self.out),
            ("denoiser.out_bias", self.out_bias),
            ("denoiser.summary_skip", self.summary_skip),
        ]

    def predict(self, z_t, t, cond_tokens):
        """Noise estimate for one frame latent given its condition."""
        pred, _ = _denoiser_forward(self, z_t, t, cond_tokens)
        return pred


def create_denoiser(latent_dim, token_dim, rng, attn_dim=16, value_dim=16,
                    hidden=32, time_dim=8, value_scale=1.0,
                    out_bias_scale=0.0):
    """Random frozen denoiser.

    value_scale adjusts how much weight the condition summary carries in
    the prediction. out_bias_scale gives the frozen head a systematic
    output bias of exact norm out_bias_scale*sqrt(latent_dim); an
    adapter can only counteract it through the conditioning interface
    (mainly the linear summary_skip path), which gives small training
    runs a clear, honest objective against this backbone.
    """
    def mat(rows, cols, gain=1.0):
        return rng.normal((rows, cols), gain / np.sqrt(cols))

    if out_bias_scale:
        direction = rng.normal(latent_dim)
        direction /= np.linalg.norm(direction)
        out_bias = out_bias_scale * np.sqrt(latent_dim) * direction
    else:
        out_bias = np.zeros(latent_dim)

    mlp_in = latent_dim + time_dim + value_dim
    return DenoiserParams(
        query_proj=mat(attn_dim, latent_dim),
        query_bias=rng.normal(attn_dim, 0.1),
        key_proj=mat(attn_dim, token_dim),
        key_bias=rng.normal(attn_dim, 0.1),
        value_proj=mat(value_dim, token_dim, value_scale),
        value_bias=rng.normal(value_dim, 0.1),
        mlp1=mat(hidden, mlp_in),
        mlp1_bias=rng.normal(hidden, 0.1),
        mlp2=mat(hidden, hidden),
        mlp2_bias=rng.normal(hidden, 0.1),
        out=mat(latent_dim, hidden),
        out_bias=out_bias,
        summary_skip=mat(latent_dim, value_dim),
        time_dim=time_dim,
    )


def _denoiser_forward(den, z_t, t, cond_tokens):
    cond = np.asarray(cond_tokens, dtype=np.float64)
    temb = time_embedding(t, den.time_dim)
    query = den.query_proj @ z_t + den.query_bias
    keys = cond @ den.key_proj.T + den.key_bias
    values = cond @ den.value_proj.T + den.value_bias
    scores = keys @ query / np.sqrt(query.size)
    weights = softmax(scores)
    summary = weights @ values

    mlp_in = np.concatenate([z_t, temb, summary])
    pre1 = den.mlp1 @ mlp_in + den.mlp1_bias
    h1 = gelu(pre1)
    pre2 = den.mlp2 @ h1 + den.mlp2_bias
    h2 = h1 + gelu(pre2)
    pred = den.out @ h2 + den.summary_skip @ summary + den.out_bias
    cache = (cond, query, values, weights, pre1, pre2)
    return pred, cache


def _denoiser_backward_to_cond(den, d_pred, cache):
    """Gradient of the prediction w.r.t. the condition tokens only (the
    denoiser itself is frozen)."""
    cond, query, values, weights, pre1, pre2 = cache
    d_h2 = den.out.T @ d_pred
    d_h1 = d_h2 + den.mlp2.T @ (gelu_grad(pre2) * d_h2)
    d_in = den.mlp1.T @ (gelu_grad(pre1) * d_h1)
    d_summary = d_in[-values.shape[1]:] + den.summary_skip.T @ d_pred

    d_weights = values @ d_summary
    d_values = np.outer(weights, d_summary)
    d_scores = weights * (d_weights - weights @ d_weights)
    d_keys = np.outer(d_scores, query) / np.sqrt(query.size)
    return d_values @ den.value_proj + d_keys @ den.key_proj


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _cond_values(cond):
    values = np.asarray(getattr(cond, "values", cond), dtype=np.float64)
    if values.ndim != 3:
        raise ShapeError("condition values must be (L, tokens, dim)")
    return values


def sample_step_noise(latents, schedule, rng):
    """Draw one (t, eps) pair for a clip: uniform timestep, unit-normal
    per-frame noise."""
    t = int(rng.integers(1, schedule.timesteps + 1))
    eps = rng.normal(latents.shape)
    return t, eps


def cldm_loss(batch, denoiser, schedule, rng):
    """Conditional denoising loss over a batch of (latents, condition).

    Per item one timestep is drawn and per frame unit-normal noise; the
    loss is the squared prediction error averaged over frames and items
    (so a denoiser that predicts zero scores about latent_dim on
    unit-normal noise). Frame i attends to its own condition row.
    """
    total = 0.0
    for latents, cond in batch:
        values = _cond_values(cond)
        latents = np.asarray(latents, dtype=np.float64)
        if values.shape[0] != latents.shape[0]:
            raise ShapeError(
                f"{values.shape[0]} condition frames for "
                f"{latents.shape[0]} video frames")
        t, eps = sample_step_noise(latents, schedule, rng)
        z_t = forward_noise(latents, t, eps, schedule)
        item = 0.0
        for i in range(latents.shape[0]):
            resid = denoiser.predict(z_t[i], t, values[i]) - eps[i]
            item += resid @ resid
        total += item / latents.shape[0]
    return total / len(batch)


def _tokens_and_condition(embeddings, mapper, pooling):
    length = embeddings.shape[0]
    flat_in = np.asarray(embeddings, dtype=np.float64).reshape(length, -1)
    tokens_flat, mapper_cache = mapper_forward(flat_in, mapper)
    pooled, _, pool_cache = pool_forward(tokens_flat, pooling)
    windows = window_stack(tokens_flat)
    cond = np.concatenate(
        [windows, np.repeat(pooled[None, None, :], length, axis=0)], axis=1)
    return tokens_flat, cond, mapper_cache, pool_cache


def total_loss(batch, mapper, pooling, denoiser, schedule, lambda_l1, rng):
    """cldm_loss on mapped conditions plus the mean token L1 penalty.

    Batch items are (latents, embeddings) with embeddings shaped
    (L, H_layers, d). Draws noise exactly like cldm_loss so the two
    agree for an identical rng state.
    """
    cond_batch = []
    reg = 0.0
    for latents, embeddings in batch:
        tokens_flat, cond, _, _ = _tokens_and_condition(
            embeddings, mapper, pooling)
        cond_batch.append((latents, cond))
        reg += lambda_l1 / tokens_flat.shape[0] * np.abs(tokens_flat).sum()
    return cldm_loss(cond_batch, denoiser, schedule, rng) + reg / len(batch)


def total_loss_and_grads(batch, noises, mapper, pooling, denoiser, schedule,
                         lambda_l1):
    """Deterministic loss plus analytic gradients for mapper and pooling.

    noises supplies the (t, eps) pair per batch item so the same
    function serves the SGD loop and finite-difference checking.
    """
    n_items = len(batch)
    grads = {name: np.zeros_like(arr)
             for name, arr in mapper.arrays() + pooling.arrays()}
    total = 0.0

    for (latents, embeddings), (t, eps) in zip(batch, noises):
        latents = np.asarray(latents, dtype=np.float64)
        length = latents.shape[0]
        tokens_flat, cond, mapper_cache, pool_cache = _tokens_and_condition(
            embeddings, mapper, pooling)

        z_t = forward_noise(latents, t, eps, schedule)
        d_cond = np.zeros_like(cond)
        item_loss = 0.0
        for i in range(length):
            pred, cache = _denoiser_forward(denoiser, z_t[i], t, cond[i])
            resid = pred - eps[i]
            item_loss += resid @ resid
            d_cond[i] = _denoiser_backward_to_cond(
                denoiser, 2.0 * resid / length, cache)
        item_loss /= length

        reg = lambda_l1 / length * np.abs(tokens_flat).sum()
        total += item_loss + reg

        d_tokens, d_pooled = condition_backward(d_cond, length)
        d_tokens_pool, pool_grads = pool_backward(
            d_pooled, pool_cache, pooling)
        d_tokens += d_tokens_pool
        d_tokens += lambda_l1 / length * np.sign(tokens_flat)
        _, mapper_grads = mapper_backward(d_tokens, mapper_cache, mapper)

        for name, grad in {**pool_grads, **mapper_grads}.items():
            grads[name] += grad

    total /= n_items
    for name in grads:
        grads[name] = grads[name] / n_items
    return total, grads


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    batch_videos: int = 8
    frames_per_video: int = 24
    steps: int = 200
    learning_rate: float = 1e-5
    lambda_l1: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if min(self.batch_videos, self.frames_per_video) < 1:
            raise ValidationError("batch and frame counts must be >= 1")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.learning_rate <= 0 or self.lambda_l1 < 0:
            raise ValidationError("bad learning_rate or lambda_l1")


@dataclass
class TrainItem:
    """One clip prepared for training: full-length latents and matching
    per-frame embeddings."""

    latents: np.ndarray     # (total_frames, latent_dim)
    embeddings: np.ndarray  # (total_frames, H_layers, d)


def prepare_item(pair, codec, embed_layers, embed_dim):
    """Encode an AVPair's frames and compute toy embeddings, one segment
    per video frame."""
    from .audio_analysis import toy_audio_features

    latents = codec.encode(pair.video.frames)
    emb = toy_audio_features(pair.audio, pair.video.frame_count,
                             embed_layers, embed_dim)
    return TrainItem(latents, emb.values)


def train(items, config, mapper, pooling, denoiser, schedule):
    """Plain SGD on mapper+pooling only; returns the per-step loss list.

    Deterministic given config.seed. Raises NumericError (with the step
    index) if the loss leaves the finite range.
    """
    if not items:
        raise ValidationError("empty training set")
    rng = Rng(config.seed).derive(_KEY_TRAIN)
    trainable = mapper.arrays() + pooling.arrays()
    history = []

    for step in range(config.steps):
        picks = rng.integers(0, len(items), config.batch_videos)
        batch = []
        for j in picks:
            item = items[int(j)]
            total_frames = item.latents.shape[0]
            if total_frames < config.frames_per_video:
                raise ValidationError(
                    f"clip has {total_frames} frames, need "
                    f"{config.frames_per_video}")
            start = int(rng.integers(0,
                                     total_frames - config.frames_per_video + 1))
            stop = start + config.frames_per_video
            batch.append((item.latents[start:stop],
                          item.embeddings[start:stop]))
        noises = [sample_step_noise(latents, schedule, rng)
                  for latents, _ in batch]
        loss, grads = total_loss_and_grads(
            batch, noises, mapper, pooling, denoiser, schedule,
            config.lambda_l1)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss at step {step}")
        for name, arr in trainable:
            arr -= config.learning_rate * grads[name]
        history.append(float(loss))
    return history


def flatten_trainable(mapper, pooling):
    """All trainable parameters as one float64 vector (fixed order)."""
    return np.concatenate([arr.ravel() for _, arr in
                           mapper.arrays() + pooling.arrays()])


def write_trainable(flat, mapper, pooling):
    """Inverse of flatten_trainable: writes values into the parameter
    arrays in place."""
    offset = 0
    for _, arr in mapper.arrays() + pooling.arrays():
        arr.flat[:] = flat[offset:offset + arr.size]
        offset += arr.size
    if offset != flat.size:
        raise ShapeError(
            f"flat vector has {flat.size} entries, parameters need {offset}")


def flatten_grads(grads, mapper, pooling):
    """Gradient dict -> flat vector in flatten_trainable's order."""
    return np.concatenate([np.asarray(grads[name]).ravel() for name, _ in
                           mapper.arrays() + pooling.arrays()])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def generate(embeddings, mapper, pooling, denoiser, codec, schedule, rng,
             fps=(24, 1)):
    """Ancestral sampling of one video conditioned on audio embeddings.

    Each frame is denoised along the full schedule attending to its own
    conditioning row, then decoded to pixels. The initial latent and the
    per-step ancestral noise are drawn once and shared by every frame:
    with a per-frame denoiser this is what keeps the clip temporally
    coherent (identical conditions then yield identical frames), so any
    frame-to-frame change traces back to the conditioning. Deterministic
    given the rng.
    """
    values = np.asarray(embeddings.values, dtype=np.float64)
    _, cond, _, _ = _tokens_and_condition(values, mapper, pooling)
    length = values.shape[0]
    timesteps = schedule.timesteps

    z_init = rng.normal(codec.latent_dim)
    step_noise = rng.normal((timesteps, codec.latent_dim))

    latents = np.empty((length, codec.latent_dim))
    for i in range(length):
        z = z_init.copy()
        for t in range(timesteps, 0, -1):
            pred = denoiser.predict(z, t, cond[i])
            beta = schedule.betas[t - 1]
            abar = schedule.alpha_bars[t - 1]
            z = (z - beta / np.sqrt(1.0 - abar) * pred) \
                / np.sqrt(schedule.alphas[t - 1])
            if t > 1:
                abar_prev = schedule.alpha_bars[t - 2]
                sigma = np.sqrt((1.0 - abar_prev) / (1.0 - abar) * beta)
                z += sigma * step_noise[t - 1]
        latents[i] = z
    return Video(codec.decode(latents), fps[0], fps[1])


# ---------------------------------------------------------------------------
# Hashing and checkpoints
# ---------------------------------------------------------------------------

def params_hash(named_arrays):
    """SHA-256 over names, shapes, and float64 payloads."""
    digest = hashlib.sha256()
    for name, arr in named_arrays:
        arr = np.asarray(arr, dtype=np.float64)
        digest.update(name.encode("utf-8"))
        digest.update(str(arr.shape).encode("ascii"))
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


@dataclass
class ModelDims:
    """Network sizes shared by training, checkpoints, and the CLI."""

    embed_layers: int = 2
    embed_dim: int = 12
    token_dim: int = 8           # per-layer token channels (d_t)
    mapper_hidden: tuple = (512, 512, 512)
    mapper_out_gain: float = 1.0
    pool_hidden: int = 16
    pool_cross: int = 16
    latent_dim: int = 16
    attn_dim: int = 16
    value_dim: int = 16
    denoiser_hidden: int = 32
    denoiser_out_bias: float = 0.0
    time_dim: int = 8
    timesteps: int = 100
    width: int = 64
    height: int = 64
    fps: tuple = (24, 1)
    frames_per_video: int = 24

    @property
    def segment_dim(self):
        return self.embed_layers * self.embed_dim

    @property
    def token_flat_dim(self):
        return self.embed_layers * self.token_dim


def desk_train_dims():
    """The training profile the CLI and shipped experiments use: narrow
    mapper, 4-d latents, and a biased frozen head for the adapter to
    counteract. Plain SGD behaves well here, which the default 512-wide
    profile cannot promise."""
    return ModelDims(mapper_hidden=(64, 64, 64), mapper_out_gain=1.5,
                     latent_dim=4, attn_dim=8, value_dim=8,
                     denoiser_hidden=16, denoiser_out_bias=2.25)


@dataclass
class Components:
    mapper: MapperParams
    pooling: PoolingParams
    denoiser: DenoiserParams
    codec: LatentCodec
    schedule: NoiseSchedule
    dims: ModelDims


def build_components(dims, seed):
    """Deterministically initialize every model component from one seed."""
    from .tempo_tokens import create_mapper, create_pooling

    root = Rng(seed)
    mapper = create_mapper(dims.segment_dim, dims.token_flat_dim,
                           dims.mapper_hidden, root.derive(_KEY_MAPPER),
                           out_gain=dims.mapper_out_gain)
    pooling = create_pooling(dims.token_flat_dim, dims.pool_hidden,
                             dims.pool_cross, root.derive(_KEY_POOLING))
    denoiser = create_denoiser(dims.latent_dim, dims.token_flat_dim,
                               root.derive(_KEY_DENOISER), dims.attn_dim,
                               dims.value_dim, dims.denoiser_hidden,
                               dims.time_dim,
                               out_bias_scale=dims.denoiser_out_bias)
    codec = create_codec(dims.width, dims.height, dims.latent_dim,
                         root.derive(_KEY_CODEC))
    schedule = make_schedule(dims.timesteps)
    return Components(mapper, pooling, denoiser, codec, schedule, dims)


def save_checkpoint(components, path):
    c = components
    records = {}
    for name, arr in (c.mapper.arrays() + c.pooling.arrays()
                      + c.denoiser.arrays() + c.codec.arrays()):
        records[name] = arr
    records["schedule.betas"] = c.schedule.betas
    records["meta.dims"] = np.array([
        c.dims.embed_layers, c.dims.embed_dim, c.dims.token_dim,
        c.dims.time_dim, c.dims.frames_per_video, c.dims.width,
        c.dims.height, c.dims.fps[0], c.dims.fps[1],
    ], dtype=np.float64)
    write_named_tensors(records, path)


def load_checkpoint(path):
    records = read_named_tensors(path)
    try:
        meta = records["meta.dims"].astype(int)
        (embed_layers, embed_dim, token_dim, time_dim, frames_per_video,
         width, height, fps_num, fps_den) = meta
        betas = records["schedule.betas"]

        layers = [LinearLayer(records[f"mapper.{i}.weight"],
                              records[f"mapper.{i}.bias"]) for i in range(4)]
        mapper = MapperParams(layers)
        pooling = PoolingParams(
            local_proj=records["pooling.local_proj"],
            local_score=records["pooling.local_score"],
            cross_left=records["pooling.cross_left"],
            cross_right=records["pooling.cross_right"],
            alpha_local=records["pooling.alpha_local"],
            alpha_cross=records["pooling.alpha_cross"],
        )
        denoiser = DenoiserParams(
            query_proj=records["denoiser.query_proj"],
            query_bias=records["denoiser.query_bias"],
            key_proj=records["denoiser.key_proj"],
            key_bias=records["denoiser.key_bias"],
            value_proj=records["denoiser.value_proj"],
            value_bias=records["denoiser.value_bias"],
            mlp1=records["denoiser.mlp1"],
            mlp1_bias=records["denoiser.mlp1_bias"],
            mlp2=records["denoiser.mlp2"],
            mlp2_bias=records["denoiser.mlp2_bias"],
            out=records["denoiser.out"],
            out_bias=records["denoiser.out_bias"],
            summary_skip=records["denoiser.summary_skip"],
            time_dim=int(time_dim),
        )
        codec = LatentCodec(records["codec.encoder"], int(width), int(height))
    except KeyError as exc:
        raise ValidationError(f"checkpoint missing record {exc}") from exc

    alphas = 1.0 - betas
    schedule = NoiseSchedule(betas, alphas, np.cumprod(alphas))
    dims = ModelDims(
        embed_layers=int(embed_layers), embed_dim=int(embed_dim),
        token_dim=int(token_dim),
        mapper_hidden=tuple(l.out_dim for l in layers[:3]),
        pool_hidden=pooling.local_score.size,
        pool_cross=pooling.cross_left.shape[0],
        latent_dim=codec.latent_dim,
        attn_dim=denoiser.query_proj.shape[0],
        value_dim=denoiser.value_proj.shape[0],
        denoiser_hidden=denoiser.mlp1.shape[0],
        time_dim=int(time_dim), timesteps=betas.size,
        width=int(width), height=int(height),
        fps=(int(fps_num), int(fps_den)),
        frames_per_video=int(frames_per_video),
    )
    return Components(mapper, pooling, denoiser, codec, schedule, dims)
