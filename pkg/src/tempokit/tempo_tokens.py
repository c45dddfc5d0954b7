"""Audio-to-token conditioning: the trainable adapter.

A shared 4-layer MLP maps each temporal segment of encoder activations
to a pseudo text token. Per-frame conditioning stacks exponentially
growing context windows (averaged token spans of half-width 1, 2, 4, ...)
plus one global attentive token pooled over all segments with learned
local and cross potentials.

Forward passes come in two flavors: the public ops (map_audio,
attentive_pool, build_condition) and cached variants that return what
the hand-written backward passes need. All analytic gradients here are
validated against central finite differences in the test suite.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError
from .numerics import (gelu, gelu_grad, linear_forward, linear_init,
                       softmax)

COSINE_NORM_FLOOR = 1e-12


@dataclass
class MapperParams:
    """Four stacked affine layers with GELU between them (shared across
    segments)."""

    layers: list

    def __post_init__(self):
        if len(self.layers) != 4:
            raise ValidationError("the mapper uses exactly 4 linear layers")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.out_dim != cur.in_dim:
                raise ShapeError("consecutive layer dimensions do not chain")

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def arrays(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.append((f"mapper.{i}.weight", layer.weight))
            out.append((f"mapper.{i}.bias", layer.bias))
        return out


def create_mapper(in_dim, out_dim, hidden=(512, 512, 512), rng=None,
                  out_gain=1.0):
    """He-initialized 4-layer mapper. out_gain scales the final layer's
    init so fresh tokens start with proportionally more energy."""
    dims = [in_dim, *hidden, out_dim]
    layers = [linear_init(rng, dims[i + 1], dims[i]) for i in range(3)]
    layers.append(linear_init(rng, dims[4], dims[3],
                              out_gain * np.sqrt(2.0 / dims[3])))
    return MapperParams(layers)


@dataclass
class PoolingParams:
    """Trainable attentive-pooling parameters.

    local_proj/local_score produce the per-token local potential
    score . relu(proj @ token); cross_left/cross_right embed tokens for
    the pairwise cosine cross potential; alpha_local/alpha_cross
    calibrate the two potentials before the softmax.
    """

    local_proj: np.ndarray    # (hidden, token_dim)
    local_score: np.ndarray   # (hidden,)
    cross_left: np.ndarray    # (cross_dim, token_dim)
    cross_right: np.ndarray   # (cross_dim, token_dim)
    alpha_local: np.ndarray = field(default_factory=lambda: np.array(1.0))
    alpha_cross: np.ndarray = field(default_factory=lambda: np.array(1.0))

    def __post_init__(self):
        self.local_proj = np.asarray(self.local_proj, dtype=np.float64)
        self.local_score = np.asarray(self.local_score, dtype=np.float64)
        self.cross_left = np.asarray(self.cross_left, dtype=np.float64)
        self.cross_right = np.asarray(self.cross_right, dtype=np.float64)
        self.alpha_local = np.asarray(self.alpha_local, dtype=np.float64)
        self.alpha_cross = np.asarray(self.alpha_cross, dtype=np.float64)
        if self.local_proj.shape[0] != self.local_score.shape[0]:
            raise ShapeError("local_score length must match local_proj rows")
        if self.cross_left.shape != self.cross_right.shape:
            raise ShapeError("cross projections must have the same shape")
        if self.cross_left.shape[1] != self.local_proj.shape[1]:
            raise ShapeError("cross and local projections disagree on "
                             "token dimension")

    @property
    def token_dim(self):
        return self.local_proj.shape[1]

    def arrays(self):
        return [
            ("pooling.local_proj", self.local_proj),
            ("pooling.local_score", self.local_score),
            ("pooling.cross_left", self.cross_left),
            ("pooling.cross_right", self.cross_right),
            ("pooling.alpha_local", self.alpha_local),
            ("pooling.alpha_cross", self.alpha_cross),
        ]


def create_pooling(token_dim, hidden=16, cross_dim=16, rng=None):
    # The cross potential sums one cosine per segment, so its raw scale
    # grows with the segment count; a small initial calibration weight
    # keeps the softmax scores in their responsive range.
    scale = 1.0 / np.sqrt(token_dim)
    return PoolingParams(
        local_proj=rng.normal((hidden, token_dim), scale),
        local_score=rng.normal((hidden,), 1.0 / np.sqrt(hidden)),
        cross_left=rng.normal((cross_dim, token_dim), scale),
        cross_right=rng.normal((cross_dim, token_dim), scale),
        alpha_local=np.array(1.0),
        alpha_cross=np.array(0.1),
    )


@dataclass
class TempoTokens:
    """Pseudo text tokens per segment: (L, H_layers, d_t)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[0] < 1:
            raise ShapeError("tokens must have shape (L, H_layers, d_t)")

    @property
    def segments(self):
        return self.values.shape[0]

    @property
    def flat(self):
        """(L, H_layers*d_t) view used by pooling and conditioning."""
        length = self.values.shape[0]
        return self.values.reshape(length, -1)


@dataclass
class ConditioningSequence:
    """Per-frame ordered token lists plus the shared attention weights.

    values has shape (frames, tokens_per_frame, token_dim); each row can
    be viewed by consumers as H_layers groups of d_t channels. attention
    is the pooling distribution over segments (None for single-vector
    conditioning, which has no attentive token).
    """

    values: np.ndarray
    attention: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ShapeError("condition values must be (L, tokens, dim)")
        if self.attention is not None:
            self.attention = np.asarray(self.attention, dtype=np.float64)

    @property
    def frame_count(self):
        return self.values.shape[0]

    @property
    def tokens_per_frame(self):
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# Mapper
# ---------------------------------------------------------------------------

def mapper_forward(flat_in, params):
    """Run the segment MLP on (L, in_dim); returns output and a cache
    for mapper_backward."""
    activations = [np.asarray(flat_in, dtype=np.float64)]
    pre_acts = []
    x = activations[0]
    for i, layer in enumerate(params.layers):
        pre = linear_forward(x, layer)
        pre_acts.append(pre)
        x = gelu(pre) if i < 3 else pre
        activations.append(x)
    return x, (activations, pre_acts)


def mapper_backward(d_out, cache, params):
    """Backprop through the segment MLP. Returns (d_input, grads)."""
    activations, pre_acts = cache
    grads = {}
    delta = np.asarray(d_out, dtype=np.float64)
    for i in reversed(range(4)):
        if i < 3:
            delta = delta * gelu_grad(pre_acts[i])
        grads[f"mapper.{i}.weight"] = delta.T @ activations[i]
        grads[f"mapper.{i}.bias"] = delta.sum(axis=0)
        delta = delta @ params.layers[i].weight
    return delta, grads


def map_audio(emb, params):
    """AudioEmbeddings (L, H, d) -> TempoTokens (L, H, d_t)."""
    length, layers, dim = emb.values.shape
    if layers * dim != params.in_dim:
        raise ShapeError(
            f"embeddings give segment dim {layers * dim}, mapper expects "
            f"{params.in_dim}")
    if params.out_dim % layers != 0:
        raise ShapeError(
            f"mapper out_dim {params.out_dim} not divisible by "
            f"{layers} layers")
    out, _ = mapper_forward(emb.values.reshape(length, layers * dim), params)
    return TempoTokens(out.reshape(length, layers, params.out_dim // layers))


# ---------------------------------------------------------------------------
# Context windows
# ---------------------------------------------------------------------------

def resolutions(length):
    """Number of window resolutions for a sequence of `length` segments:
    floor(log2(L)) + 1, i.e. half-widths 1, 2, 4, ..., 2^floor(log2 L)."""
    if length < 1:
        raise ValidationError("length must be >= 1")
    return int(length).bit_length()


def window_half_widths(length):
    return [1 << k for k in range(resolutions(length))]


def window_bounds(center, half_width, length):
    """Clamped 1-indexed inclusive segment range around `center`."""
    return max(1, center - half_width), min(center + half_width, length)


def window_average(tokens, lo, hi):
    """Inclusive mean of segments lo..hi (1-indexed).

    The divisor is the number of segments averaged (hi - lo + 1), which
    keeps the edge-clamped single-segment window well defined.
    """
    length = tokens.segments
    if not (1 <= lo <= hi <= length):
        raise ValidationError(
            f"window [{lo}, {hi}] out of range for {length} segments")
    return tokens.values[lo - 1:hi].mean(axis=0)


# ---------------------------------------------------------------------------
# Attentive pooling
# ---------------------------------------------------------------------------

def pool_forward(flat_tokens, params):
    """Attentive pooling over flattened tokens (L, D).

    Returns (pooled (D,), p (L,), cache). The attention distribution is
    softmax(alpha_local * local + alpha_cross * cross) where local is a
    scored relu projection of each token and cross sums the cosine
    similarities between the token's left embedding and every token's
    right embedding (pairs with a near-zero norm contribute 0).
    """
    a = np.asarray(flat_tokens, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError("flat tokens must be 2-d")
    if a.shape[1] != params.token_dim:
        raise ShapeError(
            f"token dim {a.shape[1]} != pooling dim {params.token_dim}")

    z = a @ params.local_proj.T
    r = np.maximum(z, 0.0)
    theta_local = r @ params.local_score

    x = a @ params.cross_left.T
    y = a @ params.cross_right.T
    x_norm = np.linalg.norm(x, axis=1)
    y_norm = np.linalg.norm(y, axis=1)
    x_ok = x_norm >= COSINE_NORM_FLOOR
    y_ok = y_norm >= COSINE_NORM_FLOOR
    x_unit = np.zeros_like(x)
    x_unit[x_ok] = x[x_ok] / x_norm[x_ok, None]
    y_unit = np.zeros_like(y)
    y_unit[y_ok] = y[y_ok] / y_norm[y_ok, None]
    theta_cross = (x_unit @ y_unit.T).sum(axis=1)

    scores = (float(params.alpha_local) * theta_local
              + float(params.alpha_cross) * theta_cross)
    p = softmax(scores)
    pooled = p @ a
    cache = (a, z, r, theta_local, x, y, x_norm, y_norm, x_ok, y_ok,
             x_unit, y_unit, theta_cross, p)
    return pooled, p, cache


def pool_backward(d_pooled, cache, params):
    """Backprop through pool_forward. Returns (d_flat_tokens, grads)."""
    (a, z, r, theta_local, x, y, x_norm, y_norm, x_ok, y_ok,
     x_unit, y_unit, theta_cross, p) = cache
    d_pooled = np.asarray(d_pooled, dtype=np.float64)

    d_a = np.outer(p, d_pooled)
    d_p = a @ d_pooled
    d_scores = p * (d_p - p @ d_p)

    d_theta_local = float(params.alpha_local) * d_scores
    d_theta_cross = float(params.alpha_cross) * d_scores
    grads = {
        "pooling.alpha_local": np.array(d_scores @ theta_local),
        "pooling.alpha_cross": np.array(d_scores @ theta_cross),
    }

    # local potential
    d_r = np.outer(d_theta_local, params.local_score)
    d_z = d_r * (z > 0)
    grads["pooling.local_score"] = r.T @ d_theta_local
    grads["pooling.local_proj"] = d_z.T @ a
    d_a += d_z @ params.local_proj

    # cross potential: theta_cross[u] = x_unit[u] . sum_i y_unit[i]
    sum_y_unit = y_unit.sum(axis=0)
    d_x_unit = np.outer(d_theta_cross, sum_y_unit)
    d_y_unit = np.tile(x_unit.T @ d_theta_cross, (a.shape[0], 1))

    d_x = np.zeros_like(x)
    rows = x_ok
    inner = (d_x_unit[rows] * x_unit[rows]).sum(axis=1, keepdims=True)
    d_x[rows] = (d_x_unit[rows] - inner * x_unit[rows]) / x_norm[rows, None]
    d_y = np.zeros_like(y)
    rows = y_ok
    inner = (d_y_unit[rows] * y_unit[rows]).sum(axis=1, keepdims=True)
    d_y[rows] = (d_y_unit[rows] - inner * y_unit[rows]) / y_norm[rows, None]

    grads["pooling.cross_left"] = d_x.T @ a
    grads["pooling.cross_right"] = d_y.T @ a
    d_a += d_x @ params.cross_left
    d_a += d_y @ params.cross_right
    return d_a, grads


def attentive_pool(tokens, params):
    """Pool TempoTokens into one global token plus its distribution."""
    pooled, p, _ = pool_forward(tokens.flat, params)
    length = tokens.values.shape[0]
    return pooled.reshape(tokens.values.shape[1:]), p


# ---------------------------------------------------------------------------
# Conditioning sequences
# ---------------------------------------------------------------------------

def window_stack(flat_tokens):
    """All per-frame context windows as one (L, resolutions(L), D) array."""
    flat = np.asarray(flat_tokens, dtype=np.float64)
    length, dim = flat.shape
    widths = window_half_widths(length)
    values = np.empty((length, len(widths), dim))
    for i in range(1, length + 1):
        for k, half in enumerate(widths):
            lo, hi = window_bounds(i, half, length)
            values[i - 1, k] = flat[lo - 1:hi].mean(axis=0)
    return values


def build_condition(tokens, params):
    """Per-frame context windows plus the shared attentive token.

    Frame i receives resolutions(L) averaged windows with half-widths
    1, 2, 4, ... (segment ranges clamped to [1, L]) followed by the
    attentive token, so tokens_per_frame == resolutions(L) + 1.
    """
    flat = tokens.flat
    windows = window_stack(flat)
    pooled, p, _ = pool_forward(flat, params)
    values = np.concatenate([windows, pooled[None, None, :].repeat(
        flat.shape[0], axis=0)], axis=1)
    return ConditioningSequence(values, attention=p)


def condition_backward(d_values, length):
    """Scatter a gradient on condition values back onto the tokens.

    Returns (d_flat_tokens, d_pooled): the window part lands directly on
    the averaged segments; the attentive part is summed over frames and
    must still be pushed through pool_backward by the caller.
    """
    widths = window_half_widths(length)
    dim = d_values.shape[2]
    d_flat = np.zeros((length, dim))
    for i in range(1, length + 1):
        for k, half in enumerate(widths):
            lo, hi = window_bounds(i, half, length)
            d_flat[lo - 1:hi] += d_values[i - 1, k] / (hi - lo + 1)
    d_pooled = d_values[:, -1].sum(axis=0)
    return d_flat, d_pooled


def single_vector_condition(tokens):
    """Baseline conditioning: one global mean token for every frame."""
    mean = tokens.flat.mean(axis=0)
    length = tokens.segments
    values = np.broadcast_to(mean, (length, 1, mean.size)).copy()
    return ConditioningSequence(values, attention=None)


def regularization(tokens, lambda_l1):
    """Mean L1 penalty on the tokens: (lambda/L) * sum of L1 norms."""
    if lambda_l1 < 0:
        raise ValidationError("lambda_l1 must be >= 0")
    if lambda_l1 == 0.0:
        return 0.0
    return lambda_l1 / tokens.segments * float(np.abs(tokens.values).sum())


def regularization_grad(tokens, lambda_l1):
    """d(regularization)/d(flat tokens); the sign subgradient at 0 is 0."""
    return (lambda_l1 / tokens.segments) * np.sign(tokens.flat)
