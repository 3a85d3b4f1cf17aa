"""Encoder-only transformer forward pass in float32 numpy.

Post-layernorm residual blocks (multi-head self-attention then a gelu
feed-forward), learned absolute position embeddings, a tanh pooler over
the first position and a linear two-way classification head. Attention
probabilities for every layer and head are returned alongside the
logits, and padded positions are masked out of every attention column
before the row softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .wordpiece import TokenizedSequence

INIT_SCALE = 0.02
# Additive bias on pad columns; large enough that float32 softmax assigns
# them exactly zero mass.
ATTENTION_MASK_BIAS = -1.0e9

ACTIVATIONS = ("gelu",)


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int
    num_heads: int
    hidden_size: int
    intermediate_size: int
    vocab_size: int
    max_positions: int = 512
    activation: str = "gelu"
    layernorm_epsilon: float = 1e-12
    num_labels: int = 2

    def __post_init__(self) -> None:
        for name in ("num_layers", "num_heads", "hidden_size", "intermediate_size",
                     "vocab_size", "num_labels"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_positions < 2:
            raise ValueError("max_positions must be >= 2")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError(f"hidden_size {self.hidden_size} not divisible by "
                             f"num_heads {self.num_heads}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.layernorm_epsilon <= 0:
            raise ValueError("layernorm_epsilon must be positive")

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.num_heads

    @property
    def architecture(self) -> tuple[int, int, int, int]:
        """(layers, heads, hidden, intermediate) summary tuple."""
        return (self.num_layers, self.num_heads, self.hidden_size, self.intermediate_size)


def piccolo_config(vocab_size: int, max_positions: int = 512) -> EncoderConfig:
    """The small 4-layer production configuration."""
    return EncoderConfig(num_layers=4, num_heads=12, hidden_size=576,
                         intermediate_size=768, vocab_size=vocab_size,
                         max_positions=max_positions)


def bert_base_config(vocab_size: int, max_positions: int = 512) -> EncoderConfig:
    """The 12-layer base-size reference configuration."""
    return EncoderConfig(num_layers=12, num_heads=12, hidden_size=768,
                         intermediate_size=3072, vocab_size=vocab_size,
                         max_positions=max_positions)


@dataclass
class LayerWeights:
    """One transformer block. Projection weights are laid out [in, out]
    and applied as ``x @ w + b``."""

    q_weight: np.ndarray
    q_bias: np.ndarray
    k_weight: np.ndarray
    k_bias: np.ndarray
    v_weight: np.ndarray
    v_bias: np.ndarray
    out_weight: np.ndarray
    out_bias: np.ndarray
    attn_ln_gamma: np.ndarray
    attn_ln_beta: np.ndarray
    ffn_up_weight: np.ndarray
    ffn_up_bias: np.ndarray
    ffn_down_weight: np.ndarray
    ffn_down_bias: np.ndarray
    ffn_ln_gamma: np.ndarray
    ffn_ln_beta: np.ndarray


@dataclass
class ModelWeights:
    token_embedding: np.ndarray
    position_embedding: np.ndarray
    embedding_ln_gamma: np.ndarray
    embedding_ln_beta: np.ndarray
    layers: list[LayerWeights]
    pooler_weight: np.ndarray
    pooler_bias: np.ndarray
    classifier_weight: np.ndarray
    classifier_bias: np.ndarray


@dataclass
class ForwardOutput:
    """Per-sequence classifier logits, per-layer/head attention
    probabilities ([heads, T, T], rows sum to 1) and final hidden states."""

    logits: np.ndarray
    attentions: list[np.ndarray]
    final_hidden: np.ndarray


def init_random(config: EncoderConfig, seed: int) -> ModelWeights:
    """Deterministic random weights: N(0, 0.02) everywhere, layernorm
    gamma=1 / beta=0. Same (config, seed) always yields identical tensors."""
    rng = np.random.default_rng(seed)

    def normal(*shape: int) -> np.ndarray:
        return rng.normal(0.0, INIT_SCALE, size=shape).astype(np.float32)

    def ones(n: int) -> np.ndarray:
        return np.ones(n, dtype=np.float32)

    def zeros(n: int) -> np.ndarray:
        return np.zeros(n, dtype=np.float32)

    h, i = config.hidden_size, config.intermediate_size
    layers = []
    for _ in range(config.num_layers):
        layers.append(LayerWeights(
            q_weight=normal(h, h), q_bias=normal(h),
            k_weight=normal(h, h), k_bias=normal(h),
            v_weight=normal(h, h), v_bias=normal(h),
            out_weight=normal(h, h), out_bias=normal(h),
            attn_ln_gamma=ones(h), attn_ln_beta=zeros(h),
            ffn_up_weight=normal(h, i), ffn_up_bias=normal(i),
            ffn_down_weight=normal(i, h), ffn_down_bias=normal(h),
            ffn_ln_gamma=ones(h), ffn_ln_beta=zeros(h),
        ))
    return ModelWeights(
        token_embedding=normal(config.vocab_size, h),
        position_embedding=normal(config.max_positions, h),
        embedding_ln_gamma=ones(h),
        embedding_ln_beta=zeros(h),
        layers=layers,
        pooler_weight=normal(h, h),
        pooler_bias=normal(h),
        classifier_weight=normal(h, config.num_labels),
        classifier_bias=normal(config.num_labels),
    )


def _layernorm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + np.float32(eps)) * gamma + beta


def _gelu(x: np.ndarray) -> np.ndarray:
    # Exact erf form, not the tanh approximation.
    return np.float32(0.5) * x * (np.float32(1.0) + erf(x / np.float32(math.sqrt(2.0))))


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(seqs: list[TokenizedSequence], weights: ModelWeights,
                  config: EncoderConfig) -> list[ForwardOutput]:
    """Run the encoder over a batch of equally padded sequences.

    Per-sequence results match single-sequence ``forward`` within float32
    matmul noise (<< 1e-5 per logit); pad columns receive zero attention.
    """
    if not seqs:
        return []
    t = len(seqs[0].ids)
    for seq in seqs:
        if len(seq.ids) != t or len(seq.attention_mask) != t:
            raise ValueError("all sequences in a batch must share one padded length")
    if t == 0:
        raise ValueError("cannot run the encoder on an empty sequence")
    if t > config.max_positions:
        raise ValueError(f"sequence length {t} exceeds max_positions {config.max_positions}")

    ids = np.asarray([seq.ids for seq in seqs], dtype=np.int64)
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ValueError("token id out of range for vocab_size "
                         f"{config.vocab_size}: [{ids.min()}, {ids.max()}]")
    mask = np.asarray([seq.attention_mask for seq in seqs], dtype=np.float32)

    batch = ids.shape[0]
    heads, head_dim, hidden = config.num_heads, config.head_dim, config.hidden_size
    eps = config.layernorm_epsilon
    scale = np.float32(1.0 / math.sqrt(head_dim))
    # [B, 1, 1, T] additive bias hiding pad columns from every query row.
    attn_bias = (np.float32(1.0) - mask)[:, None, None, :] * np.float32(ATTENTION_MASK_BIAS)

    x = weights.token_embedding[ids] + weights.position_embedding[:t]
    # Kept flattened to [B*T, hidden] so projections and the FFN run as one
    # large GEMM instead of B stacked small ones.
    x = x.reshape(batch * t, hidden)
    x = _layernorm(x, weights.embedding_ln_gamma, weights.embedding_ln_beta, eps)

    def split_heads(proj: np.ndarray) -> np.ndarray:
        return proj.reshape(batch, t, heads, head_dim).transpose(0, 2, 1, 3)

    attention_stack: list[np.ndarray] = []
    for layer in weights.layers:
        q = split_heads(x @ layer.q_weight + layer.q_bias)
        k = split_heads(x @ layer.k_weight + layer.k_bias)
        v = split_heads(x @ layer.v_weight + layer.v_bias)
        scores = q @ k.transpose(0, 1, 3, 2) * scale + attn_bias
        probs = _softmax(scores)
        attention_stack.append(probs)
        context = (probs @ v).transpose(0, 2, 1, 3).reshape(batch * t, hidden)
        attn_out = context @ layer.out_weight + layer.out_bias
        x = _layernorm(x + attn_out, layer.attn_ln_gamma, layer.attn_ln_beta, eps)
        up = _gelu(x @ layer.ffn_up_weight + layer.ffn_up_bias)
        down = up @ layer.ffn_down_weight + layer.ffn_down_bias
        x = _layernorm(x + down, layer.ffn_ln_gamma, layer.ffn_ln_beta, eps)

    hidden_states = x.reshape(batch, t, hidden)
    pooled = np.tanh(hidden_states[:, 0, :] @ weights.pooler_weight + weights.pooler_bias)
    logits = pooled @ weights.classifier_weight + weights.classifier_bias

    return [
        ForwardOutput(
            logits=logits[b].copy(),
            attentions=[layer_probs[b].copy() for layer_probs in attention_stack],
            final_hidden=hidden_states[b].copy(),
        )
        for b in range(batch)
    ]


def forward(seq: TokenizedSequence, weights: ModelWeights,
            config: EncoderConfig) -> ForwardOutput:
    """Single-sequence forward pass (batch of one)."""
    return forward_batch([seq], weights, config)[0]


def count_parameters(config: EncoderConfig) -> int:
    """Exact learned-scalar count for the weight shapes above."""
    h, i = config.hidden_size, config.intermediate_size
    embeddings = config.vocab_size * h + config.max_positions * h
    embedding_ln = 2 * h
    per_layer = (
        4 * (h * h + h)      # q/k/v/out projections
        + 2 * h              # attention layernorm
        + (h * i + i)        # ffn up
        + (i * h + h)        # ffn down
        + 2 * h              # ffn layernorm
    )
    pooler = h * h + h
    classifier = h * config.num_labels + config.num_labels
    return embeddings + embedding_ln + config.num_layers * per_layer + pooler + classifier
