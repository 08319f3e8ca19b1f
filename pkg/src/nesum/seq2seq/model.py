"""GRU encoder-decoder with general (bilinear) global attention.

The bilinear score ``h_dec^T W h_enc`` is factored as two projections into a
small energy space, ``W = P_dec^T P_enc``, so the decoder state is projected
once per step and dotted against pre-projected encoder states.

The decoder at step j attends with its previous state, concatenates the
context vector to the embedded previous token, and feeds that to its GRU.
Gradients are computed by hand (reverse mode over the unrolled graph).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

from ..corpus import EntityType, IobTag
from .vocab import EOS, PAD, SOS, UNK

NER_DIM = 17
NER_OUTSIDE = 14
NER_PAD = 15
NER_BOUNDARY = 16


@dataclass
class ModelConfig:
    embed_dim: int = 300
    hidden_dim: int = 256
    energy_dim: int = 64
    dropout: float = 0.1
    ner_feature_dim: int = 0
    max_src_len: int = 400
    max_tgt_len: int = 30
    teacher_forcing: float = 1.0
    learning_rate: float = 0.05
    batch_size: int = 16
    seed: int = 0
    max_epochs: int = 50
    patience: int = 1
    unk_ban: bool = True
    dtype: str = "float64"

    def __post_init__(self):
        if self.ner_feature_dim not in (0, NER_DIM):
            raise ValueError(f"ner_feature_dim must be 0 or {NER_DIM}")
        for name in ("embed_dim", "hidden_dim", "energy_dim", "max_src_len", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_tgt_len < 0:
            raise ValueError("max_tgt_len must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if not 0.0 <= self.teacher_forcing <= 1.0:
            raise ValueError("teacher_forcing must lie in [0, 1]")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")

    @property
    def use_ner(self) -> bool:
        return self.ner_feature_dim == NER_DIM

    @property
    def encoder_input_dim(self) -> int:
        return self.embed_dim + self.ner_feature_dim

    @property
    def decoder_input_dim(self) -> int:
        return self.embed_dim + self.hidden_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def param_shapes(config: ModelConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
    E, H, A, V = config.embed_dim, config.hidden_dim, config.energy_dim, vocab_size
    return {
        "embedding": (V, E),
        "enc_w_in": (3 * H, config.encoder_input_dim),
        "enc_w_hid": (3 * H, H),
        "enc_b_in": (3 * H,),
        "enc_b_hid": (3 * H,),
        "dec_w_in": (3 * H, config.decoder_input_dim),
        "dec_w_hid": (3 * H, H),
        "dec_b_in": (3 * H,),
        "dec_b_hid": (3 * H,),
        "att_dec": (A, H),
        "att_enc": (A, H),
        "out_w": (V, H),
        "out_b": (V,),
    }


class ModelParams:
    """All learnable tensors, keyed by name. Gradients use the same container."""

    def __init__(self, config: ModelConfig, vocab_size: int, tensors: dict[str, np.ndarray]):
        self.config = config
        self.vocab_size = vocab_size
        expected = param_shapes(config, vocab_size)
        if set(tensors) != set(expected):
            raise ValueError(f"parameter names {sorted(tensors)} != {sorted(expected)}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise ValueError(f"{name}: shape {tensors[name].shape}, expected {shape}")
        self.tensors = tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if value.shape != self.tensors[name].shape:
            raise ValueError(f"{name}: shape {value.shape}, expected {self.tensors[name].shape}")
        self.tensors[name] = value

    def items(self):
        return self.tensors.items()

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, self.vocab_size, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams(self.config, self.vocab_size, {k: np.zeros_like(v) for k, v in self.tensors.items()})

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())


def init_params(config: ModelConfig, vocab_size: int, seed: int | None = None) -> ModelParams:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    dtype = np.dtype(config.dtype)
    k = 1.0 / math.sqrt(config.hidden_dim)
    tensors = {}
    for name, shape in param_shapes(config, vocab_size).items():
        bound = 0.1 if name == "embedding" else k
        tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return ModelParams(config, vocab_size, tensors)


# --- NER features ---------------------------------------------------------------


def ner_index(tag) -> int:
    """Feature index: B(t) -> 2t, I(t) -> 2t+1, O -> 14, PAD -> 15, SOS/EOS -> 16."""
    if isinstance(tag, IobTag):
        if tag.kind == "O":
            return NER_OUTSIDE
        return 2 * int(tag.etype) + (0 if tag.kind == "B" else 1)
    if tag == "PAD":
        return NER_PAD
    if tag in ("SOS", "EOS"):
        return NER_BOUNDARY
    raise ValueError(f"not an NER feature label: {tag!r}")


def ner_one_hot(tag) -> np.ndarray:
    v = np.zeros(NER_DIM)
    v[ner_index(tag)] = 1.0
    return v


def all_ner_labels() -> list:
    labels = []
    for t in EntityType:
        labels += [IobTag("B", t), IobTag("I", t)]
    return labels + [IobTag("O"), "PAD", "SOS", "EOS"]


# --- data -------------------------------------------------------------------------


class Example(NamedTuple):
    src: list[int]
    tgt: list[int]
    src_ner: list[int] | None = None


def make_example(vocab, src_tokens: Sequence[str], tgt_tokens: Sequence[str], src_tags=None) -> Example:
    """Encode one pair; EOS is appended to both sides (with the boundary NER feature)."""
    src = vocab.encode(src_tokens) + [EOS]
    tgt = vocab.encode(tgt_tokens) + [EOS]
    ner = None
    if src_tags is not None:
        if len(src_tags) != len(src_tokens):
            raise ValueError("src_tags and src_tokens differ in length")
        ner = [ner_index(t) for t in src_tags] + [NER_BOUNDARY]
    return Example(src, tgt, ner)


class Batch:
    """Right-padded arrays for a list of examples."""

    def __init__(self, config: ModelConfig, examples: Sequence[Example]):
        if not examples:
            raise ValueError("empty batch")
        self.size = B = len(examples)
        src_lens = [min(len(ex.src), config.max_src_len) for ex in examples]
        tgt_lens = [min(len(ex.tgt), config.max_tgt_len) for ex in examples]
        if min(src_lens) < 1:
            raise ValueError("source sequences must be non-empty")
        self.truncated_src = sum(len(ex.src) > config.max_src_len for ex in examples)
        self.truncated_tgt = sum(len(ex.tgt) > config.max_tgt_len for ex in examples)
        S, T = max(src_lens), max(tgt_lens)
        self.src = np.full((B, S), PAD, dtype=np.int64)
        self.src_mask = np.zeros((B, S))
        self.ner = np.full((B, S), NER_PAD, dtype=np.int64)
        self.tgt = np.full((B, T), PAD, dtype=np.int64)
        self.tgt_mask = np.zeros((B, T))
        for b, ex in enumerate(examples):
            n, m = src_lens[b], tgt_lens[b]
            self.src[b, :n] = ex.src[:n]
            self.src_mask[b, :n] = 1.0
            if config.use_ner:
                if ex.src_ner is None or len(ex.src_ner) != len(ex.src):
                    raise ValueError("NER model needs one feature per source token")
                self.ner[b, :n] = ex.src_ner[:n]
            self.tgt[b, :m] = ex.tgt[:m]
            self.tgt_mask[b, :m] = 1.0
        self.num_tokens = int(self.tgt_mask.sum())


# --- primitives ----------------------------------------------------------------------


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _gru_forward(x, h, w_in, w_hid, b_in, b_hid):
    H = h.shape[1]
    gx = x @ w_in.T + b_in
    gh = h @ w_hid.T + b_hid
    r = _sigmoid(gx[:, :H] + gh[:, :H])
    z = _sigmoid(gx[:, H : 2 * H] + gh[:, H : 2 * H])
    ghn = gh[:, 2 * H :]
    n = np.tanh(gx[:, 2 * H :] + r * ghn)
    return (1.0 - z) * n + z * h, (x, h, r, z, n, ghn)


def _gru_backward(dh_new, cache, w_in, w_hid, g_w_in, g_w_hid, g_b_in, g_b_hid):
    x, h, r, z, n, ghn = cache
    dn = dh_new * (1.0 - z)
    dz = dh_new * (h - n)
    dan = dn * (1.0 - n * n)
    dar = dan * ghn * r * (1.0 - r)
    daz = dz * z * (1.0 - z)
    dgx = np.concatenate([dar, daz, dan], axis=1)
    dgh = np.concatenate([dar, daz, dan * r], axis=1)
    g_w_in += dgx.T @ x
    g_b_in += dgx.sum(axis=0)
    g_w_hid += dgh.T @ h
    g_b_hid += dgh.sum(axis=0)
    return dgx @ w_in, dh_new * z + dgh @ w_hid


def _attend(h_prev, keys, values, mask, att_dec):
    """Batched attention: returns (weights, context, projected query)."""
    q = h_prev @ att_dec.T
    energy = np.einsum("bsa,ba->bs", keys, q)
    energy = np.where(mask > 0, energy, -np.inf)
    energy -= energy.max(axis=1, keepdims=True)
    w = np.exp(energy) * mask
    w /= w.sum(axis=1, keepdims=True)
    context = np.einsum("bs,bsh->bh", w, values)
    return w, context, q


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _dropout_mask(rng, shape, rate, dtype):
    if rng is None or rate == 0.0:
        return None
    return (rng.random(shape) >= rate).astype(dtype) / (1.0 - rate)


def _encoder_inputs(params: ModelParams, ids, ner):
    x = params["embedding"][ids]
    if params.config.use_ner:
        x = np.concatenate([x, np.eye(NER_DIM, dtype=x.dtype)[ner]], axis=-1)
    return x


def _run_encoder(params: ModelParams, batch: Batch, rng):
    cfg = params.config
    B, S = batch.src.shape
    H = cfg.hidden_dim
    dtype = params["embedding"].dtype
    h = np.zeros((B, H), dtype=dtype)
    states = np.zeros((B, S, H), dtype=dtype)
    caches = []
    for s in range(S):
        x = _encoder_inputs(params, batch.src[:, s], batch.ner[:, s])
        h_new, cache = _gru_forward(x, h, params["enc_w_in"], params["enc_w_hid"], params["enc_b_in"], params["enc_b_hid"])
        m = batch.src_mask[:, s : s + 1]
        h = m * h_new + (1.0 - m) * h
        states[:, s] = h
        caches.append(cache)
    drop = _dropout_mask(rng, states.shape, cfg.dropout, dtype)
    outputs = states if drop is None else states * drop
    return states, outputs, h, caches, drop


# --- single-example API ---------------------------------------------------------------


class Encoding(NamedTuple):
    states: np.ndarray  # (n, hidden)
    final: np.ndarray  # (hidden,)
    truncated: bool


def encode(params: ModelParams, config: ModelConfig, src_ids: Sequence[int], src_ner=None, rng=None) -> Encoding:
    """Run the encoder over one source sequence (truncated to ``max_src_len``).

    ``src_ner`` holds feature indices or tags, one per source id, and is
    required exactly when the model uses NER features. Dropout is applied to
    the returned states only when an ``rng`` is given.
    """
    if config.use_ner != (src_ner is not None):
        raise ValueError("src_ner must be given iff the model uses NER features")
    ner = None
    if src_ner is not None:
        if len(src_ner) != len(src_ids):
            raise ValueError("src_ner and src_ids differ in length")
        ner = [f if isinstance(f, (int, np.integer)) else ner_index(f) for f in src_ner]
    batch = Batch(config, [Example(list(src_ids), [EOS], ner)])
    _, outputs, final, _, _ = _run_encoder(params, batch, rng)
    return Encoding(outputs[0], final[0], bool(batch.truncated_src))


def attention_weights(params: ModelParams, dec_hidden_prev, enc_states, mask=None) -> np.ndarray:
    enc_states = np.asarray(enc_states)
    if enc_states.ndim != 2 or enc_states.shape[0] == 0:
        raise ValueError("attention needs a non-empty (n, hidden) array of encoder states")
    mask = np.ones(enc_states.shape[0]) if mask is None else np.asarray(mask, dtype=float)
    keys = enc_states @ params["att_enc"].T
    w, _, _ = _attend(np.asarray(dec_hidden_prev)[None], keys[None], enc_states[None], mask[None], params["att_dec"])
    return w[0]


def context_vector(weights, enc_states) -> np.ndarray:
    weights = np.asarray(weights)
    enc_states = np.asarray(enc_states)
    if weights.shape[0] != enc_states.shape[0]:
        raise ValueError("one weight per encoder state required")
    return weights @ enc_states


def decode_step(params: ModelParams, config: ModelConfig, prev_token_id: int, dec_hidden_prev, enc_states, mask=None, ban_unk=False):
    """One decoder step. Returns ``(logits, new_hidden, attention_weights)``."""
    enc_states = np.asarray(enc_states)
    h_prev = np.asarray(dec_hidden_prev)[None]
    mask = np.ones(enc_states.shape[0]) if mask is None else np.asarray(mask, dtype=float)
    keys = enc_states @ params["att_enc"].T
    w, context, _ = _attend(h_prev, keys[None], enc_states[None], mask[None], params["att_dec"])
    x = np.concatenate([params["embedding"][[prev_token_id]], context], axis=1)
    h, _ = _gru_forward(x, h_prev, params["dec_w_in"], params["dec_w_hid"], params["dec_b_in"], params["dec_b_hid"])
    logits = h[0] @ params["out_w"].T + params["out_b"]
    if ban_unk:
        logits[UNK] = -np.inf
    return logits, h[0], w[0]


def greedy_decode_ids(params: ModelParams, config: ModelConfig, src_ids, src_ner=None) -> list[int]:
    """Argmax decoding from SOS until EOS or ``max_tgt_len`` tokens; PAD/SOS (and UNK if banned) never emitted."""
    if config.max_tgt_len == 0:
        return []
    enc = encode(params, config, src_ids, src_ner)
    h = enc.final
    prev = SOS
    out = []
    banned = [PAD, SOS] + ([UNK] if config.unk_ban else [])
    for _ in range(config.max_tgt_len):
        logits, h, _ = decode_step(params, config, prev, h, enc.states)
        logits[banned] = -np.inf
        prev = int(np.argmax(logits))
        if prev == EOS:
            break
        out.append(prev)
    return out


def greedy_decode(params: ModelParams, config: ModelConfig, vocab, src_tokens: Sequence[str], src_tags=None) -> list[str]:
    ex = make_example(vocab, src_tokens, [], src_tags)
    return vocab.decode(greedy_decode_ids(params, config, ex.src, ex.src_ner))


# --- batched loss and gradients ---------------------------------------------------------


def _forward(params: ModelParams, batch: Batch, rng=None):
    """Mean token negative log-likelihood plus everything the backward pass needs.

    ``rng`` switches on training behaviour: dropout masks and, when
    ``teacher_forcing < 1``, sampled feeding of the model's own argmax.
    """
    cfg = params.config
    states, enc_out, h, enc_caches, enc_drop = _run_encoder(params, batch, rng)
    keys = enc_out @ params["att_enc"].T
    B, T = batch.tgt.shape
    dtype = states.dtype
    dec_drop = _dropout_mask(rng, (B, T, cfg.hidden_dim), cfg.dropout, dtype)
    denom = max(batch.num_tokens, 1)
    prev = np.full(B, SOS, dtype=np.int64)
    total = 0.0
    steps = []
    for j in range(T):
        h_prev = h
        w, context, q = _attend(h_prev, keys, enc_out, batch.src_mask, params["att_dec"])
        x = np.concatenate([params["embedding"][prev], context], axis=1)
        h, gru_cache = _gru_forward(x, h_prev, params["dec_w_in"], params["dec_w_hid"], params["dec_b_in"], params["dec_b_hid"])
        o = h if dec_drop is None else h * dec_drop[:, j]
        logits = o @ params["out_w"].T + params["out_b"]
        logp = _log_softmax(logits)
        gold = batch.tgt[:, j]
        tmask = batch.tgt_mask[:, j]
        total -= float((logp[np.arange(B), gold] * tmask).sum())
        dlogits = np.exp(logp)
        dlogits[np.arange(B), gold] -= 1.0
        dlogits *= tmask[:, None] / denom
        steps.append((prev, h_prev, w, q, gru_cache, o, dlogits))
        if rng is not None and cfg.teacher_forcing < 1.0:
            use_gold = rng.random(B) < cfg.teacher_forcing
            prev = np.where(use_gold, gold, logits.argmax(axis=1))
        else:
            prev = gold
    loss = total / denom
    cache = (batch, enc_caches, enc_drop, dec_drop, enc_out, keys, steps)
    return loss, cache


def _backward(params: ModelParams, cache) -> ModelParams:
    batch, enc_caches, enc_drop, dec_drop, enc_out, keys, steps = cache
    cfg = params.config
    E = cfg.embed_dim
    g = params.zeros_like()
    B, S, H = enc_out.shape
    d_out = np.zeros_like(enc_out)
    d_keys = np.zeros_like(keys)
    dh = np.zeros((B, H), dtype=enc_out.dtype)
    for j in range(len(steps) - 1, -1, -1):
        prev, h_prev, w, q, gru_cache, o, dlogits = steps[j]
        g["out_w"] += dlogits.T @ o
        g["out_b"] += dlogits.sum(axis=0)
        do = dlogits @ params["out_w"]
        dh = dh + (do if dec_drop is None else do * dec_drop[:, j])
        dx, dh_prev = _gru_backward(
            dh, gru_cache, params["dec_w_in"], params["dec_w_hid"], g["dec_w_in"], g["dec_w_hid"], g["dec_b_in"], g["dec_b_hid"]
        )
        np.add.at(g["embedding"], prev, dx[:, :E])
        dc = dx[:, E:]
        dw = np.einsum("bsh,bh->bs", enc_out, dc)
        d_out += w[:, :, None] * dc[:, None, :]
        de = w * (dw - (w * dw).sum(axis=1, keepdims=True))
        dq = np.einsum("bs,bsa->ba", de, keys)
        d_keys += de[:, :, None] * q[:, None, :]
        g["att_dec"] += dq.T @ h_prev
        dh = dh_prev + dq @ params["att_dec"]
    g["att_enc"] += np.einsum("bsa,bsh->ah", d_keys, enc_out)
    d_out += d_keys @ params["att_enc"]
    d_states = d_out if enc_drop is None else d_out * enc_drop
    for s in range(S - 1, -1, -1):
        dh = dh + d_states[:, s]
        m = batch.src_mask[:, s : s + 1]
        dx, dh_prev = _gru_backward(
            m * dh, enc_caches[s], params["enc_w_in"], params["enc_w_hid"], g["enc_w_in"], g["enc_w_hid"], g["enc_b_in"], g["enc_b_hid"]
        )
        np.add.at(g["embedding"], batch.src[:, s], dx[:, :E])
        dh = (1.0 - m) * dh + dh_prev
    return g


def _as_batch(config: ModelConfig, batch) -> Batch:
    return batch if isinstance(batch, Batch) else Batch(config, batch)


def forward_loss(params: ModelParams, config: ModelConfig, batch, rng=None) -> float:
    """Mean negative log-likelihood per target token; 0.0 for a batch without target tokens."""
    loss, _ = _forward(params, _as_batch(config, batch), rng)
    return loss


def loss_and_gradients(params: ModelParams, config: ModelConfig, batch, rng=None) -> tuple[float, ModelParams]:
    loss, cache = _forward(params, _as_batch(config, batch), rng)
    return loss, _backward(params, cache)


def gradients(params: ModelParams, config: ModelConfig, batch, rng=None) -> ModelParams:
    return loss_and_gradients(params, config, batch, rng)[1]
