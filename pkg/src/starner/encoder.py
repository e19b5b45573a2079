"""Token encoding: hybrid embeddings fused by a bidirectional recurrent layer.

Every token is described four ways — by its characters (a small recurrent
encoder over the spelling), by two learned per-token tables (a static table
and a wider "surrogate" table standing in for externally trained vectors),
and by its part-of-speech tag.  The concatenation runs through a
bidirectional gated recurrent layer to produce one contextual vector per
token.  This module also hosts the reusable pieces built on top of that
representation: the gated update cell used by the graph encoder and the
projections that seed graph node states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numerics import Tensor, ops
from .numerics.params import ParameterStore

PAD_SYMBOL = "<pad>"
UNK_SYMBOL = "<unk>"


class Vocabulary:
    """Bidirectional symbol/id map with reserved padding and unknown ids."""

    def __init__(self, symbols: Iterable[str]):
        self._symbols = [PAD_SYMBOL, UNK_SYMBOL]
        seen = set(self._symbols)
        for sym in symbols:
            if sym not in seen:
                seen.add(sym)
                self._symbols.append(sym)
        self._ids = {sym: i for i, sym in enumerate(self._symbols)}

    pad_id = 0
    unk_id = 1

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]]) -> "Vocabulary":
        """Collect symbols from token sequences in first-seen order."""
        flat: list[str] = []
        for seq in sequences:
            flat.extend(seq)
        return cls(sorted(set(flat)))

    @property
    def size(self) -> int:
        return len(self._symbols)

    def encode(self, symbol: str) -> int:
        return self._ids.get(symbol, self.unk_id)

    def encode_all(self, symbols: Sequence[str]) -> np.ndarray:
        return np.array([self.encode(s) for s in symbols], dtype=np.intp)

    def decode(self, index: int) -> str:
        return self._symbols[index]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def to_dict(self) -> dict:
        return {"symbols": self._symbols[2:]}

    @classmethod
    def from_dict(cls, payload: dict) -> "Vocabulary":
        return cls(payload["symbols"])


def _reversal_indices(t_len: int, lengths: np.ndarray) -> np.ndarray:
    """Per-column index map flipping each sequence within its own length.

    Positions at or past a sequence's length map to themselves, so padding
    stays at the tail and the map is an involution.
    """
    idx = np.tile(np.arange(t_len, dtype=np.intp)[:, None], (1, len(lengths)))
    for b, length in enumerate(lengths):
        idx[:length, b] = np.arange(length - 1, -1, -1)
    return idx


def reverse_time(x: Tensor, lengths: np.ndarray | None = None) -> Tensor:
    """Flip a (T, B, D) tensor along time, respecting per-sequence lengths."""
    t_len, batch, dim = x.data.shape
    if lengths is None:
        lengths = np.full(batch, t_len, dtype=np.intp)
    idx = _reversal_indices(t_len, np.asarray(lengths, dtype=np.intp))
    flat_idx = (idx * batch + np.arange(batch, dtype=np.intp)[None, :]).reshape(-1)
    flat = ops.reshape(x, (t_len * batch, dim))
    return ops.reshape(ops.gather_rows(flat, flat_idx), (t_len, batch, dim))


def masked_mean_pool(x: Tensor, lengths: np.ndarray) -> Tensor:
    """Average a (T, B, D) tensor over time, counting only valid positions."""
    t_len, batch, _ = x.data.shape
    lengths = np.asarray(lengths, dtype=np.float64)
    if np.any(lengths < 1) or np.any(lengths > t_len):
        raise ValueError("sequence lengths must lie in [1, T]")
    mask = (np.arange(t_len)[:, None] < lengths[None, :]).astype(np.float64)
    scaled = ops.mul(x, Tensor(mask[:, :, None] / lengths[None, :, None]))
    return ops.sum_along(scaled, axis=0)


class BiGru:
    """Bidirectional gated recurrent layer over a (T, B, D) sequence."""

    def __init__(self, store: ParameterStore, name: str, input_dim: int, hidden: int):
        self.hidden = hidden
        self.fwd = tuple(
            (
                store.weight(f"{name}.fwd.wx", input_dim, 3 * hidden),
                store.weight(f"{name}.fwd.wh", hidden, 3 * hidden),
                store.bias(f"{name}.fwd.bx", 3 * hidden),
                store.bias(f"{name}.fwd.bh", 3 * hidden),
            )
        )
        self.bwd = tuple(
            (
                store.weight(f"{name}.bwd.wx", input_dim, 3 * hidden),
                store.weight(f"{name}.bwd.wh", hidden, 3 * hidden),
                store.bias(f"{name}.bwd.bx", 3 * hidden),
                store.bias(f"{name}.bwd.bh", 3 * hidden),
            )
        )

    def run(
        self,
        x: Tensor,
        lengths: np.ndarray | None = None,
        h0_fwd: Tensor | None = None,
        h0_bwd: Tensor | None = None,
    ) -> Tensor:
        """Return the (T, B, 2H) concatenation of both directions' states.

        With ``lengths``, each sequence is reversed within its own valid
        prefix, so padded tails never feed either direction's recurrence at
        valid positions.
        """
        if x.data.shape[0] == 0:
            raise ValueError("cannot run a recurrent layer over an empty sequence")
        batch = x.data.shape[1]
        zeros = Tensor(np.zeros((batch, self.hidden)))
        forward = ops.gru_scan(x, h0_fwd if h0_fwd is not None else zeros, *self.fwd)
        flipped = reverse_time(x, lengths)
        backward = ops.gru_scan(
            flipped, h0_bwd if h0_bwd is not None else zeros, *self.bwd
        )
        return ops.concat([forward, reverse_time(backward, lengths)], axis=-1)


class GatedCell:
    """Single-step gated state update blending old state with a candidate.

    Six weight matrices and six bias vectors, one (W, b) pair per gate and
    side.  Given an input ``x`` and the previous state ``h``::

        r = sigmoid(x Wxr + bxr + h Whr + bhr)
        z = sigmoid(x Wxz + bxz + h Whz + bhz)
        c = tanh(x Wxn + bxn + r * (h Whn + bhn))
        out = z * h + (1 - z) * c

    With all parameters at zero the update returns ``0.5 * h``; saturating
    ``z`` toward 1 (large bxz/bhz) returns ``h`` unchanged.
    """

    def __init__(self, store: ParameterStore, name: str, input_dim: int, state_dim: int):
        self.wxr = store.weight(f"{name}.wxr", input_dim, state_dim)
        self.wxz = store.weight(f"{name}.wxz", input_dim, state_dim)
        self.wxn = store.weight(f"{name}.wxn", input_dim, state_dim)
        self.whr = store.weight(f"{name}.whr", state_dim, state_dim)
        self.whz = store.weight(f"{name}.whz", state_dim, state_dim)
        self.whn = store.weight(f"{name}.whn", state_dim, state_dim)
        self.bxr = store.bias(f"{name}.bxr", state_dim)
        self.bxz = store.bias(f"{name}.bxz", state_dim)
        self.bxn = store.bias(f"{name}.bxn", state_dim)
        self.bhr = store.bias(f"{name}.bhr", state_dim)
        self.bhz = store.bias(f"{name}.bhz", state_dim)
        self.bhn = store.bias(f"{name}.bhn", state_dim)

    def apply(self, x: Tensor, h: Tensor) -> Tensor:
        reset = ops.sigmoid(
            ops.affine(x, self.wxr, self.bxr) + ops.affine(h, self.whr, self.bhr)
        )
        keep = ops.sigmoid(
            ops.affine(x, self.wxz, self.bxz) + ops.affine(h, self.whz, self.bhz)
        )
        candidate = ops.tanh(
            ops.affine(x, self.wxn, self.bxn)
            + reset * ops.affine(h, self.whn, self.bhn)
        )
        one_minus = ops.sub(1.0, keep)
        return keep * h + one_minus * candidate


@dataclass(frozen=True)
class EncoderConfig:
    """Widths of the embedding tables and recurrent layers."""

    char_dim: int = 16
    char_hidden: int = 8
    surrogate_dim: int = 32
    word_dim: int = 32
    pos_dim: int = 8
    hidden_dim: int = 64

    def __post_init__(self):
        if self.hidden_dim % 2:
            raise ValueError("hidden_dim must be even (split across directions)")


class HybridEmbedder:
    """Produces one contextual vector per token from four feature families."""

    def __init__(
        self,
        store: ParameterStore,
        config: EncoderConfig,
        char_vocab: Vocabulary,
        word_vocab: Vocabulary,
        pos_vocab: Vocabulary,
    ):
        self.config = config
        self.char_vocab = char_vocab
        self.word_vocab = word_vocab
        self.pos_vocab = pos_vocab
        self.char_table = store.weight("embed.char", char_vocab.size, config.char_dim)
        self.surrogate_table = store.weight(
            "embed.surrogate", word_vocab.size, config.surrogate_dim
        )
        self.word_table = store.weight("embed.word", word_vocab.size, config.word_dim)
        self.pos_table = store.weight("embed.pos", pos_vocab.size, config.pos_dim)
        self.char_rnn = BiGru(store, "char_rnn", config.char_dim, config.char_hidden)
        fused = (
            2 * config.char_hidden
            + config.surrogate_dim
            + config.word_dim
            + config.pos_dim
        )
        self.fusion_rnn = BiGru(store, "fusion_rnn", fused, config.hidden_dim // 2)

    def _char_features(self, tokens: Sequence[str]) -> Tensor:
        lengths = np.array([max(len(t), 1) for t in tokens], dtype=np.intp)
        t_len = int(lengths.max())
        ids = np.full((t_len, len(tokens)), Vocabulary.pad_id, dtype=np.intp)
        for b, token in enumerate(tokens):
            for t, ch in enumerate(token):
                ids[t, b] = self.char_vocab.encode(ch)
        emb = ops.reshape(
            ops.gather_rows(self.char_table, ids.reshape(-1)),
            (t_len, len(tokens), self.config.char_dim),
        )
        states = self.char_rnn.run(emb, lengths)
        return masked_mean_pool(states, lengths)

    def embed(self, tokens: Sequence[str], pos_tags: Sequence[str]) -> Tensor:
        """Map a sentence to contextual token vectors, shape (n, hidden_dim)."""
        if len(tokens) != len(pos_tags):
            raise ValueError("tokens and pos_tags must align")
        if not tokens:
            raise ValueError("cannot embed an empty sentence")
        word_ids = self.word_vocab.encode_all(tokens)
        pos_ids = self.pos_vocab.encode_all(pos_tags)
        per_token = ops.concat(
            [
                self._char_features(tokens),
                ops.gather_rows(self.surrogate_table, word_ids),
                ops.gather_rows(self.word_table, word_ids),
                ops.gather_rows(self.pos_table, pos_ids),
            ],
            axis=-1,
        )
        n, fused = per_token.data.shape
        contextual = self.fusion_rnn.run(ops.reshape(per_token, (n, 1, fused)))
        return ops.reshape(contextual, (n, self.config.hidden_dim))


class NodeInit:
    """Seeds graph node states from contextual token vectors.

    Text nodes get a shared linear projection.  Each type node starts from
    its own projection of the token vectors, element-wise max-pooled over
    the sentence, so every type begins with a distinct global summary.
    """

    def __init__(
        self, store: ParameterStore, hidden_dim: int, node_dim: int, num_types: int
    ):
        self.num_types = num_types
        self.text_w = store.weight("node_init.text.w", hidden_dim, node_dim)
        self.text_b = store.bias("node_init.text.b", node_dim)
        self.type_w = [
            store.weight(f"node_init.type{t}.w", hidden_dim, node_dim)
            for t in range(num_types)
        ]
        self.type_b = [
            store.bias(f"node_init.type{t}.b", node_dim) for t in range(num_types)
        ]

    def text_states(self, contextual: Tensor) -> Tensor:
        return ops.affine(contextual, self.text_w, self.text_b)

    def type_states(self, contextual: Tensor) -> Tensor:
        node_dim = self.text_w.data.shape[1]
        pooled = [
            ops.reshape(
                ops.max_pool(ops.affine(contextual, w, b), axis=0), (1, node_dim)
            )
            for w, b in zip(self.type_w, self.type_b)
        ]
        return ops.concat(pooled, axis=0)


def load_word_vectors(path: str, vocab: Vocabulary, table) -> int:
    """Copy pretrained vectors (text format: token then floats) into a table.

    Rows are matched by vocabulary lookup; tokens absent from the vocabulary
    are skipped.  Returns the number of rows loaded.
    """
    dim = table.data.shape[1]
    loaded = 0
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) == 2 and line_no == 1:
                continue  # optional "count dim" header
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise ValueError(
                    f"line {line_no}: expected {dim} values, got {len(values)}"
                )
            if token in vocab:
                table.data[vocab.encode(token)] = np.array(values, dtype=np.float64)
                loaded += 1
    return loaded
