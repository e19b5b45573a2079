"""Per-type sequence labeling with a constrained linear-chain CRF.

Each entity type gets its own fusion of the graph's text states with that
type's node state, its own emission layer, and one BIOES tag sequence per
sentence.  A single transition matrix, shared across types, scores tag
bigrams; transitions that can never occur in a nesting-tolerant BIOES
encoding are pushed down by a large additive penalty.  Decoding runs the
Viterbi algorithm per type and unions the decoded span sets — identical
spans with different labels survive the union, which is what makes
multi-label entities expressible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .encoder import BiGru
from .entities import BioesTag, DecodeError, EntitySpan, TagSequence, decode_nested
from .numerics import Tensor, ops
from .numerics.params import ParameterStore
from .numerics.tensor import record

NUM_TAGS = len(BioesTag)  # 5
START_STATE = NUM_TAGS  # 5
END_STATE = NUM_TAGS + 1  # 6
MASK_CONSTANT = -1e4


class DataError(ValueError):
    """A gold annotation violates the tag-transition automaton."""


def build_constraint_mask() -> np.ndarray:
    """Legality matrix over {B,I,O,E,S} plus virtual start/end states.

    True marks a legal transition.  The automaton accepts exactly the tag
    bigrams reachable by encoding a representable nested span set:

    * O never borders the inside or end of a span it does not cover, so
      B→O, I→O, O→I and O→E are illegal.
    * A sequence cannot open inside a span (start→I, start→E illegal) and
      cannot end with one unclosed (B→end, I→end illegal).
    * Every other tag bigram occurs in some nested encoding — including
      B→B, E→E, E→I, S→E and the other nesting signatures that a flat
      single-span reading would forbid.
    """
    size = NUM_TAGS + 2
    legal = np.zeros((size, size), dtype=bool)
    legal[:NUM_TAGS, :NUM_TAGS] = True
    for a, b in [
        (BioesTag.B, BioesTag.O),
        (BioesTag.I, BioesTag.O),
        (BioesTag.O, BioesTag.I),
        (BioesTag.O, BioesTag.E),
    ]:
        legal[a, b] = False
    legal[START_STATE, [BioesTag.B, BioesTag.O, BioesTag.S]] = True
    legal[[BioesTag.O, BioesTag.E, BioesTag.S], END_STATE] = True
    return legal


class TransitionModel:
    """Learned transition scores plus the additive legality penalty."""

    def __init__(
        self,
        store: ParameterStore,
        name: str = "crf",
        mask_constant: float = MASK_CONSTANT,
    ):
        size = NUM_TAGS + 2
        self.raw = store.weight(f"{name}.transitions", size, size)
        self.mask = build_constraint_mask()
        self._penalty = np.where(self.mask, 0.0, mask_constant)

    def masked(self) -> Tensor:
        """Transition matrix with illegal entries penalized by -1e4."""
        return ops.add(self.raw, Tensor(self._penalty))


def check_path_legal(tags: list[int], mask: np.ndarray) -> None:
    """Raise DataError naming the first illegal transition in a tag path."""

    def name(state: int) -> str:
        if state == START_STATE:
            return "start"
        if state == END_STATE:
            return "end"
        return BioesTag(state).name

    path = [START_STATE, *tags, END_STATE]
    for pos, (a, b) in enumerate(zip(path, path[1:])):
        if not mask[a, b]:
            raise DataError(
                f"illegal transition {name(a)}->{name(b)} entering position {pos}"
            )


def path_score(emissions: Tensor, transitions: Tensor, tags: list[int]) -> Tensor:
    """Score one tag path: its transitions (with start/end) plus emissions."""
    length = emissions.data.shape[0]
    if len(tags) != length:
        raise ValueError("tag path length does not match the emission rows")
    width = NUM_TAGS + 2
    path = [START_STATE, *tags, END_STATE]
    trans_idx = np.array(
        [a * width + b for a, b in zip(path, path[1:])], dtype=np.intp
    )
    emit_idx = np.array(
        [i * NUM_TAGS + y for i, y in enumerate(tags)], dtype=np.intp
    )
    trans_sum = ops.sum_along(
        ops.gather_rows(ops.reshape(transitions, (width * width,)), trans_idx), axis=0
    )
    emit_sum = ops.sum_along(
        ops.gather_rows(ops.reshape(emissions, (length * NUM_TAGS,)), emit_idx), axis=0
    )
    return ops.add(trans_sum, emit_sum)


def log_partition(emissions: Tensor, transitions: Tensor) -> Tensor:
    """Log normalizer over all tag paths, as one fused tape node.

    The forward recursion and its marginal-based backward both run on the
    active kernel lane.
    """
    emissions = emissions if isinstance(emissions, Tensor) else Tensor(emissions)
    transitions = transitions if isinstance(transitions, Tensor) else Tensor(transitions)
    e = np.ascontiguousarray(emissions.data)
    t = np.ascontiguousarray(transitions.data)
    log_z, alpha = kernels.crf_forward(e, t)

    def build():
        def bwd(g):
            return kernels.crf_backward(e, t, alpha, log_z, float(g))

        return bwd

    return record(
        np.asarray(log_z, dtype=np.float64), (emissions, transitions), build, "crf_log_z"
    )


def nll(emissions: Tensor, transitions: Tensor, gold: list[int]) -> Tensor:
    """Negative log-likelihood of a gold path; the gold path must be legal."""
    check_path_legal(gold, build_constraint_mask())
    return ops.sub(
        log_partition(emissions, transitions), path_score(emissions, transitions, gold)
    )


def viterbi(emissions: np.ndarray, transitions: np.ndarray) -> tuple[list[int], float]:
    """Best tag path and its score; ties break toward the lowest tag index."""
    return kernels.viterbi(np.asarray(emissions), np.asarray(transitions))


class TypeLabeler:
    """One type's fusion, maxout combiner, and emission parameters."""

    def __init__(self, store: ParameterStore, name: str, node_dim: int):
        if node_dim % 2:
            raise ValueError("node_dim must be even (split across directions)")
        half = node_dim // 2
        self.node_dim = node_dim
        self.init_w = store.weight(f"{name}.init.w", node_dim, half)
        self.init_b = store.bias(f"{name}.init.b", half)
        self.rnn = BiGru(store, f"{name}.rnn", node_dim, half)
        self.maxout_w1 = store.weight(f"{name}.maxout1.w", 2 * node_dim, node_dim)
        self.maxout_b1 = store.bias(f"{name}.maxout1.b", node_dim)
        self.maxout_w2 = store.weight(f"{name}.maxout2.w", 2 * node_dim, node_dim)
        self.maxout_b2 = store.bias(f"{name}.maxout2.b", node_dim)
        self.emit_w = store.weight(f"{name}.emit.w", node_dim, NUM_TAGS)
        self.emit_b = store.bias(f"{name}.emit.b", NUM_TAGS)

    def fuse(self, text_states: Tensor, type_state: Tensor) -> Tensor:
        """Blend text states with one type node, shape (n, node_dim).

        The type state seeds both directions of a recurrent pass over the
        text states (through one shared width-halving projection); each
        position then passes a two-piece maxout over the concatenation of
        (recurrent output + text state) with the type state itself.
        """
        n, dim = text_states.data.shape
        h0 = ops.reshape(ops.affine(type_state, self.init_w, self.init_b), (1, dim // 2))
        states = self.rnn.run(
            ops.reshape(text_states, (n, 1, dim)), h0_fwd=h0, h0_bwd=h0
        )
        recurrent = ops.reshape(states, (n, dim))
        tiled_type = ops.mul(
            ops.reshape(type_state, (1, dim)), Tensor(np.ones((n, 1)))
        )
        u = ops.concat([ops.add(recurrent, text_states), tiled_type], axis=1)
        return ops.maximum(
            ops.affine(u, self.maxout_w1, self.maxout_b1),
            ops.affine(u, self.maxout_w2, self.maxout_b2),
        )

    def emissions(self, fused: Tensor) -> Tensor:
        """Per-position tag scores, shape (n, 5)."""
        return ops.affine(fused, self.emit_w, self.emit_b)


@dataclass(frozen=True)
class TypedPrediction:
    """Per-type decoded sequences and spans, plus their label-aware union."""

    sequences: tuple[TagSequence, ...]
    per_type: tuple[frozenset[EntitySpan], ...]

    @property
    def union(self) -> frozenset[EntitySpan]:
        out: set[EntitySpan] = set()
        for spans in self.per_type:
            out |= spans
        return frozenset(out)


def predict_entities(
    text_states: Tensor,
    type_states: Tensor,
    labelers: list[TypeLabeler],
    transition_model: TransitionModel,
) -> TypedPrediction:
    """Decode every type independently and union the span sets.

    No cross-type deduplication happens: two types decoding the same span
    yield two distinctly labeled entities.
    """
    if type_states.data.shape[0] != len(labelers):
        raise ValueError("one labeler per type node is required")
    masked = transition_model.masked().data
    sequences = []
    spans = []
    for type_id, labeler in enumerate(labelers):
        type_state = Tensor(type_states.data[type_id].copy())
        scores = labeler.emissions(labeler.fuse(text_states, type_state))
        tags, _ = viterbi(scores.data, masked)
        sequence = TagSequence(tuple(BioesTag(t) for t in tags), type_id)
        try:
            decoded = decode_nested(sequence)
        except DecodeError as err:
            raise DecodeError(
                f"type {type_id}: undecodable tag sequence ({err})", err.index
            ) from err
        sequences.append(sequence)
        spans.append(decoded)
    return TypedPrediction(tuple(sequences), tuple(spans))
