"""The full nested-entity model: embed, graph-encode, label per type.

A forward pass embeds tokens into contextual vectors, seeds one text node
per token plus one node per entity type, runs the star-shaped attention
layers, and hands the refined node states to one tagging head per type over
a shared constrained transition matrix.  Training minimizes the sum of the
per-type sequence negative log-likelihoods; prediction decodes every type
independently and unions the span sets.
"""

from __future__ import annotations

from typing import Sequence

from .config import Config
from .corpus import NULL_POS, Sentence
from .encoder import EncoderConfig, HybridEmbedder, NodeInit, Vocabulary
from .entities import encode_nested
from .labeler import TransitionModel, TypeLabeler, TypedPrediction, nll, predict_entities
from .numerics import Tensor, ops
from .numerics.params import ParameterStore
from .numerics.tensor import no_grad
from .stargraph import GraphState, StarGraphEncoder, Topology, build_topology


class NestedNerModel:
    """Every trainable component wired end to end, owned by one store."""

    def __init__(
        self,
        config: Config,
        word_vocab: Vocabulary,
        char_vocab: Vocabulary,
        pos_vocab: Vocabulary,
    ):
        self.config = config
        self.word_vocab = word_vocab
        self.char_vocab = char_vocab
        self.pos_vocab = pos_vocab
        self.store = ParameterStore(seed=config.seed)
        encoder_config = EncoderConfig(
            char_dim=config.char_dim,
            char_hidden=config.char_dim // 2,
            surrogate_dim=config.surrogate_dim,
            word_dim=config.word_dim,
            pos_dim=config.pos_dim,
            hidden_dim=config.context_dim,
        )
        self.embedder = HybridEmbedder(
            self.store, encoder_config, char_vocab, word_vocab, pos_vocab
        )
        self.node_init = NodeInit(
            self.store, config.context_dim, config.node_dim, config.num_types
        )
        self.graph = StarGraphEncoder(
            self.store,
            node_dim=config.node_dim,
            heads=config.heads,
            depth=config.depth,
        )
        self.labelers = [
            TypeLabeler(self.store, f"label.type{t}", config.node_dim)
            for t in range(config.num_types)
        ]
        self.transitions = TransitionModel(
            self.store, mask_constant=config.mask_constant
        )
        self.store.finalize()
        self._topologies: dict[int, Topology] = {}

    @classmethod
    def build(cls, config: Config, sentences: Sequence[Sentence]) -> "NestedNerModel":
        """Construct a model whose vocabularies cover a training set."""
        tokens = [sentence.tokens for sentence in sentences]
        chars = [list(token) for sentence in sentences for token in sentence.tokens]
        pos = [sentence.pos_or_null() for sentence in sentences]
        return cls(
            config,
            word_vocab=Vocabulary.build(tokens),
            char_vocab=Vocabulary.build(chars),
            pos_vocab=Vocabulary.build(pos + [(NULL_POS,)]),
        )

    def _topology(self, length: int) -> Topology:
        if length not in self._topologies:
            self._topologies[length] = build_topology(
                length, self.config.num_types, self.config.window
            )
        return self._topologies[length]

    def encode(
        self, tokens: Sequence[str], pos_tags: Sequence[str]
    ) -> tuple[Tensor, Tensor]:
        """Token and type node states after all graph layers."""
        contextual = self.embedder.embed(tokens, pos_tags)
        state = GraphState(
            text=self.node_init.text_states(contextual),
            types=self.node_init.type_states(contextual),
        )
        state = self.graph.run_layers(state, self._topology(len(tokens)))
        return state.text, state.types

    def gold_tags(self, sentence: Sentence, type_id: int) -> list[int]:
        """The gold tag-index path for one type's entity subset."""
        spans = [s for s in sentence.entities if s.label == type_id]
        sequence = encode_nested(spans, len(sentence), type_id)
        return [int(tag) for tag in sequence.tags]

    def sentence_loss(self, sentence: Sentence) -> Tensor:
        """Sum of per-type sequence negative log-likelihoods."""
        text, types = self.encode(sentence.tokens, sentence.pos_or_null())
        transitions = self.transitions.masked()
        total: Tensor | None = None
        for type_id, labeler in enumerate(self.labelers):
            type_state = ops.reshape(
                ops.gather_rows(types, [type_id]), (self.config.node_dim,)
            )
            emissions = labeler.emissions(labeler.fuse(text, type_state))
            term = nll(emissions, transitions, self.gold_tags(sentence, type_id))
            total = term if total is None else ops.add(total, term)
        return total

    def predict(
        self, tokens: Sequence[str], pos_tags: Sequence[str] | None = None
    ) -> TypedPrediction:
        if pos_tags is None:
            pos_tags = (NULL_POS,) * len(tokens)
        with no_grad():
            text, types = self.encode(tokens, pos_tags)
            return predict_entities(text, types, self.labelers, self.transitions)

    def predict_sentence(self, sentence: Sentence) -> Sentence:
        """The input sentence with its entities replaced by predictions."""
        prediction = self.predict(sentence.tokens, sentence.pos)
        return Sentence(sentence.tokens, sentence.pos, prediction.union)
