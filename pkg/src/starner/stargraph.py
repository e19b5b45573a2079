"""Star-topology graph encoder over text and type nodes.

The graph has one text node per token and one global node per entity type.
Text node i is adjacent to the text nodes within a window of radius ``k``
(including itself) and to every type node; each type node is adjacent to
every text node but to no type node (its neighbor set is punctured).  Node
states update layer by layer in two strict steps: all text nodes aggregate
and update first, then all type nodes aggregate over the already-updated
text states.

Attention scores combine a concatenation term with a bilinear key-query
term.  The bilinear term is what lets two queries with the same neighbor
set rank those neighbors differently; a concatenation-only score shifts
every key by a per-query constant inside a monotone activation, so its key
ranking is query-independent (see ``baseline_gat_score``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import GatedCell
from .numerics import Tensor, ops
from .numerics.params import ParameterStore

ROLES = ("text", "type")


class Topology:
    """Adjacency of the star graph, stored as explicit neighbor lists.

    ``text_text[i]`` lists the text neighbors of text node i (every entry
    must lie within the window ``|j - i| <= k``), ``text_type[i]`` the type
    nodes it attends to, and ``type_text[t]`` the text nodes type node t
    attends to.  Boolean slot masks for the vectorized attention are
    precomputed here, so tests can build reduced topologies (for example
    with type messages removed) without touching the layer code.
    """

    def __init__(
        self,
        n: int,
        c: int,
        k: int,
        text_text: Sequence[Sequence[int]],
        text_type: Sequence[Sequence[int]],
        type_text: Sequence[Sequence[int]],
    ):
        if n < 1 or c < 1 or k < 0:
            raise ValueError("topology requires n >= 1, c >= 1, k >= 0")
        if len(text_text) != n or len(text_type) != n or len(type_text) != c:
            raise ValueError("neighbor list count does not match node counts")
        self.n, self.c, self.k = n, c, k
        self.text_text = tuple(tuple(row) for row in text_text)
        self.text_type = tuple(tuple(row) for row in text_type)
        self.type_text = tuple(tuple(row) for row in type_text)

        slots = 2 * k + 1
        offsets = np.arange(-k, k + 1, dtype=np.intp)
        positions = np.arange(n, dtype=np.intp)[:, None] + offsets[None, :]
        self.slot_index = np.clip(positions, 0, n - 1)
        window_mask = np.zeros((n, slots), dtype=bool)
        type_slot_mask = np.zeros((n, c), dtype=bool)
        for i in range(n):
            for j in self.text_text[i]:
                if not 0 <= j < n or abs(j - i) > k:
                    raise ValueError(
                        f"text neighbor {j} of node {i} is outside the window"
                    )
                window_mask[i, j - i + k] = True
            for t in self.text_type[i]:
                if not 0 <= t < c:
                    raise ValueError(f"type neighbor {t} of node {i} out of range")
                type_slot_mask[i, t] = True
        self.slot_mask = np.concatenate([window_mask, type_slot_mask], axis=1)
        self.type_mask = np.zeros((c, n), dtype=bool)
        for t in range(c):
            for j in self.type_text[t]:
                if not 0 <= j < n:
                    raise ValueError(f"text neighbor {j} of type node {t} out of range")
                self.type_mask[t, j] = True


def build_topology(n: int, c: int, k: int) -> Topology:
    """Standard star adjacency: clamped windows plus fully connected types."""
    text_text = tuple(
        tuple(range(max(0, i - k), min(n, i + k + 1))) for i in range(n)
    )
    text_type = tuple(tuple(range(c)) for _ in range(n))
    type_text = tuple(tuple(range(n)) for _ in range(c))
    return Topology(n, c, k, text_text, text_type, type_text)


class PairCount(int):
    """Total (query, key) score evaluations per layer per head.

    Behaves as the integer total; carries the per-side counts and the
    closed-form expression for the interior-dominated regime.
    """

    text_side: int
    type_side: int
    formula: str

    def __new__(cls, text_side: int, type_side: int, formula: str) -> "PairCount":
        self = super().__new__(cls, text_side + type_side)
        self.text_side = text_side
        self.type_side = type_side
        self.formula = formula
        return self


def count_attention_pairs(topology: Topology) -> PairCount:
    """Count score evaluations by summing the neighbor-list sizes."""
    text_side = sum(
        len(tt) + len(ty) for tt, ty in zip(topology.text_text, topology.text_type)
    )
    type_side = sum(len(row) for row in topology.type_text)
    n, c, k = topology.n, topology.c, topology.k
    formula = f"(2k+1+2c)*n - k*(k+1) = ({2 * k + 1 + 2 * c})*{n} - {k * (k + 1)}"
    return PairCount(text_side, type_side, formula)


class HeadParams:
    """One attention head: four projection maps, a score vector, a bilinear map.

    Projections are indexed by (target space, source role): a node of role
    ``phi`` is mapped into the aggregating node's space ``mu`` by the
    (mu, phi) affine map, so there are exactly four maps per head.
    """

    def __init__(self, store: ParameterStore, name: str, node_dim: int, head_dim: int):
        self.head_dim = head_dim
        self.maps = {}
        for mu in ROLES:
            for phi in ROLES:
                self.maps[(mu, phi)] = (
                    store.weight(f"{name}.proj.{mu}.{phi}.w", node_dim, head_dim),
                    store.bias(f"{name}.proj.{mu}.{phi}.b", head_dim),
                )
        self.score_vec = store.weight(f"{name}.score", 2 * head_dim)
        self.bilinear = store.weight(f"{name}.bilinear", head_dim, head_dim)


def project(head: HeadParams, value: Tensor, source_role: str, target_space: str) -> Tensor:
    """Map a node state of ``source_role`` into ``target_space``."""
    key = (target_space, source_role)
    if key not in head.maps:
        raise ValueError(
            f"no projection map for target space {target_space!r} and "
            f"source role {source_role!r}"
        )
    w, b = head.maps[key]
    return ops.affine(value, w, b)


def hybrid_score(key: Tensor, query: Tensor, score_vec: Tensor, bilinear: Tensor) -> Tensor:
    """Scalar attention score: LeakyReLU(a·(key‖query) + key·(W query)).

    Both the concatenation term (key half first, query half second) and the
    bilinear term are asymmetric in (key, query); self-pairs key == query
    are well defined.
    """
    pair = ops.concat([key, query], axis=0)
    linear = ops.sum_along(ops.mul(score_vec, pair), axis=0)
    quad = ops.sum_along(ops.mul(key, ops.matmul(bilinear, query)), axis=0)
    return ops.leaky_relu(ops.add(linear, quad))


def baseline_gat_score(query: Tensor, key: Tensor, score_vec: Tensor) -> Tensor:
    """Concatenation-only score: LeakyReLU(a·(query‖key)).

    Kept solely to demonstrate its pathology — for a fixed key set the
    query contributes a constant offset inside a monotone activation, so
    every query ranks the keys identically.  It is not part of the model.
    """
    pair = ops.concat([query, key], axis=0)
    return ops.leaky_relu(ops.sum_along(ops.mul(score_vec, pair), axis=0))


def attend(
    head: HeadParams,
    target_space: str,
    query_state: Tensor,
    neighbors: Sequence[tuple[str, Tensor]],
) -> Tensor:
    """Reference single-query aggregation over an explicit neighbor list.

    This is the definitional route — score every (role, state) neighbor
    with ``hybrid_score``, softmax, and sum the projected neighbors.  The
    layer code computes the same quantity vectorized; tests hold the two
    routes together.
    """
    if not neighbors:
        raise ValueError("neighbor set must be nonempty")
    query = project(head, query_state, target_space, target_space)
    projected = []
    scores = []
    for role, state in neighbors:
        key = project(head, state, role, target_space)
        projected.append(ops.reshape(key, (1, head.head_dim)))
        scores.append(
            ops.reshape(hybrid_score(key, query, head.score_vec, head.bilinear), (1,))
        )
    stacked = ops.concat(scores, axis=0)
    alpha = ops.masked_softmax(stacked, np.ones(len(neighbors), dtype=bool), axis=0)
    keys = ops.concat(projected, axis=0)
    return ops.sum_along(ops.mul(ops.reshape(alpha, (len(neighbors), 1)), keys), axis=0)


class GraphLayer:
    """Per-layer parameters: the attention heads and the two update cells."""

    def __init__(self, store: ParameterStore, name: str, node_dim: int, heads: int):
        head_dim = node_dim // heads
        self.heads = [
            HeadParams(store, f"{name}.head{m}", node_dim, head_dim)
            for m in range(heads)
        ]
        self.text_cell = GatedCell(store, f"{name}.text_cell", node_dim, node_dim)
        self.type_cell = GatedCell(store, f"{name}.type_cell", node_dim, node_dim)


@dataclass
class GraphState:
    """Node states between iterations: text rows, type rows, layers applied."""

    text: Tensor
    types: Tensor
    layer: int = 0


class StarGraphEncoder:
    """Stack of two-step graph layers with independent per-layer parameters."""

    def __init__(
        self,
        store: ParameterStore,
        node_dim: int = 64,
        heads: int = 4,
        depth: int = 3,
        name: str = "graph",
    ):
        if node_dim % heads:
            raise ValueError("node_dim must be divisible by the head count")
        if depth < 1:
            raise ValueError("depth must be at least 1")
        self.node_dim = node_dim
        self.depth = depth
        self.layers = [
            GraphLayer(store, f"{name}.layer{l}", node_dim, heads)
            for l in range(depth)
        ]

    @staticmethod
    def _split_score_vec(head: HeadParams):
        d = head.head_dim
        a_key = ops.gather_rows(head.score_vec, np.arange(d, dtype=np.intp))
        a_query = ops.gather_rows(head.score_vec, np.arange(d, 2 * d, dtype=np.intp))
        return a_key, a_query

    def _text_head(
        self, head: HeadParams, text: Tensor, types: Tensor, topo: Topology
    ) -> Tensor:
        n, c, dh = topo.n, topo.c, head.head_dim
        slots = 2 * topo.k + 1
        a_key, a_query = self._split_score_vec(head)
        keys_text = project(head, text, "text", "text")
        keys_type = project(head, types, "type", "text")
        query = keys_text  # queries are text nodes projected into their own space
        flat_idx = topo.slot_index.reshape(-1)

        key_term = ops.reshape(
            ops.gather_rows(ops.matmul(keys_text, a_key), flat_idx), (n, slots)
        )
        bil_rows = ops.matmul(keys_text, head.bilinear)  # row j = keys_text[j] @ W
        gathered = ops.reshape(ops.gather_rows(bil_rows, flat_idx), (n, slots, dh))
        bil_term = ops.sum_along(
            ops.mul(gathered, ops.reshape(query, (n, 1, dh))), axis=2
        )
        query_term = ops.reshape(ops.matmul(query, a_query), (n, 1))
        pre_window = ops.add(ops.add(key_term, bil_term), query_term)

        type_key_term = ops.reshape(ops.matmul(keys_type, a_key), (1, c))
        type_bil = ops.matmul(query, ops.transpose(ops.matmul(keys_type, head.bilinear)))
        pre_types = ops.add(ops.add(type_bil, type_key_term), query_term)

        scores = ops.leaky_relu(ops.concat([pre_window, pre_types], axis=1))
        alpha = ops.masked_softmax(scores, topo.slot_mask, axis=1)

        values_window = ops.reshape(ops.gather_rows(keys_text, flat_idx), (n, slots, dh))
        values_types = ops.mul(
            ops.reshape(keys_type, (1, c, dh)), Tensor(np.ones((n, 1, 1)))
        )
        values = ops.concat([values_window, values_types], axis=1)
        weighted = ops.mul(ops.reshape(alpha, (n, slots + c, 1)), values)
        return ops.sum_along(weighted, axis=1)

    def _type_head(
        self, head: HeadParams, updated_text: Tensor, types: Tensor, topo: Topology
    ) -> Tensor:
        n, c = topo.n, topo.c
        a_key, a_query = self._split_score_vec(head)
        keys = project(head, updated_text, "text", "type")
        query = project(head, types, "type", "type")
        key_term = ops.reshape(ops.matmul(keys, a_key), (1, n))
        query_term = ops.reshape(ops.matmul(query, a_query), (c, 1))
        bil = ops.matmul(query, ops.transpose(ops.matmul(keys, head.bilinear)))
        scores = ops.leaky_relu(ops.add(ops.add(bil, key_term), query_term))
        alpha = ops.masked_softmax(scores, topo.type_mask, axis=1)
        return ops.matmul(alpha, keys)

    def layer_step(self, state: GraphState, topology: Topology) -> GraphState:
        """One iteration: update all text nodes, then all type nodes.

        Text nodes aggregate from the incoming snapshot; type nodes
        aggregate over the freshly updated text states.  The layer counter
        selects this iteration's parameters.
        """
        if state.layer >= self.depth:
            raise ValueError(
                f"state has already passed through all {self.depth} layers"
            )
        if state.text.data.shape[0] != topology.n or state.types.data.shape[0] != topology.c:
            raise ValueError("state row counts do not match the topology")
        layer = self.layers[state.layer]
        g_text = ops.concat(
            [self._text_head(h, state.text, state.types, topology) for h in layer.heads],
            axis=-1,
        )
        new_text = layer.text_cell.apply(g_text, state.text)
        g_type = ops.concat(
            [self._type_head(h, new_text, state.types, topology) for h in layer.heads],
            axis=-1,
        )
        new_types = layer.type_cell.apply(g_type, state.types)
        return GraphState(new_text, new_types, state.layer + 1)

    def run_layers(
        self, state: GraphState, topology: Topology, depth: int | None = None
    ) -> GraphState:
        """Fold layer_step ``depth`` times (default: the full stack)."""
        depth = self.depth if depth is None else depth
        if depth < 1:
            raise ValueError("depth must be at least 1")
        for _ in range(depth):
            state = self.layer_step(state, topology)
        return state
