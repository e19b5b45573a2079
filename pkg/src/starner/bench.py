"""Forward-pass scaling measurements across sentence lengths.

For each requested length the benchmark reports the exact attention pair
count of the star topology, the dense-baseline pair count n², and the
median wall time of repeated full network forwards (embedding, graph
layers, and per-type emission scores) on a synthetic sentence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

from .config import Config
from .encoder import Vocabulary
from .model import NestedNerModel
from .numerics import Tensor
from .numerics.tensor import no_grad
from .stargraph import build_topology, count_attention_pairs

_BENCH_VOCAB = 64
_BENCH_POS = ("N", "V", "D")


@dataclass(frozen=True)
class BenchRow:
    n: int
    pairs: int
    quadratic_pairs: int
    median_ms: float


def synthetic_model(config: Config) -> NestedNerModel:
    """A model over a small fixed vocabulary, for timing only."""
    words = [f"w{i}" for i in range(_BENCH_VOCAB)]
    return NestedNerModel(
        config,
        word_vocab=Vocabulary(words),
        char_vocab=Vocabulary(sorted({c for w in words for c in w})),
        pos_vocab=Vocabulary(_BENCH_POS),
    )


def _sentence(n: int) -> tuple[list[str], list[str]]:
    tokens = [f"w{i % _BENCH_VOCAB}" for i in range(n)]
    pos = [_BENCH_POS[i % len(_BENCH_POS)] for i in range(n)]
    return tokens, pos


def forward_pass(model: NestedNerModel, tokens: Sequence[str],
                 pos: Sequence[str]) -> None:
    with no_grad():
        text, types = model.encode(tokens, pos)
        for type_id, labeler in enumerate(model.labelers):
            type_state = Tensor(types.data[type_id].copy())
            labeler.emissions(labeler.fuse(text, type_state))


def median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


def bench_forward(config: Config, sizes: Sequence[int],
                  repeats: int = 5) -> list[BenchRow]:
    if list(sizes) != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be strictly ascending")
    if repeats < 5:
        raise ValueError("at least 5 timed passes are required")
    model = synthetic_model(config)
    rows = []
    for n in sizes:
        tokens, pos = _sentence(n)
        topology = build_topology(n, config.num_types, config.window)
        forward_pass(model, tokens, pos)  # warm up caches
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            forward_pass(model, tokens, pos)
            times.append((time.perf_counter() - start) * 1000.0)
        rows.append(
            BenchRow(
                n=n,
                pairs=int(count_attention_pairs(topology)),
                quadratic_pairs=n * n,
                median_ms=median(times),
            )
        )
    return rows


def format_csv(rows: Sequence[BenchRow]) -> str:
    lines = ["n,pairs,quadratic_pairs,median_ms"]
    lines += [
        f"{r.n},{r.pairs},{r.quadratic_pairs},{r.median_ms:.3f}" for r in rows
    ]
    return "\n".join(lines)
