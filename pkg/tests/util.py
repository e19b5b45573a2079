"""Shared test oracles: independent reference implementations and generators.

Everything here is deliberately written from scratch against the documented
behavior (enumeration, hand loops) rather than by calling package internals,
so tests compare two independent derivations of the same quantity.
"""

from __future__ import annotations

import itertools

import numpy as np

from starner.entities import EntitySpan


def crf_enumerate(emissions: np.ndarray, transitions: np.ndarray):
    """Score every tag path explicitly.

    Returns (log_partition, best_score, set of best paths).  ``transitions``
    is (G+2, G+2) with start row G and end column G+1; a path's score is the
    start transition, every adjacent transition, the end transition, and all
    emission entries along the way.
    """
    length, tags = emissions.shape
    start, end = tags, tags + 1
    paths = np.array(list(itertools.product(range(tags), repeat=length)), dtype=np.intp)
    scores = transitions[start, paths[:, 0]] + transitions[paths[:, -1], end]
    for i in range(length):
        scores = scores + emissions[i, paths[:, i]]
    for i in range(length - 1):
        scores = scores + transitions[paths[:, i], paths[:, i + 1]]
    hi = scores.max()
    log_z = float(np.log(np.exp(scores - hi).sum()) + hi)
    best = float(hi)
    best_paths = {tuple(int(t) for t in p) for p in paths[scores >= best - 1e-12]}
    return log_z, best, best_paths


def viterbi_reference(emissions: np.ndarray, transitions: np.ndarray):
    """Independent max-product recursion, first-maximum tie rule."""
    length, tags = emissions.shape
    start, end = tags, tags + 1
    score = [transitions[start, b] + emissions[0, b] for b in range(tags)]
    back: list[list[int]] = []
    for i in range(1, length):
        row = []
        nxt = []
        for b in range(tags):
            best_a, best_v = 0, score[0] + transitions[0, b]
            for a in range(1, tags):
                v = score[a] + transitions[a, b]
                if v > best_v:
                    best_a, best_v = a, v
            row.append(best_a)
            nxt.append(best_v + emissions[i, b])
        back.append(row)
        score = nxt
    best_b, best_v = 0, score[0] + transitions[0, end]
    for b in range(1, tags):
        v = score[b] + transitions[b, end]
        if v > best_v:
            best_b, best_v = b, v
    path = [best_b]
    for row in reversed(back):
        path.append(row[path[-1]])
    path.reverse()
    return path, float(best_v)


def strict_nested_family(rng: np.random.Generator, length: int, max_depth: int = 3):
    """Random forest of strictly nested chains plus flat spans and singletons.

    Strict interior nesting (no shared boundaries) keeps every such family
    unambiguous under the tag codec.
    """
    spans: set[tuple[int, int]] = set()
    pos = 0
    while pos < length:
        width = int(rng.integers(1, min(9, length - pos) + 1))
        if rng.random() < 0.8:
            chain = [(pos, pos + width - 1)]
            for _ in range(max_depth - 1):
                s, e = chain[-1]
                if e - s < 2:
                    break
                ns = int(rng.integers(s + 1, e))
                ne = int(rng.integers(ns, e))
                chain.append((ns, ne))
            spans.update(chain)
        pos += width + int(rng.integers(0, 3))
    return spans


def shared_boundary_family(rng: np.random.Generator, length: int, max_depth: int = 3):
    """Nested chains that may reuse a parent boundary; sometimes ambiguous."""
    spans: set[tuple[int, int]] = set()
    pos = 0
    while pos < length:
        width = int(rng.integers(1, min(9, length - pos) + 1))
        if rng.random() < 0.85:
            chain = [(pos, pos + width - 1)]
            for _ in range(max_depth - 1):
                s, e = chain[-1]
                if e - s < 1:
                    break
                ns = int(rng.integers(s, e + 1))
                ne = int(rng.integers(ns, e + 1))
                if (ns, ne) == (s, e):
                    break
                chain.append((ns, ne))
            spans.update(chain)
        pos += width + int(rng.integers(0, 3))
    return spans


def as_span_set(pairs, label: int = 0) -> frozenset[EntitySpan]:
    return frozenset(EntitySpan(s, e, label) for s, e in pairs)
