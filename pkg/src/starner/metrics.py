"""Exact-match entity scoring: micro, per-type, and per-relation views.

An entity counts once per (start, end, label) triple.  The relation view
assigns every entity to exactly one of four rows — multi-label (ME),
nested same type (NST), nested different type (NDT), or flat — judged
against the other entities of its own set (gold entities within the gold
set, predictions within the predicted set), with ME taking precedence over
NST over NDT.  Partial overlaps and disjoint neighbors leave an entity
flat.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .entities import EntitySpan, NestingRelation, classify_pair

RELATION_ROWS = ("flat", "NST", "NDT", "ME")


def f1_value(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float
    gold_count: int
    predicted_count: int


def _make_scores(correct_predicted: int, predicted: int,
                 correct_gold: int, gold: int) -> Scores:
    precision = _ratio(correct_predicted, predicted)
    recall = _ratio(correct_gold, gold)
    return Scores(precision, recall, f1_value(precision, recall), gold, predicted)


@dataclass(frozen=True)
class EvalReport:
    micro: Scores
    per_type: Mapping[str, Scores]
    per_relation: Mapping[str, Scores]


def relation_row(entity: EntitySpan, own_set: frozenset[EntitySpan]) -> str:
    """The single relation row an entity belongs to within its own set."""
    best = "flat"
    rank = {"flat": 0, "NDT": 1, "NST": 2, "ME": 3}
    for other in own_set:
        if other == entity:
            continue
        relation = classify_pair(entity, other)
        if relation is NestingRelation.ME:
            return "ME"
        if relation is NestingRelation.NST and rank[best] < rank["NST"]:
            best = "NST"
        elif relation is NestingRelation.NDT and rank[best] < rank["NDT"]:
            best = "NDT"
    return best


def evaluate(
    gold_sets: Sequence[frozenset[EntitySpan]],
    predicted_sets: Sequence[frozenset[EntitySpan]],
    type_names: Sequence[str],
) -> EvalReport:
    if len(gold_sets) != len(predicted_sets):
        raise ValueError(
            f"{len(gold_sets)} gold sets vs {len(predicted_sets)} predictions"
        )
    gold_total = pred_total = matched = 0
    type_counts = {name: [0, 0, 0] for name in type_names}  # matched, pred, gold
    rel_counts = {row: [0, 0, 0, 0] for row in RELATION_ROWS}
    # rel_counts rows: correct_predicted, predicted, correct_gold, gold
    for gold, predicted in zip(gold_sets, predicted_sets):
        gold = frozenset(gold)
        predicted = frozenset(predicted)
        common = gold & predicted
        gold_total += len(gold)
        pred_total += len(predicted)
        matched += len(common)
        for entity in gold:
            name = type_names[entity.label]
            type_counts[name][2] += 1
            row = rel_counts[relation_row(entity, gold)]
            row[3] += 1
            if entity in predicted:
                type_counts[name][0] += 1
                row[2] += 1
        for entity in predicted:
            type_counts[type_names[entity.label]][1] += 1
            row = rel_counts[relation_row(entity, predicted)]
            row[1] += 1
            if entity in gold:
                row[0] += 1
    micro = _make_scores(matched, pred_total, matched, gold_total)
    per_type = {
        name: _make_scores(m, p, m, g) for name, (m, p, g) in type_counts.items()
    }
    per_relation = {
        row: _make_scores(cp, p, cg, g)
        for row, (cp, p, cg, g) in rel_counts.items()
    }
    return EvalReport(micro, per_type, per_relation)


def _format_scores(label: str, scores: Scores) -> str:
    return (
        f"{label} precision={scores.precision:.4f} recall={scores.recall:.4f} "
        f"f1={scores.f1:.4f} gold={scores.gold_count} "
        f"predicted={scores.predicted_count}"
    )


def format_report(report: EvalReport, per_type: bool = False,
                  per_relation: bool = False) -> str:
    lines = [_format_scores("micro", report.micro)]
    if per_type:
        lines += [
            _format_scores(f"type {name}", scores)
            for name, scores in report.per_type.items()
        ]
    if per_relation:
        lines += [
            _format_scores(f"relation {row}", report.per_relation[row])
            for row in RELATION_ROWS
        ]
    return "\n".join(lines)
