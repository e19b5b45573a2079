"""Entity spans, pairwise nesting taxonomy, and the nested BIOES tag codec.

A sentence of length L carries, per entity type, a set of spans (s, e) with
0 <= s <= e < L (token indices, inclusive).  Sets of one type are flattened
into a single BIOES tag sequence that tolerates nesting: interior positions of
every span are written I, multi-token boundaries B/E, singletons S (overwriting
whatever a boundary pass wrote).  Decoding runs inside-out over a queue of
start candidates (tags B, S) and end candidates (tags E, S), repeatedly
emitting the smallest plausible pair and releasing a boundary index only once
no remaining pair needs it.

Two spans of the same type that overlap partially (neither contains the other)
cannot be expressed in this scheme; they are rejected up front.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence


class BioesTag(enum.IntEnum):
    """Per-position tag.  Integer values double as CRF state indices."""

    B = 0
    I = 1
    O = 2
    E = 3
    S = 4


class NestingRelation(enum.Enum):
    """Relation between two entity spans of a common sentence.

    IDENTICAL  same span, same label (the same entity)
    ME         multi-label: same span, different labels
    NST        nested, same type: one span contains the other, labels equal
    NDT        nested, different types: containment with distinct labels
    OST        partial overlap, same type (not representable)
    ODT        partial overlap, different types
    DISJOINT   separated by at least one token
    TOUCHING   disjoint but adjacent (no gap)
    """

    IDENTICAL = "identical"
    ME = "me"
    NST = "nst"
    NDT = "ndt"
    OST = "ost"
    ODT = "odt"
    DISJOINT = "disjoint"
    TOUCHING = "touching"


class SpanError(ValueError):
    """An entity span violates 0 <= start <= end < sentence length."""


class RepresentabilityError(ValueError):
    """A same-type set contains structure the tag codec cannot express."""


class DecodeError(ValueError):
    """A tag sequence has no consistent nesting structure."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (position {index})")
        self.index = index


@dataclass(frozen=True, order=True)
class EntitySpan:
    """One labeled entity: inclusive token interval plus a type identifier."""

    start: int
    end: int
    label: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise SpanError(f"invalid span ({self.start}, {self.end})")

    def contains(self, other: "EntitySpan") -> bool:
        """Interval containment, shared endpoints allowed."""
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "EntitySpan") -> bool:
        """Nonempty interval intersection."""
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class TagSequence:
    """A per-type BIOES layer over one sentence."""

    tags: tuple[BioesTag, ...]
    type_id: int


@dataclass(frozen=True)
class Diagnostic:
    """One offending span pair reported by validate_entity_set."""

    first: EntitySpan
    second: EntitySpan
    relation: NestingRelation
    reason: str


def classify_pair(a: EntitySpan, b: EntitySpan) -> NestingRelation:
    """Classify the relation between two spans.  Symmetric in its arguments."""
    if (a.start, a.end) == (b.start, b.end):
        return NestingRelation.IDENTICAL if a.label == b.label else NestingRelation.ME
    if a.contains(b) or b.contains(a):
        return NestingRelation.NST if a.label == b.label else NestingRelation.NDT
    if a.overlaps(b):
        return NestingRelation.OST if a.label == b.label else NestingRelation.ODT
    lo, hi = (a, b) if a.end < b.start else (b, a)
    if hi.start - lo.end == 1:
        return NestingRelation.TOUCHING
    return NestingRelation.DISJOINT


def _check_spans(spans: Sequence[EntitySpan], length: int, type_id: int) -> None:
    for span in spans:
        if span.end >= length:
            raise SpanError(f"span ({span.start}, {span.end}) exceeds length {length}")
        if span.label != type_id:
            raise SpanError(
                f"span labeled {span.label} in a type-{type_id} tag layer"
            )
    for a, b in itertools.combinations(spans, 2):
        if classify_pair(a, b) is NestingRelation.OST:
            raise RepresentabilityError(
                f"same-type partial overlap ({a.start},{a.end}) vs ({b.start},{b.end})"
            )


def encode_nested(
    spans: Iterable[EntitySpan], length: int, type_id: int
) -> TagSequence:
    """Flatten one type's span set into a nesting-tolerant BIOES sequence.

    Three order-independent passes: interiors first (I), then multi-token
    boundaries (B at start, E at end), then singletons (S, overwriting any
    boundary letter written by an enclosing span).
    """
    if length < 0:
        raise SpanError(f"negative sentence length {length}")
    unique = sorted(set(spans))
    _check_spans(unique, length, type_id)
    tags = [BioesTag.O] * length
    for span in unique:
        for p in range(span.start + 1, span.end):
            tags[p] = BioesTag.I
    for span in unique:
        if span.start < span.end:
            tags[span.start] = BioesTag.B
            tags[span.end] = BioesTag.E
    for span in unique:
        if span.start == span.end:
            tags[span.start] = BioesTag.S
    return TagSequence(tags=tuple(tags), type_id=type_id)


def _no_o_inside(o_prefix: Sequence[int], s: int, e: int) -> bool:
    # count of O tags at positions s+1 .. e-1
    return e - s < 2 or o_prefix[e] - o_prefix[s + 1] == 0


def decode_nested(sequence: TagSequence) -> frozenset[EntitySpan]:
    """Invert encode_nested, emitting spans inside-out.

    Start candidates are positions tagged B or S, end candidates E or S.  Each
    round emits the narrowest pair (s, e) with s <= e and no O strictly
    between, then releases each of the two boundary indices unless some
    not-yet-emitted pair still needs it: an index is kept while dropping it
    would leave an opposite-side candidate unpairable or an I position that no
    emitted or possible pair covers.  A pair emitted strictly inside remaining
    structure rewrites its boundary tags to I.  Leftover boundary candidates or
    uncovered I positions mean the sequence is malformed.
    """
    tags = [BioesTag(t) for t in sequence.tags]
    length = len(tags)
    o_prefix = [0] * (length + 1)
    for i, t in enumerate(tags):
        o_prefix[i + 1] = o_prefix[i] + (t is BioesTag.O)

    starts = [i for i, t in enumerate(tags) if t in (BioesTag.B, BioesTag.S)]
    ends = [i for i, t in enumerate(tags) if t in (BioesTag.E, BioesTag.S)]
    i_positions = {i for i, t in enumerate(tags) if t is BioesTag.I}
    emitted: set[tuple[int, int]] = set()

    def candidates(ss: Sequence[int], es: Sequence[int]) -> list[tuple[int, int]]:
        return [
            (s, e)
            for s in ss
            for e in es
            if s <= e and (s, e) not in emitted and _no_o_inside(o_prefix, s, e)
        ]

    def feasible(ss: list[int], es: list[int]) -> bool:
        cands = candidates(ss, es)
        paired_s = {s for s, _ in cands}
        paired_e = {e for _, e in cands}
        if any(s not in paired_s for s in ss) or any(e not in paired_e for e in es):
            return False
        for p in i_positions:
            if any(a < p < b for a, b in emitted):
                continue
            if not any(a < p < b for a, b in cands):
                return False
        return True

    while True:
        cands = candidates(starts, ends)
        if not cands:
            break
        s, e = min(cands, key=lambda pair: (pair[1] - pair[0], pair[0]))
        emitted.add((s, e))
        without_s = [x for x in starts if x != s]
        without_e = [x for x in ends if x != e]
        for keep_s, keep_e in ((False, False), (False, True), (True, False), (True, True)):
            trial_s = starts if keep_s else without_s
            trial_e = ends if keep_e else without_e
            if feasible(trial_s, trial_e):
                break
        starts, ends = trial_s, trial_e
        if keep_s:
            tags[s] = BioesTag.B
        if keep_e:
            tags[e] = BioesTag.E
        if not keep_s and not keep_e:
            # fully resolved pair strictly inside remaining structure: its
            # boundary letters turn interior (no coverage obligation: only
            # positions the encoder itself tagged I demand an enclosing pair)
            if any(
                a < s and e < b and _no_o_inside(o_prefix, a, b)
                for a in starts
                for b in ends
            ):
                tags[s] = BioesTag.I
                tags[e] = BioesTag.I

    if starts or ends:
        raise DecodeError("unmatched boundary tag", (starts + ends)[0])
    for p in sorted(i_positions):
        if not any(a < p < b for a, b in emitted):
            raise DecodeError("interior tag with no enclosing entity", p)
    return frozenset(
        EntitySpan(s, e, sequence.type_id) for s, e in emitted
    )


def is_representable(spans: Iterable[EntitySpan], length: int) -> bool:
    """True iff every per-type subset survives an encode/decode round trip."""
    by_type: dict[int, set[EntitySpan]] = {}
    for span in spans:
        by_type.setdefault(span.label, set()).add(span)
    for type_id, subset in by_type.items():
        try:
            sequence = encode_nested(subset, length, type_id)
            if decode_nested(sequence) != frozenset(subset):
                return False
        except (SpanError, RepresentabilityError, DecodeError):
            return False
    return True


def validate_entity_set(
    spans: Iterable[EntitySpan], length: int
) -> list[Diagnostic]:
    """Report every unsupported or inexpressible structure in a span set.

    Partial same-type overlaps are reported pairwise.  A per-type subset that
    fails its round trip for any other reason is reported once, through the
    first pair that is itself inexpressible (or the first pair outright when
    the failure only appears at larger subsets).
    """
    unique = sorted(set(spans))
    diagnostics = [
        Diagnostic(a, b, NestingRelation.OST, "same-type partial overlap")
        for a, b in itertools.combinations(unique, 2)
        if classify_pair(a, b) is NestingRelation.OST
    ]
    by_type: dict[int, list[EntitySpan]] = {}
    for span in unique:
        by_type.setdefault(span.label, []).append(span)
    for type_id, subset in sorted(by_type.items()):
        if any(d.first.label == type_id for d in diagnostics):
            continue
        if is_representable(subset, length):
            continue
        witness = next(
            (
                (a, b)
                for a, b in itertools.combinations(subset, 2)
                if not is_representable([a, b], length)
            ),
            (subset[0], subset[min(1, len(subset) - 1)]),
        )
        diagnostics.append(
            Diagnostic(
                witness[0],
                witness[1],
                classify_pair(witness[0], witness[1]),
                "inexpressible nesting",
            )
        )
    return diagnostics
