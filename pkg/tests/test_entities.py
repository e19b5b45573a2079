"""Span taxonomy and nested BIOES codec."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starner.entities import (
    BioesTag,
    DecodeError,
    Diagnostic,
    EntitySpan,
    NestingRelation,
    RepresentabilityError,
    SpanError,
    TagSequence,
    classify_pair,
    decode_nested,
    encode_nested,
    is_representable,
    validate_entity_set,
)

from util import as_span_set, shared_boundary_family, strict_nested_family

B, I, O, E, S = BioesTag.B, BioesTag.I, BioesTag.O, BioesTag.E, BioesTag.S


def tags_of(names: str) -> TagSequence:
    return TagSequence(tuple(BioesTag[n] for n in names.split()), 0)


def spans_of(pairs, label=0):
    return as_span_set(pairs, label)


class TestClassifyPair:
    """Each span pair falls in exactly one taxonomy bucket."""

    @pytest.mark.parametrize(
        "a, b, expected",
        [
            ((2, 5, 1), (2, 5, 1), NestingRelation.IDENTICAL),
            ((2, 5, 1), (2, 5, 2), NestingRelation.ME),
            ((2, 8, 1), (3, 5, 1), NestingRelation.NST),
            ((2, 8, 1), (2, 5, 1), NestingRelation.NST),
            ((2, 8, 1), (3, 5, 2), NestingRelation.NDT),
            ((2, 8, 1), (2, 7, 2), NestingRelation.NDT),
            ((2, 5, 1), (4, 8, 1), NestingRelation.OST),
            ((2, 5, 1), (4, 8, 2), NestingRelation.ODT),
            ((2, 4, 1), (7, 9, 1), NestingRelation.DISJOINT),
            ((2, 4, 1), (5, 9, 1), NestingRelation.TOUCHING),
        ],
    )
    def test_taxonomy(self, a, b, expected):
        assert classify_pair(EntitySpan(*a), EntitySpan(*b)) is expected

    @given(
        st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(0, 2)),
        st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(0, 2)),
    )
    def test_symmetric(self, raw_a, raw_b):
        a = EntitySpan(min(raw_a[0], raw_a[1]), max(raw_a[0], raw_a[1]), raw_a[2])
        b = EntitySpan(min(raw_b[0], raw_b[1]), max(raw_b[0], raw_b[1]), raw_b[2])
        assert classify_pair(a, b) is classify_pair(b, a)

    def test_invalid_span_rejected(self):
        with pytest.raises(SpanError):
            EntitySpan(3, 2, 0)
        with pytest.raises(SpanError):
            EntitySpan(-1, 2, 0)


class TestEncode:
    """Three-pass flattening of a one-type span set."""

    def test_nested_with_inner_singleton(self):
        seq = encode_nested(spans_of([(0, 2), (1, 1)]), 3, 0)
        assert seq.tags == (B, S, E)

    def test_shared_start_pair(self):
        seq = encode_nested(spans_of([(0, 3), (0, 1)]), 4, 0)
        assert seq.tags == (B, E, I, E)

    def test_flat_and_empty(self):
        assert encode_nested(spans_of([(1, 2)]), 4, 0).tags == (O, B, E, O)
        assert encode_nested(spans_of([(2, 2)]), 4, 0).tags == (O, O, S, O)
        assert encode_nested(frozenset(), 3, 5).tags == (O, O, O)

    def test_deep_chain(self):
        seq = encode_nested(spans_of([(0, 4), (1, 3), (2, 2)]), 5, 0)
        assert seq.tags == (B, B, S, E, E)

    @given(st.integers(0, 2**32 - 1))
    def test_order_independent(self, seed):
        rng = np.random.default_rng(seed)
        length = int(rng.integers(1, 15))
        spans = list(as_span_set(strict_nested_family(rng, length)))
        if not spans:
            return
        baseline = encode_nested(spans, length, 0)
        perm = [spans[i] for i in rng.permutation(len(spans))]
        assert encode_nested(perm, length, 0) == baseline

    def test_rejects_same_type_partial_overlap(self):
        with pytest.raises(RepresentabilityError):
            encode_nested(spans_of([(0, 2), (2, 4)]), 5, 0)

    def test_rejects_out_of_range(self):
        with pytest.raises(SpanError):
            encode_nested(spans_of([(0, 5)]), 5, 0)

    def test_rejects_foreign_label(self):
        with pytest.raises(SpanError):
            encode_nested(spans_of([(0, 1)], label=2), 4, 0)


class TestDecode:
    """Inside-out queue decoding."""

    def test_shared_start_pair(self):
        assert decode_nested(tags_of("B E I E")) == spans_of([(0, 1), (0, 3)])

    def test_nested_with_inner_singleton(self):
        assert decode_nested(tags_of("B S E")) == spans_of([(0, 2), (1, 1)])

    def test_flat_pair_no_spurious_wrapper(self):
        assert decode_nested(tags_of("B E B E")) == spans_of([(0, 1), (2, 3)])

    def test_parsimony_on_ambiguous_boundary(self):
        # B B S E E also encodes a 4-span reading; the decoder keeps 3
        assert decode_nested(tags_of("B B S E E")) == spans_of(
            [(0, 4), (1, 3), (2, 2)]
        )

    def test_singleton_overwrites_recovered(self):
        assert decode_nested(tags_of("B S")) == spans_of([(0, 1), (1, 1)])
        assert decode_nested(tags_of("S E")) == spans_of([(0, 0), (0, 1)])
        assert decode_nested(tags_of("O S E")) == spans_of([(1, 1), (1, 2)])

    def test_empty_and_outside_only(self):
        assert decode_nested(tags_of("O O O")) == frozenset()
        assert decode_nested(TagSequence((), 0)) == frozenset()

    @pytest.mark.parametrize(
        "names, bad_index",
        [
            ("B O O", 0),
            ("O O E", 2),
            ("O I O", 1),
            ("B I O", 0),
        ],
    )
    def test_malformed_raises_with_position(self, names, bad_index):
        with pytest.raises(DecodeError) as err:
            decode_nested(tags_of(names))
        assert err.value.index == bad_index


class TestRoundTrip:
    """decode(encode(X)) == X on unambiguous families."""

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_strict_families(self, seed):
        rng = np.random.default_rng(seed)
        length = int(rng.integers(1, 25))
        spans = as_span_set(strict_nested_family(rng, length))
        assert decode_nested(encode_nested(spans, length, 0)) == spans

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_shared_boundary_families_filtered(self, seed):
        rng = np.random.default_rng(seed)
        length = int(rng.integers(1, 25))
        spans = as_span_set(shared_boundary_family(rng, length))
        if is_representable(spans, length):
            assert decode_nested(encode_nested(spans, length, 0)) == spans

    def test_depth_three_shared_boundaries(self):
        for pairs in [
            [(0, 6), (0, 3), (1, 2)],
            [(0, 6), (1, 5), (2, 4), (3, 3)],
            [(0, 4), (0, 2)],
            [(0, 4), (2, 4)],
            [(0, 4), (4, 4)],
            [(0, 4), (0, 0)],
            [(0, 1), (0, 3), (0, 5)],
        ]:
            spans = spans_of(pairs)
            length = max(e for _, e in pairs) + 1
            assert decode_nested(encode_nested(spans, length, 0)) == spans


class TestRepresentability:
    def test_ost_unrepresentable(self):
        assert not is_representable(spans_of([(0, 2), (2, 4)]), 5)

    def test_multi_type_grouped_independently(self):
        mixed = spans_of([(0, 2)], label=0) | spans_of([(2, 4)], label=1)
        assert is_representable(mixed, 5)

    def test_ambiguous_loser_detected(self):
        # encodes to B B S E E whose canonical reading drops (2, 3)
        assert not is_representable(spans_of([(0, 4), (1, 3), (2, 3), (2, 2)]), 5)


class TestValidateEntitySet:
    def test_clean_multi_label_set(self):
        mixed = spans_of([(0, 2)], label=0) | spans_of([(0, 2)], label=1)
        assert validate_entity_set(mixed, 4) == []

    def test_partial_overlap_reported(self):
        diags = validate_entity_set(spans_of([(0, 3), (2, 5)]), 6)
        assert len(diags) == 1
        assert diags[0].relation is NestingRelation.OST

    def test_cross_type_overlap_allowed(self):
        mixed = spans_of([(0, 3)], label=0) | spans_of([(2, 5)], label=1)
        assert validate_entity_set(mixed, 6) == []

    def test_inexpressible_nesting_reported_once(self):
        diags = validate_entity_set(spans_of([(0, 4), (1, 3), (2, 3), (2, 2)]), 5)
        assert len(diags) == 1
        assert diags[0].reason == "inexpressible nesting"

    def test_empty(self):
        assert validate_entity_set(frozenset(), 10) == []
