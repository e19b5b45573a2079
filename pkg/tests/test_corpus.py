"""Corpus: sentence io, grammar validation, generator guarantees."""

import itertools
import json

import numpy as np
import pytest

from starner.corpus import (
    NULL_POS,
    CorpusError,
    GrammarSpec,
    Sentence,
    generate_corpus,
    lint_dataset,
    read_jsonl,
    sentence_from_dict,
    sentence_to_dict,
    trigger_vocabulary,
    type_names_for,
    write_jsonl,
)
from starner.entities import (
    EntitySpan,
    NestingRelation,
    classify_pair,
    is_representable,
    validate_entity_set,
)

NAMES = ("TYPE0", "TYPE1", "TYPE2")


class TestSentence:
    def test_pos_or_null(self):
        with_pos = Sentence(("a", "b"), ("N", "V"), frozenset())
        without = Sentence(("a", "b"), None, frozenset())
        assert with_pos.pos_or_null() == ("N", "V")
        assert without.pos_or_null() == (NULL_POS, NULL_POS)

    def test_coercion(self):
        s = Sentence(["a"], ["N"], [EntitySpan(0, 0, 0)])
        assert isinstance(s.tokens, tuple)
        assert isinstance(s.pos, tuple)
        assert isinstance(s.entities, frozenset)
        assert len(s) == 1


class TestSentenceJson:
    def test_round_trip(self):
        sentence = Sentence(
            ("x", "y", "z"), ("N", "V", "N"),
            frozenset({EntitySpan(0, 1, 2), EntitySpan(1, 1, 0)}),
        )
        obj = sentence_to_dict(sentence, NAMES)
        assert obj["entities"] == [[0, 1, "TYPE2"], [1, 1, "TYPE0"]]
        assert sentence_from_dict(obj, NAMES, 1) == sentence

    def test_null_pos(self):
        sentence = Sentence(("x",), None, frozenset())
        obj = sentence_to_dict(sentence, NAMES)
        assert obj["pos"] is None
        assert sentence_from_dict(obj, NAMES, 1).pos is None

    def test_missing_entities_defaults_empty(self):
        got = sentence_from_dict({"tokens": ["x"]}, NAMES, 1)
        assert got.entities == frozenset()
        assert got.pos is None

    @pytest.mark.parametrize(
        "obj,fragment",
        [
            ([], "expected a JSON object"),
            ({"tokens": "abc"}, "'tokens' must be a list of strings"),
            ({"tokens": []}, "'tokens' must be nonempty"),
            ({"tokens": ["a"], "pos": ["N", "V"]}, "2 tags for 1 tokens"),
            ({"tokens": ["a"], "pos": 7}, "'pos' must be a list"),
            ({"tokens": ["a"], "entities": [[0, 0]]}, "triple"),
            ({"tokens": ["a"], "entities": [[0.5, 0, "TYPE0"]]}, "integers"),
            ({"tokens": ["a"], "entities": [[0, 1, "TYPE0"]]}, "outside sentence"),
            ({"tokens": ["a"], "entities": [[0, 0, "WHAT"]]}, "unknown entity type 'WHAT'"),
            ({"tokens": ["a"], "junk": 1}, "unknown fields: junk"),
        ],
    )
    def test_rejections_name_the_line(self, obj, fragment):
        with pytest.raises(CorpusError, match="line 7") as err:
            sentence_from_dict(obj, NAMES, 7)
        assert fragment in str(err.value)


class TestJsonlFiles:
    def test_file_round_trip(self, tmp_path):
        spec = GrammarSpec(num_sentences=12, vocab_size=20, seed=4)
        corpus = generate_corpus(spec)
        path = tmp_path / "data.jsonl"
        write_jsonl(path, corpus, type_names_for(spec))
        assert read_jsonl(path, type_names_for(spec)) == corpus

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text('{"tokens": ["a"]}\n\n{"tokens": ["b"]}\n')
        assert len(read_jsonl(path, NAMES)) == 2

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text('{"tokens": ["a"]}\n{oops\n')
        with pytest.raises(CorpusError, match="line 2: invalid JSON"):
            read_jsonl(path, NAMES)

    def test_bad_record_names_line(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text('{"tokens": ["a"]}\n{"tokens": []}\n')
        with pytest.raises(CorpusError, match="line 2"):
            read_jsonl(path, NAMES)


class TestGrammarSpecValidation:
    def test_defaults_are_valid(self):
        GrammarSpec()

    @pytest.mark.parametrize(
        "kwargs,fragment",
        [
            (dict(num_sentences=0), "num_sentences"),
            (dict(vocab_size=0), "vocab_size"),
            (dict(num_types=0), "num_types"),
            (dict(min_length=0), "min_length"),
            (dict(min_length=9, max_length=8), "min_length"),
            (dict(p_flat=0.9), "sum to 1"),
            (dict(p_flat=-0.2, p_nst=0.6), "in [0, 1]"),
            (dict(max_depth=0), "max_depth"),
            (dict(max_depth=30), "max_depth 30 exceeds max_length"),
            (dict(max_depth=1), "p_nst > 0 needs max_depth >= 2"),
            (dict(max_depth=11, max_length=20), "depth 11 needs 21 tokens"),
            (dict(num_types=1, p_ndt=0.0, p_me=0.6, p_flat=0.2), "p_me"),
            (
                dict(num_types=1, p_me=0.0, p_ndt=0.6, p_flat=0.2),
                "p_ndt",
            ),
        ],
    )
    def test_rejections(self, kwargs, fragment):
        with pytest.raises(CorpusError) as err:
            GrammarSpec(**kwargs)
        assert fragment in str(err.value)

    def test_depth_greater_than_length_is_infeasible(self):
        with pytest.raises(CorpusError):
            GrammarSpec(min_length=1, max_length=2, max_depth=3)

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(CorpusError, match="unknown grammar fields: wat"):
            GrammarSpec.from_dict({"wat": 1})

    def test_json_round_trip(self, tmp_path):
        spec = GrammarSpec(num_sentences=5, seed=9)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec.to_dict()))
        assert GrammarSpec.from_json(path) == spec


def corpus_dump(sentences, names):
    return json.dumps([sentence_to_dict(s, names) for s in sentences])


class TestGenerator:
    def test_deterministic(self):
        spec = GrammarSpec(num_sentences=20, vocab_size=25, seed=6)
        names = type_names_for(spec)
        assert corpus_dump(generate_corpus(spec), names) == corpus_dump(
            generate_corpus(spec), names
        )

    def test_seed_changes_output(self):
        a = GrammarSpec(num_sentences=20, vocab_size=25, seed=6)
        b = GrammarSpec(num_sentences=20, vocab_size=25, seed=7)
        names = type_names_for(a)
        assert corpus_dump(generate_corpus(a), names) != corpus_dump(
            generate_corpus(b), names
        )

    def test_shape_constraints(self):
        spec = GrammarSpec(num_sentences=50, vocab_size=30, min_length=4,
                           max_length=11, seed=2)
        corpus = generate_corpus(spec)
        assert len(corpus) == 50
        for sentence in corpus:
            assert 4 <= len(sentence) <= 11
            assert sentence.pos is not None
            assert len(sentence.pos) == len(sentence)
            assert set(sentence.pos) <= {"OPEN", "CLOSE", "SOLO", "N", "V", "D"}

    def test_every_sentence_is_codec_clean(self):
        spec = GrammarSpec(num_sentences=120, vocab_size=30, max_depth=3,
                           max_length=20, seed=13)
        for sentence in generate_corpus(spec):
            assert validate_entity_set(sentence.entities, len(sentence)) == []
            assert is_representable(sentence.entities, len(sentence))

    def test_no_partial_overlaps_ever(self):
        spec = GrammarSpec(num_sentences=150, vocab_size=30, max_depth=3,
                           max_length=20, seed=3)
        banned = {NestingRelation.OST, NestingRelation.ODT}
        for sentence in generate_corpus(spec):
            for a, b in itertools.combinations(sentence.entities, 2):
                assert classify_pair(a, b) not in banned

    def test_flat_only_when_nesting_probabilities_zero(self):
        spec = GrammarSpec(num_sentences=60, vocab_size=25, p_flat=1.0,
                           p_nst=0.0, p_ndt=0.0, p_me=0.0, seed=5)
        nested = {
            NestingRelation.NST,
            NestingRelation.NDT,
            NestingRelation.ME,
            NestingRelation.IDENTICAL,
        }
        for sentence in generate_corpus(spec):
            assert sentence.entities  # something was planted
            for a, b in itertools.combinations(sentence.entities, 2):
                assert classify_pair(a, b) not in nested

    def test_me_probability_one_doubles_every_span(self):
        spec = GrammarSpec(num_sentences=60, vocab_size=25, p_flat=0.0,
                           p_nst=0.0, p_ndt=0.0, p_me=1.0, seed=8)
        for sentence in generate_corpus(spec):
            assert sentence.entities
            for entity in sentence.entities:
                twins = {
                    other
                    for other in sentence.entities
                    if (other.start, other.end) == (entity.start, entity.end)
                }
                assert len(twins) >= 2
                assert len({t.label for t in twins}) == len(twins)

    def test_nesting_kinds_appear(self):
        spec = GrammarSpec(num_sentences=80, vocab_size=30, p_flat=0.1,
                           p_nst=0.3, p_ndt=0.3, p_me=0.3, seed=10)
        seen = set()
        for sentence in generate_corpus(spec):
            for a, b in itertools.combinations(sentence.entities, 2):
                seen.add(classify_pair(a, b))
        assert NestingRelation.NST in seen
        assert NestingRelation.NDT in seen
        assert NestingRelation.ME in seen

    def test_max_depth_bounds_same_type_chains(self):
        for depth in (2, 3):
            spec = GrammarSpec(num_sentences=80, vocab_size=30, p_flat=0.1,
                               p_nst=0.7, p_ndt=0.1, p_me=0.1,
                               max_depth=depth, max_length=20, seed=14)
            deepest = 0
            for sentence in generate_corpus(spec):
                for entity in sentence.entities:
                    chain = 1 + sum(
                        1
                        for other in sentence.entities
                        if other.label == entity.label
                        and other != entity
                        and other.start <= entity.start
                        and entity.end <= other.end
                    )
                    deepest = max(deepest, chain)
            assert deepest <= depth
            assert deepest == depth  # the cap is actually reached

    def test_triggers_mark_entity_boundaries(self):
        """Every planted span starts and ends on a dedicated trigger token."""
        spec = GrammarSpec(num_sentences=60, vocab_size=30, seed=1)
        triggers = set(trigger_vocabulary(spec.num_types))
        for sentence in generate_corpus(spec):
            for entity in sentence.entities:
                assert sentence.tokens[entity.start] in triggers
                assert sentence.tokens[entity.end] in triggers

    def test_trigger_vocabulary_layout(self):
        vocab = trigger_vocabulary(3)
        assert len(vocab) == len(set(vocab)) == 9 + 9
        assert "t0solo" in vocab and "t2close" in vocab
        assert "m01open" in vocab and "m12solo" in vocab
        assert trigger_vocabulary(1) == ["t0solo", "t0open", "t0close"]


class TestLint:
    def test_clean_corpus(self):
        corpus = generate_corpus(GrammarSpec(num_sentences=10, seed=0))
        assert lint_dataset(corpus) == []

    def test_reports_sentence_index(self):
        good = Sentence(("a", "b", "c", "d"), None, frozenset())
        bad = Sentence(
            ("a", "b", "c", "d"), None,
            frozenset({EntitySpan(0, 2, 0), EntitySpan(1, 3, 0)}),
        )
        problems = lint_dataset([good, bad])
        assert len(problems) == 1
        assert problems[0].startswith("sentence 1:")
