"""Sentence data model, JSON-lines io, and the synthetic corpus generator.

Data files hold one JSON object per line::

    {"tokens": ["w3", "t0open", "w1", "t0close"],
     "pos": ["N", "OPEN", "V", "CLOSE"],
     "entities": [[1, 3, "PER"]]}

``pos`` may be null or absent (all tokens then carry the null tag) and
``entities`` lists 0-based inclusive [start, end, "TYPE"] triples.

The generator plants entities over dedicated trigger tokens so that labels
are learnable from surface cues: ``t2open``/``t2close`` bracket a type-2
span, ``t2solo`` is a one-token type-2 span, and ``m01open``/``m01solo``
variants carry both labels of a type pair (multi-label spans).  Everything
between matching brackets is filler drawn from a plain ``w<i>`` vocabulary.
Brackets never partially overlap, so generated sets are always nested or
disjoint and survive the tagging codec round trip, which is asserted for
every sentence at generation time.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .entities import EntitySpan, is_representable, validate_entity_set

NULL_POS = "<none>"
_FILLER_POS = ("N", "V", "D")


class CorpusError(ValueError):
    """A data file or grammar description is malformed."""


@dataclass(frozen=True)
class Sentence:
    """Tokens, optional aligned POS tags, and the gold entity set."""

    tokens: tuple[str, ...]
    pos: tuple[str, ...] | None
    entities: frozenset[EntitySpan]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.pos is not None:
            object.__setattr__(self, "pos", tuple(self.pos))
        object.__setattr__(self, "entities", frozenset(self.entities))

    def __len__(self) -> int:
        return len(self.tokens)

    def pos_or_null(self) -> tuple[str, ...]:
        if self.pos is not None:
            return self.pos
        return (NULL_POS,) * len(self.tokens)


def _entity_triples(sentence: Sentence, type_names: Sequence[str]) -> list[list]:
    triples = sorted((s.start, s.end, s.label) for s in sentence.entities)
    return [[s, e, type_names[label]] for s, e, label in triples]


def sentence_to_dict(sentence: Sentence, type_names: Sequence[str]) -> dict:
    return {
        "tokens": list(sentence.tokens),
        "pos": list(sentence.pos) if sentence.pos is not None else None,
        "entities": _entity_triples(sentence, type_names),
    }


def _require(condition: bool, line_no: int, message: str) -> None:
    if not condition:
        raise CorpusError(f"line {line_no}: {message}")


def sentence_from_dict(
    obj: object, type_names: Sequence[str], line_no: int
) -> Sentence:
    _require(isinstance(obj, dict), line_no, "expected a JSON object")
    tokens = obj.get("tokens")
    _require(
        isinstance(tokens, list) and all(isinstance(t, str) for t in tokens),
        line_no,
        "field 'tokens' must be a list of strings",
    )
    _require(len(tokens) > 0, line_no, "field 'tokens' must be nonempty")
    pos = obj.get("pos")
    if pos is not None:
        _require(
            isinstance(pos, list) and all(isinstance(p, str) for p in pos),
            line_no,
            "field 'pos' must be a list of strings or null",
        )
        _require(
            len(pos) == len(tokens),
            line_no,
            f"field 'pos' has {len(pos)} tags for {len(tokens)} tokens",
        )
    ids = {name: i for i, name in enumerate(type_names)}
    spans = []
    for raw in obj.get("entities", []):
        _require(
            isinstance(raw, list) and len(raw) == 3,
            line_no,
            "each entity must be a [start, end, type] triple",
        )
        start, end, name = raw
        _require(
            isinstance(start, int) and isinstance(end, int),
            line_no,
            "entity boundaries must be integers",
        )
        _require(
            0 <= start <= end < len(tokens),
            line_no,
            f"entity [{start}, {end}] outside sentence of length {len(tokens)}",
        )
        _require(
            isinstance(name, str) and name in ids,
            line_no,
            f"unknown entity type {name!r} (expected one of {list(type_names)})",
        )
        spans.append(EntitySpan(start, end, ids[name]))
    extra = sorted(set(obj) - {"tokens", "pos", "entities"})
    _require(not extra, line_no, f"unknown fields: {', '.join(extra)}")
    return Sentence(tuple(tokens), tuple(pos) if pos is not None else None,
                    frozenset(spans))


def read_jsonl(path: str, type_names: Sequence[str]) -> list[Sentence]:
    """Parse a data file; errors name the offending 1-based line."""
    sentences = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"line {line_no}: invalid JSON ({err.msg})") from err
            sentences.append(sentence_from_dict(obj, type_names, line_no))
    return sentences


def write_jsonl(path: str, sentences: Iterable[Sentence],
                type_names: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sentence in sentences:
            handle.write(json.dumps(sentence_to_dict(sentence, type_names)))
            handle.write("\n")


def lint_dataset(sentences: Sequence[Sentence]) -> list[str]:
    """One message per sentence whose entity set the codec cannot carry."""
    problems = []
    for index, sentence in enumerate(sentences):
        for diag in validate_entity_set(sentence.entities, len(sentence)):
            problems.append(f"sentence {index}: {diag}")
    return problems


# --------------------------------------------------------------------------
# Synthetic grammar


@dataclass(frozen=True)
class GrammarSpec:
    """Recipe for a seeded synthetic corpus.

    ``vocab_size`` counts the filler vocabulary; trigger tokens are added on
    top of it (3 per type plus 3 per unordered type pair).  The four
    probabilities pick the structure of each planted entity group and must
    sum to one.  ``max_depth`` caps same-type nesting (2d-1 tokens are
    needed for depth d, so it must fit inside ``max_length``).
    """

    num_sentences: int = 32
    vocab_size: int = 200
    num_types: int = 3
    min_length: int = 5
    max_length: int = 20
    p_flat: float = 0.4
    p_nst: float = 0.2
    p_ndt: float = 0.2
    p_me: float = 0.2
    max_depth: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_sentences < 1:
            raise CorpusError("num_sentences must be at least 1")
        if self.vocab_size < 1:
            raise CorpusError("vocab_size must be at least 1")
        if self.num_types < 1:
            raise CorpusError("num_types must be at least 1")
        if not 1 <= self.min_length <= self.max_length:
            raise CorpusError("need 1 <= min_length <= max_length")
        probs = (self.p_flat, self.p_nst, self.p_ndt, self.p_me)
        if any(not 0 <= p <= 1 for p in probs):
            raise CorpusError("probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise CorpusError("p_flat + p_nst + p_ndt + p_me must sum to 1")
        if self.max_depth < 1:
            raise CorpusError("max_depth must be at least 1")
        if self.max_depth > self.max_length:
            raise CorpusError(
                f"max_depth {self.max_depth} exceeds max_length {self.max_length}"
            )
        if self.p_nst > 0:
            if self.max_depth < 2:
                raise CorpusError("p_nst > 0 needs max_depth >= 2")
            if 2 * self.max_depth - 1 > self.max_length:
                raise CorpusError(
                    f"depth {self.max_depth} needs {2 * self.max_depth - 1} "
                    f"tokens but max_length is {self.max_length}"
                )
        if self.p_ndt > 0 and (self.num_types < 2 or self.max_length < 3):
            raise CorpusError("p_ndt > 0 needs at least 2 types and length 3")
        if self.p_me > 0 and self.num_types < 2:
            raise CorpusError("p_me > 0 needs at least 2 types")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GrammarSpec":
        if not isinstance(data, dict):
            raise CorpusError("grammar spec must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise CorpusError(f"unknown grammar fields: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "GrammarSpec":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as err:
                raise CorpusError(f"invalid JSON in {path}: {err}") from err
        return cls.from_dict(data)


def solo_token(t: int) -> str:
    return f"t{t}solo"


def open_token(t: int) -> str:
    return f"t{t}open"


def close_token(t: int) -> str:
    return f"t{t}close"


def pair_token(t: int, u: int, role: str) -> str:
    lo, hi = sorted((t, u))
    return f"m{lo}{hi}{role}"


def trigger_vocabulary(num_types: int) -> list[str]:
    """Every trigger token the grammar can emit, in a fixed order."""
    out = []
    for t in range(num_types):
        out += [solo_token(t), open_token(t), close_token(t)]
    for t in range(num_types):
        for u in range(t + 1, num_types):
            out += [pair_token(t, u, "solo"), pair_token(t, u, "open"),
                    pair_token(t, u, "close")]
    return out


class _Segment:
    """Tokens plus spans in local coordinates, built inside-out."""

    def __init__(self, tokens: list[str], pos: list[str],
                 spans: list[EntitySpan]):
        self.tokens = tokens
        self.pos = pos
        self.spans = spans

    def wrap(self, left_tokens, left_pos, right_tokens, right_pos):
        shift = len(left_tokens)
        self.spans = [
            EntitySpan(s.start + shift, s.end + shift, s.label) for s in self.spans
        ]
        self.tokens = left_tokens + self.tokens + right_tokens
        self.pos = left_pos + self.pos + right_pos


class _Builder:
    def __init__(self, spec: GrammarSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng

    def filler(self) -> tuple[str, str]:
        i = int(self.rng.integers(self.spec.vocab_size))
        return f"w{i}", _FILLER_POS[i % len(_FILLER_POS)]

    def fillers(self, count: int) -> tuple[list[str], list[str]]:
        pairs = [self.filler() for _ in range(count)]
        return [t for t, _ in pairs], [p for _, p in pairs]

    def pick_type(self) -> int:
        return int(self.rng.integers(self.spec.num_types))

    def pick_pair(self) -> tuple[int, int]:
        t, u = self.rng.choice(self.spec.num_types, size=2, replace=False)
        return int(min(t, u)), int(max(t, u))

    def _bracket(self, seg: _Segment, open_tok: str, close_tok: str,
                 labels: Sequence[int], room: int) -> _Segment:
        """Wrap a segment in brackets, optionally padding inside with fillers."""
        pad_left = pad_right = 0
        budget = room - (len(seg.tokens) + 2)
        if budget > 0 and self.rng.random() < 0.5:
            pad_left = 1
            budget -= 1
        if budget > 0 and self.rng.random() < 0.5:
            pad_right = 1
        lt, lp = self.fillers(pad_left)
        rt, rp = self.fillers(pad_right)
        seg.wrap([open_tok] + lt, ["OPEN"] + lp, rt + [close_tok],
                 rp + ["CLOSE"])
        width = len(seg.tokens)
        for label in labels:
            seg.spans.append(EntitySpan(0, width - 1, label))
        return seg

    def flat(self, room: int) -> _Segment | None:
        t = self.pick_type()
        if room >= 2 and self.rng.random() < 0.5:
            inner = int(self.rng.integers(0, min(3, room - 2) + 1))
            it, ip = self.fillers(inner)
            seg = _Segment(it, ip, [])
            seg.wrap([open_token(t)], ["OPEN"], [close_token(t)], ["CLOSE"])
            seg.spans.append(EntitySpan(0, len(seg.tokens) - 1, t))
            return seg
        if room >= 1:
            return _Segment([solo_token(t)], ["SOLO"], [EntitySpan(0, 0, t)])
        return None

    def nst(self, room: int) -> _Segment | None:
        max_d = min(self.spec.max_depth, (room + 1) // 2)
        if max_d < 2:
            return None
        depth = int(self.rng.integers(2, max_d + 1))
        t = self.pick_type()
        seg = _Segment([solo_token(t)], ["SOLO"], [EntitySpan(0, 0, t)])
        for _ in range(depth - 1):
            seg = self._bracket(seg, open_token(t), close_token(t), [t], room)
        return seg

    def ndt(self, room: int) -> _Segment | None:
        if room < 3 or self.spec.num_types < 2:
            return None
        outer, inner = self.rng.choice(self.spec.num_types, size=2, replace=False)
        outer, inner = int(outer), int(inner)
        if room >= 4 and self.rng.random() < 0.5:
            pad = 1 if room >= 5 and self.rng.random() < 0.5 else 0
            it, ip = self.fillers(pad)
            core = _Segment(it, ip, [])
            core.wrap([open_token(inner)], ["OPEN"], [close_token(inner)],
                      ["CLOSE"])
            core.spans.append(EntitySpan(0, len(core.tokens) - 1, inner))
        else:
            core = _Segment([solo_token(inner)], ["SOLO"],
                            [EntitySpan(0, 0, inner)])
        return self._bracket(core, open_token(outer), close_token(outer),
                             [outer], room)

    def me(self, room: int) -> _Segment | None:
        if self.spec.num_types < 2 or room < 1:
            return None
        t, u = self.pick_pair()
        if room >= 2 and self.rng.random() < 0.5:
            inner = int(self.rng.integers(0, min(2, room - 2) + 1))
            it, ip = self.fillers(inner)
            seg = _Segment(it, ip, [])
            seg.wrap([pair_token(t, u, "open")], ["OPEN"],
                     [pair_token(t, u, "close")], ["CLOSE"])
            width = len(seg.tokens)
            seg.spans += [EntitySpan(0, width - 1, t), EntitySpan(0, width - 1, u)]
            return seg
        return _Segment([pair_token(t, u, "solo")], ["SOLO"],
                        [EntitySpan(0, 0, t), EntitySpan(0, 0, u)])

    def insertion(self, room: int) -> _Segment | None:
        kinds = ("flat", "nst", "ndt", "me")
        probs = (self.spec.p_flat, self.spec.p_nst, self.spec.p_ndt,
                 self.spec.p_me)
        kind = kinds[int(self.rng.choice(4, p=probs))]
        segment = getattr(self, kind)(room)
        if segment is None:
            return self.flat(room)  # too little room for that kind
        return segment

    def sentence(self) -> Sentence:
        length = int(self.rng.integers(self.spec.min_length,
                                       self.spec.max_length + 1))
        tokens: list[str] = []
        pos: list[str] = []
        spans: list[EntitySpan] = []
        prefix = int(self.rng.integers(0, 2))
        pt, pp = self.fillers(min(prefix, length - 1))
        tokens += pt
        pos += pp
        inserted = 0
        while True:
            sep = 0 if inserted == 0 else 1 + int(self.rng.integers(0, 2))
            room = length - len(tokens) - sep
            if room < 1 or (inserted > 0 and self.rng.random() < 0.45):
                break
            segment = self.insertion(room)
            if segment is None:
                break
            st, sp = self.fillers(sep)
            tokens += st
            pos += sp
            offset = len(tokens)
            tokens += segment.tokens
            pos += segment.pos
            spans += [EntitySpan(s.start + offset, s.end + offset, s.label)
                      for s in segment.spans]
            inserted += 1
            if inserted >= 3:
                break
        st, sp = self.fillers(length - len(tokens))
        tokens += st
        pos += sp
        return Sentence(tuple(tokens), tuple(pos), frozenset(spans))


def generate_corpus(spec: GrammarSpec) -> list[Sentence]:
    """Deterministic synthetic dataset; every sentence is codec-clean."""
    rng = np.random.default_rng(spec.seed)
    builder = _Builder(spec, rng)
    sentences = []
    for index in range(spec.num_sentences):
        sentence = builder.sentence()
        diagnostics = validate_entity_set(sentence.entities, len(sentence))
        if diagnostics or not is_representable(sentence.entities, len(sentence)):
            raise AssertionError(
                f"generator produced an unrepresentable set at sentence "
                f"{index}: {diagnostics}"
            )
        sentences.append(sentence)
    return sentences


def type_names_for(spec: GrammarSpec) -> tuple[str, ...]:
    """Default label names for a generated corpus: TYPE0, TYPE1, ..."""
    return tuple(f"TYPE{t}" for t in range(spec.num_types))
