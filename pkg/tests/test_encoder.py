"""Token encoder: vocabularies, recurrent wrappers, gated cell, node seeds."""

import numpy as np
import pytest

from starner import encoder
from starner.encoder import (
    BiGru,
    EncoderConfig,
    GatedCell,
    HybridEmbedder,
    NodeInit,
    Vocabulary,
    load_word_vectors,
    masked_mean_pool,
    reverse_time,
)
from starner.numerics import Tensor, backward, ops
from starner.numerics.gradcheck import grad_check
from starner.numerics.params import ParameterStore


def probe_loss(t: Tensor) -> Tensor:
    flat = ops.reshape(t, (t.data.size,))
    probe = Tensor(np.sin(np.arange(1, t.data.size + 1, dtype=np.float64)))
    return ops.sum_along(ops.mul(flat, probe), axis=0)


class TestVocabulary:
    def test_reserved_ids(self):
        v = Vocabulary(["b", "a"])
        assert v.pad_id == 0 and v.unk_id == 1
        assert v.encode("a") >= 2 and v.encode("b") >= 2

    def test_unknown_fallback(self):
        v = Vocabulary(["a"])
        assert v.encode("zzz") == Vocabulary.unk_id

    def test_round_trip(self):
        v = Vocabulary(["x", "y"])
        clone = Vocabulary.from_dict(v.to_dict())
        assert clone.size == v.size
        for sym in ["x", "y", "other"]:
            assert clone.encode(sym) == v.encode(sym)

    def test_build_is_order_insensitive(self):
        a = Vocabulary.build([["b", "a"], ["c"]])
        b = Vocabulary.build([["c"], ["a", "b"]])
        assert a.to_dict() == b.to_dict()

    def test_decode_inverts_encode(self):
        v = Vocabulary(["q"])
        assert v.decode(v.encode("q")) == "q"
        assert "q" in v and "r" not in v


class TestReverseTime:
    def test_respects_lengths(self):
        x = Tensor(np.arange(8, dtype=np.float64).reshape(4, 2, 1))
        out = reverse_time(x, np.array([4, 2]))
        expected = x.data.copy()
        expected[:, 0, 0] = [6, 4, 2, 0]
        expected[:2, 1, 0] = [3, 1]  # positions 2,3 are padding: untouched
        np.testing.assert_array_equal(out.data, expected)

    def test_involution(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(5, 3, 2)))
        lengths = np.array([5, 1, 3])
        twice = reverse_time(reverse_time(x, lengths), lengths)
        np.testing.assert_array_equal(twice.data, x.data)

    def test_full_reversal_by_default(self):
        x = Tensor(np.arange(6, dtype=np.float64).reshape(3, 1, 2))
        np.testing.assert_array_equal(reverse_time(x).data, x.data[::-1])


class TestMaskedMeanPool:
    def test_ignores_padding(self):
        x = Tensor(np.arange(12, dtype=np.float64).reshape(3, 2, 2))
        out = masked_mean_pool(x, np.array([3, 1]))
        np.testing.assert_allclose(out.data[0], x.data[:, 0].mean(axis=0))
        np.testing.assert_allclose(out.data[1], x.data[0, 1])

    def test_rejects_bad_lengths(self):
        x = Tensor(np.zeros((2, 1, 1)))
        with pytest.raises(ValueError):
            masked_mean_pool(x, np.array([0]))
        with pytest.raises(ValueError):
            masked_mean_pool(x, np.array([3]))


class TestBiGru:
    def test_padding_never_reaches_valid_positions(self):
        store = ParameterStore(seed=11)
        rnn = BiGru(store, "r", input_dim=3, hidden=4)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, 3, 3))
        lengths = np.array([5, 2, 3])
        batched = rnn.run(Tensor(x), lengths).data
        for b, length in enumerate(lengths):
            alone = rnn.run(Tensor(x[:length, b : b + 1, :])).data
            np.testing.assert_allclose(batched[:length, b], alone[:, 0], atol=1e-12)

    def test_zero_parameters_iterate_the_half_identity(self):
        store = ParameterStore(seed=0)
        rnn = BiGru(store, "r", input_dim=2, hidden=3)
        for p in store.parameters():
            p.data[...] = 0.0
        h0 = Tensor(np.full((1, 3), 0.8))
        out = rnn.run(Tensor(np.zeros((2, 1, 2))), h0_fwd=h0, h0_bwd=h0).data
        # forward direction: states 0.5*h0 then 0.25*h0; backward mirrors it
        np.testing.assert_allclose(out[0, 0, :3], 0.4)
        np.testing.assert_allclose(out[1, 0, :3], 0.2)
        np.testing.assert_allclose(out[1, 0, 3:], 0.4)
        np.testing.assert_allclose(out[0, 0, 3:], 0.2)

    def test_reversal_symmetry(self):
        store = ParameterStore(seed=13)
        rnn = BiGru(store, "r", input_dim=3, hidden=2)
        mirrored = BiGru(store, "m", input_dim=3, hidden=2)
        for src, dst in [(rnn.fwd, mirrored.bwd), (rnn.bwd, mirrored.fwd)]:
            for a, b in zip(src, dst):
                b.data[...] = a.data
        x = np.random.default_rng(2).normal(size=(4, 1, 3))
        out = rnn.run(Tensor(x)).data
        flipped = mirrored.run(Tensor(x[::-1].copy())).data
        h = 2  # direction blocks swap and time reverses
        np.testing.assert_allclose(out[:, 0, :h], flipped[::-1, 0, h:], atol=1e-12)
        np.testing.assert_allclose(out[:, 0, h:], flipped[::-1, 0, :h], atol=1e-12)

    def test_empty_sequence_rejected(self):
        store = ParameterStore(seed=0)
        rnn = BiGru(store, "r", input_dim=2, hidden=2)
        with pytest.raises(ValueError, match="empty"):
            rnn.run(Tensor(np.zeros((0, 1, 2))))

    def test_gradients(self):
        store = ParameterStore(seed=5)
        rnn = BiGru(store, "r", input_dim=2, hidden=2)
        x = np.random.default_rng(1).normal(size=(3, 2, 2))
        lengths = np.array([3, 2])

        def loss_fn():
            return probe_loss(rnn.run(Tensor(x), lengths))

        report = grad_check(loss_fn, store.parameters(), epsilon=1e-5)
        assert report.max_rel_error < 1e-6


class TestGatedCell:
    @staticmethod
    def reference(cell: GatedCell, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        r = sig(x @ cell.wxr.data + cell.bxr.data + h @ cell.whr.data + cell.bhr.data)
        z = sig(x @ cell.wxz.data + cell.bxz.data + h @ cell.whz.data + cell.bhz.data)
        c = np.tanh(
            x @ cell.wxn.data
            + cell.bxn.data
            + r * (h @ cell.whn.data + cell.bhn.data)
        )
        return z * h + (1 - z) * c

    def test_matches_reference(self):
        store = ParameterStore(seed=2)
        cell = GatedCell(store, "g", input_dim=3, state_dim=4)
        rng = np.random.default_rng(7)
        x, h = rng.normal(size=(5, 3)), rng.normal(size=(5, 4))
        out = cell.apply(Tensor(x), Tensor(h))
        np.testing.assert_allclose(out.data, self.reference(cell, x, h), atol=1e-12)

    def test_zero_parameters_halve_the_state(self):
        store = ParameterStore(seed=2)
        cell = GatedCell(store, "g", input_dim=3, state_dim=4)
        for p in store.parameters():
            p.data[...] = 0.0
        h = np.random.default_rng(0).normal(size=(2, 4))
        out = cell.apply(Tensor(np.zeros((2, 3))), Tensor(h))
        np.testing.assert_allclose(out.data, 0.5 * h, atol=1e-15)

    def test_saturated_update_gate_keeps_state(self):
        store = ParameterStore(seed=2)
        cell = GatedCell(store, "g", input_dim=3, state_dim=4)
        cell.bxz.data[...] = 50.0
        cell.bhz.data[...] = 50.0
        rng = np.random.default_rng(1)
        x, h = rng.normal(size=(2, 3)), rng.normal(size=(2, 4))
        out = cell.apply(Tensor(x), Tensor(h))
        np.testing.assert_allclose(out.data, h, atol=1e-9)

    def test_output_is_convex_combination(self):
        store = ParameterStore(seed=8)
        cell = GatedCell(store, "g", input_dim=3, state_dim=4)
        rng = np.random.default_rng(3)
        x, h = rng.normal(size=(6, 3)) * 3, rng.normal(size=(6, 4)) * 3
        out = cell.apply(Tensor(x), Tensor(h)).data
        assert np.all(out <= np.maximum(h, 1.0) + 1e-12)
        assert np.all(out >= np.minimum(h, -1.0) - 1e-12)

    def test_gradients(self):
        store = ParameterStore(seed=9)
        cell = GatedCell(store, "g", input_dim=2, state_dim=3)
        rng = np.random.default_rng(4)
        x, h = rng.normal(size=(3, 2)), rng.normal(size=(3, 3))

        def loss_fn():
            return probe_loss(cell.apply(Tensor(x), Tensor(h)))

        report = grad_check(loss_fn, store.parameters(), epsilon=1e-5)
        assert report.max_rel_error < 1e-6


def tiny_embedder(seed=0):
    store = ParameterStore(seed=seed)
    cfg = EncoderConfig(
        char_dim=2, char_hidden=2, surrogate_dim=2, word_dim=2, pos_dim=2, hidden_dim=4
    )
    chars = Vocabulary(list("abcdef"))
    words = Vocabulary(["abc", "de", "f"])
    pos = Vocabulary(["N", "V"])
    return store, HybridEmbedder(store, cfg, chars, words, pos)


class TestHybridEmbedder:
    def test_output_shape_and_determinism(self):
        store, emb = tiny_embedder()
        tokens, tags = ["abc", "de", "f"], ["N", "V", "N"]
        first = emb.embed(tokens, tags)
        assert first.data.shape == (3, 4)
        np.testing.assert_array_equal(first.data, emb.embed(tokens, tags).data)

    def test_unknown_tokens_take_fallback_rows(self):
        _, emb = tiny_embedder()
        known = emb.embed(["abc"], ["N"]).data
        unknown = emb.embed(["xyz"], ["N"]).data  # chars and token all unknown
        assert not np.allclose(known, unknown)

    def test_every_table_receives_gradient(self):
        store, emb = tiny_embedder()
        loss = probe_loss(emb.embed(["abc", "de"], ["N", "V"]))
        backward(loss, store.parameters())
        for table in [emb.char_table, emb.surrogate_table, emb.word_table, emb.pos_table]:
            assert np.abs(table.grad).sum() > 0

    def test_gradients(self):
        store, emb = tiny_embedder(seed=3)

        def loss_fn():
            return probe_loss(emb.embed(["abc", "f"], ["N", "N"]))

        report = grad_check(loss_fn, store.parameters(), epsilon=1e-5)
        assert report.max_rel_error < 1e-6

    def test_rejects_misaligned_or_empty_input(self):
        _, emb = tiny_embedder()
        with pytest.raises(ValueError):
            emb.embed(["a"], ["N", "V"])
        with pytest.raises(ValueError):
            emb.embed([], [])

    def test_token_order_matters(self):
        _, emb = tiny_embedder()
        ab = emb.embed(["abc", "de"], ["N", "N"]).data
        ba = emb.embed(["de", "abc"], ["N", "N"]).data
        assert not np.allclose(ab, ba[::-1])

    def test_matches_hand_rolled_oracle(self):
        _, emb = tiny_embedder(seed=17)
        tokens, tags = ["abc", "de", "f"], ["N", "V", "N"]
        got = emb.embed(tokens, tags).data

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        def scan(x, wx, wh, bx, bh):  # x: (T, B, D) -> (T, B, H)
            hidden = wh.data.shape[0]
            h = np.zeros((x.shape[1], hidden))
            outs = []
            for t in range(x.shape[0]):
                gx = x[t] @ wx.data + bx.data
                gh = h @ wh.data + bh.data
                r = sig(gx[:, :hidden] + gh[:, :hidden])
                z = sig(gx[:, hidden : 2 * hidden] + gh[:, hidden : 2 * hidden])
                n = np.tanh(gx[:, 2 * hidden :] + r * gh[:, 2 * hidden :])
                h = z * h + (1 - z) * n
                outs.append(h.copy())
            return np.stack(outs)

        def birnn(rnn, x, lengths):
            fwd = scan(x, *rnn.fwd)
            rev = np.stack(
                [
                    np.concatenate([x[:L, b][::-1], x[L:, b]])
                    for b, L in enumerate(lengths)
                ],
                axis=1,
            )
            bwd = scan(rev, *rnn.bwd)
            bwd = np.stack(
                [
                    np.concatenate([bwd[:L, b][::-1], bwd[L:, b]])
                    for b, L in enumerate(lengths)
                ],
                axis=1,
            )
            return np.concatenate([fwd, bwd], axis=-1)

        lengths = np.array([len(t) for t in tokens])
        chars = np.zeros((lengths.max(), len(tokens), emb.config.char_dim))
        for b, token in enumerate(tokens):
            for t, ch in enumerate(token):
                chars[t, b] = emb.char_table.data[emb.char_vocab.encode(ch)]
            for t in range(len(token), lengths.max()):
                chars[t, b] = emb.char_table.data[Vocabulary.pad_id]
        char_states = birnn(emb.char_rnn, chars, lengths)
        char_feat = np.stack(
            [char_states[:L, b].mean(axis=0) for b, L in enumerate(lengths)]
        )
        word_ids = emb.word_vocab.encode_all(tokens)
        pos_ids = emb.pos_vocab.encode_all(tags)
        per_token = np.concatenate(
            [
                char_feat,
                emb.surrogate_table.data[word_ids],
                emb.word_table.data[word_ids],
                emb.pos_table.data[pos_ids],
            ],
            axis=-1,
        )
        fused = birnn(
            emb.fusion_rnn, per_token[:, None, :], np.array([len(tokens)])
        )
        np.testing.assert_allclose(got, fused[:, 0, :], atol=1e-12)


class TestNodeInit:
    def test_shapes_and_pooling(self):
        store = ParameterStore(seed=1)
        init = NodeInit(store, hidden_dim=3, node_dim=4, num_types=2)
        h = np.random.default_rng(2).normal(size=(5, 3))
        text = init.text_states(Tensor(h))
        types = init.type_states(Tensor(h))
        assert text.data.shape == (5, 4) and types.data.shape == (2, 4)
        manual = (h @ init.type_w[1].data + init.type_b[1].data).max(axis=0)
        np.testing.assert_allclose(types.data[1], manual, atol=1e-12)

    def test_types_start_distinct(self):
        store = ParameterStore(seed=1)
        init = NodeInit(store, hidden_dim=3, node_dim=4, num_types=3)
        types = init.type_states(Tensor(np.ones((4, 3)))).data
        assert len({tuple(np.round(row, 12)) for row in types}) == 3

    def test_gradients(self):
        store = ParameterStore(seed=6)
        init = NodeInit(store, hidden_dim=2, node_dim=3, num_types=2)
        h = np.random.default_rng(5).normal(size=(4, 2))

        def loss_fn():
            both = ops.concat(
                [init.text_states(Tensor(h)), init.type_states(Tensor(h))], axis=0
            )
            return probe_loss(both)

        report = grad_check(loss_fn, store.parameters(), epsilon=1e-5)
        assert report.max_rel_error < 1e-6


class TestLoadWordVectors:
    def test_loads_matching_rows_only(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("2 3\nfoo 1.0 2.0 3.0\nbar 4.0 5.0 6.0\n")
        store = ParameterStore(seed=0)
        vocab = Vocabulary(["foo", "baz"])
        table = store.weight("w", vocab.size, 3)
        before = table.data.copy()
        assert load_word_vectors(str(path), vocab, table) == 1
        np.testing.assert_array_equal(table.data[vocab.encode("foo")], [1, 2, 3])
        np.testing.assert_array_equal(
            table.data[vocab.encode("baz")], before[vocab.encode("baz")]
        )

    def test_dimension_mismatch_raises(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("foo 1.0 2.0\n")
        store = ParameterStore(seed=0)
        vocab = Vocabulary(["foo"])
        table = store.weight("w", vocab.size, 3)
        with pytest.raises(ValueError, match="line 1"):
            load_word_vectors(str(path), vocab, table)
