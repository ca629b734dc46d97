import random
import struct

import numpy as np
import pytest

from jobmarket import embed
from jobmarket.embed import (EMPTY_DOC, EmbeddingStore, WeightedDoc,
                             load_embeddings, pairwise_distances, to_weighted_doc,
                             tokenize, wmd)
from jobmarket.errors import DataError

from conftest import TOY_VOCAB, make_store
from oracles import transport_cost_assignment


class TestTokenize:
    def test_casefold_only(self):
        assert tokenize("Senior PHP Developer") == ["senior", "php", "developer"]

    def test_stopword_removal(self):
        assert tokenize("Engineer and Developer", {"and"}) == ["engineer", "developer"]

    def test_technical_punctuation_preserved(self):
        assert tokenize("C++ / .NET developer") == ["c++", ".net", "developer"]

    def test_boundary_punctuation_stripped(self):
        assert tokenize("(senior) developer,") == ["senior", "developer"]

    def test_interior_punctuation_kept(self):
        assert tokenize("node.js c# full-stack") == ["node.js", "c#", "full-stack"]

    def test_empty_output_allowed(self):
        assert tokenize("/ / -") == []


class TestWeightedDoc:
    def test_count_normalization(self, toy_store):
        doc, oov = to_weighted_doc(["php", "php", "developer"], toy_store)
        w = dict(zip(doc.tokens, doc.weights))
        assert w["php"] == pytest.approx(2 / 3)
        assert w["developer"] == pytest.approx(1 / 3)
        assert oov == []

    def test_oov_dropped_and_reported(self, toy_store):
        doc, oov = to_weighted_doc(["php", "zzzqx"], toy_store)
        assert dict(zip(doc.tokens, doc.weights)) == {"php": 1.0}
        assert oov == ["zzzqx"]

    def test_empty_input_gives_empty_doc(self, toy_store):
        doc, oov = to_weighted_doc([], toy_store)
        assert doc is EMPTY_DOC

    def test_weights_sum_to_one(self, toy_store):
        rng = random.Random(0)
        for _ in range(50):
            toks = rng.choices(TOY_VOCAB, k=rng.randint(1, 8))
            doc, _ = to_weighted_doc(toks, toy_store)
            assert abs(sum(doc.weights) - 1.0) <= 1e-12


def random_doc(rng, store, max_tokens=8):
    toks = rng.sample(TOY_VOCAB, rng.randint(1, max_tokens))
    counts = [rng.randint(1, 3) for _ in toks]
    flat = [t for t, c in zip(toks, counts) for _ in range(c)]
    doc, _ = to_weighted_doc(flat, store)
    return doc


class TestWmd:
    def test_identity(self, toy_store):
        doc, _ = to_weighted_doc(["php", "developer"], toy_store)
        assert wmd(doc, doc, toy_store) == 0.0

    def test_single_token_docs_equal_ground_distance(self, toy_store):
        a, _ = to_weighted_doc(["php"], toy_store)
        b, _ = to_weighted_doc(["java"], toy_store)
        expect = float(np.linalg.norm(toy_store.vector("php") - toy_store.vector("java")))
        assert wmd(a, b, toy_store) == pytest.approx(expect, abs=1e-12)

    def test_against_assignment_oracle(self, toy_store):
        rng = random.Random(7)
        for _ in range(40):
            a = random_doc(rng, toy_store, 4)
            b = random_doc(rng, toy_store, 4)
            cost = [[float(np.linalg.norm(toy_store.vector(x) - toy_store.vector(y)))
                     for y in b.tokens] for x in a.tokens]
            from fractions import Fraction
            wa = [Fraction(x).limit_denominator(10 ** 6) for x in a.weights]
            wb = [Fraction(x).limit_denominator(10 ** 6) for x in b.weights]
            expect = transport_cost_assignment(wa, wb, cost)
            assert wmd(a, b, toy_store) == pytest.approx(expect, abs=1e-9)

    def test_symmetry_exact(self, toy_store):
        rng = random.Random(3)
        for _ in range(25):
            a = random_doc(rng, toy_store)
            b = random_doc(rng, toy_store)
            assert wmd(a, b, toy_store) == wmd(b, a, toy_store)

    def test_triangle_inequality_sampled(self, toy_store):
        rng = random.Random(11)
        for _ in range(100):
            a, b, c = (random_doc(rng, toy_store, 5) for _ in range(3))
            ab = wmd(a, b, toy_store)
            bc = wmd(b, c, toy_store)
            ac = wmd(a, c, toy_store)
            assert ac <= ab + bc + 1e-9

    def test_scale_covariance(self):
        store = make_store(TOY_VOCAB[:6])
        scaled = EmbeddingStore(
            {t: 2.0 * store.vector(t) for t in TOY_VOCAB[:6]}, store.dim)
        rng = random.Random(5)
        for _ in range(10):
            toks_a = rng.sample(TOY_VOCAB[:6], 3)
            toks_b = rng.sample(TOY_VOCAB[:6], 3)
            a1, _ = to_weighted_doc(toks_a, store)
            b1, _ = to_weighted_doc(toks_b, store)
            a2, _ = to_weighted_doc(toks_a, scaled)
            b2, _ = to_weighted_doc(toks_b, scaled)
            assert wmd(a2, b2, scaled) == pytest.approx(
                2.0 * wmd(a1, b1, store), abs=1e-9)

    def test_empty_doc_rejected(self, toy_store):
        doc, _ = to_weighted_doc(["php"], toy_store)
        with pytest.raises(DataError):
            wmd(EMPTY_DOC, doc, toy_store)


class TestPairwise:
    def test_single_value(self, toy_store):
        m = pairwise_distances(["php developer"], toy_store)
        assert m.values.shape == (1, 1)
        assert m.values[0, 0] == 0.0

    def test_bag_is_order_invariant(self, toy_store):
        m = pairwise_distances(["php developer", "developer php"], toy_store)
        assert m.values[0, 1] == 0.0

    def test_matches_per_pair_oracle(self, toy_store):
        titles = ["php developer", "senior php developer", "java engineer",
                  "data scientist", "web designer", "software architect"]
        m = pairwise_distances(titles, toy_store)
        for i in range(6):
            for j in range(6):
                if i == j:
                    assert m.values[i, j] == 0.0
                else:
                    a, _ = to_weighted_doc(tokenize(titles[i]), toy_store)
                    b, _ = to_weighted_doc(tokenize(titles[j]), toy_store)
                    assert m.values[i, j] == pytest.approx(
                        wmd(a, b, toy_store), abs=1e-12)
        assert np.array_equal(m.values, m.values.T)

    def test_all_oov_falls_back_to_string_equality(self, toy_store):
        m = pairwise_distances(["php developer", "zzz qqq", "yyy www"], toy_store)
        assert m.sentinel is not None
        # fallback entries carry the sentinel and are flagged
        assert m.values[0, 1] == m.sentinel
        assert m.values[1, 2] == m.sentinel
        assert (0, 1) in m.flagged and (1, 2) in m.flagged
        finite = [m.values[i, j] for i in range(3) for j in range(3)
                  if (i, j) not in m.flagged]
        assert m.sentinel == 1.0 + max(finite)

    def test_oov_report(self, toy_store):
        m = pairwise_distances(["php zzzqx"], toy_store)
        assert m.oov == {"php zzzqx": ["zzzqx"]}


class TestLoader:
    def test_text_format_round_trip(self, tmp_path, toy_store):
        p = tmp_path / "vec.txt"
        embed.save_embeddings_text(toy_store, p)
        loaded = load_embeddings(p)
        assert loaded.dim == toy_store.dim
        for t in TOY_VOCAB:
            assert np.array_equal(loaded.vector(t), toy_store.vector(t))

    def test_binary_format(self, tmp_path):
        vecs = {"alpha": [1.0, 2.0, 3.0], "beta": [-1.5, 0.25, 4.0]}
        blob = b"2 3\n"
        for tok, v in vecs.items():
            blob += tok.encode() + b" " + struct.pack("<3f", *v)
        p = tmp_path / "vec.bin"
        p.write_bytes(blob)
        store = load_embeddings(p)
        assert store.dim == 3
        assert np.allclose(store.vector("alpha"), [1.0, 2.0, 3.0])
        assert np.allclose(store.vector("beta"), [-1.5, 0.25, 4.0])

    def test_bad_header(self, tmp_path):
        p = tmp_path / "vec.txt"
        p.write_text("not a header\n")
        with pytest.raises(DataError):
            load_embeddings(p)
