import numpy as np
import pytest

from seqopt.seqs import (AMINO_ACIDS, Vocabulary, detokenize, levenshtein,
                         levenshtein_one_to_many, min_distance_to_set, one_hot,
                         one_hot_batch, pairwise_distances, tokenize)


def brute_levenshtein(a, b):
    """Independent full-table DP oracle."""
    a, b = list(a), list(b)
    n, m = len(a), len(b)
    D = np.zeros((n + 1, m + 1), dtype=int)
    D[:, 0] = np.arange(n + 1)
    D[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = min(D[i - 1, j] + 1, D[i, j - 1] + 1,
                          D[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return int(D[n, m])


@pytest.fixture(scope="module")
def vocab():
    return Vocabulary.amino_acids()


class TestVocabulary:
    def test_twenty_amino_acids(self, vocab):
        assert vocab.size == 20
        assert "".join(vocab.tokens) == AMINO_ACIDS

    def test_index_symbol_maps_inverse(self, vocab):
        for i, t in enumerate(vocab.tokens):
            assert vocab.index(t) == i

    def test_duplicate_symbols_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(("A", "A", "C"))


class TestTokenize:
    def test_round_trip(self, vocab):
        assert detokenize(tokenize("ACD", vocab), vocab) == "ACD"
        np.testing.assert_array_equal(tokenize("ACD", vocab), [0, 1, 2])

    def test_empty_string(self, vocab):
        assert tokenize("", vocab).size == 0

    def test_unknown_symbol_names_position(self, vocab):
        # 'Z' already invalid at position 3; '9' at 4 never reached
        with pytest.raises(ValueError, match="position 3"):
            tokenize("ACDZ9", vocab)
        with pytest.raises(ValueError, match="position 4"):
            tokenize("ACDA9", vocab)

    def test_round_trip_random(self, vocab):
        rng = np.random.default_rng(3)
        for _ in range(20):
            seq = rng.integers(0, vocab.size, size=rng.integers(1, 30))
            text = detokenize(seq, vocab)
            np.testing.assert_array_equal(tokenize(text, vocab), seq)


class TestOneHot:
    def test_basis_rows(self):
        v = Vocabulary(("A", "B", "C"))
        np.testing.assert_array_equal(one_hot(np.array([0]), v), [[1.0, 0.0, 0.0]])

    def test_rows_sum_to_one_and_argmax_inverts(self, vocab):
        rng = np.random.default_rng(7)
        seq = rng.integers(0, vocab.size, size=15)
        m = one_hot(seq, vocab)
        np.testing.assert_array_equal(m.sum(axis=1), np.ones(15))
        assert set(np.unique(m)) == {0.0, 1.0}
        np.testing.assert_array_equal(m.argmax(axis=1), seq)

    def test_batch_matches_single(self, vocab):
        rng = np.random.default_rng(8)
        seqs = rng.integers(0, vocab.size, size=(6, 9))
        batch = one_hot_batch(seqs, vocab.size)
        for i in range(6):
            np.testing.assert_array_equal(batch[i], one_hot(seqs[i], vocab))


class TestLevenshtein:
    def test_identical_is_zero(self):
        assert levenshtein([1, 2, 3], [1, 2, 3]) == 0

    def test_kitten_sitting(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_empty_cases(self):
        assert levenshtein([], [1, 2]) == 2
        assert levenshtein([1, 2], []) == 2
        assert levenshtein([], []) == 0

    def test_matches_full_dp_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(400):
            a = rng.integers(0, 6, size=rng.integers(0, 13))
            b = rng.integers(0, 6, size=rng.integers(0, 13))
            assert levenshtein(a, b) == brute_levenshtein(a, b)

    def test_metric_properties(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            a, b, c = (rng.integers(0, 4, size=rng.integers(1, 10)) for _ in range(3))
            dab, dba = levenshtein(a, b), levenshtein(b, a)
            assert dab >= 0
            assert dab == dba
            assert (dab == 0) == (len(a) == len(b) and (a == b).all())
            assert dab <= levenshtein(a, c) + levenshtein(c, b)

    def test_one_to_many_matches_scalar(self):
        rng = np.random.default_rng(13)
        q = rng.integers(0, 5, size=8)
        targets = rng.integers(0, 5, size=(40, 11))
        got = levenshtein_one_to_many(q, targets)
        want = [levenshtein(q, t) for t in targets]
        np.testing.assert_array_equal(got, want)

    def test_min_distance_and_pairwise(self):
        rng = np.random.default_rng(14)
        seqs = rng.integers(0, 4, size=(10, 7))
        refs = rng.integers(0, 4, size=(5, 7))
        got = min_distance_to_set(seqs, refs)
        want = [min(levenshtein(s, r) for r in refs) for s in seqs]
        np.testing.assert_array_equal(got, want)
        pd = pairwise_distances(seqs)
        assert pd.size == 45
        want_pd = [levenshtein(seqs[i], seqs[j])
                   for i in range(10) for j in range(i + 1, 10)]
        np.testing.assert_array_equal(np.sort(pd), np.sort(want_pd))
