import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alignfluct import (
    Alignment,
    Alphabet,
    BINARY,
    DNA,
    InvalidAlignmentError,
    ScoringMatrix,
    SizeCapError,
    SymbolError,
    alignment_score,
    brute_force_score,
    identity_matrix,
    linear_combine,
    norm_delta,
    norm_inf,
    optimal_alignment,
    optimal_score,
    pair_counts,
    read_sequences,
)
from alignfluct import align as align_mod

ID2 = identity_matrix(BINARY, gap_penalty=6)
PM1 = identity_matrix(DNA, gap_penalty=1, match=1, mismatch=-1)


def random_binary(rng, n, p0=0.5):
    return "".join(rng.choice(["0", "1"], size=n, p=[p0, 1 - p0]))


def random_alignment(rng, lx, ly):
    k = int(rng.integers(0, min(lx, ly) + 1))
    mu = sorted(rng.choice(np.arange(1, lx + 1), size=k, replace=False))
    nu = sorted(rng.choice(np.arange(1, ly + 1), size=k, replace=False))
    return Alignment(tuple(zip(mu, nu)))


class TestOptimalScore:
    def test_worked_dna_example(self):
        # match 1, mismatch -1, gap -1: the displayed 7-column alignment scores 1
        assert optimal_score("AGTTCG", "AATTAC", PM1) == 1.0

    def test_empty_strings(self):
        assert optimal_score("", "", ID2) == 0.0
        assert optimal_score("", "01", ID2) == -12.0

    def test_self_alignment_attains_length(self):
        for s in ("0", "0110", "111000101"):
            assert optimal_score(s, s, ID2) == len(s)

    def test_symbol_outside_alphabet(self):
        with pytest.raises(SymbolError):
            optimal_score("01", "02", ID2)


class TestOptimalAlignment:
    def test_score_consistency(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            x, y = random_binary(rng, 12), random_binary(rng, 9)
            res = optimal_alignment(x, y, ID2)
            assert res.score == optimal_score(x, y, ID2)
            assert alignment_score(x, y, res.alignment, ID2) == res.score
            assert res.q_counts.contract(ID2) == res.score

    def test_single_letter_pair(self):
        S = identity_matrix(Alphabet(("a", "b")), gap_penalty=1)
        res = optimal_alignment("a", "a", S)
        assert res.alignment.pairs == ((1, 1),)
        assert res.score == 1.0

    def test_dna_example_shape(self):
        # 5 aligned letter pairs plus one gapped symbol on each side
        res = optimal_alignment("AGTTCG", "AATTAC", PM1)
        assert res.score == brute_force_score("AGTTCG", "AATTAC", PM1) == 1.0
        assert len(res.alignment) == 5
        assert res.q_counts.total_columns() == 7

    def test_traceback_deterministic(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x, y = random_binary(rng, 10), random_binary(rng, 10)
            a = optimal_alignment(x, y, ID2).alignment
            b = optimal_alignment(x, y, ID2).alignment
            assert a.pairs == b.pairs

    def test_size_cap(self, monkeypatch):
        monkeypatch.setattr(align_mod, "TRACEBACK_MAX_N", 4)
        with pytest.raises(SizeCapError):
            optimal_alignment("00000", "0", ID2)


# The displayed 12-column alignment of the worked binary example:
# x = babbababbba, y = bbbbabbbabb; x11 and y9 are gapped.
AB = Alphabet(("a", "b"))
EX_X = "babbababbba"
EX_Y = "bbbbabbbabb"
EX_PI = Alignment(((1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (6, 6), (7, 7),
                   (8, 8), (9, 10), (10, 11)))


class TestAlignmentScore:
    def test_worked_q_example(self):
        S = identity_matrix(AB, gap_penalty=2, match=3, mismatch=-1)
        q = pair_counts(EX_X, EX_Y, EX_PI, AB)
        assert q.count("b", "b") == 7
        assert q.count("a", "b") == 2
        assert q.count("a", "a") == 1
        assert q.count("a", "-") == 1 and q.count("-", "a") == 1
        expected = 7 * 3 + 2 * (-1) + 1 * 3 + 2 * (-2)
        assert alignment_score(EX_X, EX_Y, EX_PI, S) == expected == q.contract(S)

    def test_empty_alignment_scores_all_gaps(self):
        pi = Alignment(())
        got = alignment_score("0110", "10", pi, ID2)
        assert got == 6 * (-6.0)

    def test_identity_alignment(self):
        x = "0101"
        pi = Alignment(tuple((i, i) for i in range(1, 5)))
        assert alignment_score(x, x, pi, ID2) == 4.0

    def test_invalid_alignments_rejected(self):
        for pairs in (((0, 1),), ((1, 3),), ((2, 1), (1, 2)), ((1, 1), (1, 2))):
            with pytest.raises(InvalidAlignmentError):
                alignment_score("01", "01", Alignment(pairs), ID2)


class TestPairCounts:
    def test_empty_alignment_counts_multiplicities(self):
        q = pair_counts("0100", "11", Alignment(()), BINARY)
        assert q.count("0", "-") == 3
        assert q.count("1", "-") == 1
        assert q.count("-", "1") == 2
        assert q.count("-", "0") == 0

    def test_column_count_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            lx, ly = int(rng.integers(0, 9)), int(rng.integers(0, 9))
            x, y = random_binary(rng, lx), random_binary(rng, ly)
            pi = random_alignment(rng, lx, ly)
            q = pair_counts(x, y, pi, BINARY)
            k = len(pi)
            assert q.total_columns() == k + (lx - k) + (ly - k)

    def test_row_sums_match_letter_multiplicities(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            x, y = random_binary(rng, 8), random_binary(rng, 6)
            pi = random_alignment(rng, 8, 6)
            q = pair_counts(x, y, pi, BINARY)
            for c in "01":
                ci = BINARY.index(c)
                assert q.table[ci, :].sum() == x.count(c)
                assert q.table[:, ci].sum() == y.count(c)


class TestBruteForce:
    def test_guard(self):
        with pytest.raises(SizeCapError):
            brute_force_score("0" * 8, "1", ID2)

    def test_empty(self):
        assert brute_force_score("", "", ID2) == 0.0

    def test_length_one(self):
        S = identity_matrix(BINARY, gap_penalty=6)
        assert brute_force_score("0", "1", S) == max(S["0", "1"], 2 * (-6.0))
        assert brute_force_score("0", "0", S) == 1.0

    def test_oracle_equivalence_exhaustive_binary(self):
        for lx in range(5):
            for ly in range(5):
                for xs in itertools.product("01", repeat=lx):
                    for ys in itertools.product("01", repeat=ly):
                        x, y = "".join(xs), "".join(ys)
                        assert optimal_score(x, y, ID2) == brute_force_score(x, y, ID2)

    def test_oracle_equivalence_random_dna(self):
        rng = np.random.default_rng(5)
        vals = np.array([
            [5, -1, -2, -3, -4],
            [-1, 4, -2, -1, -4],
            [-2, -2, 6, 0, -4],
            [-3, -1, 0, 3, -4],
            [-4, -4, -4, -4, 0],
        ], dtype=float)
        S = ScoringMatrix(DNA, vals)
        for _ in range(500):
            x = "".join(rng.choice(list("ATCG"), size=int(rng.integers(0, 7))))
            y = "".join(rng.choice(list("ATCG"), size=int(rng.integers(0, 7))))
            assert optimal_score(x, y, S) == brute_force_score(x, y, S)


class TestScoreProperties:
    @given(st.text("01", max_size=8), st.text("01", max_size=8),
           st.data())
    @settings(max_examples=60, deadline=None)
    def test_q_identity(self, x, y, data):
        k = data.draw(st.integers(0, min(len(x), len(y))))
        mu = sorted(data.draw(st.sets(st.integers(1, max(len(x), 1)), min_size=k, max_size=k))
                    ) if k else []
        nu = sorted(data.draw(st.sets(st.integers(1, max(len(y), 1)), min_size=k, max_size=k))
                    ) if k else []
        pi = Alignment(tuple(zip(mu, nu)))
        q = pair_counts(x, y, pi, BINARY)
        assert alignment_score(x, y, pi, ID2) == q.contract(ID2)

    def test_linearity_for_fixed_alignment(self):
        from alignfluct import build_single_letter_T
        T = build_single_letter_T(ID2, "0", "1", 1)
        SmT = linear_combine(ID2, 0.5, T)
        rng = np.random.default_rng(6)
        for _ in range(40):
            x, y = random_binary(rng, 10), random_binary(rng, 12)
            pi = random_alignment(rng, 10, 12)
            lhs = alignment_score(x, y, pi, SmT)
            rhs = alignment_score(x, y, pi, ID2) - 0.5 * alignment_score(x, y, pi, T)
            assert lhs == rhs

    def test_single_letter_replacement_bound(self):
        nd = norm_delta(ID2)
        rng = np.random.default_rng(7)
        for _ in range(60):
            x, y = random_binary(rng, 12), random_binary(rng, 12)
            base = optimal_score(x, y, ID2)
            for i in range(len(x)):
                for c in "01":
                    moved = optimal_score(x[:i] + c + x[i + 1:], y, ID2)
                    assert abs(moved - base) <= nd

    def test_extension_bound(self):
        # the drop is capped by the appended letter's own score (norm_inf);
        # the rise by swapping the new partner's gap for a letter (norm_delta)
        bound = max(norm_inf(ID2), norm_delta(ID2))
        rng = np.random.default_rng(8)
        for _ in range(60):
            x, y = random_binary(rng, 11), random_binary(rng, 13)
            base = optimal_score(x, y, ID2)
            for c in "01":
                assert abs(optimal_score(x + c, y, ID2) - base) <= bound

    def test_extension_rise_can_exceed_norm_inf(self):
        # appending a letter that pairs with a previously gapped partner gains
        # S(c,a) - S(gap,a), which reaches norm_delta; brute-force-verified
        assert brute_force_score("1", "1", ID2) - brute_force_score("", "1", ID2) == 7.0
        assert norm_inf(ID2) == 6.0

    def test_superadditivity_on_splits(self):
        rng = np.random.default_rng(9)
        for _ in range(60):
            x, y = random_binary(rng, 16), random_binary(rng, 16)
            i = int(rng.integers(0, 17))
            j = int(rng.integers(0, 17))
            whole = optimal_score(x, y, ID2)
            split = optimal_score(x[:i], y[:j], ID2) + optimal_score(x[i:], y[j:], ID2)
            assert whole >= split


def test_alignment_tsv():
    pi = Alignment(((1, 2), (3, 5)))
    assert pi.to_tsv() == "1\t2\n3\t5"


def test_read_sequences(tmp_path):
    p = tmp_path / "seqs.txt"
    p.write_text("AGTTCG\n\nAATTAC\n")
    assert read_sequences(p) == ["AGTTCG", "AATTAC"]
