"""Optimal alignment scores via dynamic programming, plus a brute-force oracle.

An alignment with gaps of x and y is a strictly increasing sequence of index
pairs; every unmatched symbol is scored against the gap.  The DP recurrence is

    M[i][j] = max(M[i-1][j-1] + S(x_i, y_j),
                  M[i-1][j]   + S(x_i, gap),
                  M[i][j-1]   + S(gap, y_j))

with M[0][0] = 0 and cumulative gap scores on the first row/column.  Score-only
computation keeps two rows; traceback keeps the full matrix and is capped at
TRACEBACK_MAX_N (the full matrix for two length-20000 strings is already
several gigabytes).  All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .core import (
    Alphabet,
    InvalidAlignmentError,
    ScoringMatrix,
    SizeCapError,
)

BRUTE_FORCE_MAX_LEN = 7
TRACEBACK_MAX_N = 20000


@njit(cache=True, nogil=True)
def _score_kernel(xc, yc, mat, gap):  # pragma: no cover - exercised via wrappers
    n = xc.shape[0]
    m = yc.shape[0]
    prev = np.empty(m + 1, np.float64)
    cur = np.empty(m + 1, np.float64)
    prev[0] = 0.0
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + mat[gap, yc[j - 1]]
    for i in range(1, n + 1):
        cur[0] = prev[0] + mat[xc[i - 1], gap]
        for j in range(1, m + 1):
            best = prev[j - 1] + mat[xc[i - 1], yc[j - 1]]
            up = prev[j] + mat[xc[i - 1], gap]
            if up > best:
                best = up
            left = cur[j - 1] + mat[gap, yc[j - 1]]
            if left > best:
                best = left
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True, nogil=True)
def _matrix_kernel(xc, yc, mat, gap):  # pragma: no cover - exercised via wrappers
    n = xc.shape[0]
    m = yc.shape[0]
    M = np.empty((n + 1, m + 1), np.float64)
    M[0, 0] = 0.0
    for j in range(1, m + 1):
        M[0, j] = M[0, j - 1] + mat[gap, yc[j - 1]]
    for i in range(1, n + 1):
        M[i, 0] = M[i - 1, 0] + mat[xc[i - 1], gap]
        for j in range(1, m + 1):
            best = M[i - 1, j - 1] + mat[xc[i - 1], yc[j - 1]]
            up = M[i - 1, j] + mat[xc[i - 1], gap]
            if up > best:
                best = up
            left = M[i, j - 1] + mat[gap, yc[j - 1]]
            if left > best:
                best = left
            M[i, j] = best
    return M


@dataclass(frozen=True)
class Alignment:
    """Strictly increasing 1-based index pairs ((mu_1,nu_1),...,(mu_k,nu_k))."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def validate(self, x: str, y: str) -> None:
        last_mu, last_nu = 0, 0
        for mu, nu in self.pairs:
            if not (last_mu < mu <= len(x)) or not (last_nu < nu <= len(y)):
                raise InvalidAlignmentError(
                    f"pair ({mu},{nu}) out of range or not increasing for "
                    f"lengths ({len(x)},{len(y)})")
            last_mu, last_nu = mu, nu

    def to_tsv(self) -> str:
        """Tab-separated (mu_i, nu_i) pairs, one per line."""
        return "\n".join(f"{mu}\t{nu}" for mu, nu in self.pairs)


@dataclass(frozen=True)
class QMatrix:
    """Column pair-counts of an alignment over the augmented alphabet."""

    alphabet: Alphabet
    table: np.ndarray  # (k+1) x (k+1) int64, gap row/column last, gap/gap always 0

    def count(self, c: str, d: str) -> int:
        return int(self.table[self.alphabet.index(c), self.alphabet.index(d)])

    def contract(self, S: ScoringMatrix) -> float:
        """Sum of count(c,d) * S(c,d); the gap/gap count is zero by construction."""
        if S.alphabet != self.alphabet:
            raise InvalidAlignmentError("QMatrix alphabet differs from the matrix's")
        return float(np.sum(self.table * S.values))

    def total_columns(self) -> int:
        return int(self.table.sum())


@dataclass(frozen=True)
class AlignmentResult:
    score: float
    alignment: Alignment
    q_counts: QMatrix


def _encode_pair(x: str, y: str, S: ScoringMatrix) -> tuple[np.ndarray, np.ndarray]:
    return S.alphabet.encode(x), S.alphabet.encode(y)


def optimal_score(x: str, y: str, S: ScoringMatrix) -> float:
    """Maximum alignment score over all alignments with gaps; O(|x||y|) time."""
    xc, yc = _encode_pair(x, y, S)
    return optimal_score_codes(xc, yc, S)


def optimal_score_codes(xc: np.ndarray, yc: np.ndarray, S: ScoringMatrix) -> float:
    """As optimal_score, on pre-encoded int64 code arrays."""
    return float(_score_kernel(xc, yc, S.values, S.alphabet.gap_index))


def optimal_alignment(x: str, y: str, S: ScoringMatrix) -> AlignmentResult:
    """Optimal score plus one alignment attaining it and its pair counts.

    Traceback ties break deterministically: diagonal first, then x against a
    gap, then y against a gap.
    """
    if max(len(x), len(y)) > TRACEBACK_MAX_N:
        raise SizeCapError(
            f"traceback limited to strings of length {TRACEBACK_MAX_N}; "
            "use optimal_score for longer inputs")
    xc, yc = _encode_pair(x, y, S)
    gap = S.alphabet.gap_index
    mat = S.values
    M = _matrix_kernel(xc, yc, mat, gap)
    pairs = []
    i, j = len(xc), len(yc)
    while i > 0 or j > 0:
        v = M[i, j]
        if i > 0 and j > 0 and v == M[i - 1, j - 1] + mat[xc[i - 1], yc[j - 1]]:
            pairs.append((i, j))
            i -= 1
            j -= 1
        elif i > 0 and v == M[i - 1, j] + mat[xc[i - 1], gap]:
            i -= 1
        else:
            j -= 1
    pi = Alignment(tuple(reversed(pairs)))
    return AlignmentResult(score=float(M[len(xc), len(yc)]),
                           alignment=pi,
                           q_counts=pair_counts(x, y, pi, S.alphabet))


def alignment_score(x: str, y: str, pi: Alignment, S: ScoringMatrix) -> float:
    """Score of a fixed alignment: aligned pairs plus gap scores of the rest."""
    pi.validate(x, y)
    xc, yc = _encode_pair(x, y, S)
    gap = S.alphabet.gap_index
    mat = S.values
    total = 0.0
    in_mu = np.zeros(len(xc), dtype=bool)
    in_nu = np.zeros(len(yc), dtype=bool)
    for mu, nu in pi.pairs:
        total += mat[xc[mu - 1], yc[nu - 1]]
        in_mu[mu - 1] = True
        in_nu[nu - 1] = True
    for i in range(len(xc)):
        if not in_mu[i]:
            total += mat[xc[i], gap]
    for j in range(len(yc)):
        if not in_nu[j]:
            total += mat[gap, yc[j]]
    return float(total)


def pair_counts(x: str, y: str, pi: Alignment, alphabet: Alphabet) -> QMatrix:
    """Count, for each symbol pair, how many columns of pi align them."""
    pi.validate(x, y)
    xc, yc = alphabet.encode(x), alphabet.encode(y)
    k = alphabet.augmented_size
    gap = alphabet.gap_index
    table = np.zeros((k, k), dtype=np.int64)
    in_mu = np.zeros(len(xc), dtype=bool)
    in_nu = np.zeros(len(yc), dtype=bool)
    for mu, nu in pi.pairs:
        table[xc[mu - 1], yc[nu - 1]] += 1
        in_mu[mu - 1] = True
        in_nu[nu - 1] = True
    for i in range(len(xc)):
        if not in_mu[i]:
            table[xc[i], gap] += 1
    for j in range(len(yc)):
        if not in_nu[j]:
            table[gap, yc[j]] += 1
    table.setflags(write=False)
    return QMatrix(alphabet, table)


def enumerate_alignments(lx: int, ly: int):
    """Yield every strictly increasing pair sequence as ((mu,...),(nu,...)), 1-based."""
    for k in range(0, min(lx, ly) + 1):
        for mu in itertools.combinations(range(1, lx + 1), k):
            for nu in itertools.combinations(range(1, ly + 1), k):
                yield mu, nu


def brute_force_score(x: str, y: str, S: ScoringMatrix) -> float:
    """Exhaustive maximum over all alignments; the independent DP oracle.

    Guarded to short strings: the number of alignments grows like C(2n, n).
    """
    if len(x) > BRUTE_FORCE_MAX_LEN or len(y) > BRUTE_FORCE_MAX_LEN:
        raise SizeCapError(
            f"brute force limited to strings of length {BRUTE_FORCE_MAX_LEN}")
    xc, yc = _encode_pair(x, y, S)
    gap = S.alphabet.gap_index
    mat = S.values
    x_gap = float(sum(mat[c, gap] for c in xc))
    y_gap = float(sum(mat[gap, c] for c in yc))
    best = x_gap + y_gap  # the empty alignment
    for mu, nu in enumerate_alignments(len(xc), len(yc)):
        s = x_gap + y_gap
        for i, j in zip(mu, nu):
            s += mat[xc[i - 1], yc[j - 1]] - mat[xc[i - 1], gap] - mat[gap, yc[j - 1]]
        if s > best:
            best = s
    return best


def read_sequences(path) -> list[str]:
    """Read sequences from plain text, one per line; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]
