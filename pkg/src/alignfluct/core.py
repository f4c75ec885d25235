"""Alphabets, letter distributions, and symmetric scoring matrices.

A scoring matrix assigns a real score to every pair of symbols from the
augmented alphabet (letters plus the gap symbol).  The gap/gap entry is
undefined by default: no alignment column ever pairs two gaps, so nothing
should read it, and it is excluded from the norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

PROB_TOL = 1e-12


class AlignfluctError(Exception):
    """Base class for errors raised by this package."""


class SymbolError(AlignfluctError):
    """A string or spec uses a symbol outside the alphabet."""


class AlphabetMismatchError(AlignfluctError):
    """Two matrices or a matrix and a string disagree on the alphabet."""


class InvalidAlignmentError(AlignfluctError):
    """An alignment has out-of-range or non-increasing index pairs."""


class NoOccurrenceError(AlignfluctError):
    """The letters to be changed do not occur in either string."""


class SizeCapError(AlignfluctError):
    """Input length exceeds the configured cap for an expensive operation."""


class ConfigError(AlignfluctError):
    """A run configuration or config file is invalid."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite letter set plus a distinguished gap symbol."""

    letters: tuple[str, ...]
    gap: str = "-"

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if len(self.letters) < 2:
            raise SymbolError("alphabet needs at least 2 letters")
        if len(set(self.letters)) != len(self.letters):
            raise SymbolError("alphabet letters must be pairwise distinct")
        if self.gap in self.letters:
            raise SymbolError(f"gap symbol {self.gap!r} collides with a letter")
        for c in self.letters + (self.gap,):
            if not isinstance(c, str) or len(c) != 1:
                raise SymbolError(f"symbols must be single characters, got {c!r}")

    @property
    def size(self) -> int:
        return len(self.letters)

    @property
    def augmented_size(self) -> int:
        """Letter count plus one for the gap."""
        return len(self.letters) + 1

    @property
    def gap_index(self) -> int:
        return len(self.letters)

    def index(self, symbol: str) -> int:
        """Code of a symbol; letters come first, the gap is last."""
        if symbol == self.gap:
            return len(self.letters)
        try:
            return self.letters.index(symbol)
        except ValueError:
            raise SymbolError(f"symbol {symbol!r} not in alphabet") from None

    def symbol(self, code: int) -> str:
        if code == len(self.letters):
            return self.gap
        return self.letters[code]

    def encode(self, s: str) -> np.ndarray:
        """Encode a gap-free string as an int64 code array."""
        lut = {c: i for i, c in enumerate(self.letters)}
        try:
            return np.array([lut[c] for c in s], dtype=np.int64)
        except KeyError as exc:
            raise SymbolError(f"symbol {exc.args[0]!r} not in alphabet") from None

    def decode(self, codes: Iterable[int]) -> str:
        return "".join(self.symbol(int(c)) for c in codes)


BINARY = Alphabet(("0", "1"))
DNA = Alphabet(("A", "T", "C", "G"))


@dataclass(frozen=True)
class LetterDistribution:
    """I.i.d. letter probabilities over an alphabet's letters (gap excluded)."""

    alphabet: Alphabet
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.probs) != self.alphabet.size:
            raise ConfigError("one probability per letter required")
        if any(p < 0 for p in self.probs):
            raise ConfigError("probabilities must be non-negative")
        if abs(sum(self.probs) - 1.0) > PROB_TOL:
            raise ConfigError(f"probabilities sum to {sum(self.probs)!r}, not 1")

    @classmethod
    def from_map(cls, alphabet: Alphabet, probs: Mapping[str, float]) -> "LetterDistribution":
        if set(probs) != set(alphabet.letters):
            raise ConfigError("distribution domain must equal the alphabet's letters")
        return cls(alphabet, tuple(probs[c] for c in alphabet.letters))

    def prob(self, letter: str) -> float:
        return self.probs[self.alphabet.index(letter)]

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=np.float64)


def _is_half_integer(values: np.ndarray) -> bool:
    doubled = 2.0 * values
    return bool(np.all(np.isfinite(doubled))
                and np.all(np.abs(doubled) < 2.0**52)
                and np.all(doubled == np.rint(doubled)))


class ScoringMatrix:
    """Symmetric score over the augmented alphabet; houses S, T, and S - eps*T.

    Entries are stored as a read-only (k+1) x (k+1) float64 array with the gap
    row/column last.  When every entry is an integer or half-integer (all the
    benchmark matrices are), float64 arithmetic on scores is exact, so optimal
    scores, tie-breaking, and cross-run results are bit-reproducible.
    """

    def __init__(self, alphabet: Alphabet, values: np.ndarray, gap_gap_defined: bool = False):
        values = np.asarray(values, dtype=np.float64)
        k = alphabet.augmented_size
        if values.shape != (k, k):
            raise ConfigError(f"matrix must be {k}x{k} (gap row/column last)")
        values = values.copy()
        if not gap_gap_defined:
            values[k - 1, k - 1] = 0.0  # placeholder; excluded from norms, never read by the DP
        if not np.array_equal(values, values.T):
            raise ConfigError("scoring matrix must be symmetric")
        values.setflags(write=False)
        self.alphabet = alphabet
        self.values = values
        self.gap_gap_defined = bool(gap_gap_defined)

    @classmethod
    def from_map(cls, alphabet: Alphabet, entries: Mapping[tuple[str, str], float],
                 gap_gap_defined: bool = False) -> "ScoringMatrix":
        """Build from {(symbol, symbol): score}; missing mirror entries are filled."""
        k = alphabet.augmented_size
        values = np.zeros((k, k))
        seen = np.zeros((k, k), dtype=bool)
        for (c, d), v in entries.items():
            i, j = alphabet.index(c), alphabet.index(d)
            for a, b in ((i, j), (j, i)):
                if seen[a, b] and values[a, b] != v:
                    raise ConfigError(f"conflicting entries for ({c!r},{d!r})")
                values[a, b] = v
                seen[a, b] = True
        return cls(alphabet, values, gap_gap_defined)

    def score(self, c: str, d: str) -> float:
        """Score of an aligned symbol pair."""
        i, j = self.alphabet.index(c), self.alphabet.index(d)
        g = self.alphabet.gap_index
        if i == g and j == g and not self.gap_gap_defined:
            raise SymbolError("gap/gap score is undefined")
        return float(self.values[i, j])

    def __getitem__(self, key: tuple[str, str]) -> float:
        return self.score(*key)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ScoringMatrix)
                and self.alphabet == other.alphabet
                and self.gap_gap_defined == other.gap_gap_defined
                and np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return (f"ScoringMatrix(letters={''.join(self.alphabet.letters)!r}, "
                f"gap={self.alphabet.gap!r})")

    @property
    def exact(self) -> bool:
        """True when all entries are half-integers, making score sums exact."""
        return _is_half_integer(self.values)

    def gap_score(self, c: str) -> float:
        return float(self.values[self.alphabet.index(c), self.alphabet.gap_index])


def norm_delta(S: ScoringMatrix) -> float:
    """Largest change of a column score under a single-symbol substitution.

    max over c, d, e in the augmented alphabet of |S(c,d) - S(c,e)|, skipping
    comparisons that would read the undefined gap/gap entry.
    """
    v = S.values
    k = v.shape[0]
    g = k - 1
    best = 0.0
    for c in range(k):
        for d in range(k):
            if not S.gap_gap_defined and c == g and d == g:
                continue
            for e in range(k):
                if not S.gap_gap_defined and c == g and e == g:
                    continue
                best = max(best, abs(v[c, d] - v[c, e]))
    return best


def norm_inf(S: ScoringMatrix) -> float:
    """Largest absolute entry, with the same gap/gap exclusion."""
    v = S.values
    g = v.shape[0] - 1
    best = 0.0
    for c in range(v.shape[0]):
        for d in range(v.shape[0]):
            if not S.gap_gap_defined and c == g and d == g:
                continue
            best = max(best, abs(v[c, d]))
    return best


def linear_combine(S: ScoringMatrix, eps: float, T: ScoringMatrix) -> ScoringMatrix:
    """Entrywise S - eps*T on a shared alphabet."""
    if S.alphabet != T.alphabet:
        raise AlphabetMismatchError("matrices use different alphabets")
    gg = S.gap_gap_defined and T.gap_gap_defined
    return ScoringMatrix(S.alphabet, S.values - eps * T.values, gap_gap_defined=gg)


def identity_matrix(alphabet: Alphabet, gap_penalty: float,
                    match: float = 1.0, mismatch: float = 0.0) -> ScoringMatrix:
    """Match/mismatch matrix with a uniform gap penalty (score -gap_penalty)."""
    k = alphabet.augmented_size
    values = np.full((k, k), float(mismatch))
    np.fill_diagonal(values, float(match))
    values[:, -1] = -float(gap_penalty)
    values[-1, :] = -float(gap_penalty)
    values[-1, -1] = 0.0
    return ScoringMatrix(alphabet, values)


_BLASTZ_BLOCK = np.array([
    [91.0, -31.0, -114.0, -123.0],
    [-31.0, 100.0, -125.0, -114.0],
    [-114.0, -125.0, 100.0, -31.0],
    [-123.0, -114.0, -31.0, 91.0],
])


def builtin_blastz(gap_penalty: float) -> ScoringMatrix:
    """BLASTZ default substitution matrix on (A,T,C,G); the caller sets the gap."""
    values = np.zeros((5, 5))
    values[:4, :4] = _BLASTZ_BLOCK
    values[:4, 4] = -float(gap_penalty)
    values[4, :4] = -float(gap_penalty)
    return ScoringMatrix(DNA, values)


def constant_matrix(alphabet: Alphabet, letter_score: float,
                    gap_penalty: float = 0.0) -> ScoringMatrix:
    """All letter pairs score the same; mainly useful for degenerate checks."""
    k = alphabet.augmented_size
    values = np.full((k, k), float(letter_score))
    values[:, -1] = -float(gap_penalty)
    values[-1, :] = -float(gap_penalty)
    values[-1, -1] = 0.0
    return ScoringMatrix(alphabet, values)


def load_scoring_matrix(path) -> ScoringMatrix:
    """Load a matrix from plain text.

    First non-comment line: space-separated letters.  Then one row per line of
    the full (k+1) x (k+1) matrix, gap row/column last.  '#' starts a comment.
    The gap/gap cell may be any number or '*'; it is treated as undefined.
    Symmetry is validated.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                lines.append(line)
    if not lines:
        raise ConfigError(f"{path}: empty matrix file")
    letters = lines[0].split()
    alphabet = Alphabet(tuple(letters))
    k = alphabet.augmented_size
    if len(lines) != 1 + k:
        raise ConfigError(f"{path}: expected {k} matrix rows, found {len(lines) - 1}")
    values = np.zeros((k, k))
    for i, line in enumerate(lines[1:]):
        cells = line.split()
        if len(cells) != k:
            raise ConfigError(f"{path}: row {i + 1} has {len(cells)} entries, expected {k}")
        for j, cell in enumerate(cells):
            if cell == "*":
                if (i, j) != (k - 1, k - 1):
                    raise ConfigError(f"{path}: '*' only allowed in the gap/gap cell")
                values[i, j] = 0.0
            else:
                try:
                    values[i, j] = float(cell)
                except ValueError:
                    raise ConfigError(f"{path}: bad number {cell!r} in row {i + 1}") from None
    return ScoringMatrix(alphabet, values)
