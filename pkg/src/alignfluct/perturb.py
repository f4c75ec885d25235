"""Perturbation scoring functions and the random single-letter change.

For a change of letter a into b, the matrix T satisfies: for any fixed
alignment pi, the expected change of the pi-score under one uniformly chosen
letter change equals T_pi(x, y) / N, where N counts the changeable letters in
both strings.  The grouped variant (e.g. {C,G} changed to a fair draw from
{A,T}) averages over the target letters.  The sampler always flips exactly one
letter; the multiplicity field only scales the analytical T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    NoOccurrenceError,
    ScoringMatrix,
    SizeCapError,
    SymbolError,
)
from .align import Alignment, alignment_score, optimal_alignment, optimal_score_codes

EXPECTED_CHANGE_MAX_N = 2000


@dataclass(frozen=True)
class PerturbationSpec:
    """Which letters get changed into which; multiplicity scales T only."""

    kind: str  # "single" or "group"
    from_letters: tuple[str, ...]
    to_letters: tuple[str, ...]
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "from_letters", tuple(self.from_letters))
        object.__setattr__(self, "to_letters", tuple(self.to_letters))
        if self.kind not in ("single", "group"):
            raise SymbolError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "single" and (len(self.from_letters) != 1 or len(self.to_letters) != 1):
            raise SymbolError("single perturbation takes one source and one target letter")
        if not self.from_letters or not self.to_letters:
            raise SymbolError("perturbation letter sets must be non-empty")
        if len(set(self.from_letters)) != len(self.from_letters) \
                or len(set(self.to_letters)) != len(self.to_letters):
            raise SymbolError("perturbation letter sets must not repeat letters")
        overlap = set(self.from_letters) & set(self.to_letters)
        if overlap and set(self.from_letters) != set(self.to_letters):
            raise SymbolError("source and target letters must be disjoint or identical")
        if int(self.multiplicity) < 1:
            raise SymbolError("multiplicity must be a positive integer")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def is_trivial(self) -> bool:
        return set(self.from_letters) == set(self.to_letters)

    def validate_on(self, S: ScoringMatrix) -> None:
        for c in self.from_letters + self.to_letters:
            S.alphabet.index(c)
            if c == S.alphabet.gap:
                raise SymbolError("the gap symbol cannot be perturbed")


@dataclass(frozen=True)
class ChangeOutcome:
    """One random letter change; for a non-trivial spec exactly one position differs."""

    x_new: str
    y_new: str
    changed_in_x: bool
    position: int  # 0-based index into the changed string
    old_letter: str
    new_letter: str


def build_single_letter_T(S: ScoringMatrix, a: str, b: str,
                          multiplicity: int = 1) -> ScoringMatrix:
    """T for changing one a into b: row/column a holds S(b,.) - S(a,.),
    the diagonal cell holds 2*(S(b,a) - S(a,a)), everything else is zero."""
    ia, ib = S.alphabet.index(a), S.alphabet.index(b)
    g = S.alphabet.gap_index
    if ia == g or ib == g:
        raise SymbolError("perturbation letters must not be the gap")
    k = S.alphabet.augmented_size
    values = np.zeros((k, k))
    values[ia, :] = S.values[ib, :] - S.values[ia, :]
    values[:, ia] = S.values[:, ib] - S.values[:, ia]
    values[ia, ia] = 2.0 * (S.values[ib, ia] - S.values[ia, ia])
    return ScoringMatrix(S.alphabet, float(multiplicity) * values, gap_gap_defined=True)


def build_group_change_T(S: ScoringMatrix, from_set, to_set) -> ScoringMatrix:
    """T for changing a letter of from_set into a uniform draw from to_set.

    An entry with one index U in from_set gets the mean over targets t of
    S(t, V) - S(U, V); entries with both indices in from_set accumulate the
    contribution from each side.
    """
    alpha = S.alphabet
    g = alpha.gap_index
    f_idx = [alpha.index(c) for c in from_set]
    t_idx = [alpha.index(c) for c in to_set]
    if g in f_idx or g in t_idx:
        raise SymbolError("perturbation letters must not be the gap")
    if not f_idx or not t_idx:
        raise SymbolError("perturbation letter sets must be non-empty")
    k = alpha.augmented_size
    values = np.zeros((k, k))
    mean_rows = S.values[t_idx, :].mean(axis=0)
    mean_cols = S.values[:, t_idx].mean(axis=1)
    for u in f_idx:
        values[u, :] += mean_rows - S.values[u, :]
    for u in f_idx:
        values[:, u] += mean_cols - S.values[:, u]
    return ScoringMatrix(alpha, values, gap_gap_defined=True)


def build_T(S: ScoringMatrix, spec: PerturbationSpec) -> ScoringMatrix:
    """The perturbation matrix a spec describes, multiplicity included."""
    spec.validate_on(S)
    if spec.kind == "single":
        return build_single_letter_T(S, spec.from_letters[0], spec.to_letters[0],
                                     spec.multiplicity)
    T = build_group_change_T(S, spec.from_letters, spec.to_letters)
    if spec.multiplicity != 1:
        T = ScoringMatrix(S.alphabet, float(spec.multiplicity) * T.values,
                          gap_gap_defined=True)
    return T


def _occurrences(x: str, y: str, from_letters) -> list[tuple[bool, int]]:
    """(in_x, 0-based position) of every changeable letter, x first."""
    fset = set(from_letters)
    occ = [(True, i) for i, c in enumerate(x) if c in fset]
    occ += [(False, j) for j, c in enumerate(y) if c in fset]
    return occ


def count_occurrences(x: str, y: str, spec: PerturbationSpec) -> int:
    """Total changeable letters in both strings combined."""
    return len(_occurrences(x, y, spec.from_letters))


def apply_random_change(x: str, y: str, spec: PerturbationSpec,
                        rng: np.random.Generator) -> ChangeOutcome:
    """Change one uniformly chosen occurrence into a uniform target letter."""
    occ = _occurrences(x, y, spec.from_letters)
    if not occ:
        raise NoOccurrenceError(
            f"letters {''.join(spec.from_letters)!r} absent from both strings")
    in_x, pos = occ[int(rng.integers(len(occ)))]
    new_letter = spec.to_letters[int(rng.integers(len(spec.to_letters)))]
    if in_x:
        old = x[pos]
        x_new = x[:pos] + new_letter + x[pos + 1:]
        return ChangeOutcome(x_new, y, True, pos, old, new_letter)
    old = y[pos]
    y_new = y[:pos] + new_letter + y[pos + 1:]
    return ChangeOutcome(x, y_new, False, pos, old, new_letter)


def exact_expected_change_terms(x: str, y: str, spec: PerturbationSpec,
                                S: ScoringMatrix,
                                size_cap: int = EXPECTED_CHANGE_MAX_N) -> tuple[float, int]:
    """(summed score changes, number of changes) behind exact_expected_change.

    The sum stays exact in float for half-integer matrices, so callers that
    need exact-rational comparisons can divide the terms themselves.
    """
    spec.validate_on(S)
    if max(len(x), len(y)) > size_cap:
        raise SizeCapError(f"strings longer than the cap {size_cap}")
    occ = _occurrences(x, y, spec.from_letters)
    if not occ:
        raise NoOccurrenceError(
            f"letters {''.join(spec.from_letters)!r} absent from both strings")
    if spec.is_trivial:
        return 0.0, len(occ) * len(spec.to_letters)
    xc, yc = S.alphabet.encode(x), S.alphabet.encode(y)
    base = optimal_score_codes(xc, yc, S)
    t_codes = [S.alphabet.index(c) for c in spec.to_letters]
    total = 0.0
    for in_x, pos in occ:
        codes = xc if in_x else yc
        saved = codes[pos]
        for t in t_codes:
            codes[pos] = t
            total += optimal_score_codes(xc, yc, S) - base
        codes[pos] = saved
    return total, len(occ) * len(t_codes)


def exact_expected_change(x: str, y: str, spec: PerturbationSpec, S: ScoringMatrix,
                          size_cap: int = EXPECTED_CHANGE_MAX_N) -> float:
    """Exact conditional expectation of the optimal-score change given (x, y).

    Re-runs the DP once per (occurrence, target letter) pair, so the cost is
    O(N * |x| * |y|); capped by size_cap.
    """
    total, count = exact_expected_change_terms(x, y, spec, S, size_cap)
    return total / count


def t_lower_bound(x: str, y: str, T: ScoringMatrix, S: ScoringMatrix,
                  spec: PerturbationSpec) -> float:
    """T-score of an S-optimal alignment divided by the occurrence count.

    For the single-change T this bounds the expected optimal-score change from
    below: the S-optimal alignment stays feasible after the change, while the
    optimum may move higher.
    """
    spec.validate_on(S)
    n_occ = count_occurrences(x, y, spec)
    if n_occ == 0:
        raise NoOccurrenceError(
            f"letters {''.join(spec.from_letters)!r} absent from both strings")
    pi = optimal_alignment(x, y, S).alignment
    return alignment_score(x, y, pi, T) / n_occ


def expected_change_terms_for_alignment(x: str, y: str, pi: Alignment,
                                        spec: PerturbationSpec,
                                        S: ScoringMatrix) -> tuple[float, int]:
    """(summed pi-score changes, number of changes) for a FIXED alignment.

    Holding the alignment fixed is what makes the T identity exact:
    sum / count equals T_pi(x, y) / N as rational numbers.
    """
    spec.validate_on(S)
    occ = _occurrences(x, y, spec.from_letters)
    if not occ:
        raise NoOccurrenceError(
            f"letters {''.join(spec.from_letters)!r} absent from both strings")
    base = alignment_score(x, y, pi, S)
    total = 0.0
    for in_x, pos in occ:
        for t in spec.to_letters:
            if in_x:
                x2 = x[:pos] + t + x[pos + 1:]
                total += alignment_score(x2, y, pi, S) - base
            else:
                y2 = y[:pos] + t + y[pos + 1:]
                total += alignment_score(x, y2, pi, S) - base
    return total, len(occ) * len(spec.to_letters)


def expected_change_for_alignment(x: str, y: str, pi: Alignment,
                                  spec: PerturbationSpec, S: ScoringMatrix) -> float:
    """Exact mean pi-score change over all single changes, for a fixed pi."""
    total, count = expected_change_terms_for_alignment(x, y, pi, spec, S)
    return total / count
