"""Optimal-alignment score fluctuation toolkit.

Computes optimal alignment scores of random strings under arbitrary symmetric
scoring functions, builds perturbation scoring functions for random letter
changes, estimates the score-difference statistic by Monte Carlo, and turns an
observed statistic into a rigorous confidence bound for linear-in-n variance
of the optimal score.
"""

from .core import (
    Alphabet,
    AlignfluctError,
    AlphabetMismatchError,
    BINARY,
    ConfigError,
    DNA,
    InvalidAlignmentError,
    LetterDistribution,
    NoOccurrenceError,
    ScoringMatrix,
    SizeCapError,
    SymbolError,
    builtin_blastz,
    constant_matrix,
    identity_matrix,
    linear_combine,
    load_scoring_matrix,
    norm_delta,
    norm_inf,
)
from .align import (
    Alignment,
    AlignmentResult,
    QMatrix,
    alignment_score,
    brute_force_score,
    enumerate_alignments,
    optimal_alignment,
    optimal_score,
    pair_counts,
    read_sequences,
)
from .perturb import (
    ChangeOutcome,
    PerturbationSpec,
    apply_random_change,
    build_group_change_T,
    build_single_letter_T,
    build_T,
    count_occurrences,
    exact_expected_change,
    exact_expected_change_terms,
    expected_change_for_alignment,
    expected_change_terms_for_alignment,
    t_lower_bound,
)
from .montecarlo import (
    EstimateReport,
    ExperimentConfig,
    PValueReport,
    VarianceScanReport,
    bounded_difference_check,
    c_n_constant,
    event_frequencies,
    expected_change_mc,
    lambda_margin,
    pvalue_bound,
    replicate_rng,
    replicate_seed,
    report_from_json,
    report_to_json,
    run_statistic,
    sample_string,
    t_chain_check,
    variance_scan,
)

__version__ = "0.1.0"
