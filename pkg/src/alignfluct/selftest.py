"""Built-in verification suite: oracle equivalence, reference matrices, and
the inequality chain, sized to finish in well under a minute."""

from __future__ import annotations

import itertools
import sys
import time
from fractions import Fraction

import numpy as np

from . import align, core, montecarlo, perturb

# Reference perturbation matrices for the two bundled benchmark setups.
T2_REFERENCE = np.array([
    [-4.0, 2.0, 0.0],
    [2.0, 0.0, 0.0],
    [0.0, 0.0, 0.0],
])
T_BLASTZ_REFERENCE = np.array([
    [0.0, 0.0, 144.0, 153.0, 0.0],
    [0.0, 0.0, 159.5, 148.5, 0.0],
    [144.0, 159.5, -439.0, -176.0, 0.0],
    [153.0, 148.5, -176.0, -419.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
])


class SelfTestFailure(AssertionError):
    pass


def _check_oracle_equivalence(faults):
    id2 = core.identity_matrix(core.BINARY, gap_penalty=6)
    pm1 = core.identity_matrix(core.BINARY, gap_penalty=1, match=1, mismatch=-1)
    for S in (id2, pm1):
        for lx in range(5):
            for ly in range(5):
                for xs in itertools.product("01", repeat=lx):
                    for ys in itertools.product("01", repeat=ly):
                        x, y = "".join(xs), "".join(ys)
                        dp = align.optimal_score(x, y, S)
                        bf = align.brute_force_score(x, y, S)
                        if dp != bf:
                            raise SelfTestFailure(
                                f"DP={dp} != brute force={bf} on ({x!r},{y!r})")


def _check_t2(faults):
    S = core.identity_matrix(core.BINARY, gap_penalty=6)
    T = perturb.build_single_letter_T(S, "0", "1", multiplicity=2)
    if not np.array_equal(T.values, T2_REFERENCE):
        raise SelfTestFailure(f"T_2 mismatch:\n{T.values}")


def _check_t_blastz(faults):
    S = core.builtin_blastz(gap_penalty=1200)
    if "blastz" in faults:
        # fault-injection hook: perturb one substitution score
        bad = S.values.copy()
        bad[0, 0] += 1.0
        S = core.ScoringMatrix(core.DNA, bad)
    T = perturb.build_group_change_T(S, ("C", "G"), ("A", "T"))
    if not np.array_equal(T.values, T_BLASTZ_REFERENCE):
        raise SelfTestFailure(f"T_BLASTZ mismatch:\n{T.values}")


def _check_norms(faults):
    id2 = core.identity_matrix(core.BINARY, gap_penalty=6)
    bl = core.builtin_blastz(gap_penalty=1200)
    for got, want in ((core.norm_delta(id2), 7.0), (core.norm_inf(id2), 6.0),
                      (core.norm_delta(bl), 1300.0), (core.norm_inf(bl), 1200.0)):
        if got != want:
            raise SelfTestFailure(f"norm {got} != {want}")


def _check_inequality_chain(faults):
    S = core.identity_matrix(core.BINARY, gap_penalty=6)
    spec = perturb.PerturbationSpec("single", ("0",), ("1",))
    T1 = perturb.build_T(S, spec)
    SmT = core.linear_combine(S, 0.5, T1)
    rng = np.random.default_rng(11)
    for _ in range(150):
        x = "".join(rng.choice(["0", "1"], size=120, p=[0.2, 0.8]))
        y = "".join(rng.choice(["0", "1"], size=120, p=[0.2, 0.8]))
        change = perturb.exact_expected_change(x, y, spec, S)
        tlb = perturb.t_lower_bound(x, y, T1, S, spec)
        if change < tlb:
            raise SelfTestFailure(f"expected change {change} < lower bound {tlb}")
        res = align.optimal_alignment(x, y, S)
        t_pi = align.alignment_score(x, y, res.alignment, T1)
        gap = res.score - align.optimal_score(x, y, SmT)
        if 0.5 * t_pi < gap:
            raise SelfTestFailure(f"eps*T_pi {0.5 * t_pi} < score gap {gap}")


def _check_change_bounds(faults):
    S = core.identity_matrix(core.BINARY, gap_penalty=6)
    nd, ni = core.norm_delta(S), core.norm_inf(S)
    ext_bound = max(nd, ni)  # an extension can gain up to norm_delta
    rng = np.random.default_rng(23)
    for _ in range(100):
        x = "".join(rng.choice(["0", "1"], size=14))
        y = "".join(rng.choice(["0", "1"], size=14))
        base = align.optimal_score(x, y, S)
        for i in range(len(x)):
            for c in "01":
                changed = align.optimal_score(x[:i] + c + x[i + 1:], y, S)
                if abs(changed - base) > nd:
                    raise SelfTestFailure(f"replacement moved score by {changed - base}")
        for c in "01":
            extended = align.optimal_score(x + c, y, S)
            if abs(extended - base) > ext_bound:
                raise SelfTestFailure(f"extension moved score by {extended - base}")


def _check_expected_change_identity(faults):
    S = core.identity_matrix(core.BINARY, gap_penalty=6)
    spec = perturb.PerturbationSpec("single", ("0",), ("1",))
    T1 = perturb.build_T(S, spec)
    rng = np.random.default_rng(37)
    for _ in range(50):
        x = "".join(rng.choice(["0", "1"], size=int(rng.integers(2, 30)), p=[0.3, 0.7]))
        y = "".join(rng.choice(["0", "1"], size=int(rng.integers(2, 30)), p=[0.3, 0.7]))
        if "0" not in x + y:
            continue
        pi = align.optimal_alignment(x, y, S).alignment
        total, count = perturb.expected_change_terms_for_alignment(x, y, pi, spec, S)
        n_occ = perturb.count_occurrences(x, y, spec)
        t_pi = align.alignment_score(x, y, pi, T1)
        if Fraction(total) / count != Fraction(t_pi) / n_occ:
            raise SelfTestFailure(f"identity broke: {total}/{count} != {t_pi}/{n_occ}")


def _check_statistic_determinism(faults):
    dist = core.LetterDistribution(core.BINARY, (0.2, 0.8))
    S = core.identity_matrix(core.BINARY, gap_penalty=6)
    spec = perturb.PerturbationSpec("single", ("0",), ("1",))
    cfg = montecarlo.ExperimentConfig(core.BINARY, dist, S, spec,
                                      eps=0.5, n=300, replicates=3, master_seed=7)
    a = montecarlo.report_to_json(montecarlo.run_statistic(cfg))
    b = montecarlo.report_to_json(montecarlo.run_statistic(cfg, workers=4))
    if a != b:
        raise SelfTestFailure("reports differ between runs / worker counts")


PROPERTIES = [
    ("DP vs brute force (exhaustive)", _check_oracle_equivalence),
    ("T_2 reproduction", _check_t2),
    ("T_BLASTZ reproduction", _check_t_blastz),
    ("norm reference values", _check_norms),
    ("inequality chain", _check_inequality_chain),
    ("single-change score bounds", _check_change_bounds),
    ("expected-change identity", _check_expected_change_identity),
    ("statistic determinism", _check_statistic_determinism),
]


def run_selftest(inject_faults=frozenset(), out=None) -> int:
    """Run every property; return 0 if all pass, 1 otherwise."""
    out = out or sys.stdout
    failures = []
    for name, check in PROPERTIES:
        t0 = time.perf_counter()
        try:
            check(frozenset(inject_faults))
            status = "PASS"
        except Exception as exc:  # noqa: BLE001 - any breakage is a failed property
            status = "FAIL"
            failures.append((name, exc))
        print(f"{status}  {name}  ({time.perf_counter() - t0:.2f}s)", file=out)
    if failures:
        name, exc = failures[0]
        print(f"self-test FAILED: {name}: {exc}", file=out)
        return 1
    print(f"all {len(PROPERTIES)} properties passed", file=out)
    return 0
