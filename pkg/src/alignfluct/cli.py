"""Command-line front end.

    alignfluct <command> --config FILE [--seed N] [--workers K]
                         [--out PATH] [--format json|csv]

Commands: estimate, pvalue, expected-change, varscan, selftest.  Experiments
are described by INI config files (sections [alphabet], [distribution],
[scoring], [perturbation], [run]); unknown keys are rejected.  Exit codes:
0 success, 1 self-test failure, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from .core import (
    Alphabet,
    AlignfluctError,
    ConfigError,
    LetterDistribution,
    ScoringMatrix,
    builtin_blastz,
    identity_matrix,
    load_scoring_matrix,
)
from .perturb import PerturbationSpec, build_T
from .montecarlo import (
    ExperimentConfig,
    expected_change_mc,
    pvalue_bound,
    report_to_json,
    run_statistic,
    variance_scan,
)
from .selftest import run_selftest

SEED_ENV_VAR = "ALIGNFLUCT_SEED"
DEFAULT_SEED = 0
SCORE_ONLY_MAX_N = 200000

_ALLOWED_KEYS = {
    "alphabet": {"letters", "gap"},
    "scoring": {"matrix", "match", "mismatch", "gap_penalty"},
    "perturbation": {"kind", "from", "to", "multiplicity"},
    "run": {"n", "eps", "replicates", "seed", "x", "n_list", "size_cap",
            "reference_x", "reference_pvalue"},
}


def _get(section, key, parse, default=None, required=False, where=""):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {where}.{key}")
        return default
    raw = section[key]
    try:
        return parse(raw)
    except ConfigError:
        raise
    except Exception:
        raise ConfigError(f"bad value for {where}.{key}: {raw!r}") from None


def _parse_letters(raw: str) -> tuple[str, ...]:
    return tuple(raw.split())


def load_config(path) -> dict:
    """Parse and validate an experiment config file into plain pieces."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(
        comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # letter keys are case-sensitive
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    for sec in parser.sections():
        if sec not in ("alphabet", "distribution", "scoring", "perturbation", "run"):
            raise ConfigError(f"unknown config section [{sec}]")
    for sec, allowed in _ALLOWED_KEYS.items():
        if sec in parser:
            for key in parser[sec]:
                if key not in allowed:
                    raise ConfigError(f"unknown key {sec}.{key}")
    for sec in ("alphabet", "distribution", "scoring", "run"):
        if sec not in parser:
            raise ConfigError(f"missing config section [{sec}]")

    alpha_sec = parser["alphabet"]
    letters = _get(alpha_sec, "letters", _parse_letters, required=True, where="alphabet")
    gap = _get(alpha_sec, "gap", str, default="-", where="alphabet")
    alphabet = Alphabet(letters, gap)

    dist_sec = parser["distribution"]
    for key in dist_sec:
        if key not in letters:
            raise ConfigError(f"unknown key distribution.{key} (not a letter)")
    probs = {c: _get(dist_sec, c, float, required=True, where="distribution")
             for c in letters}
    distribution = LetterDistribution.from_map(alphabet, probs)

    S = _build_matrix(parser["scoring"], alphabet)

    spec = None
    if "perturbation" in parser:
        pert = parser["perturbation"]
        spec = PerturbationSpec(
            kind=_get(pert, "kind", str, required=True, where="perturbation"),
            from_letters=_get(pert, "from", _parse_letters, required=True,
                              where="perturbation"),
            to_letters=_get(pert, "to", _parse_letters, required=True,
                            where="perturbation"),
            multiplicity=_get(pert, "multiplicity", int, default=1,
                              where="perturbation"),
        )

    run = parser["run"]
    return {
        "alphabet": alphabet,
        "distribution": distribution,
        "S": S,
        "spec": spec,
        "n": _get(run, "n", int, where="run"),
        "eps": _get(run, "eps", float, where="run"),
        "replicates": _get(run, "replicates", int, default=1, where="run"),
        "seed": _get(run, "seed", int, where="run"),
        "x": _get(run, "x", float, where="run"),
        "n_list": _get(run, "n_list", lambda s: [int(v) for v in s.split()], where="run"),
        "size_cap": _get(run, "size_cap", int, default=2000, where="run"),
        "reference_x": _get(run, "reference_x", float, where="run"),
        "reference_pvalue": _get(run, "reference_pvalue", float, where="run"),
    }


def _build_matrix(sec, alphabet: Alphabet) -> ScoringMatrix:
    kind = _get(sec, "matrix", str, default="identity", where="scoring")
    if kind == "identity":
        return identity_matrix(
            alphabet,
            gap_penalty=_get(sec, "gap_penalty", float, required=True, where="scoring"),
            match=_get(sec, "match", float, default=1.0, where="scoring"),
            mismatch=_get(sec, "mismatch", float, default=0.0, where="scoring"),
        )
    if kind == "blastz":
        if tuple(alphabet.letters) != ("A", "T", "C", "G"):
            raise ConfigError("scoring.matrix=blastz requires letters 'A T C G'")
        return builtin_blastz(
            gap_penalty=_get(sec, "gap_penalty", float, required=True, where="scoring"))
    # anything else is a path to a matrix file
    if "gap_penalty" in sec or "match" in sec or "mismatch" in sec:
        raise ConfigError("scoring.gap_penalty/match/mismatch conflict with a matrix file")
    if not os.path.exists(kind):
        raise ConfigError(f"scoring.matrix: file not found: {kind}")
    loaded = load_scoring_matrix(kind)
    if loaded.alphabet.letters != alphabet.letters:
        raise ConfigError(
            f"scoring.matrix: file letters {' '.join(loaded.alphabet.letters)!r} "
            f"differ from alphabet.letters")
    return ScoringMatrix(alphabet, loaded.values, loaded.gap_gap_defined)


def _experiment_config(pieces: dict, seed: int, n: int | None = None,
                       replicates: int | None = None) -> ExperimentConfig:
    if n is None:
        n = pieces["n"]
    if n is None:
        raise ConfigError("missing required key run.n")
    if pieces["eps"] is None:
        raise ConfigError("missing required key run.eps")
    if pieces["spec"] is None:
        raise ConfigError("missing config section [perturbation]")
    return ExperimentConfig(
        alphabet=pieces["alphabet"], distribution=pieces["distribution"],
        S=pieces["S"], spec=pieces["spec"], eps=pieces["eps"], n=n,
        replicates=replicates if replicates is not None else pieces["replicates"],
        master_seed=seed)


def _resolve_seed(args, pieces) -> int:
    if args.seed is not None:
        return args.seed
    if pieces.get("seed") is not None:
        return pieces["seed"]
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _write_report(report, args) -> None:
    if args.format == "json":
        text = report_to_json(report)
    else:
        text = report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_estimate(args) -> int:
    pieces = load_config(args.config)
    cfg = _experiment_config(pieces, _resolve_seed(args, pieces))
    if cfg.n > SCORE_ONLY_MAX_N:
        raise ConfigError(f"run.n={cfg.n} exceeds the score-only limit {SCORE_ONLY_MAX_N}")
    report = run_statistic(cfg, workers=args.workers)
    _write_report(report, args)
    return 0


def cmd_pvalue(args) -> int:
    pieces = load_config(args.config)
    n = pieces["n"]
    if n is None:
        raise ConfigError("missing required key run.n")
    if n < 2:
        raise ConfigError(f"run.n={n}: the rate constant needs n >= 2")
    x = args.x if args.x is not None else pieces["x"]
    if x is None:
        # no observed statistic supplied: estimate it inline first
        cfg = _experiment_config(pieces, _resolve_seed(args, pieces))
        est = run_statistic(cfg, workers=args.workers)
        x = est.mean
        print(f"estimated x = {x!r} from {cfg.replicates} replicate(s)", file=sys.stderr)
    if pieces["eps"] is None:
        raise ConfigError("missing required key run.eps")
    if pieces["spec"] is None:
        raise ConfigError("missing config section [perturbation]")
    T = build_T(pieces["S"], pieces["spec"])
    report = pvalue_bound(x, n, pieces["S"], pieces["eps"], T,
                          reference_pvalue=pieces["reference_pvalue"])
    _write_report(report, args)
    print(report.summary(), file=sys.stderr)
    if report.inconclusive:
        print("INCONCLUSIVE", file=sys.stderr)
    return 0


def cmd_expected_change(args) -> int:
    pieces = load_config(args.config)
    cfg = _experiment_config(pieces, _resolve_seed(args, pieces))
    report = expected_change_mc(cfg, size_cap=pieces["size_cap"], workers=args.workers)
    _write_report(report, args)
    return 0


def cmd_varscan(args) -> int:
    pieces = load_config(args.config)
    if not pieces["n_list"]:
        raise ConfigError("missing required key run.n_list")
    # eps/perturbation are irrelevant here but the config type requires them
    if pieces["spec"] is None or pieces["eps"] is None:
        raise ConfigError("varscan reuses the estimate config; "
                          "[perturbation] and run.eps must be present")
    cfg = _experiment_config(pieces, _resolve_seed(args, pieces),
                             n=max(pieces["n_list"]))
    report = variance_scan(cfg, pieces["n_list"], pieces["replicates"],
                           workers=args.workers)
    _write_report(report, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alignfluct",
        description="Optimal-alignment score fluctuation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_config=True):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="INI experiment description")
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (fallback: config, then ${SEED_ENV_VAR})")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.set_defaults(fn=fn)
        return p

    add("estimate", cmd_estimate)
    pv = add("pvalue", cmd_pvalue)
    pv.add_argument("--x", type=float, default=None,
                    help="observed statistic (omit to estimate inline)")
    add("expected-change", cmd_expected_change)
    add("varscan", cmd_varscan)
    st = sub.add_parser("selftest")
    st.add_argument("--inject-fault", action="append", default=[],
                    help=argparse.SUPPRESS)  # test hook
    st.set_defaults(fn=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return run_selftest(inject_faults=frozenset(args.inject_fault))
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AlignfluctError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
