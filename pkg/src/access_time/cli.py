"""Command-line front end.

Subcommands: ``gen``, ``compute``, ``verify``, ``bounds``, ``scale``,
``simulate``.  Chains arrive as JSON specs, distributions as the compact
grammar ``dirac:K | uniform | binomial:P | stationary | file:PATH``.
JSON goes to stdout; CSV artifacts (RFC 4180, %.17g numerics) go to
``--out``.

Exit codes: 0 success, 1 verification or consistency failure, 2 input
validation, 3 numerical trouble (reducible chain, singular system).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np
from scipy.linalg import LinAlgError

from .access import (
    AccessResult,
    access_time,
    closed_form_complete,
    family_report,
    general_bounds,
    verify_family,
)
from .chains import (
    ChainSpec,
    ChainSpecError,
    DistSpec,
    ProbabilityVector,
    ReducibleChainError,
    TransitionMatrix,
    WINNING_STREAK_MAX_N,
    build_chain,
    build_distribution,
    validate_chain,
)
from .hitting import FLOAT_FMT, hitting_time_matrix, hitting_time_to, max_hitting_time
from .simulate import simulate_rule

CLOSED_FORM_FAMILIES = ("birth_death", "winning_streak", "path", "complete", "star")
SCALE_SCENARIOS = ("worst_dirac", "random_pair", "paper_example")
#: extremal Dirac pairs (as state indices) used above the enumeration cutoff
WORST_DIRAC_CUTOFF = 64

SWEEP_COLUMNS = (
    "family",
    "n",
    "p",
    "scenario",
    "H",
    "bound_lower",
    "bound_upper",
    "max_hitting",
    "wall_time_ms",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return FLOAT_FMT % x
    return str(x)


def parse_dist_shorthand(text: str) -> DistSpec:
    """Parse ``dirac:K``, ``uniform``, ``binomial:P``, ``stationary``, ``file:PATH``."""
    if text == "uniform":
        return DistSpec(kind="uniform")
    if text == "stationary":
        return DistSpec(kind="stationary")
    if text.startswith("dirac:"):
        raw = text.split(":", 1)[1]
        try:
            at: object = int(raw)
        except ValueError:
            at = raw  # hypercube bit-string label
        return DistSpec(kind="dirac", at=at)
    if text.startswith("binomial:"):
        try:
            p = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ChainSpecError(f"bad binomial parameter in {text!r}") from exc
        return DistSpec(kind="binomial", p=p)
    if text.startswith("file:"):
        path = text.split(":", 1)[1]
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ChainSpecError(f"cannot read distribution file {path!r}: {exc}") from exc
        return DistSpec.from_json(obj)
    raise ChainSpecError(
        f"bad distribution {text!r}; expected dirac:K, uniform, binomial:P, stationary, file:PATH"
    )


def _parse_chain(text: str) -> ChainSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainSpecError(f"chain spec is not valid JSON: {exc}") from exc
    return ChainSpec.from_json(obj)


def _parse_n_list(text: str) -> list[int]:
    """``10`` or ``2..20`` or comma-separated mixes of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or any(n < 1 for n in out):
        raise ChainSpecError(f"bad n list {text!r}")
    return out


def _emit_json(obj: dict, out_path: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    spec = _parse_chain(args.chain)
    chain = build_chain(spec)
    diag = validate_chain(chain)
    report = {
        "spec": spec.to_json(),
        "size": chain.size,
        "labels": [str(l) for l in chain.labels],
        "diagnostics": diag.to_json(),
    }
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state"] + [str(l) for l in chain.labels])
            for i, label in enumerate(chain.labels):
                writer.writerow([str(label)] + [FLOAT_FMT % v for v in chain.rows[i]])
        report["out"] = args.out
    print(json.dumps(report, indent=2))
    return 0


def cmd_compute(args) -> int:
    spec = _parse_chain(args.chain)
    chain = build_chain(spec)
    mu = build_distribution(parse_dist_shorthand(args.mu), chain)
    nu = build_distribution(parse_dist_shorthand(args.nu), chain)
    M = hitting_time_matrix(chain)
    result = access_time(chain, mu, nu, hitting=M)
    payload = result.to_json()
    if args.closed_form:
        if spec.family not in CLOSED_FORM_FAMILIES:
            raise ChainSpecError(f"family {spec.family!r} has no closed-form transport formula")
        if spec.family == "complete":
            report, best = closed_form_complete(spec.n, mu, nu, hitting=M)
            payload["family_report"] = report.to_json()
            payload["family_report"]["best_dirac"] = best
        else:
            payload["family_report"] = family_report(spec, mu, nu, hitting=M).to_json()
    _emit_json(payload, None)
    return 0


def cmd_bounds(args) -> int:
    spec = _parse_chain(args.chain)
    chain = build_chain(spec)
    M = hitting_time_matrix(chain)
    bounds = general_bounds(chain, hitting=M)
    payload = bounds.to_json()
    if args.out:
        M.to_csv(args.out)
        payload["out"] = args.out
    print(json.dumps(payload, indent=2))
    return 0


def _random_pair(rng: np.random.Generator, N: int) -> tuple[ProbabilityVector, ProbabilityVector]:
    return (
        ProbabilityVector(rng.dirichlet(np.ones(N))),
        ProbabilityVector(rng.dirichlet(np.ones(N))),
    )


def cmd_verify(args) -> int:
    if args.family not in CLOSED_FORM_FAMILIES:
        raise ChainSpecError(
            f"family {args.family!r} has no closed form to verify; "
            f"choose one of {CLOSED_FORM_FAMILIES}"
        )
    ns = _parse_n_list(args.n)
    rng = np.random.default_rng(args.seed)
    rows = []
    counts = {"PASS": 0, "ERRATUM": 0, "FAIL": 0}
    for n in ns:
        spec = (
            ChainSpec(args.family, n=n, p=args.p)
            if args.family == "birth_death"
            else ChainSpec(args.family, n=n)
        )
        chain = build_chain(spec)
        M = hitting_time_matrix(chain)
        for trial in range(args.trials):
            mu, nu = _random_pair(rng, chain.size)
            res = verify_family(spec, mu, nu, tol=args.tol, hitting=M)
            counts[res.status] += 1
            rows.append((n, trial, res))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["family", "n", "p", "trial", "status", "exact", "solver_value",
                 "lower", "upper", "discrepancy", "mirror_corrected"]
            )
            for n, trial, res in rows:
                writer.writerow(
                    [res.family, n, _fmt(res.p), trial, res.status, _fmt(res.exact),
                     _fmt(res.solver_value), _fmt(res.lower), _fmt(res.upper),
                     _fmt(res.discrepancy), _fmt(res.mirror_corrected)]
                )
    print(
        f"{args.family}: {counts['PASS']} PASS, {counts['ERRATUM']} ERRATUM, "
        f"{counts['FAIL']} FAIL over n in {ns[0]}..{ns[-1]} x {args.trials} trials"
    )
    return 0 if counts["FAIL"] == 0 else 1


_WORST_PAIRS = {
    # state index pairs attaining the maximal hitting time, used when the
    # state space is too large to enumerate every Dirac pair
    "path": lambda spec, N: (0, N - 1),
    "birth_death": lambda spec, N: (0, N - 1),
    "winning_streak": lambda spec, N: (0, N - 1),
    "hypercube": lambda spec, N: (0, N - 1),
    "complete": lambda spec, N: (0, 1),
    "star": lambda spec, N: (1, 2),
}


def _scale_distributions(spec: ChainSpec, chain, scenario: str, rng):
    """The (mu, nu) pair for one sweep row, or None for worst_dirac."""
    N = chain.size
    if scenario == "random_pair":
        return _random_pair(rng, N)
    if scenario == "paper_example":
        if spec.family == "winning_streak":
            n = spec.n
            if n < 2:
                raise ChainSpecError("the winning-streak example needs n >= 2")
            mu = np.zeros(N)
            mu[0] = 1.0
            nu = np.full(N, 1.0 / (2 * (n - 1)))
            nu[-1] = 0.5
            return ProbabilityVector(mu), ProbabilityVector(nu)
        if spec.family == "path":
            mu = build_distribution(DistSpec(kind="uniform"), chain)
            nu = build_distribution(DistSpec(kind="binomial", p=0.2), chain)
            return mu, nu
        raise ChainSpecError(
            f"paper_example is defined for winning_streak and path, not {spec.family!r}"
        )
    return None


def _sweep_row(spec: ChainSpec, scenario: str, rng) -> dict:
    t0 = time.perf_counter()
    chain = build_chain(spec)
    N = chain.size
    pair = _scale_distributions(spec, chain, scenario, rng)
    M = None
    if pair is None:  # worst_dirac
        if N <= WORST_DIRAC_CUTOFF + 1:
            M = hitting_time_matrix(chain)
            max_hit, pair = max_hitting_time(chain, hitting=M)
            H = max_hit  # max over Dirac pairs of E_i[tau_j]
            i_star = chain.labels.index(pair[0])
            j_star = chain.labels.index(pair[1])
        else:
            i_star, j_star = _WORST_PAIRS[spec.family](spec, N)
            column = hitting_time_to(chain, j_star)
            H = float(column[i_star])
            max_hit = H  # the known pair attains the maximum
        mu = np.zeros(N)
        nu = np.zeros(N)
        mu[i_star] = 1.0
        nu[j_star] = 1.0
        mu_v, nu_v = ProbabilityVector(mu), ProbabilityVector(nu)
    else:
        mu_v, nu_v = pair
        M = hitting_time_matrix(chain)
        H = access_time(chain, mu_v, nu_v, hitting=M).value
        max_hit, _ = max_hitting_time(chain, hitting=M)

    if spec.family in CLOSED_FORM_FAMILIES:
        report = family_report(spec, mu_v, nu_v, hitting=M, solver_value=H)
        lower, upper = report.lower, report.upper
    else:
        lower, upper = 0.0, max_hit
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return {
        "family": spec.family,
        "n": spec.n,
        "p": spec.p,
        "scenario": scenario,
        "H": H,
        "bound_lower": lower,
        "bound_upper": upper,
        "max_hitting": max_hit,
        "wall_time_ms": wall_ms,
    }


def cmd_scale(args) -> int:
    families = [f.strip() for f in args.families.split(",")]
    ns = _parse_n_list(args.n)
    if args.scenario not in SCALE_SCENARIOS:
        raise ChainSpecError(f"scenario must be one of {SCALE_SCENARIOS}")
    if args.scenario == "random_pair" and "birth_death" in families:
        raise ChainSpecError(
            "birth_death random_pair sweeps are refused: the closed-form lower "
            "bound inherits the downhill branch defect and cannot be guaranteed "
            "to sit below the solver value (see README)"
        )
    rng = np.random.default_rng(args.seed)
    rows = []
    for family in families:
        for n in ns:
            if family == "winning_streak" and n > WINNING_STREAK_MAX_N:
                raise ChainSpecError(
                    f"winning_streak sweep n = {n} exceeds the cap {WINNING_STREAK_MAX_N}"
                )
            spec = (
                ChainSpec(family, n=n, p=args.p)
                if family == "birth_death"
                else ChainSpec(family, n=n)
            )
            rows.append(_sweep_row(spec, args.scenario, rng))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    summary = []
    for family in families:
        frows = [r for r in rows if r["family"] == family]
        ns_f = np.array([r["n"] for r in frows], dtype=float)
        hs = np.array([r["H"] for r in frows], dtype=float)
        entry: dict = {"family": family, "scenario": args.scenario, "rows": len(frows)}
        if family == "winning_streak":
            # exponential family: fit log2 H against n and report the ratio to 2^n
            if np.all(hs > 0):
                slope = float(np.polyfit(ns_f, np.log2(hs), 1)[0])
                entry["log2_slope"] = slope
                entry["ratio_to_pow2_min"] = float((hs / 2.0**ns_f).min())
                entry["ratio_to_pow2_max"] = float((hs / 2.0**ns_f).max())
        elif len(frows) >= 2 and np.all(hs > 0):
            entry["exponent"] = float(np.polyfit(np.log(ns_f), np.log(hs), 1)[0])
        summary.append(entry)
    print(json.dumps({"rows": len(rows), "summary": summary}, indent=2))
    return 0


def cmd_simulate(args) -> int:
    spec = _parse_chain(args.chain)
    chain = build_chain(spec)
    mu = build_distribution(parse_dist_shorthand(args.mu), chain)
    nu = build_distribution(parse_dist_shorthand(args.nu), chain)
    report = simulate_rule(chain, mu, nu, samples=args.samples, seed=args.seed)
    _emit_json(report.to_json(), args.out)
    return 0 if report.consistent else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="access-time",
        description="Optimal transport times of finite Markov chains via exact hitting times.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_chain(p):
        p.add_argument("--chain", required=True, help="chain spec JSON")

    p = sub.add_parser("gen", help="build a chain, print diagnostics, optionally dump the matrix")
    add_chain(p)
    p.add_argument("--out", help="write the transition matrix CSV here")
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("compute", help="access time H(mu, nu)")
    add_chain(p)
    p.add_argument("--mu", required=True, help="source distribution")
    p.add_argument("--nu", required=True, help="target distribution")
    p.add_argument("--closed-form", action="store_true", help="also emit the family report")
    p.set_defaults(handler=cmd_compute)

    p = sub.add_parser("verify", help="closed form vs solver over random pairs")
    p.add_argument("--family", required=True)
    p.add_argument("--n", required=True, help="size or range, e.g. 10 or 2..20")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.25, help="birth probability (birth_death only)")
    p.add_argument("--out", help="per-trial CSV")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("bounds", help="max hitting time and structural bounds")
    add_chain(p)
    p.add_argument("--out", help="write the full hitting-time matrix CSV here")
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("scale", help="growth sweeps over n")
    p.add_argument("--families", required=True, help="comma-separated family names")
    p.add_argument("--n", required=True, help="sizes, e.g. 16,32,64,128")
    p.add_argument("--scenario", default="worst_dirac", help="|".join(SCALE_SCENARIOS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.25, help="birth probability (birth_death only)")
    p.add_argument("--out", help="SweepRow CSV")
    p.set_defaults(handler=cmd_scale)

    p = sub.add_parser("simulate", help="Monte Carlo stopping-rule run")
    add_chain(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.set_defaults(handler=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ChainSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReducibleChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
