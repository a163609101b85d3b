"""Command-line front end.

Subcommands: ``analyze`` (per-gamma tests on a data file), ``senval``
(changepoint search), ``design-sens`` (Monte-Carlo design sensitivities),
``power`` (rejection-rate curves), and ``validate`` (self-check against the
brute-force oracles).  Every output embeds the resolved configuration and
seed; results are written atomically and re-runs reproduce outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .adaptive import chi_bar_critical, game_solve
from .conventional import (
    conventional_pvalue,
    tilt_factor,
    worst_case_expectation,
    worst_case_mad,
)
from .oracle import chi_bar_mc, exact_distribution, exhaustive_worst_u
from .scores import parse_score_spec, score
from .senval import sensitivity_value
from .simulation import (
    FAMILIES,
    GenerativeSpec,
    design_sensitivity_conventional,
    design_sensitivity_tilted,
    estimate_limits,
    power_curve,
)
from .study import MatchedStudy, ScoreMatrix, ScoreSet, load_csv, load_json
from .tilted import tilt, tilted_pvalue, weights

_FAMILY_TOKENS = {
    "normal": "normal",
    "t3": "t3",
    "dexp": "double_exponential",
    "double-exp": "double_exponential",
    "double_exponential": "double_exponential",
    "exp1-1": "exp1_minus_1",
    "exp1_minus_1": "exp1_minus_1",
    "1-exp1": "one_minus_exp1",
    "one_minus_exp1": "one_minus_exp1",
}

_WEIGHT_TOKENS = {"unit": "unit", "ss": "sign_score", "ipw": "ipw",
                  "sign_score": "sign_score"}


def _parse_family(token: str) -> str:
    try:
        return _FAMILY_TOKENS[token.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown family {token!r}; choose from {sorted(set(_FAMILY_TOKENS))}"
        ) from None


def _parse_gammas(spec: str) -> list[float]:
    """``1.5`` | ``1,2,3`` | ``start:stop:step`` (stop inclusive)."""
    spec = spec.strip()
    if ":" in spec:
        lo_s, hi_s, step_s = spec.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
        if step <= 0 or hi < lo:
            raise ValueError(f"bad gamma range {spec!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(count)]
    return [float(tok) for tok in spec.split(",")]


def _parse_methods(spec: str) -> list[str]:
    methods = [m.strip() for m in spec.split(",") if m.strip()]
    for m in methods:
        if m not in ("conventional", "tilted", "adaptive"):
            raise ValueError(f"unknown method {m!r}")
    return methods


def _load_study(path: str, fmt: str) -> MatchedStudy:
    if fmt == "auto":
        fmt = "json" if path.endswith(".json") else "csv"
    return load_json(path) if fmt == "json" else load_csv(path)


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n.lstrip("-").replace("-", "_"),
                                           None) is None]
    if missing:
        raise ValueError(f"missing required option(s): {', '.join(missing)}")


def _echo(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommand implementations

def _run_analyze(args) -> dict:
    _require(args, "--input")
    study = _load_study(args.input, args.input_format)
    spec = parse_score_spec(args.stat)
    scores = score(study, spec)
    rows = []
    for gamma in _parse_gammas(args.gamma):
        for method in _parse_methods(args.method):
            if method == "conventional":
                r = conventional_pvalue(scores, gamma, args.alpha)
                rows.append({"gamma": gamma, "method": method,
                             "deviate": r.deviate, "pvalue": r.pvalue,
                             "reject": r.reject})
            elif method == "tilted":
                r = tilted_pvalue(tilt(scores, gamma),
                                  weights(scores, gamma, args.weights), args.alpha)
                rows.append({"gamma": gamma, "method": method,
                             "deviate": r.deviate, "pvalue": r.pvalue,
                             "reject": r.reject})
            else:
                g = game_solve(scores, gamma, args.weights, args.alpha)
                rows.append({"gamma": gamma, "method": method, "b": g.b,
                             "critical": g.critical, "rho_hat": g.rho_hat,
                             "lambda": list(g.lambda_star), "pvalue": g.pvalue,
                             "reject": g.reject})
    for r in rows:
        stat_val = r.get("deviate", r.get("b"))
        _echo(f"analyze: gamma={r['gamma']:.2f} {r['method']:<12} "
              f"stat={stat_val:.2f} p={r['pvalue']:.2f} reject={r['reject']}")
    return {"grid": rows}


def _run_senval(args) -> dict:
    _require(args, "--input")
    study = _load_study(args.input, args.input_format)
    spec = parse_score_spec(args.stat)
    reports = []
    for method in _parse_methods(args.method):
        rep = sensitivity_value(study, spec, method, alpha=args.alpha,
                                gamma_max=args.gamma_max, tol=args.tol,
                                weight_family=args.weights)
        reports.append(rep.to_dict())
        shown = "-" if rep.senval is None else f"{rep.senval:.2f}"
        _echo(f"senval: {method:<12} {shown} ({rep.status})")
    return {"reports": reports}


def _run_design_sens(args) -> dict:
    _require(args, "--family", "--J", "--I")
    stat = parse_score_spec(args.stat)
    rows = []
    for j in args.J:
        spec = GenerativeSpec(family=_parse_family(args.family),
                              effect_ratio=args.ratio, controls=j,
                              n_sets=args.I, seed=args.seed)
        gamma_list = _parse_gammas(args.gamma_list) if args.gamma_list else ()
        est = estimate_limits(spec, stat, gamma_list=gamma_list)
        conv = design_sensitivity_conventional(est)
        tilt_est = design_sensitivity_tilted(est)
        rows.append({
            "family": spec.family, "stat": stat.label(), "controls": j,
            "n_sets": args.I, "effect_ratio": args.ratio, "seed": args.seed,
            "mean_dev": est.mean_dev, "se_mean_dev": est.se_mean_dev,
            "mean_abs_dev": est.mean_abs_dev,
            "se_mean_abs_dev": est.se_mean_abs_dev,
            "mad_by_gamma": [list(t) for t in est.mad_by_gamma],
            "conventional": {"value": conv.value, "se": conv.se,
                             "status": conv.status},
            "tilted": {"value": tilt_est.value, "se": tilt_est.se,
                       "status": tilt_est.status},
        })
        fmt = lambda d: "-" if d["value"] is None else f"{d['value']:.2f}"
        _echo(f"design-sens: {spec.family} {stat.label()} J={j} "
              f"conventional={fmt(rows[-1]['conventional'])} "
              f"tilted={fmt(rows[-1]['tilted'])}")
    return {"rows": rows}


def _run_power(args) -> dict:
    _require(args, "--family", "--J", "--I")
    stat = parse_score_spec(args.stat)
    spec = GenerativeSpec(family=_parse_family(args.family),
                          effect_ratio=args.ratio, controls=args.J[0],
                          n_sets=args.I, seed=args.seed)
    methods = _parse_methods(args.method)

    def progress(done, total):
        _echo(f"power: {done}/{total} replicates")

    table = power_curve(spec, stat, methods=methods, alpha=args.alpha,
                        gamma_grid=_parse_gammas(args.gamma), reps=args.reps,
                        weight_family=args.weights, n_jobs=args.threads,
                        progress=progress)
    return {"rows": list(table.rows())}


def _run_validate(args) -> dict:
    checks = []
    rng = np.random.default_rng(args.seed)

    def record(name: str, passed: bool, detail: str = ""):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})
        _echo(f"{'PASS' if passed else 'FAIL'} {name}{': ' + detail if detail else ''}")

    def random_scores(n_sets, n) -> ScoreMatrix:
        return ScoreMatrix(tuple(
            ScoreSet(q=q, mean=float(q.mean()), treated_index=int(rng.integers(n)))
            for q in rng.standard_normal((n_sets, n))
        ))

    ok, worst = True, 0.0
    for _ in range(args.trials):
        sm = random_scores(2, int(rng.integers(2, 5)))
        dist = exact_distribution(sm, 2.0, [np.clip(rng.random(s.size), 0, 1)
                                            for s in sm.sets])
        worst = max(worst, abs(sum(p for _, p in dist.support) - 1.0))
        ok &= worst <= 1e-12
    record("exact-distribution-normalization", ok, f"max |1-total|={worst:.2e}")

    ok, worst = True, 0.0
    for _ in range(args.trials):
        q = rng.standard_normal(int(rng.integers(2, 7)))
        gamma = float(rng.uniform(1.0, 6.0))
        mu, _ = worst_case_expectation(q, gamma)
        ex = exhaustive_worst_u(q, gamma, objective="expectation")
        worst = max(worst, abs(mu - ex.expectation))
        ok &= worst <= 1e-10
    record("sorted-split-reduction-vs-exhaustive", ok, f"max gap={worst:.2e}")

    ok, worst = True, 0.0
    for _ in range(args.trials):
        q = rng.standard_normal(int(rng.integers(2, 7)))
        gamma = float(rng.uniform(1.0, 8.0))
        mu, _ = worst_case_expectation(q, gamma)
        gap = abs(mu - q.mean() - tilt_factor(gamma) * worst_case_mad(q, gamma))
        worst = max(worst, gap)
        ok &= worst <= 1e-9
    record("fixed-point-identity", ok, f"max gap={worst:.2e}")

    ok = True
    for _ in range(args.trials):
        q = rng.standard_normal(int(rng.integers(2, 7)))
        gamma = float(rng.uniform(1.5, 5.0))
        qbar = q.mean()
        tilted_set = q - qbar - (gamma - 1) / (gamma + 1) * np.abs(q - qbar)
        ex = exhaustive_worst_u(tilted_set, gamma)
        want = (q > qbar + 1e-12 * (1 + abs(qbar))).astype(float)
        ok &= abs(ex.expectation) <= 1e-10 and np.array_equal(ex.u, want)
    record("tilted-zero-worst-case", ok)

    ok, worst = True, 0.0
    for _ in range(max(args.trials // 4, 5)):
        n_sets = int(rng.integers(3, 12))
        sm = random_scores(n_sets, 2)
        for gamma in (1.0, 1.7, 3.0):
            c = conventional_pvalue(sm, gamma)
            t = tilted_pvalue(tilt(sm, gamma), weights(sm, gamma, "unit"))
            worst = max(worst, abs(c.pvalue - t.pvalue))
            ok &= worst <= 1e-12
    record("pair-equivalence", ok, f"max |dp|={worst:.2e}")

    ok, worst = True, 0.0
    for rho in (0.0, 0.5):
        for alpha in (0.10, 0.05):
            c = chi_bar_critical(rho, alpha)
            tail = chi_bar_mc(rho, c, draws=2 * 10**5, seed=args.seed + 1)
            worst = max(worst, abs(tail - alpha))
            ok &= worst <= 0.01
    record("chi-bar-critical-vs-mc", ok, f"max |tail-alpha|={worst:.3f}")

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}


# ---------------------------------------------------------------------------
# output plumbing

def _csv_rows(result: dict) -> list[dict] | None:
    for key in ("rows", "grid", "checks", "reports"):
        if key in result and isinstance(result[key], list):
            return result[key]
    return None


def _render_csv(rows: list[dict]) -> str:
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields)
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                    for k, v in r.items()})
    return buf.getvalue()


def _write_output(doc: dict, out: str | None, fmt: str) -> None:
    if fmt == "csv":
        rows = _csv_rows(doc["results"])
        if rows is None:
            raise ValueError("this subcommand has no tabular output; use json")
        payload = _render_csv(rows)
    else:
        payload = json.dumps(doc, indent=1, allow_nan=False) + "\n"
    if out is None:
        sys.stdout.write(payload)
        return
    tmp = f"{out}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
    os.replace(tmp, out)


def _public_config(args) -> dict:
    skip = {"func", "config"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# parser

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tiltsens",
        description="Sensitivity analysis for matched observational studies "
                    "under an odds-ratio-bounded hidden-bias model.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    def common(p, *, data=False, generative=False):
        p.add_argument("--config", default=None,
                       help="key=value config file with one section per subcommand")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--weights", default="unit", type=lambda s: _WEIGHT_TOKENS[s],
                       help="unit | ss | ipw")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--output-format", choices=("json", "csv"), default="json")
        # "required" flags stay optional at parse time so a --config file can
        # supply them; _require checks them after config merging.
        if data:
            p.add_argument("--input", default=None)
            p.add_argument("--input-format", choices=("auto", "csv", "json"),
                           default="auto")
            p.add_argument("--stat", default="diff",
                           help="diff | huber[:trim] | arank | mh | u868")
        if generative:
            p.add_argument("--family", default=None,
                           help="normal | t3 | dexp | exp1-1 | 1-exp1")
            p.add_argument("--J", type=lambda s: [int(x) for x in s.split(",")],
                           default=None, help="number(s) of matched controls")
            p.add_argument("--ratio", type=float, default=0.5,
                           help="effect size in treated-minus-control sd units")
            p.add_argument("--I", type=int, default=None, help="matched sets")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--stat", default="diff")

    p = sub.add_parser("analyze", help="per-gamma tests on a study file")
    common(p, data=True)
    p.add_argument("--method", default="conventional,tilted")
    p.add_argument("--gamma", default="1", help="value, list, or start:stop:step")
    p.set_defaults(func=_run_analyze)
    subparsers["analyze"] = p

    p = sub.add_parser("senval", help="sensitivity value (changepoint gamma)")
    common(p, data=True)
    p.add_argument("--method", default="conventional,tilted,adaptive")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--gamma-max", type=float, default=1000.0)
    p.set_defaults(func=_run_senval)
    subparsers["senval"] = p

    p = sub.add_parser("design-sens", help="Monte-Carlo design sensitivities")
    common(p, generative=True)
    p.add_argument("--gamma-list", default=None,
                   help="optional gammas at which to tabulate the dispersion mean")
    p.set_defaults(func=_run_design_sens)
    subparsers["design-sens"] = p

    p = sub.add_parser("power", help="rejection-rate curves")
    common(p, generative=True)
    p.add_argument("--method", default="conventional,tilted,adaptive")
    p.add_argument("--gamma", default="1:6:0.25")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_run_power)
    subparsers["power"] = p

    p = sub.add_parser("validate", help="oracle self-checks")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", default=None)
    p.add_argument("--output-format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_run_validate)
    subparsers["validate"] = p

    return parser, subparsers


def _apply_config(parser, subparsers, argv):
    probe, _ = parser.parse_known_args(argv)
    path = getattr(probe, "config", None)
    if not path:
        return parser.parse_args(argv)
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keep option case (e.g. J vs j)
    with open(path, encoding="utf-8") as fh:
        cfg.read_file(fh)
    section = probe.command
    if cfg.has_section(section):
        sp = subparsers[section]
        defaults = {}
        for key, raw in cfg.items(section):
            dest = key.replace("-", "_")
            for action in sp._actions:
                if action.dest == dest:
                    if action.type is not None:
                        defaults[dest] = action.type(raw)
                    elif isinstance(action.default, bool):
                        defaults[dest] = raw.lower() in ("1", "true", "yes")
                    else:
                        defaults[dest] = raw
                    break
            else:
                raise ValueError(f"config key {key!r} unknown for [{section}]")
        sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, subparsers = _build_parser()
    try:
        args = _apply_config(parser, subparsers, argv)
        results = args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - machine-readable error record
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(record), file=sys.stdout)
        return 1
    doc = {"command": args.command, "version": __version__,
           "config": _public_config(args), "results": results}
    _write_output(doc, args.out, args.output_format)
    if args.command == "validate" and not results["all_passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
