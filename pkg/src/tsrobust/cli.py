"""Command line interface: ``tsrobust <subcommand> ...``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .harness import ExperimentConfig, load_case_study, run_case_study, run_experiment
from .model import signature_of
from .robustness import SurrogateConfig, compute_robustness
from .scoring import accuracy_score, normality_diagnostic, normalized_error, obs_equivalent
from .sptime import FitConfig, fit
from .synth import ModelGenConfig, random_model, simulate


def _resolve_seed(seed):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def cmd_synth(args):
    seed = _resolve_seed(args.seed)
    ss = np.random.SeedSequence(seed)
    s_model, s_data = ss.spawn(2)
    cfg = ModelGenConfig(args.n, args.p, args.r, lo=args.lo, hi=args.hi)
    model = random_model(cfg, seed=s_model)
    data = simulate(model, args.T, burn_in=args.burn_in, seed=s_data)
    io.save_model(model, args.model_out)
    io.write_csv(data, args.data_out)
    print(f"model: {signature_of(model).describe(model.labels)}")
    print(f"wrote {args.model_out} and {args.data_out} ({data.T} rows)")


def cmd_fit(args):
    data = io.read_csv(args.input)
    cfg = FitConfig(p=args.lags, alpha=args.alpha, max_lag=args.max_lag)
    result = fit(data, cfg)
    doc = io.fit_result_to_dict(result)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"minimal edge count: {result.sparsity}; {len(result.models)} model(s)")
    for sig in result.signatures:
        print(f"  {sig.describe(data.labels)}")


def cmd_robustness(args):
    data = io.read_csv(args.input)
    seed = _resolve_seed(args.seed)
    report = compute_robustness(
        data,
        FitConfig(p=args.lags, alpha=args.alpha, max_lag=args.max_lag),
        N=args.replicates,
        surrogate_cfg=SurrogateConfig(p=args.surrogate_lags, burn_in=args.surrogate_burn_in),
        seed=seed,
        n_jobs=args.n_jobs,
    )
    doc = io.report_to_dict(report)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    if args.replicate_csv:
        io.write_replicate_csv(report, args.replicate_csv)
    print(f"replicates: {report.N} (failed: {report.failures})")
    for e in report.structures[: args.top]:
        print(f"  R={e.robustness:6.1f}  {e.signature.describe(data.labels)}")


def cmd_score(args):
    truth = io.load_model(args.true)
    fitted = io.load_model(args.fit)
    print(f"equivalent: {obs_equivalent(truth, fitted)}")
    print(f"zeta: {accuracy_score(truth, fitted):.6g}")
    if args.std:
        phi = normalized_error(truth, fitted, io.load_std_stack(args.std))
        vals = np.array([v for _, v in phi])
        print(f"phi: {vals.size} entries, mean {vals.mean():.4g}, max |phi| {np.abs(vals).max():.4g}")
        if args.emit_probplot:
            diag = normality_diagnostic(vals, min_count=1)
            np.savetxt(args.emit_probplot, diag.pairs, delimiter=",", header="empirical,theoretical", comments="")
            print(f"KS statistic: {diag.statistic:.4g}")


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.n_jobs is not None:
        cfg.n_jobs = args.n_jobs
    cfg.seed = _resolve_seed(cfg.seed)
    summary = run_experiment(cfg)
    for row in summary.table():
        print("n={n} p={p} r={r} T={T}: {recovery:.1f}% ({raw_recovery:.1f}%) over {trials} trials".format(**row))


def cmd_casestudy(args):
    data = load_case_study(args.data, ma_window=args.ma_window)
    seed = _resolve_seed(args.seed)
    rep = run_case_study(data, args.alpha_low, args.alpha_high, N=args.replicates, seed=seed, p=args.lags,
                         trust_threshold=args.trust_threshold, n_jobs=args.n_jobs)
    out = {"seed": seed, "p": rep.p, "trust_threshold": rep.trust_threshold}
    for name, run in (("low", rep.low), ("high", rep.high)):
        best = run.report.best
        print(f"alpha={run.alpha}: max R = {run.max_robustness:.1f}{'' if run.trusted else '  (below trust threshold)'}")
        if best is not None:
            print(f"  {best.signature.describe(data.labels)}")
        out[name] = {"alpha": run.alpha, "trusted": run.trusted, "report": io.report_to_dict(run.report)}
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="tsrobust", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a random stationary model and simulate data")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--r", type=float, default=0.4)
    p.add_argument("--T", type=int, default=500)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--lo", type=float, default=0.4)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model-out", required=True)
    p.add_argument("--data-out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="sparsest-permutation fit of a CSV time series")
    p.add_argument("input")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("robustness", help="structure robustness under surrogate resampling")
    p.add_argument("input")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--surrogate-lags", type=int, default=None)
    p.add_argument("--surrogate-burn-in", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--top", type=int, default=5, help="structures to print")
    p.add_argument("--out")
    p.add_argument("--replicate-csv")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("score", help="compare a fitted model with the true one")
    p.add_argument("--true", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--std", help="robustness report or JSON std stack")
    p.add_argument("--emit-probplot")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("experiment", help="Monte Carlo recovery study")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("casestudy", help="wage-price case study from a raw FRED CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha-low", type=float, default=0.5)
    p.add_argument("--alpha-high", type=float, default=0.999)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--ma-window", type=int, default=12)
    p.add_argument("--trust-threshold", type=float, default=55.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_casestudy)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
