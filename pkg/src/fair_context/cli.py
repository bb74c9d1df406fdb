"""Command-line front end.

Subcommands: evaluate, sweep, reconstruct, ablate, synth. Exit codes:
0 success, 1 usage error, 2 runtime error. Fairness numbers printed to the
console are scaled x100; files always store natural units.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import FairContextError, UsageError
from .harness import (
    CR_METHODS,
    DEFAULT_EPSILON,
    METHODS,
    UNCERTAIN_METHODS,
    RunConfig,
    aggregate,
    context_size_ablation,
    pareto_front,
    reconstruction_probe,
    run_pipeline,
    sweep,
    sweep_pareto_points,
)
from .reporting import (
    render_summary_table,
    write_ablation_csv,
    write_manifest,
    write_pareto_csv,
    write_reconstruction_csv,
    write_records_jsonl,
    write_summary_csv,
)
from .tabular import SynthSpec, generate_synthetic, load_csv, save_csv

PAPER_ABLATION_SIZES = [100, 300, 500, 700, 1500, 2000, 2500, 3000, 4000, 5000]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_jobs() -> int:
    env = os.environ.get("FAIR_CONTEXT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"FAIR_CONTEXT_JOBS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _add_data_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--sensitive", required=True, help="sensitive column name")
    p.add_argument("--positive-target", default="1",
                   help="value of the target column mapped to 1 (default: 1)")
    p.add_argument("--positive-sensitive", default="1",
                   help="value of the sensitive column mapped to 1 (default: 1)")


def _add_run_flags(p: argparse.ArgumentParser, with_method=True):
    if with_method:
        p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--predictor", default="knn",
                   help="knn | logreg | external:<command>")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--holdout-fraction", type=float, default=0.2)
    p.add_argument("--max-context", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel run seeds (default: FAIR_CONTEXT_JOBS or logical cores)")


def _load(args):
    ds, dropped = load_csv(args.data, args.target, args.sensitive,
                           args.positive_target, args.positive_sensitive)
    if dropped:
        print(f"note: dropped {dropped} rows with missing values", file=sys.stderr)
    return ds


def _config(args, method=None, strict=True) -> RunConfig:
    m = method or args.method
    if m in UNCERTAIN_METHODS and args.epsilon is None:
        print(f"note: --epsilon not given; using default {DEFAULT_EPSILON}")
    epsilon, alpha = args.epsilon, args.alpha
    if not strict:
        # multi-method commands: a knob applies only where it fits
        epsilon = epsilon if m in UNCERTAIN_METHODS else None
        alpha = alpha if m in CR_METHODS else None
    return RunConfig(
        method=m,
        epsilon=epsilon,
        alpha=alpha,
        predictor=args.predictor,
        n_folds=args.folds,
        n_seeds=args.seeds,
        holdout_fraction=args.holdout_fraction,
        max_context=args.max_context,
        base_seed=args.seed,
    )


def _parse_grid(text: str, what: str) -> list[float]:
    values = [tok for tok in text.split(",") if tok.strip()]
    if not values:
        raise UsageError(f"empty {what} grid")
    try:
        return [float(v) for v in values]
    except ValueError as exc:
        raise UsageError(f"bad {what} grid value: {exc}")


# --- subcommands ----------------------------------------------------------------

def _conformal_collector():
    """Inspect hook gathering per-cell conformal state for the manifest."""
    cells = []

    def inspect(seed, fold, sel, demo):
        if "tau" in sel.params:
            cells.append({"seed_index": seed, "fold_index": fold,
                          "epsilon": sel.params.get("epsilon"),
                          "tau": sel.params.get("tau"),
                          "n_calib": sel.params.get("n_calib")})

    def extra():
        if not cells:
            return {}
        return {"conformal": sorted(cells, key=lambda c: (c["epsilon"] or 0.0,
                                                          c["seed_index"], c["fold_index"]))}

    return inspect, extra


def cmd_evaluate(args) -> int:
    ds = _load(args)
    cfg = _config(args)
    jobs = args.jobs or _default_jobs()
    inspect, extra = _conformal_collector()
    records = run_pipeline(ds, cfg, jobs=jobs, inspect=inspect)
    write_records_jsonl(records, args.out)
    write_manifest(str(args.out) + ".manifest.json", cfg, ds, extra=extra())
    print(render_summary_table(aggregate(records)), end="")
    return 0


def cmd_sweep(args) -> int:
    ds = _load(args)
    if bool(args.epsilon_grid) == bool(args.alpha_grid):
        raise UsageError("give exactly one of --epsilon-grid or --alpha-grid")
    if args.epsilon_grid:
        if args.method not in UNCERTAIN_METHODS:
            raise UsageError(f"--epsilon-grid needs an uncertain method, not {args.method}")
        values = _parse_grid(args.epsilon_grid, "epsilon")
    else:
        if args.method not in CR_METHODS:
            raise UsageError(f"--alpha-grid needs a correlation-remover method, not {args.method}")
        values = _parse_grid(args.alpha_grid, "alpha")
    grid = [(args.method, v) for v in values]
    cfg = _config(args, method="vanilla")     # grid points override method/knob
    jobs = args.jobs or _default_jobs()
    inspect, extra = _conformal_collector()
    result = sweep(ds, cfg, grid, jobs=jobs, inspect=inspect)
    write_records_jsonl(result.records, args.out)
    write_manifest(str(args.out) + ".manifest.json", cfg, ds, grid=result.grid,
                   extra={"failures": result.failures, **extra()})
    points = sweep_pareto_points(result.records, args.unfairness)
    front = pareto_front(points) if points else []
    pareto_path = args.pareto_out or str(Path(args.out).with_suffix("")) + ".pareto.csv"
    write_pareto_csv(points, front, pareto_path, args.unfairness)
    print(render_summary_table(aggregate(result.records)), end="")
    if result.failures:
        print(f"note: {len(result.failures)} grid points failed", file=sys.stderr)
    return 0


def cmd_reconstruct(args) -> int:
    ds = _load(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("--methods must name at least one method")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {METHODS}")
    jobs = args.jobs or _default_jobs()
    rows = []
    for m in methods:
        cfg = _config(args, method=m, strict=False)
        acc, f1 = reconstruction_probe(ds, cfg, jobs=jobs)
        rows.append((m, acc, f1))
    write_reconstruction_csv(rows, args.out)
    print(f"{'method':<18} {'accuracy':>10} {'f1':>10}")
    for m, acc, f1 in rows:
        print(f"{m:<18} {acc:>10.4f} {f1:>10.4f}")
    return 0


def cmd_ablate(args) -> int:
    ds = _load(args)
    sizes = [int(v) for v in _parse_grid(args.sizes, "size")]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {METHODS}")
    jobs = args.jobs or _default_jobs()
    cfg = _config(args, method=methods[0], strict=False)
    rows = context_size_ablation(ds, sizes, methods, cfg, jobs=jobs)
    write_ablation_csv(rows, args.out)
    shortfalls = sum(1 for r in rows if r.shortfall)
    print(f"wrote {len(rows)} ablation records ({shortfalls} with achieved < requested)")
    return 0


def cmd_synth(args) -> int:
    if args.noise_sd <= 0:
        raise UsageError("--noise-sd must be > 0")
    spec = SynthSpec(
        n=args.n,
        m_z=args.m_z,
        group_rate=args.pi,
        mean_shift=_parse_grid(args.mean_shift, "mean-shift")
        if "," in args.mean_shift else float(args.mean_shift),
        label_bias=args.label_bias,
        label_weights=_parse_grid(args.label_weights, "label-weights")
        if "," in args.label_weights else float(args.label_weights),
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    ds = generate_synthetic(spec)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.m_z} features to {args.out}")
    print(f"planted: pi={spec.group_rate} mean_shift={spec.mean_shift} "
          f"label_bias={spec.label_bias} label_weights={spec.label_weights} "
          f"noise_sd={spec.noise_sd} seed={spec.seed}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fair-context",
                     description="fairness-aware demonstration selection for tabular "
                                 "in-context learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="run one method over seeds x folds")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="records output path (.jsonl)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="knob sweep with Pareto front")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--epsilon-grid", default=None, help="comma-separated epsilons")
    p.add_argument("--alpha-grid", default=None, help="comma-separated alphas")
    p.add_argument("--unfairness", default="dp", choices=["dp", "eop", "eod"])
    p.add_argument("--out", required=True, help="records output path (.jsonl)")
    p.add_argument("--pareto-out", default=None, help="pareto CSV path (default: <out>.pareto.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reconstruct", help="group-label reconstruction probe per method")
    _add_data_flags(p)
    _add_run_flags(p, with_method=False)
    p.add_argument("--methods", required=True,
                   help="comma-separated methods to probe")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("ablate", help="context-size ablation")
    _add_data_flags(p)
    _add_run_flags(p, with_method=False)
    p.add_argument("--methods", default="vanilla", help="comma-separated methods")
    p.add_argument("--sizes", default=",".join(str(s) for s in PAPER_ABLATION_SIZES),
                   help="comma-separated ascending context sizes")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a synthetic CSV with planted bias")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-z", type=int, default=4)
    p.add_argument("--pi", type=float, default=0.5, help="P(sensitive=1)")
    p.add_argument("--mean-shift", default="0.0",
                   help="per-feature group shift (scalar or comma list)")
    p.add_argument("--label-bias", type=float, default=0.0)
    p.add_argument("--label-weights", default="0.0",
                   help="feature weights in the label logit (scalar or comma list)")
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FairContextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
