"""Command-line interface: train, eval, sweep, bench, report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from drim.config import parse_spec_file
from drim.harness import (
    FP_STRATEGIES,
    LAYOUTS,
    OPINION_MODELS,
    SWEEP_DEFAULTS,
    ExperimentSpec,
    bench_runtime,
    derive_seed,
    emit_report,
    load_graph,
    read_results_csv,
    run_grid,
)
from drim.network import full_view
from drim.rl import save_params, train_agent
from drim.strategies import Scheme

_SCHEME_NAMES = [s.value for s in Scheme]


def _add_common_overrides(p: argparse.ArgumentParser, with_out_dir: bool = True) -> None:
    p.add_argument("--scheme", choices=_SCHEME_NAMES)
    p.add_argument("--om", dest="opinion_model", choices=OPINION_MODELS)
    p.add_argument("--fp", dest="fp_strategy", choices=FP_STRATEGIES)
    p.add_argument("--runs", type=int)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--dataset", help="edge-list path (default: bundled graph)")
    if with_out_dir:
        p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--policies", dest="policy_dir", help="policy cache directory")
    p.add_argument("--no-auto-train", action="store_true",
                   help="fail instead of training missing policies")
    p.add_argument("--k", type=int)
    p.add_argument("--p-t", dest="p_t", type=int)
    p.add_argument("--p-f", dest="p_f", type=int)
    p.add_argument("--p-nv", dest="p_nv", type=float)
    p.add_argument("--prior-a", dest="prior_a", type=float)
    p.add_argument("--workers", type=int, help="parallel replicas (default: env/cpu)")
    for key in ("updates", "rollout-episodes", "epochs", "hidden",
                "selfplay-updates-per-side", "selfplay-alternations"):
        p.add_argument(f"--{key}", dest=key.replace("-", "_"), type=int)
    for key in ("actor-lr", "critic-lr", "clip-epsilon", "entropy-coef", "gamma"):
        p.add_argument(f"--{key}", dest=key.replace("-", "_"), type=float)


def _spec_from_args(args, extra: dict | None = None) -> ExperimentSpec:
    overrides = {
        key: getattr(args, key)
        for key in (
            "scheme", "opinion_model", "fp_strategy", "runs", "master_seed",
            "dataset", "out_dir", "policy_dir", "k", "p_t", "p_f", "p_nv", "prior_a",
            "updates", "rollout_episodes", "epochs", "hidden", "actor_lr", "critic_lr",
            "clip_epsilon", "entropy_coef", "gamma",
            "selfplay_updates_per_side", "selfplay_alternations",
        )
        if getattr(args, key, None) is not None
    }
    if getattr(args, "no_auto_train", False):
        overrides["auto_train"] = False
    overrides.update(extra or {})
    return parse_spec_file(getattr(args, "spec", None), overrides)


def cmd_train(args) -> int:
    spec = _spec_from_args(args)
    graph = load_graph(spec)
    cfg = spec.episode_config()
    seed = derive_seed(spec.master_seed, "train", spec.scheme.value,
                       spec.opinion_model, args.opponent)
    observable = full_view(graph) if cfg.p_nv >= 1.0 else None
    result = train_agent(spec.scheme, args.opponent, graph, cfg, spec.ppo, seed,
                         observable=observable)
    out = Path(args.out_policy)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_params(result.params, out)
    if result.opponent_params is not None:
        fp_out = out.with_name(out.stem + "_fp" + out.suffix)
        save_params(result.opponent_params, fp_out)
        print(f"wrote {fp_out}")
    curve_path = out.with_suffix(".curve.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("update,mean_return,entropy\n")
        for update, mean_return, entropy in result.curve:
            fh.write(f"{update},{mean_return:.4f},{entropy:.6f}\n")
    print(f"wrote {out} (final mean return {result.curve[-1][1]:.1f})")
    return 0


def cmd_eval(args) -> int:
    spec = _spec_from_args(args)
    schemes = tuple(Scheme(s) for s in args.schemes.split(",")) if args.schemes else None
    oms = tuple(args.oms.split(",")) if args.oms else None
    fps = tuple(args.fps.split(",")) if args.fps else None
    rows = run_grid(spec, schemes, oms, fps, workers=args.workers)
    for row in rows:
        print(f"{row.scheme}/{row.opinion_model} vs {row.fp_strategy}"
              f"{'' if row.sweep_value == 'none' else ' @' + row.sweep_value}: "
              f"decided n^T {row.mean_decided_n_true:.1f} "
              f"(raw {row.mean_n_true:.1f} ± {row.std_n_true:.1f})")
    print(f"wrote {spec.out_dir}/results.csv")
    return 0


def cmd_sweep(args) -> int:
    if args.values:
        values = tuple(
            int(v) if args.axis == "ip" else float(v) for v in args.values.split(",")
        )
    elif args.range:
        lo, _, hi = args.range.partition(":")
        if args.axis == "ip":
            values = tuple(range(int(lo), int(hi) + 1))
        else:
            raise SystemExit("--range is only meaningful for --axis ip; use --values")
    else:
        values = SWEEP_DEFAULTS[args.axis]
    spec = _spec_from_args(args, {"sweep_axis": args.axis, "sweep_values": values})
    schemes = tuple(Scheme(s) for s in args.schemes.split(",")) if args.schemes else None
    rows = run_grid(spec, schemes, workers=args.workers)
    for row in rows:
        print(f"{row.scheme} @ {row.sweep_axis}={row.sweep_value}: "
              f"decided n^T {row.mean_decided_n_true:.1f}")
    print(f"wrote {spec.out_dir}/results.csv")
    return 0


def cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    schemes = tuple(Scheme(s) for s in args.schemes.split(","))
    times = bench_runtime(spec, schemes, episodes=args.episodes, workers=args.workers)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "bench.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("scheme,mean_episode_seconds\n")
        for scheme, seconds in times.items():
            fh.write(f"{scheme},{seconds:.6f}\n")
            print(f"{scheme}: {seconds:.3f} s/episode")
    print(f"wrote {out}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out_file or f"{args.layout}.csv")
    try:
        if args.layout == "table2":
            times: dict[str, float] = {}
            for results_dir in args.results:
                with open(Path(results_dir) / "bench.csv", encoding="utf-8") as fh:
                    for line in fh.readlines()[1:]:
                        scheme, seconds = line.strip().split(",")
                        times[scheme] = float(seconds)
            missing = [s for s in _SCHEME_NAMES if s not in times]
            if missing:
                raise ValueError(f"missing result cell: scheme={','.join(missing)}")
            out.parent.mkdir(parents=True, exist_ok=True)
            with open(out, "w", encoding="utf-8") as fh:
                fh.write("scheme,mean_episode_seconds\n")
                for scheme in _SCHEME_NAMES:
                    fh.write(f"{scheme},{times[scheme]:.6f}\n")
        else:
            rows = []
            for results_dir in args.results:
                rows.extend(read_results_csv(Path(results_dir) / "results.csv"))
            emit_report(rows, args.layout, out)
    except (ValueError, FileNotFoundError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drim",
        description="Competitive influence maximization experiments "
                    "(subjective-logic opinions, PPO seed selection)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one agent and save its policy")
    p.add_argument("--opponent", required=True, choices=FP_STRATEGIES,
                   help="false-party strategy to train against")
    p.add_argument("--out", dest="out_policy", required=True, help="policy output file")
    p.add_argument("--spec", help="config file with defaults")
    _add_common_overrides(p, with_out_dir=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate scheme/OM/FP cells")
    p.add_argument("--spec", help="config file")
    p.add_argument("--schemes", help="comma list (overrides --scheme)")
    p.add_argument("--oms", help="comma list of opinion models")
    p.add_argument("--fps", help="comma list of FP strategies")
    _add_common_overrides(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep one axis")
    p.add_argument("--axis", required=True, choices=tuple(SWEEP_DEFAULTS))
    p.add_argument("--range", help="lo:hi (ip axis only)")
    p.add_argument("--values", help="comma list of sweep values")
    p.add_argument("--spec", help="config file")
    p.add_argument("--schemes", help="comma list of schemes")
    _add_common_overrides(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="per-scheme episode runtime")
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--schemes", default="drim-a,drim-na,storm,cstorm")
    p.add_argument("--spec", help="config file")
    _add_common_overrides(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="pivot results into a layout CSV")
    p.add_argument("--layout", required=True, choices=LAYOUTS)
    p.add_argument("--results", nargs="+", required=True,
                   help="one or more eval/sweep output directories")
    p.add_argument("--out", dest="out_file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
