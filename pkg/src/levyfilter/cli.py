"""Command line entry point: ``levyfilter <command> [options]``."""
import argparse
from concurrent.futures import ProcessPoolExecutor
import glob
import json
import os
import sys

from .config import ConfigError, load_config, load_preset, override, preset_names, resolve
from .fokker_planck import InstabilityError
from .runner import (COMMANDS, METRICS, OUT_ENV, AxisMismatchError, compare_runs,
                     default_out_dir, run_scenario)

EXIT_OK, EXIT_WARN, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _scenario_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="YAML scenario file")
    src.add_argument("--preset", metavar="NAME", help="shipped scenario preset")
    src.add_argument("--batch", metavar="DIR", help="run every *.yaml in DIR concurrently")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", metavar="DIR",
                   help=f"output directory (default: ${OUT_ENV}/<name>-seed<seed>-<command>)")
    p.add_argument("--stride", type=int, metavar="N", help="store every N solver steps")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    p.add_argument("--workers", type=int, default=None, help="processes for --batch")
    p.add_argument("--dump-operator", action="store_true",
                   help="also write the assembled operator as operator.csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="levyfilter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate a true path and its observations",
        "fokker-planck": "solve the nonlocal Fokker-Planck equation",
        "filter-discrete": "continuous-discrete filter on simulated observations",
        "filter-zakai": "Zakai filter on a simulated continuous observation path",
        "twin": "simulate, observe, filter and score against the truth",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _scenario_args(p)
        if name == "simulate":
            p.add_argument("--ensemble", type=int, nargs="?", const=0, metavar="N",
                           help="also write an N-sample Monte-Carlo histogram density "
                                "(N defaults to oracle.ensemble)")
        if name in ("filter-discrete", "filter-zakai", "twin"):
            p.add_argument("--engine", choices=("pde", "particles"),
                           help="grid filter (default) or bootstrap particle filter")
    p = sub.add_parser("compare", help="compare two run directories")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--metric", choices=METRICS, default="l1_density")
    p.add_argument("--times", help="comma separated times to compare (default: all, axes must match)")
    p.add_argument("--t-min", type=float, default=0.0, help="burn-in for sign agreement")
    p.add_argument("--lag-tol", type=float, default=0.5)
    p.add_argument("--out", metavar="DIR", help="write compare_<metric>.csv/.json here")
    p.add_argument("--quiet", action="store_true")
    sub.add_parser("presets", help="list shipped presets")
    return parser


def _resolve_config(args, path=None):
    if path is not None:
        cfg = load_config(path)
    elif args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise ConfigError("--config", "one of --config, --preset or --batch is required")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.stride is not None:
        changes["solver.store_stride"] = args.stride
    return override(cfg, **changes) if changes else cfg


def _run_one(command, cfg, out, ensemble, engine, quiet, dump_operator=False):
    try:
        res = run_scenario(cfg, command, out, ensemble=ensemble, engine=engine, quiet=quiet,
                           dump_operator=dump_operator)
        return res.exit_code, res.out_dir, None
    except (InstabilityError, ValueError, RuntimeError) as exc:
        return EXIT_NUMERIC, out, f"{type(exc).__name__}: {exc}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return EXIT_OK
    if args.command == "compare":
        times = [float(t) for t in args.times.split(",")] if args.times else None
        try:
            report = compare_runs(args.run_a, args.run_b, args.metric, times, args.t_min,
                                  args.lag_tol, args.out)
        except (AxisMismatchError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if not args.quiet:
            print(json.dumps(report, indent=2, sort_keys=True))
        return EXIT_OK

    ensemble = getattr(args, "ensemble", None)
    engine = getattr(args, "engine", None)
    try:
        if args.batch:
            paths = sorted(glob.glob(os.path.join(args.batch, "*.yaml")))
            if not paths:
                raise ConfigError("--batch", f"no *.yaml files in {args.batch}")
            cfgs = [_resolve_config(args, p) for p in paths]
        else:
            cfgs = [_resolve_config(args)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    jobs = []
    for cfg in cfgs:
        if args.out and len(cfgs) > 1:
            out = os.path.join(args.out, f"{cfg['name']}-seed{cfg['seed']}-{args.command}")
        else:
            out = args.out or default_out_dir(cfg, args.command)
        n_ens = cfg["oracle"]["ensemble"] if ensemble == 0 else ensemble
        jobs.append((args.command, cfg, out, n_ens, engine, args.quiet or len(cfgs) > 1,
                     args.dump_operator))
    if len(jobs) == 1:
        results = [_run_one(*jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    code = EXIT_OK
    for status, out, err in results:
        if err:
            print(f"error in {out}: {err}", file=sys.stderr)
        elif not args.quiet:
            print(f"wrote {out}" + (" (with warnings)" if status == EXIT_WARN else ""))
        code = max(code, status)
    return code


if __name__ == "__main__":
    sys.exit(main())
