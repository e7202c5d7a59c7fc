"""``edgestep`` command line: gen, percolate, experiment, conditions.

Exit codes: 0 success, 2 usage or config error, 3 runtime resource error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .experiments import ExperimentConfig, replica_seed, run_experiment
from .functions import check_conditions
from .graph import FORMAT_VERSION, EdgeListError, ResourceError, generate, read_edgelist, write_edgelist
from .percolation import run, run_record

log = logging.getLogger("edgestep")

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE = 0, 2, 3


class UsageError(Exception):
    pass


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    return cfg


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    cfg = _load(args)
    if cfg.T is None:
        raise ConfigError("run.T", "required for gen")
    out = _outdir(cfg.out)
    summary = {"format_version": FORMAT_VERSION, "config_text": cfg.text, "replicas": []}
    for i in range(cfg.replicas):
        seed = replica_seed(cfg.seed, i)
        tr = generate(
            cfg.function, cfg.T, seed, cfg.snapshot_times, convention=cfg.convention, memory_limit=cfg.memory_limit
        )
        snaps = dict(tr.snapshots)
        snaps[cfg.T] = tr.final
        rows = []
        for s in sorted(snaps):
            g = snaps[s]
            path = out / f"replica{i:03d}_t{s}.edges"
            write_edgelist(g, path)
            rows.append(
                {
                    "t": s,
                    "V": g.n_vertices,
                    "max_degree": int(g.degree.max()),
                    "degree_sum": int(g.degree.sum()),
                    "degree_sum_ok": int(g.degree.sum()) == 2 * s,
                    "file": path.name,
                }
            )
        summary["replicas"].append({"index": i, "seed": seed, "snapshots": rows})
        log.info("replica %d: V_T=%d", i, tr.final.n_vertices)
    (out / "gen_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_percolate(args) -> int:
    try:
        g = read_edgelist(args.graph)
    except OSError as exc:
        raise UsageError(f"cannot read {args.graph}: {exc.strerror}") from None
    if args.r < 2:
        raise UsageError("threshold r must be >= 2")
    if args.a < 0:
        raise UsageError("rate a must be >= 0")
    state, taus = run(g, args.a, args.r, args.c, args.seed, args.max_rounds)
    text = json.dumps(run_record(g, state, taus, args.seed), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _write_result(cfg: RunConfig, res) -> None:
    out = _outdir(cfg.out)
    res.to_csv(out / f"{res.kind}.csv")
    res.to_json(out / f"{res.kind}.json")
    (out / "config.ini").write_text(cfg.text)


def cmd_experiment(args) -> int:
    cfg = _load(args)
    ecfg: ExperimentConfig = cfg.experiment_config()
    res = run_experiment(ecfg)
    _write_result(cfg, res)
    log.info("%s finished in %.1fs", res.kind, res.wall_time)
    return EXIT_OK


def cmd_conditions(args) -> int:
    cfg = _load(args)
    e = cfg.experiment
    grid = list(e.get("t_grid") or [10**k for k in range(1, 7)])
    rep = check_conditions(cfg.function, grid, e.get("tail_horizon", 10**6))
    text = json.dumps({"format_version": FORMAT_VERSION, **rep.to_dict()}, indent=2) + "\n"
    if args.out:
        out = _outdir(args.out)
        (out / "conditions.json").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgestep", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output directory (overrides run.out)"):
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--seed", type=int, help="override run.seed")
        sp.add_argument("--out", metavar="DIR", help=out_help)
        sp.add_argument("--threads", type=int, help="worker processes (overrides run.threads)")

    sp = sub.add_parser("gen", help="generate trajectories and write edge lists")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("percolate", help="bootstrap percolation on an edge-list file")
    sp.add_argument("graph", metavar="EDGES")
    sp.add_argument("--a", type=float, required=True, help="infection rate; each vertex starts infected w.p. a/V")
    sp.add_argument("--r", type=int, default=2, help="threshold (default 2)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--c", type=float, nargs="*", default=[1.0], metavar="C", help="fractions for tau_c")
    sp.add_argument("--max-rounds", type=int, default=None)
    sp.add_argument("--out", metavar="FILE", help="write the JSON here instead of stdout")
    sp.set_defaults(func=cmd_percolate)

    sp = sub.add_parser("experiment", help="run the experiment named by experiment.kind")
    common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("conditions", help="report regularity conditions for the configured f")
    common(sp, out_help="write conditions.json into DIR instead of stdout")
    sp.set_defaults(func=cmd_conditions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, EdgeListError) as exc:
        print(f"edgestep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError, OSError) as exc:
        print(f"edgestep: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
