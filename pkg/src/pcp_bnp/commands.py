"""
    High level command line commands
"""
import os
import sys
import concurrent.futures

from docopt import DocoptExit

from pcp_bnp import logger

from .bnp import STATUS_INFEASIBLE, STATUS_TIME_LIMIT, solve
from .config import SolverConfig, parse_assignment
from .graph import build_conflict_graph
from .instance import (FILE_SUFFIX, generate, instance_name, read_instance,
                       write_instance)
from .logging_settings import setup_logging_for_cli
from .report import (RunRecord, aggregate, append_record, format_summary,
                     read_manifest, read_records, write_series)
from .util import docopt_get_args, items_with_progress, parse_int_list


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


class UsageError(ValueError):
    pass


def pcp_bnp(args=None):
    """pcp-bnp

    Branch-and-price for scheduling EV charging intervals on charging piles.

    `generate` writes random instances named `v{V}c{C}k{K}s{seed}.pcp` and
    prints a manifest line per file. `solve` minimizes the makespan of one
    instance. `bench` solves every `<instance> <backend> <seed>` line of a
    manifest and appends one CSV row per run. `report` turns such a CSV into
    tab-separated plot data.

    Configuration values are taken, in decreasing precedence, from the
    dedicated flags, `--set key=value`, the file given by `--config` and the
    built-in defaults.

    Exit codes: 0 success, 2 usage error, 3 infeasible, 4 internal error.

    Usage:
        pcp-bnp generate --vertices=<V> --k=<K> --piles=<C> --seeds=<seeds>
                         [--out-dir=<dir>] [options]
        pcp-bnp solve --instance=<path> [--csv=<path>] [options]
                      [--set=<assignment>]...
        pcp-bnp bench --manifest=<path> --csv=<path> [options]
                      [--set=<assignment>]...
        pcp-bnp report --csv=<path> --out-dir=<dir> [options]
        pcp-bnp --help

    Options:
        -v, --verbose              Increase verbosity level.
        --out-dir=<dir>            Output directory. [default: .]
        --horizon=<T>              Planning horizon. [default: 24]
        --duration=<d>             Charging duration. [default: 3]
        --force                    Overwrite existing instance files.
        --pricing=<backend>        Pricing backend: exact, bsb or simcim.
        --time-limit=<seconds>     Time limit of a single solve.
        --seed=<seed>              Solve seed.
        --csv=<path>               CSV file receiving the run records.
        --config=<path>            Flat `key = value` configuration file.
        --set=<assignment>         Set a configuration value, e.g. `qaia.steps=500`.
        --dump-lp=<path>           Write the root RMP in LP format.
        --jobs=<k>                 Number of runs in parallel. [default: 1]
        --progress-bar             Enable the progress bar.
    """
    try:
        options = docopt_get_args(pcp_bnp, args)
    except DocoptExit as e:
        print(e, file=sys.stderr)
        sys.exit(EXIT_USAGE)

    setup_logging_for_cli(options["verbose"])

    if options["generate"]:
        command = _run_generate
    elif options["solve"]:
        command = _run_solve
    elif options["bench"]:
        command = _run_bench
    else:
        command = _run_report

    try:
        code = command(options)
    except UsageError as e:
        logger.error(str(e))
        code = EXIT_USAGE

    if code != EXIT_OK:
        sys.exit(code)


def _parse_int(options, key):
    try:
        return int(options[key])
    except (TypeError, ValueError):
        raise UsageError(f"--{key.replace('_', '-')} expects an integer.")


def _solver_config(options):
    """CLI flag > `--set` > `--config` file > defaults."""
    overrides = {}
    try:
        for assignment in options.get("set") or []:
            key, value = parse_assignment(assignment)
            overrides[key] = value

        for flag, key in (("pricing", "pricing.backend"),
                          ("time_limit", "bnp.time_limit"),
                          ("seed", "bnp.seed")):
            if options.get(flag) is not None:
                overrides[key] = options[flag]

        if options.get("config"):
            return SolverConfig.from_file(options["config"], overrides)

        return SolverConfig(overrides)

    except OSError as e:
        raise UsageError(f"Can't read the configuration: {e}")
    except ValueError as e:
        raise UsageError(str(e))


def _run_generate(options):
    num_vertices = _parse_int(options, "vertices")
    k = _parse_int(options, "k")
    piles = _parse_int(options, "piles")
    horizon = _parse_int(options, "horizon")
    duration = _parse_int(options, "duration")

    try:
        seeds = parse_int_list(options["seeds"])
        instances = [
            generate(num_vertices, k, piles, seed, horizon=horizon, duration=duration)
            for seed in seeds
        ]
    except ValueError as e:
        raise UsageError(str(e))

    out_dir = options["out_dir"]
    paths = [os.path.join(out_dir, instance_name(inst) + FILE_SUFFIX)
             for inst in instances]

    existing = [path for path in paths if os.path.exists(path)]
    if existing and not options["force"]:
        raise UsageError(f"Refusing to overwrite {existing}, use --force.")

    os.makedirs(out_dir, exist_ok=True)
    backend = options["pricing"] or "exact"
    seed = options["seed"] or 0
    for inst, path in zip(instances, paths):
        write_instance(inst, path)
        print(f"{path} {backend} {seed}")

    return EXIT_OK


def _solve_one(instance_path, config, dump_lp=None):
    inst = read_instance(instance_path)
    name = os.path.splitext(os.path.basename(instance_path))[0]

    incumbent, stats = solve(inst, config, dump_lp=dump_lp)
    num_edges = build_conflict_graph(inst).num_edges

    record = RunRecord.from_stats(name, inst, num_edges, stats,
                                  config["pricing.backend"], config["bnp.seed"])
    return incumbent, record


def _format_record(record):
    obj = "-" if record.obj is None else record.obj
    return "\n".join([
        f"instance      {record.instance_name}",
        f"|V| |E| N     {record.V} {record.E} {record.N}",
        f"backend       {record.backend} (seed {record.seed})",
        f"status        {record.status}",
        f"obj           {obj}",
        f"gap           {record.gap_percent:.2f} %",
        f"time          {record.t_total_s:.3f} s"
        f" (rmp {record.t_rmp_s:.3f} s, pricing {record.t_pricing_s:.3f} s)",
        f"N_p N_c N_n   {record.n_p} {record.n_c} {record.n_n}",
    ])


def _run_solve(options):
    config = _solver_config(options)
    path = options["instance"]

    if not os.path.isfile(path):
        raise UsageError(f"No instance file '{path}'.")

    try:
        read_instance(path)
    except ValueError as e:
        raise UsageError(str(e))

    try:
        incumbent, record = _solve_one(path, config, dump_lp=options["dump_lp"])
    except Exception:
        logger.exception(f"Solving '{path}' failed.")
        return EXIT_INTERNAL

    print(_format_record(record))
    if incumbent is not None:
        piles = [incumbent.pile_assignment[v] for v in incumbent.selection]
        print(f"selection     {list(incumbent.selection)}")
        print(f"piles         {piles}")

    if options["csv"]:
        append_record(options["csv"], record)

    if record.status == STATUS_INFEASIBLE:
        return EXIT_INFEASIBLE

    if record.status == STATUS_TIME_LIMIT and incumbent is None:
        logger.warning("Time limit reached without a feasible schedule.")

    return EXIT_OK


def _bench_run(entry, overrides):
    """Solve one manifest entry; failures become records with status `error`."""
    name = os.path.splitext(os.path.basename(entry.instance_path))[0]
    try:
        overrides = dict(overrides, **{
            "pricing.backend": entry.backend,
            "bnp.seed": entry.seed,
        })
        config = SolverConfig(overrides)

        _, record = _solve_one(entry.instance_path, config)
        return record

    except Exception as e:
        logger.error(f"Run '{name}' ({entry.backend}, seed {entry.seed}) failed: {e}")
        return RunRecord.failed(name, entry.backend, entry.seed, "error")


def _run_bench(options):
    base = _solver_config(options)
    jobs = _parse_int(options, "jobs")
    if jobs < 1:
        raise UsageError("--jobs must be at least 1.")

    try:
        entries = read_manifest(options["manifest"])
    except OSError as e:
        raise UsageError(f"Can't read the manifest: {e}")
    except ValueError as e:
        raise UsageError(str(e))

    overrides = base.as_dict()

    def runs(executor_map):
        return items_with_progress(
            executor_map(_bench_run, entries, [overrides] * len(entries)),
            desc="Benchmark",
            enabled=options["progress_bar"],
            total=len(entries),
        )

    records = []
    if jobs == 1:
        for record in runs(map):
            append_record(options["csv"], record)
            records.append(record)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            for record in runs(executor.map):
                append_record(options["csv"], record)
                records.append(record)

    print(format_summary(aggregate(records)))
    return EXIT_OK


def _run_report(options):
    try:
        records = read_records(options["csv"])
    except OSError as e:
        raise UsageError(f"Can't read '{options['csv']}': {e}")
    except ValueError as e:
        raise UsageError(str(e))

    paths = write_series(records, options["out_dir"])
    for path in paths.values():
        print(path)

    print(format_summary(aggregate(records)))
    return EXIT_OK
