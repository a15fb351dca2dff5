"""Command line interface.

Subcommands run one certification experiment each, ``sweep`` runs one
along a parameter axis, and ``verify-all`` runs the whole default grid.
Every run writes a CSV report and a JSON mirror with identical records.

Exit codes: 0 all bounds respected, 1 at least one BoundViolated verdict,
2 usage or parameter error, 3 output not writable.

Options can come from a ``--config`` file of flat ``key = value`` lines
('#' starts a comment); explicit flags override the file.  The worker
thread count comes from --threads, else FEWSHOT_THREADS, else the CPU
count, and never changes results.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

from .errors import FewpatchError
from .experiments import (
    VERDICT_VIOLATED,
    run_cap_check,
    run_centering,
    run_learn_few,
    run_learn_from_few,
    run_quasi_orthogonality,
    sweep,
)
from .samplers import RadialPower, Seed

__all__ = ["CSV_COLUMNS", "execute", "main", "rows_from_reports"]

CSV_COLUMNS = [
    "experiment",
    "n",
    "k",
    "v",
    "rho",
    "C_new",
    "r",
    "C_x",
    "delta",
    "eps",
    "theta",
    "theta_mix",
    "trials",
    "event",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound_raw",
    "bound_clamped",
    "vacuous",
    "verdict",
]

_U64_MAX = 2**64 - 1


class _UsageError(Exception):
    pass


@dataclass(frozen=True)
class _Opt:
    flag: str
    dest: str
    kind: str
    help: str
    choices: tuple = ()


_OUTPUT_OPTS = [
    _Opt("--csv", "csv", "str", "CSV output path (default <out-dir>/<name>.csv)"),
    _Opt("--json", "json", "str", "JSON output path (default <out-dir>/<name>.json)"),
    _Opt("--out-dir", "out_dir", "str", "directory for default outputs (default ./out)"),
    _Opt("--config", "config", "str", "flat 'key = value' file; flags override it"),
]

_SEED_OPTS = [
    _Opt("--seed", "seed", "int", "root seed in [0, 2^64), required"),
    _Opt("--stream", "stream", "int", "stream index under the root seed (default 0)"),
    _Opt(
        "--threads",
        "threads",
        "int",
        "worker threads (default: FEWSHOT_THREADS or CPU count); never affects results",
    ),
]

_SHAPE_OPTS = [
    _Opt(
        "--shape",
        "shape",
        "str",
        "cluster radial shape (default uniform)",
        choices=("uniform", "radial"),
    ),
    _Opt("--alpha", "alpha", "float", "radial power exponent for --shape radial"),
]

_CLUSTER_OPTS = [
    _Opt("--n", "n", "int", "latent dimension"),
    _Opt("--k", "k", "int", "points per trial"),
    _Opt("--v", "v", "float", "cluster ball radius"),
    _Opt("--delta", "delta", "float", "quasi-orthogonality level in (0, 1)"),
    _Opt("--eps", "eps", "float", "norm floor level in (0, 1)"),
    _Opt("--trials", "trials", "int", "Monte Carlo trials (>= 1000)"),
]

_OPTS = {
    "quasi-orth": _CLUSTER_OPTS + _SHAPE_OPTS + _SEED_OPTS + _OUTPUT_OPTS,
    "centering": _CLUSTER_OPTS + _SHAPE_OPTS + _SEED_OPTS + _OUTPUT_OPTS,
    "learn-few": [
        _Opt("--n", "n", "int", "latent dimension"),
        _Opt("--k", "k", "int", "examples per trial"),
        _Opt("--v", "v", "float", "radius of the folded cluster ball"),
        _Opt("--fresh", "fresh", "int", "fresh base points per trial"),
        _Opt("--trials", "trials", "int", "Monte Carlo trials (>= 1000)"),
    ]
    + _SHAPE_OPTS
    + _SEED_OPTS
    + _OUTPUT_OPTS,
    "learn-from-few": [
        _Opt("--n", "n", "int", "latent dimension"),
        _Opt("--k", "k", "int", "examples per trial"),
        _Opt("--v", "v", "float", "cluster ball radius"),
        _Opt("--center-dist", "center_dist", "float", "cluster center distance from origin"),
        _Opt("--delta", "delta", "float", "quasi-orthogonality level in (0, 1)"),
        _Opt("--theta-mix", "theta_mix", "float", "threshold position in [0, 1]"),
        _Opt("--fresh-new", "fresh_new", "int", "fresh cluster points per trial"),
        _Opt("--fresh-base", "fresh_base", "int", "fresh base points per trial"),
        _Opt("--trials", "trials", "int", "Monte Carlo trials (>= 1000)"),
    ]
    + _SHAPE_OPTS
    + _SEED_OPTS
    + _OUTPUT_OPTS,
    "cap-check": [
        _Opt("--n-max", "n_max", "int", "largest dimension to check"),
        _Opt("--grid", "grid", "int", "offsets on the [0, 1] grid"),
    ]
    + _OUTPUT_OPTS,
    "sweep": [
        _Opt(
            "--experiment",
            "experiment",
            "str",
            "experiment to sweep",
            choices=("quasi-orth", "centering", "learn-few", "learn-from-few"),
        ),
        _Opt(
            "--axis",
            "axis",
            "str",
            "swept parameter",
            choices=("n", "k", "v", "delta", "eps", "theta_mix"),
        ),
        _Opt("--values", "values", "str", "comma-separated strictly increasing values"),
        _Opt("--n", "n", "int", "latent dimension"),
        _Opt("--k", "k", "int", "points per trial"),
        _Opt("--v", "v", "float", "cluster ball radius"),
        _Opt("--delta", "delta", "float", "quasi-orthogonality level in (0, 1)"),
        _Opt("--eps", "eps", "float", "norm floor level in (0, 1)"),
        _Opt("--center-dist", "center_dist", "float", "cluster center distance (learn-from-few)"),
        _Opt("--theta-mix", "theta_mix", "float", "threshold position (learn-from-few)"),
        _Opt("--fresh", "fresh", "int", "fresh base points per trial (learn-few)"),
        _Opt("--fresh-new", "fresh_new", "int", "fresh cluster points (learn-from-few)"),
        _Opt("--fresh-base", "fresh_base", "int", "fresh base points (learn-from-few)"),
        _Opt("--trials", "trials", "int", "Monte Carlo trials (>= 1000)"),
    ]
    + _SHAPE_OPTS
    + _SEED_OPTS
    + _OUTPUT_OPTS,
    "verify-all": _SEED_OPTS + _OUTPUT_OPTS,
}

_DEFAULTS = {
    "quasi-orth": {
        "n": 50,
        "k": 10,
        "v": 1.0,
        "delta": 0.5,
        "eps": 0.1,
        "trials": 100000,
        "shape": "uniform",
        "alpha": 0.0,
        "stream": 0,
        "out_dir": "out",
    },
    "centering": {
        "n": 50,
        "k": 10,
        "v": 1.0,
        "delta": 0.5,
        "eps": 0.1,
        "trials": 100000,
        "shape": "uniform",
        "alpha": 0.0,
        "stream": 0,
        "out_dir": "out",
    },
    "learn-few": {
        "n": 20,
        "k": 5,
        "v": 1.0,
        "fresh": 1000,
        "trials": 10000,
        "shape": "uniform",
        "alpha": 0.0,
        "stream": 0,
        "out_dir": "out",
    },
    "learn-from-few": {
        "n": 200,
        "k": 5,
        "v": 1.0,
        "center_dist": 2.0,
        "delta": 0.3,
        "theta_mix": 0.6,
        "fresh_new": 1000,
        "fresh_base": 1000,
        "trials": 10000,
        "shape": "uniform",
        "alpha": 0.0,
        "stream": 0,
        "out_dir": "out",
    },
    "cap-check": {"n_max": 30, "grid": 101, "out_dir": "out"},
    "sweep": {
        "n": 50,
        "k": 10,
        "v": 1.0,
        "delta": 0.5,
        "eps": 0.1,
        "center_dist": 2.0,
        "theta_mix": 0.6,
        "fresh": 1000,
        "fresh_new": 1000,
        "fresh_base": 1000,
        "shape": "uniform",
        "alpha": 0.0,
        "stream": 0,
        "out_dir": "out",
    },
    "verify-all": {"stream": 0, "out_dir": "out"},
}

_COERCERS = {"int": int, "float": float, "str": str}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fewpatch",
        description="Certify few-shot patch probability bounds by seeded Monte Carlo.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "quasi-orth": "pairwise quasi-orthogonality of cluster samples (events A1, A1_and_A2)",
        "centering": "concentration of the empirical mean (interval coverage)",
        "learn-few": "memorizing mean-direction patch on folded cluster samples",
        "learn-from-few": "margin patch: capture of fresh cluster points, base agreement",
        "cap-check": "exact spherical cap fraction vs its closed-form bound",
        "sweep": "one experiment along a strictly increasing parameter axis",
        "verify-all": "the full default certification grid, one combined report",
    }
    for command, opts in _OPTS.items():
        sub = subs.add_parser(command, help=descriptions[command])
        for opt in opts:
            kwargs = {"dest": opt.dest, "default": None, "help": opt.help}
            if opt.choices:
                kwargs["choices"] = opt.choices
            if opt.kind == "int":
                kwargs["type"] = int
            elif opt.kind == "float":
                kwargs["type"] = float
            sub.add_argument(opt.flag, **kwargs)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _UsageError("cannot read config file: %s" % exc) from exc
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise _UsageError("%s:%d: expected 'key = value'" % (path, lineno))
        key = key.strip().replace("-", "_")
        value = value.strip()
        if len(value) >= 2 and value[0] in "'\"" and value[-1] == value[0]:
            value = value[1:-1]
        if not key:
            raise _UsageError("%s:%d: empty key" % (path, lineno))
        cfg[key] = value
    return cfg


def _merge_options(command: str, args: argparse.Namespace) -> dict:
    opts_table = _OPTS[command]
    merged = dict(_DEFAULTS[command])
    by_dest = {o.dest: o for o in opts_table}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        cfg = _load_config(config_path)
        for key, raw in cfg.items():
            if key == "config" or key not in by_dest:
                raise _UsageError("config key %r is not an option of %s" % (key, command))
            try:
                merged[key] = _COERCERS[by_dest[key].kind](raw)
            except ValueError as exc:
                raise _UsageError("config key %r: %s" % (key, exc)) from exc
            opt = by_dest[key]
            if opt.choices and merged[key] not in opt.choices:
                raise _UsageError(
                    "config key %r must be one of %s" % (key, ", ".join(opt.choices))
                )
    for opt in opts_table:
        value = getattr(args, opt.dest, None)
        if value is not None:
            merged[opt.dest] = value
    merged.setdefault("threads", None)
    merged.setdefault("csv", None)
    merged.setdefault("json", None)
    return merged


_RANGES = {
    "n": (lambda x: x >= 1, "must be >= 1"),
    "k": (lambda x: x >= 1, "must be >= 1"),
    "v": (lambda x: x > 0, "must be > 0"),
    "delta": (lambda x: 0 < x < 1, "must lie in (0, 1)"),
    "eps": (lambda x: 0 < x < 1, "must lie in (0, 1)"),
    "alpha": (lambda x: x >= 0, "must be >= 0"),
    "theta_mix": (lambda x: 0 <= x <= 1, "must lie in [0, 1]"),
    "center_dist": (lambda x: x >= 0, "must be >= 0"),
    "fresh": (lambda x: x >= 1, "must be >= 1"),
    "fresh_new": (lambda x: x >= 1, "must be >= 1"),
    "fresh_base": (lambda x: x >= 1, "must be >= 1"),
    "trials": (lambda x: x >= 1000, "must be >= 1000"),
    "seed": (lambda x: 0 <= x <= _U64_MAX, "must lie in [0, 2^64)"),
    "stream": (lambda x: 0 <= x <= _U64_MAX, "must lie in [0, 2^64)"),
    "threads": (lambda x: x >= 1, "must be >= 1"),
    "n_max": (lambda x: x >= 1, "must be >= 1"),
    "grid": (lambda x: x >= 2, "must be >= 2"),
}


def _check_ranges(opts: dict) -> None:
    for key, value in opts.items():
        if value is None or key not in _RANGES:
            continue
        pred, msg = _RANGES[key]
        if not pred(value):
            raise _UsageError("--%s %s" % (key.replace("_", "-"), msg))


def _require_seed(opts: dict) -> None:
    if opts.get("seed") is None:
        raise _UsageError("--seed is required")


def _shape_of(opts: dict):
    alpha = opts.get("alpha", 0.0)
    if opts.get("shape") == "radial":
        return RadialPower(alpha)
    if alpha not in (None, 0.0):
        raise _UsageError("--alpha requires --shape radial")
    return None


def _seed_of(opts: dict) -> Seed:
    return Seed(opts["seed"], opts["stream"])


def _run_quasi_orth(opts: dict):
    return [
        run_quasi_orthogonality(
            n=opts["n"],
            k=opts["k"],
            delta=opts["delta"],
            eps=opts["eps"],
            trials=opts["trials"],
            seed=_seed_of(opts),
            v=opts["v"],
            shape=_shape_of(opts),
            threads=opts["threads"],
        )
    ]


def _run_centering(opts: dict):
    return [
        run_centering(
            n=opts["n"],
            k=opts["k"],
            delta=opts["delta"],
            eps=opts["eps"],
            trials=opts["trials"],
            seed=_seed_of(opts),
            v=opts["v"],
            shape=_shape_of(opts),
            threads=opts["threads"],
        )
    ]


def _run_learn_few(opts: dict):
    return [
        run_learn_few(
            n=opts["n"],
            k=opts["k"],
            trials=opts["trials"],
            seed=_seed_of(opts),
            fresh=opts["fresh"],
            v=opts["v"],
            shape=_shape_of(opts),
            threads=opts["threads"],
        )
    ]


def _run_learn_from_few(opts: dict):
    return [
        run_learn_from_few(
            n=opts["n"],
            k=opts["k"],
            center=opts["center_dist"],
            v=opts["v"],
            delta=opts["delta"],
            theta_mix=opts["theta_mix"],
            trials=opts["trials"],
            seed=_seed_of(opts),
            fresh_new=opts["fresh_new"],
            fresh_base=opts["fresh_base"],
            shape=_shape_of(opts),
            threads=opts["threads"],
        )
    ]


def _run_cap_check(opts: dict):
    return [run_cap_check(n_max=opts["n_max"], grid=opts["grid"])]


_SWEEP_PARAM_KEYS = {
    "quasi-orth": ("n", "k", "delta", "eps", "v"),
    "centering": ("n", "k", "delta", "eps", "v"),
    "learn-few": ("n", "k", "v", "fresh"),
    "learn-from-few": (
        "n",
        "k",
        "v",
        "delta",
        "theta_mix",
        "fresh_new",
        "fresh_base",
    ),
}


def _run_sweep(opts: dict):
    for key in ("experiment", "axis", "values"):
        if opts.get(key) is None:
            raise _UsageError("--%s is required" % key)
    experiment = opts["experiment"]
    axis = opts["axis"]
    raw_values = [s.strip() for s in str(opts["values"]).split(",") if s.strip()]
    if not raw_values:
        raise _UsageError("--values must be a nonempty comma-separated list")
    caster = int if axis in ("n", "k") else float
    try:
        values = [caster(s) for s in raw_values]
    except ValueError as exc:
        raise _UsageError("--values: %s" % exc) from exc
    params = {
        key: opts[key] for key in _SWEEP_PARAM_KEYS[experiment] if key != axis
    }
    if experiment == "learn-from-few":
        params["center"] = opts["center_dist"]
    if experiment != "learn-from-few":
        params["shape"] = _shape_of(opts)
    else:
        params["new_shape"] = _shape_of(opts)
    return sweep(
        experiment,
        axis,
        values,
        trials=opts["trials"],
        seed=_seed_of(opts),
        params=params,
        threads=opts["threads"],
    )


def _run_verify_all(opts: dict):
    """The default certification grid.

    Streams are fixed per entry so each experiment's draws are stable no
    matter which subset is rerun; the sweep occupies streams 10-14.
    """
    root = opts["seed"]
    threads = opts["threads"]
    reports = [run_cap_check()]
    reports.append(
        run_quasi_orthogonality(
            n=50, k=10, delta=0.5, eps=0.1, trials=100000,
            seed=Seed(root, 0), threads=threads,
        )
    )
    reports.append(
        run_quasi_orthogonality(
            n=2, k=2, delta=0.99, eps=0.9, trials=100000,
            seed=Seed(root, 1), threads=threads,
        )
    )
    reports.append(
        run_centering(
            n=50, k=10, delta=0.5, eps=0.1, trials=100000,
            seed=Seed(root, 2), threads=threads,
        )
    )
    reports.append(
        run_centering(
            n=50, k=1, delta=0.5, eps=0.1, trials=100000,
            seed=Seed(root, 3), threads=threads,
        )
    )
    for offset, n in enumerate((10, 20, 50)):
        reports.append(
            run_learn_few(
                n=n, k=5, trials=10000, seed=Seed(root, 4 + offset),
                fresh=1000, threads=threads,
            )
        )
    reports.append(
        run_learn_from_few(
            n=200, k=5, center=2.0, v=1.0, delta=0.3, theta_mix=0.6,
            trials=10000, seed=Seed(root, 7), fresh_new=1000, fresh_base=1000,
            threads=threads,
        )
    )
    reports.append(
        run_learn_from_few(
            n=30, k=5, center=2.0, v=1.0, delta=0.3, theta_mix=0.6,
            trials=10000, seed=Seed(root, 8), fresh_new=1000, fresh_base=1000,
            threads=threads,
        )
    )
    reports.extend(
        sweep(
            "quasi-orth",
            "n",
            [10, 20, 40, 80, 160],
            trials=100000,
            seed=Seed(root, 9),
            params={"k": 10, "delta": 0.5, "eps": 0.1},
            threads=threads,
        )
    )
    return reports


_HANDLERS = {
    "quasi-orth": _run_quasi_orth,
    "centering": _run_centering,
    "learn-few": _run_learn_few,
    "learn-from-few": _run_learn_from_few,
    "cap-check": _run_cap_check,
    "sweep": _run_sweep,
    "verify-all": _run_verify_all,
}

_SEEDLESS = {"cap-check"}


def rows_from_reports(reports) -> list[dict]:
    """Flatten reports to emission records, one per certified event.

    The ``trials`` field is the event's own denominator (e.g. built
    trials for memorization, points for pooled agreement), not the
    configured trial count.
    """
    rows = []
    for rep in reports:
        for ev in rep.events:
            merged = {**rep.params, **ev.extras}
            bound = ev.bound
            rows.append(
                {
                    "experiment": rep.experiment,
                    "n": merged.get("n"),
                    "k": merged.get("k"),
                    "v": merged.get("v"),
                    "rho": merged.get("rho"),
                    "C_new": merged.get("C_new"),
                    "r": merged.get("r"),
                    "C_x": merged.get("C_x"),
                    "delta": merged.get("delta"),
                    "eps": merged.get("eps"),
                    "theta": merged.get("theta"),
                    "theta_mix": merged.get("theta_mix"),
                    "trials": ev.estimate.trials,
                    "event": ev.event,
                    "successes": ev.estimate.successes,
                    "p_hat": ev.estimate.p_hat,
                    "ci_low": ev.estimate.ci_low,
                    "ci_high": ev.estimate.ci_high,
                    "bound_raw": bound.raw if bound is not None else None,
                    "bound_clamped": bound.clamped if bound is not None else None,
                    "vacuous": bound.vacuous if bound is not None else None,
                    "verdict": ev.verdict,
                }
            )
    rows.sort(
        key=lambda row: (
            row["experiment"],
            row["n"] if row["n"] is not None else -1,
            row["k"] if row["k"] is not None else -1,
            row["event"],
        )
    )
    return rows


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_outputs(rows, csv_path: str, json_path: str) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt_cell(row[col]) for col in CSV_COLUMNS])
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def _print_reports(reports) -> None:
    for rep in reports:
        for ev in rep.events:
            where = "".join(
                " %s=%s" % (key, _fmt_cell(val)) for key, val in sorted(ev.extras.items())
            )
            line = "[%s]%s %s: %d/%d p_hat=%.6g" % (
                rep.experiment,
                where,
                ev.event,
                ev.estimate.successes,
                ev.estimate.trials,
                ev.estimate.p_hat,
            )
            if ev.bound is not None:
                line += " bound=%.6g" % ev.bound.clamped
            if ev.verdict is not None:
                line += " %s" % ev.verdict
            print(line)
        if rep.summary:
            print(
                "[%s] summary: %s"
                % (
                    rep.experiment,
                    " ".join(
                        "%s=%s" % (key, _fmt_cell(val))
                        for key, val in sorted(rep.summary.items())
                    ),
                )
            )


def execute(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = args.command
    try:
        opts = _merge_options(command, args)
        _check_ranges(opts)
        if command not in _SEEDLESS:
            _require_seed(opts)
        reports = _HANDLERS[command](opts)
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except FewpatchError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    rows = rows_from_reports(reports)
    name = command if command in _SEEDLESS else "%s-%d" % (command, opts["seed"])
    csv_path = opts.get("csv")
    json_path = opts.get("json")
    try:
        if csv_path is None or json_path is None:
            out_dir = opts.get("out_dir") or "out"
            os.makedirs(out_dir, exist_ok=True)
            if csv_path is None:
                csv_path = os.path.join(out_dir, name + ".csv")
            if json_path is None:
                json_path = os.path.join(out_dir, name + ".json")
        _write_outputs(rows, csv_path, json_path)
    except OSError as exc:
        print("error: cannot write output: %s" % exc, file=sys.stderr)
        return 3
    _print_reports(reports)
    print("wrote %s" % csv_path)
    print("wrote %s" % json_path)
    if any(ev.verdict == VERDICT_VIOLATED for rep in reports for ev in rep.events):
        return 1
    return 0


def main(argv=None) -> None:
    raise SystemExit(execute(argv))


if __name__ == "__main__":
    main()
