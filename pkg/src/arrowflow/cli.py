"""``arrowflow`` command line.

Exit codes: 0 ok, 2 config error, 3 data error, 4 property-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, RunConfig
from .data import (REPORT_FIELDS, DataError, PerturbationSpec, TrainStats, evaluate,
                   load_csv, stratified_split)
from .encoder import native_pipeline
from .energy import fmt_pj, layer_table, memory_bytes, profile_inference
from .experiment import run_experiment, write_train_log
from .modelio import ModelFormatError, load_model, save_model

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PROPTEST = 0, 2, 3, 4


# -- output ------------------------------------------------------------------------

def format_table(rows: Sequence[dict], fields: Sequence[str], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore",
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    cells = [[str(r.get(f, "")) for f in fields] for r in rows]
    widths = [max([len(f)] + [len(c[i]) for c in cells]) for i, f in enumerate(fields)]
    line = lambda vals: "| " + " | ".join(v.ljust(w) for v, w in zip(vals, widths)) + " |"  # noqa: E731
    out = [line(fields), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out += [line(c) for c in cells]
    return "\n".join(out) + "\n"


def emit(args, rows, fields) -> None:
    text = format_table(rows, fields, args.format)
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    sys.stdout.write(text)


def params_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]


def resolve_threads(cli_value: Optional[int]) -> int:
    env = os.environ.get("ARROWFLOW_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"ARROWFLOW_THREADS must be an integer, got {env!r}") from exc
    else:
        n = cli_value if cli_value is not None else 1
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def expand_perturbations(texts: Sequence[str]) -> list[PerturbationSpec]:
    """``gaussian:0,0.1,0.5`` expands to one spec per listed value."""
    specs = []
    for text in texts or ["none"]:
        kind, _, arg = text.partition(":")
        values = arg.split(",") if arg else [""]
        for v in values:
            specs.append(PerturbationSpec.parse(f"{kind}:{v}" if v else kind))
    return specs


# -- commands ----------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args)
    ds = load_csv(args.data)
    threads = resolve_threads(args.threads)
    result = run_experiment(cfg, ds, threads=threads)
    best = result.best
    extra = {"dataset": ds.name, "classes": [str(c) for c in ds.classes],
             "split_seed": cfg.seed, "test_fraction": cfg.test_fraction,
             "best_simulation": best.index, "simulation_seed": best.seed,
             "train_error": best.train_error, "test_error": best.test_error,
             "test_errors": result.test_errors.tolist(),
             "train_means": result.train_stats.means.tolist(),
             "train_stds": result.train_stats.stds.tolist()}
    if args.out:
        save_model(best.model, args.out, cfg.to_dict(), extra, storage=args.storage)
    if args.log:
        write_train_log(result, args.log)
    emit(args, [result.summary_row()], REPORT_FIELDS)
    return EXIT_OK


def cmd_eval(args) -> int:
    model, header = load_model(args.model)
    extra = header.get("extra", {})
    ds = load_csv(args.data)
    if ds.X.shape[1] != model.views[0].pipeline.input_dim:
        raise DataError(f"model expects {model.views[0].pipeline.input_dim} features, "
                        f"data has {ds.X.shape[1]}")
    if args.split == "test":
        train, test = stratified_split(ds, extra.get("test_fraction", 0.2),
                                       extra.get("split_seed", 42))
    else:
        train, test = ds, ds
    stats = TrainStats.of(train)
    seeds = range(args.seed or 0, (args.seed or 0) + args.reps)
    config_id = params_hash(header.get("run_config"))
    rows = []
    for spec in expand_perturbations(args.perturb):
        rep = evaluate([model], test, spec, stats, seeds)
        rows.append(rep.row(ds.name, config_id))
    emit(args, rows, REPORT_FIELDS)
    return EXIT_OK


def _grid_configs(base: RunConfig, grid: dict) -> list[RunConfig]:
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid must be a non-empty JSON object of key -> list of values")
    keys = sorted(grid)
    for k in keys:
        if not isinstance(grid[k], list) or not grid[k]:
            raise ConfigError(f"grid entry {k!r} must be a non-empty list")
    return [base.replace(**dict(zip(keys, combo)))
            for combo in itertools.product(*(grid[k] for k in keys))]


def _sweep_cell(job):
    cfg, ds = job
    return run_experiment(cfg, ds).summary_row()


def cmd_sweep(args) -> int:
    base = load_config(args)
    try:
        grid = json.loads(Path(args.grid).read_text()) if Path(args.grid).exists() \
            else json.loads(args.grid)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse grid: {exc}") from exc
    configs = _grid_configs(base, grid)
    ds = load_csv(args.data)
    out = Path(args.out) if args.out else None
    done = {}
    if out and out.exists() and out.stat().st_size:
        with out.open(newline="") as fh:
            for row in csv.DictReader(fh):
                done[row["config-id"]] = row
    todo = [c for c in configs if c.config_hash() not in done]
    threads = resolve_threads(args.threads)
    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            fresh = list(pool.map(_sweep_cell, [(c, ds) for c in todo]))
    else:
        fresh = []
        for c in todo:
            fresh.append(_sweep_cell((c, ds)))
            if out:  # checkpoint after every cell so an interrupted sweep resumes
                _write_sweep(out, configs, {**done, **{r["config-id"]: r for r in fresh}})
    done.update({r["config-id"]: r for r in fresh})
    if out:
        _write_sweep(out, configs, done)
    rows = []
    for c in configs:
        if c.config_hash() in done:
            row = dict(done[c.config_hash()])
            row.update({k: json.dumps(v) if isinstance(v, list) else v
                        for k, v in c.to_dict().items() if k in grid})
            rows.append(row)
    fields = list(REPORT_FIELDS) + sorted(grid)
    sys.stdout.write(format_table(rows, fields, args.format))
    return EXIT_OK


def _write_sweep(out: Path, configs, done: dict) -> None:
    rows = [done[c.config_hash()] for c in configs if c.config_hash() in done]
    out.write_text(format_table(rows, REPORT_FIELDS, "csv"))


def cmd_knn(args) -> int:
    cfg = load_config(args)
    if args.k:
        cfg = cfg.replace(knn_k=[int(k) for k in args.k.split(",")])
    ds = load_csv(args.data)
    result = run_experiment(cfg, ds, threads=resolve_threads(args.threads), with_knn=True)
    fields = ("dataset", "config-id", "k_neighbors", "arrowflow_error", "knn_error",
              "knn_std", "learning_gain", "n_reps")
    emit(args, result.knn_rows(), fields)
    return EXIT_OK


def cmd_proptest(args) -> int:
    from .oracles import run_all
    reports = run_all(args.seed or 0, quick=args.quick)
    cid = params_hash({"seed": args.seed or 0, "quick": args.quick})
    rows = [{"config-id": cid, "oracle": r.name, "status": "PASS" if r.passed else "FAIL",
             "trials": r.trials, "violations": r.violations, "bound": f"{r.bound:.6g}",
             "measured": f"{r.measured:.6g}"} for r in reports]
    emit(args, rows, ("config-id", "oracle", "status", "trials", "violations", "bound",
                      "measured"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPTEST


def cmd_energy(args) -> int:
    hidden = [int(n) for n in args.layers.split(",")]
    cid = params_hash({k: getattr(args, k) for k in
                       ("N", "V", "layers", "views", "classes", "mlp", "convention", "int_width")})
    rows = []
    for comp, ops, pj in layer_table(args.N, args.V, args.int_width):
        rows.append({"config-id": cid, "table": "per-layer", "component": comp,
                     "ops": "" if ops is None else ops,
                     "pJ": f"{float(pj):.3f}" if ops is None else fmt_pj(pj)})
    cmp = profile_inference(hidden, args.V, args.views, args.classes,
                            [int(n) for n in args.mlp.split(",")], args.convention,
                            args.int_width)
    for prof in (cmp.arrowflow, cmp.mlp):
        for comp, n, r in prof.rows:
            rows.append({"config-id": cid, "table": prof.name, "component": comp,
                         "ops": n, "pJ": fmt_pj(n * r)})
        rows.append({"config-id": cid, "table": prof.name, "component": "total",
                     "ops": prof.ops, "pJ": fmt_pj(prof.energy)})
    rows.append({"config-id": cid, "table": "inference", "component": "ratio mlp/arrowflow",
                 "ops": "", "pJ": f"{float(cmp.ratio):.3f}"})
    mem = memory_bytes(args.N, args.V)
    for k, v in mem.items():
        rows.append({"config-id": cid, "table": "memory (informational)", "component": k,
                     "ops": "", "pJ": v if isinstance(v, int) else fmt_pj(v)})
    emit(args, rows, ("config-id", "table", "component", "ops", "pJ"))
    return EXIT_OK


def cmd_encode(args) -> int:
    ds = load_csv(args.data)
    if args.model:
        model, _ = load_model(args.model)
        pipes = [v.pipeline for v in model.views]
    else:
        pipes = [native_pipeline(ds.X.shape[1])]
    rows = []
    for k, p in enumerate(pipes):
        if p.input_dim != ds.X.shape[1]:
            raise DataError(f"model expects {p.input_dim} features, data has {ds.X.shape[1]}")
        for i, perm in enumerate(p.encode_batch(ds.X)):
            rows.append({"row": i, "view": k, "label": ds.classes[ds.y[i]],
                         "permutation": " ".join(map(str, perm.tolist()))})
    emit(args, rows, ("row", "view", "label", "permutation"))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arrowflow", description="Permutation-network classifier.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("--data", required=True, help="CSV, label in last column")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker processes (ARROWFLOW_THREADS overrides)")
        sp.add_argument("--format", choices=("csv", "md"), default="csv")
        return sp

    sp = common(sub.add_parser("train", help="train S simulations, save the best model"))
    sp.add_argument("--config")
    sp.add_argument("--out", help="model file to write")
    sp.add_argument("--model", dest="out", help=argparse.SUPPRESS)
    sp.add_argument("--storage", choices=("text", "binary"), default="binary")
    sp.add_argument("--log", help="training log CSV")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("eval", help="error report for a saved model"))
    sp.add_argument("--model", required=True)
    sp.add_argument("--perturb", action="append",
                    help="e.g. gaussian:0,0.5,1  mask:0.1  monotone:log1p  (repeatable)")
    sp.add_argument("--reps", type=int, default=5, help="perturbation seeds")
    sp.add_argument("--split", choices=("test", "all"), default="test")
    sp.add_argument("--out", dest="report")
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("sweep", help="grid of configs, resumable"))
    sp.add_argument("--config")
    sp.add_argument("--grid", required=True, help="JSON file or literal")
    sp.add_argument("--out", help="results CSV; completed config-ids are skipped")
    sp.set_defaults(func=cmd_sweep)

    sp = common(sub.add_parser("knn", help="kNN-on-permutations baseline and learning gain"))
    sp.add_argument("--config")
    sp.add_argument("--k", help="comma list of neighbour counts, e.g. 1,3,5")
    sp.add_argument("--out", dest="report")
    sp.set_defaults(func=cmd_knn)

    sp = common(sub.add_parser("proptest", help="run the theory oracle suite"), data=False)
    sp.add_argument("--quick", action="store_true")
    sp.add_argument("--out", dest="report")
    sp.set_defaults(func=cmd_proptest)

    sp = common(sub.add_parser("energy", help="operation counts and pJ estimates"), data=False)
    sp.add_argument("--N", type=int, default=128, help="per-layer table width")
    sp.add_argument("--V", type=int, default=64, help="input vocabulary")
    sp.add_argument("--layers", default="256", help="hidden widths for inference table")
    sp.add_argument("--views", type=int, default=7)
    sp.add_argument("--classes", type=int, default=10)
    sp.add_argument("--mlp", default="128", help="MLP hidden widths")
    sp.add_argument("--convention", choices=("published", "full"), default="published")
    sp.add_argument("--int-width", type=int, choices=(8, 32), default=32)
    sp.add_argument("--out", dest="report")
    sp.set_defaults(func=cmd_energy)

    sp = common(sub.add_parser("encode", help="print permutations for each row"))
    sp.add_argument("--model", help="saved model; native-rank encoding when omitted")
    sp.add_argument("--out", dest="report")
    sp.set_defaults(func=cmd_encode)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ModelFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
