"""Command-line pipeline driver.

Subcommands: simulate, estimate, calibrate, select, predict, serve.  Every
command that writes files also writes a ``manifest.json`` next to them with
input/output hashes, the seed, package versions and wall time.  Stochastic
commands require an explicit seed and are byte-identical on rerun.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .data import (
    load_choices,
    load_item_catalog,
    load_mpl_catalog,
    load_survey_responses,
    per_subject_counts,
    save_choices,
)
from .estimation import HierarchicalConfig, estimate_all, load_estimates, save_estimates
from .instruments import builtin_catalog
from .predictor import ModuleAnswer, load_module_spec, predict_gamma
from .selection import CVConfig, build_regression_dataset, load_default_exclusions, run_selection
from .simulation import (
    calibrate_shrinkage,
    default_population,
    default_shrinkage_grid,
    load_population,
    save_population,
    simulate_agents,
)
from .model import UtilityConfig


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, args: dict, inputs, outputs, seed, started,
                    filename: str = "manifest.json"):
    manifest = {
        "command": command,
        "arguments": {k: str(v) for k, v in args.items()},
        "seed": seed,
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "wall_time_s": round(time.time() - started, 3),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / filename, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _load_catalog_arg(spec: str):
    if spec.startswith("builtin:"):
        return builtin_catalog(spec.split(":", 1)[1])
    path = Path(spec)
    if not path.is_file():
        raise SystemExit(f"error: MPL catalog not found: {path}")
    return load_mpl_catalog(path)


def _load_population_arg(spec):
    if spec is None or spec == "default":
        return default_population()
    path = Path(spec)
    if not path.is_file():
        raise SystemExit(f"error: population file not found: {path}")
    return load_population(path)


def _parse_grid(spec: str):
    """Grid syntax: 'lo:hi:logN' or 'lo:hi:linN' or comma-separated values."""
    if ":" in spec:
        lo, hi, mode = spec.split(":")
        n = int(mode[3:])
        if mode.startswith("log"):
            return [float(s) for s in np.geomspace(float(lo), float(hi), n)]
        if mode.startswith("lin"):
            return [float(s) for s in np.linspace(float(lo), float(hi), n)]
        raise SystemExit(f"error: bad grid spec {spec!r}")
    return [float(s) for s in spec.split(",")]


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    started = time.time()
    out = _out_dir(args)
    mpls = _load_catalog_arg(args.mpls)
    pop = _load_population_arg(args.population)
    config = UtilityConfig(epsilon=args.epsilon)
    agents = simulate_agents(pop, args.mu, args.agents, mpls, config, args.seed)

    choices_path = out / "choices.csv"
    save_choices(choices_path, [rec for agent in agents for rec in agent.choices])
    truth_path = out / "truth.csv"
    with open(truth_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id", "alpha", "delta", "gamma", "lambda", "mu"])
        for agent in agents:
            p = agent.true_params
            writer.writerow(
                [agent.subject_id, repr(p.alpha), repr(p.delta), repr(p.gamma), repr(p.lambda_), repr(p.mu)]
            )
    pop_path = out / "population.json"
    save_population(pop_path, pop)

    inputs = [] if args.mpls.startswith("builtin:") else [args.mpls]
    _write_manifest(
        out, "simulate", vars(args), inputs, [choices_path, truth_path, pop_path], args.seed, started
    )
    print(f"simulated {len(agents)} agents x {len(agents[0].choices)} choices -> {choices_path}")
    return 0


def cmd_estimate(args) -> int:
    started = time.time()
    out = _out_dir(args)
    mpls = _load_catalog_arg(args.mpls)
    pop = _load_population_arg(args.population)
    choices = load_choices(args.choices, mpls)
    if not choices:
        raise SystemExit(f"error: no choice records in {args.choices}")
    counts = sorted(per_subject_counts(choices).values())
    print(f"loaded {len(choices)} choices from {len(counts)} subjects "
          f"({counts[0]}-{counts[-1]} per subject)")
    config = UtilityConfig(epsilon=args.epsilon)
    hcfg = HierarchicalConfig(population=pop, shrinkage=args.shrinkage, n_starts=args.starts)
    estimates, summary = estimate_all(choices, mpls, config, hcfg, n_jobs=args.jobs)

    est_path = out / "estimates.csv"
    save_estimates(est_path, estimates)
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _write_manifest(
        out,
        "estimate",
        vars(args),
        [args.choices] + ([] if args.mpls.startswith("builtin:") else [args.mpls]),
        [est_path, summary_path],
        None,
        started,
    )
    print(
        f"estimated {summary['n_subjects']} subjects "
        f"({summary['counts']['consistent']} consistent) -> {est_path}"
    )
    return 0


def cmd_calibrate(args) -> int:
    started = time.time()
    out = _out_dir(args)
    mpls = _load_catalog_arg(args.mpls)
    pop = _load_population_arg(args.population)
    grid = _parse_grid(args.grid) if args.grid else default_shrinkage_grid()
    config = UtilityConfig(epsilon=args.epsilon)
    result = calibrate_shrinkage(
        pop,
        mpls,
        config,
        grid,
        n_agents=args.agents,
        seed=args.seed,
        mu=args.mu,
        n_jobs=args.jobs,
        n_starts=args.starts,
    )
    table = result.as_dicts()
    cal_path = out / "calibration.json"
    with open(cal_path, "w") as fh:
        json.dump({"best_s": result.best_s, "table": table}, fh, indent=2)
        fh.write("\n")
    _write_manifest(
        out,
        "calibrate",
        vars(args),
        [] if args.mpls.startswith("builtin:") else [args.mpls],
        [cal_path],
        args.seed,
        started,
    )
    for row in table:
        mse = "nan" if row["mse"] is None else f"{row['mse']:.6g}"
        flag = " (disqualified)" if row["disqualified"] else ""
        print(f"s={row['s']:.6g}  mse={mse}  consistent={row['n_consistent']}{flag}")
    print(f"best s = {result.best_s:.6g} -> {cal_path}")
    return 0


def cmd_select(args) -> int:
    started = time.time()
    out = _out_dir(args)
    catalog = load_item_catalog(args.item_catalog)
    estimates = load_estimates(args.estimates)
    responses = load_survey_responses(args.responses, catalog)

    answered = sorted({r.item_id for r in responses})
    pool_ids = answered
    if args.apply_default_exclusions:
        exclusions = load_default_exclusions()
        pool_ids = [i for i in answered if i not in exclusions]
    dataset = build_regression_dataset(estimates, responses, pool_ids)
    cvconfig = CVConfig(
        k_values=tuple(int(k) for k in args.k.split(",")), replicates=args.replicates, seed=args.seed
    )
    report = run_selection(
        dataset,
        sizes=range(1, args.max_size + 1),
        top=args.top,
        cvconfig=cvconfig,
        n_jobs=args.jobs,
    )
    report_path = out / "selection.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(
        out, "select", vars(args), [args.estimates, args.responses], [report_path], args.seed, started
    )
    rec = report["selection"]["recommended"]
    print(f"recommended module: {rec['predictor_ids']} (size {len(rec['predictor_ids'])})")
    print(f"report -> {report_path}")
    return 0


def cmd_predict(args) -> int:
    started = time.time()
    spec = load_module_spec(args.spec)
    if args.batch:
        rows = []
        with open(args.batch, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["subject_id", "item_id", "value"]:
                raise SystemExit(f"error: {args.batch}: expected header subject_id,item_id,value")
            for row in reader:
                if row:
                    rows.append(row)
        by_subject: dict[str, dict[str, float]] = {}
        for sid, item_id, value in rows:
            by_subject.setdefault(sid, {})[item_id] = float(value)
        out_fh = open(args.out, "w", newline="") if args.out else sys.stdout
        writer = csv.writer(out_fh, lineterminator="\n")
        writer.writerow(["subject_id", "gamma_hat", "classification"])
        module_ids = set(spec.item_ids())
        for sid in sorted(by_subject):
            answers = {k: v for k, v in by_subject[sid].items() if k in module_ids}
            prediction = predict_gamma(spec, answers)
            writer.writerow([sid, repr(prediction.gamma_hat), prediction.classification])
        if args.out:
            out_fh.close()
            out_path = Path(args.out)
            _write_manifest(
                out_path.parent, "predict", vars(args), [args.batch], [out_path], None, started,
                filename=out_path.name + ".manifest.json",
            )
            print(f"predictions -> {args.out}")
        return 0

    answers = []
    if args.q1 is not None:
        answers.append(ModuleAnswer("Q1", args.q1))
    if args.q2 is not None:
        answers.append(ModuleAnswer("Q2", args.q2))
    if args.answer:
        for part in args.answer:
            item_id, value = part.split("=", 1)
            answers.append(ModuleAnswer(item_id, float(value)))
    if not answers:
        raise SystemExit("error: provide --q1/--q2, --answer, or --batch")
    prediction = predict_gamma(spec, answers)
    if args.verbose:
        print(prediction.decomposition())
        print(f"classification: {prediction.classification}")
    else:
        print(f"{prediction.gamma_hat:.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, port = args.host, args.port
    override = os.environ.get("DEBTMOD_BIND")
    if override:
        host, _, port_text = override.partition(":")
        port = int(port_text) if port_text else port
    app = create_app(
        module_spec_path=args.spec, responses_path=args.responses_out, ui_dir=args.ui
    )
    uvicorn.run(app, host=host, port=port, log_level=args.log_level)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debtmod", description=__doc__)
    parser.add_argument("--version", action="version", version=f"debtmod {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate synthetic agents and their choices")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mpls", default="builtin:synthetic", help="catalog path or builtin:NAME")
    p.add_argument("--population", default=None, help="population JSON path, or 'default'")
    p.add_argument("--mu", type=float, default=0.1, help="choice noise scale")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="hierarchical ML estimation per subject")
    p.add_argument("--choices", required=True)
    p.add_argument("--mpls", default="builtin:synthetic")
    p.add_argument("--population", default=None)
    p.add_argument("--shrinkage", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("calibrate", help="grid-search the shrinkage factor on simulated agents")
    p.add_argument("--grid", default=None, help="'lo:hi:logN', 'lo:hi:linN', or comma list")
    p.add_argument("--agents", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mpls", default="builtin:synthetic")
    p.add_argument("--population", default=None)
    p.add_argument("--mu", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("select", help="best-subset search over survey items")
    p.add_argument("--estimates", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--item-catalog", default=None)
    p.add_argument("--apply-default-exclusions", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--max-size", type=int, default=6)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--k", default="5,10")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("predict", help="predict gamma from module answers")
    p.add_argument("--spec", default=None, help="module spec JSON (default: shipped)")
    p.add_argument("--q1", type=float, default=None)
    p.add_argument("--q2", type=float, default=None)
    p.add_argument("--answer", action="append", help="ITEM=VALUE (repeatable)")
    p.add_argument("--batch", default=None, help="responses CSV for batch prediction")
    p.add_argument("--out", default=None, help="batch output CSV (default stdout)")
    p.add_argument("--verbose", action="store_true", help="show the weighted-sum decomposition")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--spec", default=None)
    p.add_argument("--responses-out", default=None)
    p.add_argument("--ui", default=None, help="directory with the built frontend, mounted at /ui")
    p.add_argument("--log-level", default="warning")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
