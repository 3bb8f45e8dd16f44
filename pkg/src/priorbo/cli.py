"""Command-line front end.

Subcommands: ``run`` (execute a campaign config), ``summarize`` (aggregate
run records into curve and summary CSVs), ``transfer-prior`` (build a KDE
prior from a run record's front), ``oracle`` (grid-evaluate a task and write
its reference front). Exit codes: 0 success, 1 runtime failure, 2 usage or
validation problem. Set PRIORBO_LOG to a level name for diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import ValidationError
from .optimizer import (
    ExperimentSpec,
    PRIOR_STRATEGIES,
    RunRecord,
    read_record,
    record_spec_space,
    run_experiment,
    write_front_csv,
    write_record,
)
from .param_space import ParameterSpace
from .priors import (
    UniformPrior,
    build_kde_prior,
    build_operator_prior,
    prior_from_dict,
)
from .tasks import (
    MISLEADING_PRIOR_MEANS,
    MISLEADING_STDDEV_FRACTION,
    OPERATOR_PRIOR_MEANS,
    OPERATOR_STDDEV_FRACTION,
    get_task,
    oracle_front,
)

log = logging.getLogger("priorbo")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    """Campaign config problem; message is already user-facing."""


def _atomic_write_text(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# campaign config


def _build_prior(prior_cfg, task, config_dir: str):
    """Turn a template's prior entry into a PriorDensity."""
    if prior_cfg is None:
        return None
    if not isinstance(prior_cfg, dict) or "kind" not in prior_cfg:
        raise ConfigError("prior must be an object with a 'kind' field")
    kind = prior_cfg["kind"]
    if kind == "uniform":
        return UniformPrior(task.space.dim)
    if kind == "operator-default":
        return build_operator_prior(
            task.space, OPERATOR_PRIOR_MEANS[task.name], OPERATOR_STDDEV_FRACTION
        )
    if kind == "misleading-default":
        return build_operator_prior(
            task.space, MISLEADING_PRIOR_MEANS[task.name], MISLEADING_STDDEV_FRACTION
        )
    if kind == "operator":
        try:
            means = prior_cfg["means"]
        except KeyError:
            raise ConfigError("operator prior needs 'means' (native units)") from None
        fraction = float(prior_cfg.get("stddev_fraction", OPERATOR_STDDEV_FRACTION))
        return build_operator_prior(task.space, means, fraction)
    if kind == "file":
        try:
            rel = prior_cfg["path"]
        except KeyError:
            raise ConfigError("file prior needs 'path'") from None
        path = rel if os.path.isabs(rel) else os.path.join(config_dir, rel)
        try:
            with open(path, encoding="utf-8") as fh:
                return prior_from_dict(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"prior file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    # Inline serialized priors pass straight through.
    return prior_from_dict(prior_cfg)


def _build_spec(template: dict, seed: int, config_dir: str) -> ExperimentSpec:
    known = {
        "task",
        "strategy",
        "prior",
        "doe_size",
        "n_iterations",
        "beta",
        "nei_samples",
        "dirichlet_alpha",
        "reference_point",
        "n_prior_candidates",
        "n_uniform_candidates",
        "n_local_candidates",
        "local_sigma",
        "gp_restarts",
    }
    unknown = set(template) - known
    if unknown:
        raise ConfigError(f"unknown template fields: {sorted(unknown)}")
    try:
        task = get_task(template["task"])
    except KeyError:
        raise ConfigError("template needs a 'task' field") from None
    strategy = template.get("strategy")
    if strategy is None:
        raise ConfigError("template needs a 'strategy' field")
    prior = _build_prior(template.get("prior"), task, config_dir)
    if strategy in PRIOR_STRATEGIES and prior is None:
        raise ConfigError(f"strategy '{strategy}' requires a prior")
    kwargs = {}
    for name in (
        "doe_size",
        "n_iterations",
        "beta",
        "nei_samples",
        "dirichlet_alpha",
        "reference_point",
        "n_prior_candidates",
        "n_uniform_candidates",
        "n_local_candidates",
        "local_sigma",
        "gp_restarts",
    ):
        if name in template:
            kwargs[name] = template[name]
    return ExperimentSpec(task=task, strategy=strategy, prior=prior, seed=seed, **kwargs)


def load_campaign(path: str):
    """Parse and validate a campaign config; returns (config dict, templates)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: top level must be an object")
    templates = config.get("templates")
    if not isinstance(templates, list) or not templates:
        raise ConfigError(f"{path}: 'templates' must be a non-empty list")
    repetitions = config.get("repetitions", 1)
    if not isinstance(repetitions, int) or repetitions < 1:
        raise ConfigError(f"{path}: 'repetitions' must be an integer >= 1")
    master_seed = config.get("master_seed", 0)
    if not isinstance(master_seed, int):
        raise ConfigError(f"{path}: 'master_seed' must be an integer")

    config_dir = os.path.dirname(os.path.abspath(path))
    labels = set()
    for idx, template in enumerate(templates):
        try:
            spec = _build_spec(template, seed=master_seed, config_dir=config_dir)
        except (ConfigError, ValidationError) as exc:
            name = f"{template.get('task', '?')}/{template.get('strategy', '?')}"
            raise ConfigError(f"{path}: template {idx} ({name}): {exc}") from None
        if spec.label in labels:
            raise ConfigError(
                f"{path}: template {idx}: duplicate (task, strategy) label {spec.label}"
            )
        labels.add(spec.label)
    return config, templates


def _record_basename(task: str, strategy: str, rep: int) -> str:
    return f"{task}__{strategy}__rep{rep:03d}"


def _run_job(template: dict, seed: int, rep: int, out_dir: str, config_dir: str):
    spec = _build_spec(template, seed=seed, config_dir=config_dir)
    started = time.perf_counter()
    record = run_experiment(spec)
    duration = time.perf_counter() - started
    base = _record_basename(spec.task.name, spec.strategy, rep)
    record_path = os.path.join(out_dir, f"{base}.jsonl")
    write_record(record, record_path)
    write_front_csv(
        record.front,
        spec.task.space.names,
        spec.task.objective_names,
        os.path.join(out_dir, f"{base}.front.csv"),
    )
    return {
        "label": spec.label,
        "repetition": rep,
        "seed": seed,
        "record": f"{base}.jsonl",
        "front": f"{base}.front.csv",
        "status": "failed" if record.failed else "completed",
        "error": record.error,
        "entries": len(record.entries),
        "duration_s": round(duration, 3),
    }


def cmd_run(config_path: str, out_dir: str, jobs: int, seed_override: int | None) -> int:
    config, templates = load_campaign(config_path)
    master_seed = seed_override if seed_override is not None else config.get("master_seed", 0)
    repetitions = config.get("repetitions", 1)
    config_dir = os.path.dirname(os.path.abspath(config_path))
    os.makedirs(out_dir, exist_ok=True)

    job_args = [
        (template, master_seed + rep, rep, out_dir, config_dir)
        for template in templates
        for rep in range(repetitions)
    ]
    log.info("campaign: %d runs (%d templates x %d reps), jobs=%d",
             len(job_args), len(templates), repetitions, jobs)

    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_job, *args) for args in job_args]
            results = [f.result() for f in futures]
    else:
        for args in job_args:
            results.append(_run_job(*args))
            log.info("finished %s rep %d (%s)", results[-1]["label"],
                     results[-1]["repetition"], results[-1]["status"])

    manifest = {
        "config": config,
        "master_seed": master_seed,
        "repetitions": repetitions,
        "runs": results,
        "total_duration_s": round(sum(r["duration_s"] for r in results), 3),
    }
    _atomic_write_text(
        os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2) + "\n"
    )
    failed = [r for r in results if r["status"] != "completed"]
    for r in failed:
        print(f"run failed: {r['label']} rep {r['repetition']}: {r['error']}",
              file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


# ---------------------------------------------------------------------------
# summarize


def _collect_records(pattern: str) -> list[tuple[str, RunRecord]]:
    if os.path.isdir(pattern):
        paths = sorted(globmod.glob(os.path.join(pattern, "*.jsonl")))
    else:
        paths = sorted(globmod.glob(pattern))
    if not paths:
        raise ValidationError(f"no record files match {pattern!r}")
    return [(p, read_record(p)) for p in paths]


def cmd_summarize(pattern: str, out_dir: str, threshold: float | None) -> int:
    records = _collect_records(pattern)
    usable = []
    for path, rec in records:
        if rec.failed:
            log.warning("skipping failed run %s", path)
            continue
        usable.append(rec)
    if not usable:
        raise ValidationError("all matched records are failed runs")

    tasks = {rec.spec["task"] for rec in usable}
    if len(tasks) != 1:
        raise ValidationError(
            f"records mix tasks {sorted(tasks)}; summarize one task at a time"
        )
    task = tasks.pop()

    by_strategy: dict[str, list[RunRecord]] = {}
    for rec in usable:
        by_strategy.setdefault(rec.spec["strategy"], []).append(rec)

    os.makedirs(out_dir, exist_ok=True)
    curve_rows = []
    summary_rows = []
    for strategy in sorted(by_strategy):
        group = by_strategy[strategy]
        lengths = {len(rec.entries) for rec in group}
        if len(lengths) != 1:
            raise ValidationError(
                f"strategy {strategy}: records disagree on iteration count {sorted(lengths)}"
            )
        n_iter = lengths.pop()
        curves = np.array(
            [[e.cumulative_hv for e in rec.entries] for rec in group]
        )  # (reps, n_iter)
        mean = curves.mean(axis=0)
        if curves.shape[0] > 1:
            sem = curves.std(axis=0, ddof=1) / np.sqrt(curves.shape[0])
        else:
            sem = np.zeros(n_iter)
        for i in range(n_iter):
            curve_rows.append([i + 1, strategy, repr(float(mean[i])), repr(float(sem[i]))])
        for rec in group:
            final_hv = rec.entries[-1].cumulative_hv
            reached = ""
            if threshold is not None:
                hit = next(
                    (e.index for e in rec.entries if e.cumulative_hv >= threshold), None
                )
                reached = "" if hit is None else str(hit)
            summary_rows.append(
                [task, strategy, rec.spec["seed"], repr(float(final_hv)), reached]
            )

    curve_path = os.path.join(out_dir, "curve.csv")
    with open(f"{curve_path}.tmp", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "strategy", "mean_hv", "sem_hv"])
        writer.writerows(curve_rows)
    os.replace(f"{curve_path}.tmp", curve_path)

    summary_path = os.path.join(out_dir, "summary.csv")
    with open(f"{summary_path}.tmp", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "strategy", "seed", "final_hv", "iterations_to_threshold"])
        writer.writerows(summary_rows)
    os.replace(f"{summary_path}.tmp", summary_path)

    print(f"wrote {curve_path} and {summary_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# transfer-prior and oracle


def cmd_transfer_prior(record_path: str, out_path: str) -> int:
    record = read_record(record_path)
    if record.front is None or record.front.is_empty():
        print(f"error: {record_path} has an empty front", file=sys.stderr)
        return EXIT_RUNTIME
    space = record_spec_space(record)
    prior = build_kde_prior(record.front.configurations, space)
    _atomic_write_text(out_path, json.dumps(prior.to_dict(), indent=2) + "\n")
    print(f"wrote {out_path} ({prior.n_components} components)")
    return EXIT_OK


def cmd_oracle(task_name: str, grid: int, reps: int, seed: int, out_path: str) -> int:
    task = get_task(task_name)
    front = oracle_front(task, grid, reps, seed)
    write_front_csv(front, task.space.names, task.objective_names, out_path)
    print(
        json.dumps(
            {
                "task": task_name,
                "grid": grid,
                "noise_reps": reps,
                "front_size": front.size,
                "reference_point": front.reference_point.tolist(),
            }
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorbo",
        description="Multi-objective Bayesian optimization with priors over the optimum.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a campaign config")
    p_run.add_argument("--config", required=True, help="campaign config (JSON)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master_seed")

    p_sum = sub.add_parser("summarize", help="aggregate run records into CSVs")
    p_sum.add_argument("records", help="record file glob or directory")
    p_sum.add_argument("--out", default=".", help="output directory (default .)")
    p_sum.add_argument("--threshold", type=float, default=None,
                       help="HV threshold for the iterations-to-threshold column")

    p_tp = sub.add_parser("transfer-prior", help="build a KDE prior from a run record")
    p_tp.add_argument("record", help="JSON-lines run record")
    p_tp.add_argument("--out", required=True, help="prior output file (JSON)")

    p_or = sub.add_parser("oracle", help="grid-evaluate a task and write its front")
    p_or.add_argument("task", help="task name")
    p_or.add_argument("--grid", type=int, default=7, help="grid points per dimension")
    p_or.add_argument("--reps", type=int, default=20,
                      help="noise episodes per grid point (stochastic tasks)")
    p_or.add_argument("--seed", type=int, default=0, help="oracle master seed")
    p_or.add_argument("--out", required=True, help="front CSV output path")
    return parser


def main(argv=None) -> int:
    level_name = os.environ.get("PRIORBO_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.jobs, args.seed)
        if args.command == "summarize":
            return cmd_summarize(args.records, args.out, args.threshold)
        if args.command == "transfer-prior":
            return cmd_transfer_prior(args.record, args.out)
        if args.command == "oracle":
            return cmd_oracle(args.task, args.grid, args.reps, args.seed, args.out)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
