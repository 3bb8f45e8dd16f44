"""Experiment engine: DoE phase, BO loop, strategy variants, run records.

A run evaluates ``n_iterations`` configurations on one task. The first
``doe_size`` come from the strategy's sampler (uniform, or the prior for
prior-seeded strategies); the rest come either from the same sampler
(sampling-only strategies) or from maximizing the prior-weighted scalarized
noisy-EI acquisition over per-objective GP surrogates. Cumulative dominated
hypervolume against the run's reference point is logged after every
evaluation.

Records serialize to JSON lines: a header object with the full spec echo,
one object per iteration, and a final front object. Rerunning an identical
spec reproduces the files byte for byte, so wall-clock timings stay out of
them (the campaign manifest carries timing instead).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import maximize_acquisition, sample_scalarization
from .errors import NumericError, ValidationError
from .param_space import ParameterSpace
from .pareto import ParetoFront, hypervolume_2d, pareto_front
from .priors import PriorDensity, UniformPrior, prior_from_dict
from .surrogate import GpModel
from .tasks import DEFAULT_REFERENCE_POINTS, TaskDefinition, get_task

STRATEGIES = (
    "random-search",
    "prior-sampling",
    "bo",
    "bo-prior",
    "bo-misleading",
    "bo-kde",
)
PRIOR_STRATEGIES = frozenset({"prior-sampling", "bo-prior", "bo-misleading", "bo-kde"})
SURROGATE_STRATEGIES = frozenset({"bo", "bo-prior", "bo-misleading", "bo-kde"})

RECORD_SCHEMA = "priorbo-run-v1"


@dataclass
class ExperimentSpec:
    """Everything one run needs; validated and with defaults resolved."""

    task: TaskDefinition
    strategy: str
    doe_size: int = 10
    n_iterations: int = 60
    prior: PriorDensity | None = None
    beta: float | None = None
    nei_samples: int = 16
    dirichlet_alpha: float = 1.0
    reference_point: np.ndarray | None = None
    seed: int = 0
    n_prior_candidates: int = 512
    n_uniform_candidates: int = 512
    n_local_candidates: int = 64
    local_sigma: float = 0.02
    gp_restarts: int = 8

    def __post_init__(self):
        if isinstance(self.task, str):
            self.task = get_task(self.task)
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"unknown strategy '{self.strategy}'; choose one of {', '.join(STRATEGIES)}"
            )
        if self.doe_size < 2:
            raise ValidationError("doe_size must be >= 2")
        if self.n_iterations < self.doe_size:
            raise ValidationError("n_iterations must be >= doe_size")
        if self.nei_samples < 1:
            raise ValidationError("nei_samples must be >= 1")
        if self.dirichlet_alpha <= 0.0:
            raise ValidationError("dirichlet_alpha must be positive")
        if self.strategy in PRIOR_STRATEGIES and self.prior is None:
            raise ValidationError(f"strategy '{self.strategy}' requires a prior")
        if self.prior is not None and self.prior.dim != self.task.space.dim:
            raise ValidationError(
                f"prior dimension {self.prior.dim} does not match task "
                f"dimension {self.task.space.dim}"
            )
        if self.beta is None:
            self.beta = float(self.doe_size)
        if self.beta <= 0.0:
            raise ValidationError("beta must be positive")
        if self.reference_point is None:
            self.reference_point = np.array(DEFAULT_REFERENCE_POINTS[self.task.name])
        else:
            self.reference_point = np.asarray(self.reference_point, dtype=float)
        if self.reference_point.shape != (2,):
            raise ValidationError("reference point must have two components")

    @property
    def label(self) -> str:
        return f"{self.task.name}/{self.strategy}"

    def sampling_prior(self) -> PriorDensity:
        """The density DoE and sampling strategies draw from.

        Uniform for random-search and plain bo regardless of any prior field,
        so those strategies are invariant to it.
        """
        if self.strategy in PRIOR_STRATEGIES:
            return self.prior
        return UniformPrior(self.task.space.dim)

    def to_dict(self) -> dict:
        return {
            "task": self.task.name,
            "space": self.task.space.to_dict(),
            "strategy": self.strategy,
            "doe_size": self.doe_size,
            "n_iterations": self.n_iterations,
            "prior": None if self.prior is None else self.prior.to_dict(),
            "beta": self.beta,
            "nei_samples": self.nei_samples,
            "dirichlet_alpha": self.dirichlet_alpha,
            "reference_point": self.reference_point.tolist(),
            "seed": self.seed,
            "n_prior_candidates": self.n_prior_candidates,
            "n_uniform_candidates": self.n_uniform_candidates,
            "n_local_candidates": self.n_local_candidates,
            "local_sigma": self.local_sigma,
            "gp_restarts": self.gp_restarts,
        }


@dataclass(frozen=True)
class IterationEntry:
    index: int
    phase: str  # "doe" or "bo"
    configuration: np.ndarray
    objectives: np.ndarray
    cumulative_hv: float
    wall_time: float  # in-memory only; never serialized


@dataclass
class RunRecord:
    spec: dict
    entries: list[IterationEntry] = field(default_factory=list)
    front: ParetoFront | None = None
    failed: bool = False
    error: str | None = None


def run_doe(spec: ExperimentSpec, rng: np.random.Generator):
    """Initial design: sample doe_size unit points and evaluate them.

    Returns (U, Y) with U in the unit cube and Y the observed objectives.
    """
    sampler = spec.sampling_prior()
    U = sampler.sample(rng, spec.doe_size)
    Y = np.empty((spec.doe_size, 2))
    for i in range(spec.doe_size):
        values = spec.task.space.from_unit(U[i])
        Y[i] = spec.task.evaluate(values, rng)
    return U, Y


def bo_step(spec: ExperimentSpec, U, Y, iteration: int, rng: np.random.Generator):
    """One model-based query: fit, scalarize, maximize, evaluate.

    ``iteration`` counts model-based steps from 1 and drives the prior
    weight's decay. Returns the new (u, y) pair.
    """
    models = [
        GpModel.fit(U, Y[:, k], rng, n_restarts=spec.gp_restarts)
        for k in range(Y.shape[1])
    ]
    weights = sample_scalarization(rng, Y.shape[1], spec.dirichlet_alpha)
    prior = spec.sampling_prior()
    u = maximize_acquisition(
        models,
        prior,
        weights,
        iteration,
        spec.beta,
        spec.nei_samples,
        rng,
        n_prior=spec.n_prior_candidates,
        n_uniform=spec.n_uniform_candidates,
        n_local=spec.n_local_candidates,
        local_sigma=spec.local_sigma,
    )
    y = spec.task.evaluate(spec.task.space.from_unit(u), rng)
    return u, y


def run_experiment(spec: ExperimentSpec) -> RunRecord:
    """Execute one full run; see the module docstring for the protocol."""
    rng = np.random.default_rng(spec.seed)
    space = spec.task.space
    record = RunRecord(spec=spec.to_dict())

    configs: list[np.ndarray] = []
    observations: list[np.ndarray] = []
    last_mark = time.perf_counter()

    def log_entry(u, y, phase):
        nonlocal last_mark
        configs.append(space.from_unit(u))
        observations.append(np.asarray(y, dtype=float))
        front = pareto_front(
            np.array(configs), np.array(observations), spec.reference_point
        )
        hv = hypervolume_2d(front)
        now = time.perf_counter()
        record.entries.append(
            IterationEntry(
                index=len(observations),
                phase=phase,
                configuration=configs[-1],
                objectives=observations[-1],
                cumulative_hv=hv,
                wall_time=now - last_mark,
            )
        )
        last_mark = now
        return front

    U, Y = run_doe(spec, rng)
    front = None
    for i in range(spec.doe_size):
        front = log_entry(U[i], Y[i], "doe")

    n_model_steps = spec.n_iterations - spec.doe_size
    if spec.strategy in SURROGATE_STRATEGIES:
        U_obs = list(U)
        Y_obs = list(Y)
        for n in range(1, n_model_steps + 1):
            try:
                u, y = bo_step(spec, np.array(U_obs), np.array(Y_obs), n, rng)
            except NumericError:
                try:
                    u, y = bo_step(spec, np.array(U_obs), np.array(Y_obs), n, rng)
                except NumericError as exc:
                    record.failed = True
                    record.error = f"iteration {len(Y_obs) + 1}: {exc}"
                    break
            U_obs.append(u)
            Y_obs.append(y)
            front = log_entry(u, y, "bo")
    else:
        sampler = spec.sampling_prior()
        for _ in range(n_model_steps):
            u = sampler.sample(rng, 1)[0]
            y = spec.task.evaluate(space.from_unit(u), rng)
            front = log_entry(u, y, "bo")

    record.front = front if front is not None else pareto_front(
        np.empty((0, space.dim)), np.empty((0, 2)), spec.reference_point
    )
    return record


# ---------------------------------------------------------------------------
# record serialization


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_record(record: RunRecord, path: str):
    """Serialize a run to JSON lines: header, one entry per iteration, front."""
    lines = [
        json.dumps(
            {
                "kind": "header",
                "schema": RECORD_SCHEMA,
                "failed": record.failed,
                "error": record.error,
                "spec": record.spec,
            }
        )
    ]
    for e in record.entries:
        lines.append(
            json.dumps(
                {
                    "kind": "entry",
                    "index": e.index,
                    "phase": e.phase,
                    "configuration": e.configuration.tolist(),
                    "objectives": e.objectives.tolist(),
                    "cumulative_hv": e.cumulative_hv,
                }
            )
        )
    front = record.front
    lines.append(
        json.dumps(
            {
                "kind": "front",
                "configurations": front.configurations.tolist(),
                "objectives": front.objectives.tolist(),
                "reference_point": front.reference_point.tolist(),
            }
        )
    )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_record(path: str) -> RunRecord:
    """Parse a JSON-lines run record written by :func:`write_record`."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ValidationError(f"{path}: missing record header line")
    header = lines[0]
    if header.get("schema") != RECORD_SCHEMA:
        raise ValidationError(
            f"{path}: unsupported record schema {header.get('schema')!r}"
        )
    record = RunRecord(
        spec=header["spec"], failed=header["failed"], error=header["error"]
    )
    front_line = None
    for line in lines[1:]:
        kind = line.get("kind")
        if kind == "entry":
            record.entries.append(
                IterationEntry(
                    index=int(line["index"]),
                    phase=line["phase"],
                    configuration=np.array(line["configuration"], dtype=float),
                    objectives=np.array(line["objectives"], dtype=float),
                    cumulative_hv=float(line["cumulative_hv"]),
                    wall_time=0.0,
                )
            )
        elif kind == "front":
            front_line = line
        else:
            raise ValidationError(f"{path}: unknown record line kind {kind!r}")
    if front_line is None:
        raise ValidationError(f"{path}: missing front line")
    record.front = ParetoFront(
        np.array(front_line["configurations"], dtype=float),
        np.array(front_line["objectives"], dtype=float),
        np.array(front_line["reference_point"], dtype=float),
    )
    return record


def write_front_csv(front: ParetoFront, parameter_names, objective_names, path: str):
    """One row per front entry: parameter values then objective values."""
    header = list(parameter_names) + list(objective_names)
    rows = [",".join(header)]
    for cfg, obj in zip(front.configurations, front.objectives):
        rows.append(",".join(repr(float(v)) for v in np.concatenate([cfg, obj])))
    _atomic_write(path, "\n".join(rows) + "\n")


def record_spec_space(record: RunRecord) -> ParameterSpace:
    """Rebuild the parameter space echoed in a record's spec."""
    return ParameterSpace.from_dict(record.spec["space"])


def rebuild_prior(record: RunRecord) -> PriorDensity | None:
    data = record.spec.get("prior")
    return None if data is None else prior_from_dict(data)
