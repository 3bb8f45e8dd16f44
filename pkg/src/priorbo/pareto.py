"""Pareto fronts under strict domination, and hypervolume indicators.

All objectives are maximized. ``a`` dominates ``b`` when it is at least as
good everywhere and strictly better somewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MAX_EXACT_POINTS = 20


def dominates(a, b) -> bool:
    """Strict Pareto domination of objective vector ``a`` over ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(
            f"objective vectors must share a 1-d shape, got {a.shape} and {b.shape}"
        )
    return bool(np.all(a >= b) and np.any(a > b))


def _non_dominated_mask(objectives: np.ndarray) -> np.ndarray:
    n = objectives.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        ge = np.all(objectives >= objectives[i], axis=1)
        gt = np.any(objectives > objectives[i], axis=1)
        if np.any(ge & gt):
            keep[i] = False
    return keep


@dataclass(frozen=True)
class ParetoFront:
    """Mutually non-dominated entries plus the reference point used for HV.

    Entries are stored in canonical order: lexicographically by objectives
    with the first objective descending.
    """

    configurations: np.ndarray
    objectives: np.ndarray
    reference_point: np.ndarray

    def __post_init__(self):
        configs = np.atleast_2d(np.asarray(self.configurations, dtype=float))
        objs = np.atleast_2d(np.asarray(self.objectives, dtype=float))
        ref = np.asarray(self.reference_point, dtype=float)
        if objs.size == 0:
            objs = objs.reshape(0, ref.shape[0] if ref.ndim == 1 else 0)
        if configs.size == 0:
            configs = configs.reshape(0, configs.shape[-1] if configs.ndim else 0)
        if ref.ndim != 1:
            raise ValidationError("reference point must be a 1-d vector")
        if objs.shape[0] != configs.shape[0]:
            raise ValidationError(
                f"{configs.shape[0]} configurations but {objs.shape[0]} objective rows"
            )
        if objs.shape[0] and objs.shape[1] != ref.shape[0]:
            raise ValidationError(
                "objective vectors and reference point disagree on dimension"
            )
        if objs.size and not np.all(np.isfinite(objs)):
            raise ValidationError("front objectives must be finite")
        if not np.all(np.isfinite(ref)):
            raise ValidationError("reference point must be finite")
        if objs.shape[0] > 1:
            if not np.all(_non_dominated_mask(objs)):
                raise ValidationError("front entries must be mutually non-dominated")
            order = np.lexsort(tuple(-objs[:, k] for k in reversed(range(objs.shape[1]))))
            configs = configs[order]
            objs = objs[order]
        object.__setattr__(self, "configurations", configs)
        object.__setattr__(self, "objectives", objs)
        object.__setattr__(self, "reference_point", ref)

    @property
    def size(self) -> int:
        return self.objectives.shape[0]

    def is_empty(self) -> bool:
        return self.size == 0


def pareto_front(configurations, objectives, reference_point) -> ParetoFront:
    """Extract the non-dominated subset of a set of observations.

    Exact duplicates in objective space are collapsed, keeping the first
    occurrence. An empty observation set yields an empty front.
    """
    ref = np.asarray(reference_point, dtype=float)
    configs = np.asarray(configurations, dtype=float)
    objs = np.asarray(objectives, dtype=float)
    if objs.size == 0:
        return ParetoFront(
            np.empty((0, configs.shape[-1] if configs.ndim == 2 else 0)),
            np.empty((0, ref.shape[0])),
            ref,
        )
    configs = np.atleast_2d(configs)
    objs = np.atleast_2d(objs)
    if configs.shape[0] != objs.shape[0]:
        raise ValidationError(
            f"{configs.shape[0]} configurations but {objs.shape[0]} objective rows"
        )
    if not np.all(np.isfinite(objs)):
        raise ValidationError("observed objectives must be finite")

    seen = set()
    unique = []
    for i in range(objs.shape[0]):
        key = objs[i].tobytes()
        if key not in seen:
            seen.add(key)
            unique.append(i)
    idx = np.array(unique, dtype=int)
    keep = _non_dominated_mask(objs[idx])
    idx = idx[keep]
    return ParetoFront(configs[idx], objs[idx], ref)


def hypervolume_2d(front: ParetoFront) -> float:
    """Exact dominated hypervolume for two objectives via a sorted sweep.

    Entries that do not strictly dominate the reference point contribute
    nothing.
    """
    if front.reference_point.shape[0] != 2:
        raise ValidationError("hypervolume_2d needs exactly two objectives")
    if front.is_empty():
        return 0.0
    ref = front.reference_point
    objs = front.objectives
    mask = np.all(objs > ref, axis=1)
    if not np.any(mask):
        return 0.0
    pts = objs[mask]
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    hv = 0.0
    prev = ref[1]
    for y1, y2 in pts:
        if y2 > prev:
            hv += (y1 - ref[0]) * (y2 - prev)
            prev = y2
    return float(hv)


def hypervolume_monte_carlo(
    front: ParetoFront, n_samples: int, rng: np.random.Generator
) -> float:
    """Monte Carlo hypervolume estimate for any objective count.

    Samples uniformly in the box [reference point, componentwise front
    maximum] and scales the dominated fraction by the box volume.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    if front.is_empty():
        return 0.0
    ref = front.reference_point
    top = front.objectives.max(axis=0)
    extent = top - ref
    if np.any(extent <= 0.0):
        return 0.0
    samples = ref + rng.random((n_samples, ref.shape[0])) * extent
    covered = np.zeros(n_samples, dtype=bool)
    for point in front.objectives:
        covered |= np.all(samples <= point, axis=1)
    return float(np.prod(extent) * covered.mean())


def hypervolume_inclusion_exclusion(front: ParetoFront) -> float:
    """Exact hypervolume by inclusion-exclusion over dominated boxes.

    Exponential in the number of points; limited to MAX_EXACT_POINTS. Meant
    as an oracle for validating the sweep and Monte Carlo estimators.
    """
    if front.is_empty():
        return 0.0
    ref = front.reference_point
    pts = front.objectives[np.all(front.objectives > ref, axis=1)]
    m = pts.shape[0]
    if m > MAX_EXACT_POINTS:
        raise ValidationError(
            f"inclusion-exclusion supports at most {MAX_EXACT_POINTS} points, got {m}"
        )
    total = 0.0
    for mask in range(1, 1 << m):
        members = [i for i in range(m) if mask >> i & 1]
        corner = pts[members].min(axis=0)
        vol = float(np.prod(np.maximum(corner - ref, 0.0)))
        total += vol if len(members) % 2 == 1 else -vol
    return total
