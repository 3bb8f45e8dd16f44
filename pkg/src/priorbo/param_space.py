"""Named, bounded, continuous parameter spaces with unit-cube scaling.

Configurations are plain float vectors in native units. Surrogate modeling,
priors and acquisition optimization all operate on the unit cube; task
evaluation happens in native units. ``to_unit`` / ``from_unit`` map between
the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Parameter:
    """One continuous parameter with inclusive bounds."""

    name: str
    lower: float
    upper: float
    unit: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValidationError("parameter name must be non-empty")
        if not np.isfinite(self.lower) or not np.isfinite(self.upper):
            raise ValidationError(f"parameter '{self.name}': bounds must be finite")
        if not self.lower < self.upper:
            raise ValidationError(
                f"parameter '{self.name}': lower bound {self.lower} is not below "
                f"upper bound {self.upper}"
            )


class ParameterSpace:
    """Ordered collection of bounded continuous parameters."""

    def __init__(self, parameters):
        parameters = tuple(parameters)
        if not parameters:
            raise ValidationError("parameter space needs at least one parameter")
        names = [p.name for p in parameters]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate parameter names in {names}")
        self.parameters = parameters
        self.names = tuple(names)
        self.lower = np.array([p.lower for p in parameters], dtype=float)
        self.upper = np.array([p.upper for p in parameters], dtype=float)

    @property
    def dim(self) -> int:
        return len(self.parameters)

    def __repr__(self):
        bounds = ", ".join(
            f"{p.name}=[{p.lower}, {p.upper}]" for p in self.parameters
        )
        return f"ParameterSpace({bounds})"

    def validate(self, values) -> np.ndarray:
        """Check a native-unit configuration and return it as a float array.

        Raises ValidationError naming the offending parameter on a bound
        violation.
        """
        v = np.asarray(values, dtype=float)
        if v.shape != (self.dim,):
            raise ValidationError(
                f"expected {self.dim} parameter values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("configuration contains non-finite values")
        for value, p in zip(v, self.parameters):
            if value < p.lower or value > p.upper:
                raise ValidationError(
                    f"parameter '{p.name}' = {value} outside [{p.lower}, {p.upper}]"
                )
        return v

    def validate_unit(self, u) -> np.ndarray:
        """Check a unit-cube point (or batch of points, shape (m, dim))."""
        arr = np.asarray(u, dtype=float)
        if arr.shape[-1] != self.dim or arr.ndim not in (1, 2):
            raise ValidationError(
                f"expected unit points of dimension {self.dim}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("unit point contains non-finite values")
        low = arr.min(axis=0) if arr.ndim == 2 else arr
        high = arr.max(axis=0) if arr.ndim == 2 else arr
        for k, p in enumerate(self.parameters):
            if low[k] < 0.0 or high[k] > 1.0:
                raise ValidationError(
                    f"unit coordinate for '{p.name}' outside [0, 1]"
                )
        return arr

    def to_unit(self, values) -> np.ndarray:
        """Map a native configuration onto the unit cube."""
        v = self.validate(values)
        return (v - self.lower) / (self.upper - self.lower)

    def from_unit(self, u) -> np.ndarray:
        """Map a unit-cube point back to native units.

        The result is clamped to the box: rounding can otherwise carry a
        boundary coordinate one ulp past its bound.
        """
        arr = self.validate_unit(u)
        values = self.lower + arr * (self.upper - self.lower)
        return np.clip(values, self.lower, self.upper)

    def to_dict(self) -> list[dict]:
        return [
            {"name": p.name, "lower": p.lower, "upper": p.upper, "unit": p.unit}
            for p in self.parameters
        ]

    @classmethod
    def from_dict(cls, entries) -> "ParameterSpace":
        try:
            params = [
                Parameter(
                    name=e["name"],
                    lower=float(e["lower"]),
                    upper=float(e["upper"]),
                    unit=e.get("unit", ""),
                )
                for e in entries
            ]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed parameter space entry: {exc}") from exc
        return cls(params)
