"""Prior densities over the optimum's location on the unit cube.

Three families: a flat prior, independent truncated Gaussians (one per
dimension, renormalized to the cube), and an equal-weight Gaussian kernel
density mixture built from previously found Pareto-optimal configurations.
Log densities are floored at a small epsilon so multiplicative acquisition
weighting can never zero out a region of the cube.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .errors import DegeneratePriorError, ValidationError
from .param_space import ParameterSpace

DENSITY_FLOOR = 1e-12
KDE_STDDEV_FLOOR = 0.05
MAX_REJECTION_RETRIES = 10_000

_LOG_2PI = np.log(2.0 * np.pi)


class PriorDensity:
    """Base class: a probability density on [0, 1]^dim with sampling support."""

    kind = "base"

    def __init__(self, dim: int, floor: float = DENSITY_FLOOR):
        if dim < 1:
            raise ValidationError("prior dimension must be >= 1")
        if not 0.0 < floor < 1.0:
            raise ValidationError("density floor must lie in (0, 1)")
        self.dim = int(dim)
        self.floor = float(floor)

    def _check_points(self, u) -> tuple[np.ndarray, bool]:
        arr = np.asarray(u, dtype=float)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise ValidationError(
                f"expected points of dimension {self.dim}, got shape {np.shape(u)}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("prior evaluated at non-finite point")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValidationError("prior evaluated outside the unit cube")
        return arr, single

    def log_density(self, u):
        """Floored log density; scalar for a single point, array for a batch."""
        arr, single = self._check_points(u)
        raw = self._raw_log_density(arr)
        out = np.maximum(raw, np.log(self.floor))
        return float(out[0]) if single else out

    def _raw_log_density(self, arr: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class UniformPrior(PriorDensity):
    """Flat density over the cube."""

    kind = "uniform"

    def _raw_log_density(self, arr):
        return np.zeros(arr.shape[0])

    def sample(self, rng, n):
        if n < 1:
            raise ValidationError("sample count must be >= 1")
        return rng.random((n, self.dim))

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "floor": self.floor}


class TruncatedGaussianPrior(PriorDensity):
    """Independent per-dimension Gaussians truncated and renormalized to [0, 1].

    Sampling uses the per-dimension inverse CDF, so no rejection is needed.
    """

    kind = "independent-truncated-gaussian"

    def __init__(self, means, stddevs, floor: float = DENSITY_FLOOR):
        means = np.asarray(means, dtype=float)
        stddevs = np.asarray(stddevs, dtype=float)
        if means.ndim != 1 or means.shape != stddevs.shape:
            raise ValidationError("means and stddevs must be 1-d arrays of equal length")
        super().__init__(means.shape[0], floor)
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise ValidationError("truncated-Gaussian means must lie in [0, 1]")
        if np.any(stddevs <= 0.0):
            raise ValidationError("truncated-Gaussian stddevs must be positive")
        self.means = means
        self.stddevs = stddevs
        # CDF of the untruncated Gaussian at the cube faces, per dimension.
        self._cdf_lo = ndtr((0.0 - means) / stddevs)
        self._cdf_hi = ndtr((1.0 - means) / stddevs)
        mass = self._cdf_hi - self._cdf_lo
        if np.any(mass <= 0.0):
            raise ValidationError("truncated Gaussian has no mass inside the cube")
        self._log_mass = np.log(mass)

    def _raw_log_density(self, arr):
        z = (arr - self.means) / self.stddevs
        per_dim = (
            -0.5 * z**2
            - np.log(self.stddevs)
            - 0.5 * _LOG_2PI
            - self._log_mass
        )
        return per_dim.sum(axis=1)

    def sample(self, rng, n):
        if n < 1:
            raise ValidationError("sample count must be >= 1")
        q = self._cdf_lo + rng.random((n, self.dim)) * (self._cdf_hi - self._cdf_lo)
        draws = self.means + self.stddevs * ndtri(q)
        return np.clip(draws, 0.0, 1.0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
            "floor": self.floor,
        }


class KdeMixturePrior(PriorDensity):
    """Equal-weight Gaussian mixture centered on earlier good configurations.

    Component Gaussians are axis-aligned with shared per-dimension bandwidths
    and are not truncated; only the floored density is exposed. Sampling picks
    a component uniformly, draws from its Gaussian and rejects draws that land
    outside the cube.
    """

    kind = "kde-mixture"

    def __init__(self, centers, bandwidths, floor: float = DENSITY_FLOOR):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        bandwidths = np.asarray(bandwidths, dtype=float)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValidationError("KDE needs at least one center")
        super().__init__(centers.shape[1], floor)
        if bandwidths.shape != (self.dim,):
            raise ValidationError(
                f"bandwidths must have shape ({self.dim},), got {bandwidths.shape}"
            )
        if np.any(bandwidths <= 0.0):
            raise ValidationError("KDE bandwidths must be positive")
        if np.any(centers < 0.0) or np.any(centers > 1.0):
            raise ValidationError("KDE centers must lie inside the unit cube")
        self.centers = centers
        self.bandwidths = bandwidths
        self._log_norm = np.sum(np.log(bandwidths)) + 0.5 * self.dim * _LOG_2PI

    @property
    def n_components(self) -> int:
        return self.centers.shape[0]

    def _raw_log_density(self, arr):
        z = (arr[:, None, :] - self.centers[None, :, :]) / self.bandwidths
        comp = -0.5 * np.sum(z**2, axis=2) - self._log_norm
        return logsumexp(comp, axis=1) - np.log(self.n_components)

    def sample(self, rng, n):
        if n < 1:
            raise ValidationError("sample count must be >= 1")
        out = np.empty((n, self.dim))
        pending = np.arange(n)
        attempts = 0
        while pending.size:
            if attempts >= MAX_REJECTION_RETRIES:
                raise DegeneratePriorError(
                    f"KDE sampling exceeded {MAX_REJECTION_RETRIES} rejection "
                    f"retries; bandwidths {self.bandwidths.tolist()} put almost "
                    "no mass inside the cube"
                )
            comp = rng.integers(0, self.n_components, size=pending.size)
            draws = self.centers[comp] + self.bandwidths * rng.standard_normal(
                (pending.size, self.dim)
            )
            inside = np.all((draws >= 0.0) & (draws <= 1.0), axis=1)
            out[pending[inside]] = draws[inside]
            pending = pending[~inside]
            attempts += 1
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "centers": self.centers.tolist(),
            "bandwidths": self.bandwidths.tolist(),
            "floor": self.floor,
        }


def build_operator_prior(
    space: ParameterSpace, means, stddev_fraction: float
) -> TruncatedGaussianPrior:
    """Truncated-Gaussian prior centered on a native-unit guess.

    ``stddev_fraction`` is the per-dimension standard deviation as a fraction
    of each parameter's range (so expressed directly on the unit cube).
    """
    if not 0.0 < stddev_fraction <= 1.0:
        raise ValidationError(
            f"stddev_fraction must lie in (0, 1], got {stddev_fraction}"
        )
    unit_means = space.to_unit(means)
    stddevs = np.full(space.dim, float(stddev_fraction))
    return TruncatedGaussianPrior(unit_means, stddevs)


def build_kde_prior(front_configs, space: ParameterSpace) -> KdeMixturePrior:
    """KDE prior from the configurations of an earlier Pareto front.

    Bandwidths follow a Scott-style rule on the unit cube,
    ``max(sample std, 0.05) * m**(-1/(dim+4))`` per dimension, so a single
    transferred point still yields a usable density.
    """
    configs = np.atleast_2d(np.asarray(front_configs, dtype=float))
    if configs.shape[0] < 1:
        raise ValidationError("KDE prior needs at least one configuration")
    centers = np.stack([space.to_unit(c) for c in configs])
    m = centers.shape[0]
    if m >= 2:
        spread = np.std(centers, axis=0, ddof=1)
    else:
        spread = np.zeros(space.dim)
    bandwidths = np.maximum(spread, KDE_STDDEV_FLOOR) * m ** (-1.0 / (space.dim + 4))
    return KdeMixturePrior(centers, bandwidths)


def prior_from_dict(data: dict) -> PriorDensity:
    """Rebuild a prior from its ``to_dict`` form."""
    try:
        kind = data["kind"]
    except (KeyError, TypeError) as exc:
        raise ValidationError("prior dictionary is missing 'kind'") from exc
    floor = float(data.get("floor", DENSITY_FLOOR))
    if kind == UniformPrior.kind:
        return UniformPrior(int(data["dim"]), floor)
    if kind == TruncatedGaussianPrior.kind:
        return TruncatedGaussianPrior(data["means"], data["stddevs"], floor)
    if kind == KdeMixturePrior.kind:
        return KdeMixturePrior(data["centers"], data["bandwidths"], floor)
    raise ValidationError(f"unknown prior kind '{kind}'")
