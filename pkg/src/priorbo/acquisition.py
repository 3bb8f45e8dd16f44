"""Acquisition functions and their prior-weighted, scalarized optimization.

Expected improvement in closed form; a Monte Carlo noisy variant that
integrates over plausible latent values at the observed points; random
Dirichlet scalarization weights for the multi-objective loop; and a
multiplicative prior weight whose exponent decays hyperbolically with the
iteration count.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import ndtr

from .errors import NumericError, ValidationError
from .priors import PriorDensity
from .surrogate import FIT_JITTERS, GpModel, matern52

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def expected_improvement(mean, variance, incumbent):
    """Closed-form EI (maximization) with the zero-variance limit handled.

    ``mean`` and ``variance`` broadcast against each other and against
    ``incumbent``; scalars in, scalar out.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0.0):
        raise ValidationError("variance must be non-negative")
    incumbent = np.asarray(incumbent, dtype=float)
    sigma = np.sqrt(variance)
    improvement = mean - incumbent
    with np.errstate(divide="ignore", invalid="ignore"):
        z = improvement / sigma
        phi = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
        ei = improvement * ndtr(z) + sigma * phi
    ei = np.where(sigma > 0.0, ei, np.maximum(improvement, 0.0))
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def noisy_expected_improvement(
    model: GpModel, candidates, n_samples: int, rng: np.random.Generator
):
    """Monte Carlo noisy EI.

    Draws ``n_samples`` joint posterior samples of the latent function at the
    model's observed inputs, conditions a noiseless copy of the process on
    each draw, and averages the closed-form EI against that sample's best
    latent value. With a noiseless model this reduces to plain EI.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    arr, single = model._check_query(candidates)

    latent = model.sample_joint(model.X, rng, n_samples)  # (S, n) original units
    latent_std = (latent - model.y_mean) / model.y_scale

    # Noise-free kernel over the observed inputs, shared by every sample.
    K = matern52(model.X, model.X, model.hyper)
    n = K.shape[0]
    L = None
    for jitter in FIT_JITTERS[1:]:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n))
            break
        except np.linalg.LinAlgError:
            continue
    if L is None:
        raise NumericError("noise-free kernel matrix could not be factorized")

    alphas = cho_solve((L, True), latent_std.T, check_finite=False)  # (n, S)
    k_star = matern52(model.X, arr, model.hyper)  # (n, m)
    mean_std = k_star.T @ alphas  # (m, S)
    v = solve_triangular(L, k_star, lower=True, check_finite=False)
    var_std = np.maximum(model.hyper.signal_variance - np.sum(v * v, axis=0), 0.0)

    mean = model.y_mean + model.y_scale * mean_std
    var = model.y_scale**2 * var_std
    best = latent.max(axis=1)  # (S,)

    ei = expected_improvement(mean, var[:, None], best[None, :])
    out = np.asarray(ei).mean(axis=1)
    if single:
        return float(out[0])
    return out


def sample_scalarization(
    rng: np.random.Generator, n_objectives: int, alpha: float = 1.0
) -> np.ndarray:
    """Random convex weights from a symmetric Dirichlet distribution."""
    if n_objectives < 1:
        raise ValidationError("n_objectives must be >= 1")
    if alpha <= 0.0:
        raise ValidationError("Dirichlet concentration must be positive")
    return rng.dirichlet(np.full(n_objectives, float(alpha)))


def scalarized_acquisition(values, weights):
    """Weighted sum of per-objective acquisition values.

    ``values`` is (n_objectives,) for one candidate or (m, n_objectives) for
    a batch.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1:
        raise ValidationError("weights must be a 1-d vector")
    if values.shape[-1] != weights.shape[0]:
        raise ValidationError(
            f"values have {values.shape[-1]} objectives but {weights.shape[0]} weights"
        )
    out = values @ weights
    if out.ndim == 0:
        return float(out)
    return out


def prior_weighted(acquisition, log_density, iteration: int, beta: float):
    """Multiply an acquisition value by prior density to a decaying power.

    The exponent is ``beta / iteration`` where ``iteration`` counts
    model-based steps starting at 1, so the prior's pull fades hyperbolically
    as evidence accumulates.
    """
    if iteration < 1:
        raise ValidationError("iteration must be >= 1")
    if beta <= 0.0:
        raise ValidationError("beta must be positive")
    acq = np.asarray(acquisition, dtype=float)
    logd = np.asarray(log_density, dtype=float)
    with np.errstate(over="ignore"):
        out = acq * np.exp(logd * (beta / iteration))
    if out.ndim == 0:
        return float(out)
    return out


def generate_candidates(
    models,
    prior: PriorDensity,
    weights,
    rng: np.random.Generator,
    n_prior: int = 512,
    n_uniform: int = 512,
    n_local: int = 64,
    local_sigma: float = 0.02,
) -> np.ndarray:
    """Candidate pool for one acquisition maximization.

    Prior draws, uniform draws, and Gaussian perturbations of the observed
    point whose objectives scalarize best under the current weights, clipped
    to the cube. The scalarization for the anchor uses each objective in its
    surrogate's standardized units, matching how candidates are scored. Order
    is fixed (prior, uniform, local) so ties resolve deterministically.
    """
    if not models:
        raise ValidationError("need at least one model")
    if min(n_prior, n_uniform, n_local) < 0 or n_prior + n_uniform + n_local < 1:
        raise ValidationError("candidate counts must be non-negative and sum to >= 1")
    dim = models[0].X.shape[1]
    if prior.dim != dim:
        raise ValidationError("prior dimension does not match the models")
    parts = []
    if n_prior:
        parts.append(prior.sample(rng, n_prior))
    if n_uniform:
        parts.append(rng.random((n_uniform, dim)))
    if n_local:
        observed = np.column_stack([m.y_std for m in models])
        best = models[0].X[int(np.argmax(observed @ np.asarray(weights, dtype=float)))]
        local = best + local_sigma * rng.standard_normal((n_local, dim))
        parts.append(np.clip(local, 0.0, 1.0))
    return np.vstack(parts)


def score_candidates(
    models,
    prior: PriorDensity,
    weights,
    iteration: int,
    beta: float,
    candidates,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Prior-weighted scalarized noisy EI for every candidate.

    Each objective's NEI is expressed in its surrogate's standardized output
    units (divided by that model's output scale) before the weighted sum, so
    the convex weights act on commensurate quantities. Without this, an
    objective whose raw range is orders of magnitude wider than the others
    would dominate the scalarization at almost every weight draw.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    per_objective = np.column_stack(
        [
            noisy_expected_improvement(m, candidates, n_samples, rng) / m.y_scale
            for m in models
        ]
    )
    combined = scalarized_acquisition(per_objective, weights)
    log_density = prior.log_density(candidates)
    return prior_weighted(combined, log_density, iteration, beta)


def maximize_acquisition(
    models,
    prior: PriorDensity,
    weights,
    iteration: int,
    beta: float,
    n_samples: int,
    rng: np.random.Generator,
    n_prior: int = 512,
    n_uniform: int = 512,
    n_local: int = 64,
    local_sigma: float = 0.02,
) -> np.ndarray:
    """Pick the candidate with the highest prior-weighted scalarized score.

    Ties break toward the earliest candidate in the fixed pool order.
    """
    candidates = generate_candidates(
        models, prior, weights, rng, n_prior, n_uniform, n_local, local_sigma
    )
    scores = score_candidates(
        models, prior, weights, iteration, beta, candidates, n_samples, rng
    )
    return candidates[int(np.argmax(scores))].copy()
