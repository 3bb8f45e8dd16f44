"""Gaussian-process regression on the unit cube with a Matern-5/2 ARD kernel.

One model is fitted per objective. Outputs are standardized per fit,
hyperparameters are chosen by maximizing the exact log marginal likelihood
with multi-start L-BFGS-B in log space (analytic gradients), and the
posterior supports joint sampling of latent function values, which the
Monte Carlo noisy-EI acquisition relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import NumericError, ValidationError

SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)

# Escalation ladder applied when conditioning a model; sampling uses the
# shorter ladder capped at 1e-8.
FIT_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
SAMPLE_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)

LENGTHSCALE_BOUNDS = (0.05, 20.0)
SIGNAL_BOUNDS = (0.05, 20.0)
NOISE_BOUNDS = (1e-8, 1.0)


@dataclass(frozen=True)
class GpHyperparameters:
    """Kernel hyperparameters: signal variance, ARD lengthscales, noise variance."""

    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if not np.isfinite(self.signal_variance) or self.signal_variance <= 0.0:
            raise ValidationError("signal variance must be positive and finite")
        if ls.ndim != 1 or not np.all(np.isfinite(ls)) or np.any(ls <= 0.0):
            raise ValidationError("lengthscales must be positive and finite")
        if not np.isfinite(self.noise_variance) or self.noise_variance < 0.0:
            raise ValidationError("noise variance must be non-negative and finite")


def matern52(X1, X2, hyper: GpHyperparameters) -> np.ndarray:
    """Matern-5/2 covariance between two point sets (noise not included)."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X1.shape[1] != X2.shape[1] or X1.shape[1] != hyper.lengthscales.shape[0]:
        raise ValidationError("input dimensions and lengthscales disagree")
    diff = (X1[:, None, :] - X2[None, :, :]) / hyper.lengthscales
    s = np.sum(diff * diff, axis=2)
    r = np.sqrt(s)
    return hyper.signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * s) * np.exp(-SQRT5 * r)


def _validate_training_data(X, y, min_points=1):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValidationError(
            f"{X.shape[0]} inputs but {y.shape[0]} outputs"
        )
    if X.shape[0] < min_points:
        raise ValidationError(f"need at least {min_points} observations")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("training data must be finite")
    return X, y


def log_marginal_likelihood(hyper: GpHyperparameters, X, y) -> float:
    """Exact Gaussian log marginal likelihood of ``y`` under the kernel.

    A single Cholesky factorization of K + noise*I is attempted; if the
    matrix is not positive definite (for example duplicated inputs with zero
    noise) a NumericError is raised rather than silently regularizing.
    """
    X, y = _validate_training_data(X, y, min_points=1)
    if X.shape[1] != hyper.lengthscales.shape[0]:
        raise ValidationError("input dimension and lengthscales disagree")
    K = matern52(X, X, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_variance
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"kernel matrix is singular (noise variance {hyper.noise_variance})"
        ) from exc
    alpha = cho_solve((L, True), y, check_finite=False)
    n = y.shape[0]
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI
    )


def _nll_and_grad(theta, sq_diffs, y):
    """Negative LML and gradient w.r.t. log hyperparameters.

    ``theta`` is [log sv, log lengthscales..., log nv]; ``sq_diffs`` holds the
    per-dimension squared input differences with shape (n, n, d).
    """
    n, _, d = sq_diffs.shape
    sv = np.exp(theta[0])
    ls = np.exp(theta[1 : 1 + d])
    nv = np.exp(theta[1 + d])

    inv_ls_sq = 1.0 / (ls * ls)
    s = sq_diffs @ inv_ls_sq
    r = np.sqrt(s)
    decay = np.exp(-SQRT5 * r)
    Kf = sv * (1.0 + SQRT5 * r + (5.0 / 3.0) * s) * decay
    K = Kf + nv * np.eye(n)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)

    alpha = cho_solve((L, True), y, check_finite=False)
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI

    Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Kinv

    grad = np.empty_like(theta)
    grad[0] = 0.5 * np.sum(W * Kf)
    scale = sv * (5.0 / 3.0) * (1.0 + SQRT5 * r) * decay
    for j in range(d):
        dK = scale * (sq_diffs[:, :, j] * inv_ls_sq[j])
        grad[1 + j] = 0.5 * np.sum(W * dK)
    grad[1 + d] = 0.5 * nv * np.trace(W)
    return -lml, -grad


class GpModel:
    """A conditioned Gaussian process.

    Construct directly with fixed hyperparameters, or via :meth:`fit` to
    maximize the marginal likelihood first. Conditioning standardizes the
    outputs; predictions are mapped back to original units.
    """

    def __init__(self, hyper: GpHyperparameters, X, y):
        X, y = _validate_training_data(X, y, min_points=1)
        if X.shape[1] != hyper.lengthscales.shape[0]:
            raise ValidationError("input dimension and lengthscales disagree")
        self.hyper = hyper
        self.X = X
        self.y_raw = y
        self.y_mean = float(np.mean(y))
        scale = float(np.std(y))
        self.y_scale = scale if scale > 1e-12 else 1.0
        self.y_std = (y - self.y_mean) / self.y_scale

        K = matern52(X, X, hyper)
        self.jitter = None
        for jitter in FIT_JITTERS:
            try:
                self.L = np.linalg.cholesky(
                    K + (hyper.noise_variance + jitter) * np.eye(X.shape[0])
                )
                self.jitter = jitter
                break
            except np.linalg.LinAlgError:
                continue
        if self.jitter is None:
            raise NumericError(
                "kernel matrix could not be factorized even with jitter "
                f"{FIT_JITTERS[-1]}"
            )
        self.alpha = cho_solve((self.L, True), self.y_std, check_finite=False)

    @classmethod
    def fit(
        cls,
        X,
        y,
        rng: np.random.Generator,
        n_restarts: int = 8,
        max_opt_iter: int = 60,
    ) -> "GpModel":
        """Maximize the marginal likelihood of standardized outputs.

        Runs ``n_restarts`` L-BFGS-B starts in log space (the first from a
        fixed default, the rest drawn log-uniformly inside the bounds) and
        conditions the model on the best hyperparameters found.
        """
        X, y = _validate_training_data(X, y, min_points=2)
        if n_restarts < 1:
            raise ValidationError("n_restarts must be >= 1")
        d = X.shape[1]

        y_mean = float(np.mean(y))
        scale = float(np.std(y))
        y_scale = scale if scale > 1e-12 else 1.0
        ys = (y - y_mean) / y_scale

        diff = X[:, None, :] - X[None, :, :]
        sq_diffs = diff * diff

        log_bounds = (
            [np.log(SIGNAL_BOUNDS)]
            + [np.log(LENGTHSCALE_BOUNDS)] * d
            + [np.log(NOISE_BOUNDS)]
        )
        lo = np.array([b[0] for b in log_bounds])
        hi = np.array([b[1] for b in log_bounds])

        starts = [np.concatenate(([0.0], np.full(d, np.log(0.5)), [np.log(1e-2)]))]
        for _ in range(n_restarts - 1):
            starts.append(lo + rng.random(d + 2) * (hi - lo))

        best_val = np.inf
        best_theta = None
        for theta0 in starts:
            res = minimize(
                _nll_and_grad,
                np.clip(theta0, lo, hi),
                args=(sq_diffs, ys),
                jac=True,
                method="L-BFGS-B",
                bounds=log_bounds,
                options={"maxiter": max_opt_iter},
            )
            if np.isfinite(res.fun) and res.fun < best_val and res.fun < 1e24:
                best_val = res.fun
                best_theta = res.x
        if best_theta is None:
            raise NumericError("every restart failed to factorize the kernel matrix")

        hyper = GpHyperparameters(
            signal_variance=float(np.exp(best_theta[0])),
            lengthscales=np.exp(best_theta[1 : 1 + d]),
            noise_variance=float(np.exp(best_theta[1 + d])),
        )
        return cls(hyper, X, y)

    def _check_query(self, U):
        arr = np.asarray(U, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.X.shape[1]:
            raise ValidationError(
                f"query dimension {arr.shape[1]} does not match model "
                f"dimension {self.X.shape[1]}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("query points must be finite")
        return arr, single

    def predict(self, U):
        """Posterior mean and variance of the latent function (noise-free).

        Returns scalars for a single point, arrays for a batch.
        """
        arr, single = self._check_query(U)
        k_star = matern52(self.X, arr, self.hyper)
        mean_std = k_star.T @ self.alpha
        v = solve_triangular(self.L, k_star, lower=True, check_finite=False)
        var_std = np.maximum(self.hyper.signal_variance - np.sum(v * v, axis=0), 0.0)
        mean = self.y_mean + self.y_scale * mean_std
        var = self.y_scale**2 * var_std
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def sample_joint(self, U, rng: np.random.Generator, n_samples: int) -> np.ndarray:
        """Joint posterior draws of the latent function at ``U``.

        Returns an array of shape (n_samples, len(U)) in original output
        units. A numerically zero posterior covariance collapses to the mean;
        otherwise the covariance is factorized with jitter escalation up to
        1e-8 before giving up.
        """
        if n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        arr, _ = self._check_query(U)
        m = arr.shape[0]
        k_star = matern52(self.X, arr, self.hyper)
        mean_std = k_star.T @ self.alpha
        v = solve_triangular(self.L, k_star, lower=True, check_finite=False)
        cov = matern52(arr, arr, self.hyper) - v.T @ v
        cov = 0.5 * (cov + cov.T)

        if np.max(np.abs(cov)) < 1e-15:
            draws_std = np.tile(mean_std, (n_samples, 1))
        else:
            Lc = None
            for jitter in SAMPLE_JITTERS:
                try:
                    Lc = np.linalg.cholesky(cov + jitter * np.eye(m))
                    break
                except np.linalg.LinAlgError:
                    continue
            if Lc is None:
                raise NumericError(
                    "posterior covariance could not be factorized with jitter "
                    f"up to {SAMPLE_JITTERS[-1]}"
                )
            z = rng.standard_normal((n_samples, m))
            draws_std = mean_std + z @ Lc.T
        return self.y_mean + self.y_scale * draws_std
