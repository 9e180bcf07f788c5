"""Gamma-frailty over-dispersed Poisson regression.

A latent unit-mean gamma multiplier with variance 1/xi inflates the
Poisson variance to lambda * (1 + (1 + lambda)/xi).  Estimation is two
stage: the rate parameters come from the plain Poisson fit (the first
estimating equation), then xi solves the second moment equation, which
is linear in 1/xi and so has a closed form.  A one-variable Newton
iteration is kept as a cross-check.  The joint sandwich covariance of
(theta, xi) feeds the prediction interval, which widens the plain
normal interval by the frailty variance and the parameter-uncertainty
term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError
from .glm import GlmFit, region_regression
from .regions import PredictionRegion, _interval_region
from .special import normal_quantile

__all__ = [
    "OverdispersedFit",
    "overdispersed_moments",
    "estimate_xi",
    "estimate_xi_nr",
    "sandwich_covariance",
    "fit_overdispersed",
    "region_overdispersed",
    "gen_frailty_counts",
]


@dataclass(frozen=True)
class OverdispersedFit:
    """Stage-2 result. ``xi`` is math.inf when the data are not over-dispersed.

    ``sandwich`` is the joint covariance estimate for (theta, xi); its
    leading theta-block drives the prediction interval.  ``sigma_hat``
    and ``omega_hat`` are the two factors it was assembled from.  All
    are None for the infinite-xi sentinel.
    """

    theta: np.ndarray
    xi: float
    sandwich: np.ndarray | None
    sigma_hat: np.ndarray | None
    omega_hat: np.ndarray | None
    base_fit: GlmFit


def overdispersed_moments(lam: float, xi: float) -> tuple[float, float]:
    """Mean and variance of a count with rate lam and frailty precision xi."""
    if lam <= 0:
        raise DomainError(f"overdispersed_moments requires lam > 0, got {lam}")
    if xi <= 0:
        raise DomainError(f"overdispersed_moments requires xi > 0, got {xi}")
    if math.isinf(xi):
        return lam, lam
    return lam, lam * (1.0 + (1.0 + lam) / xi)


def estimate_xi(base_fit: GlmFit) -> float:
    """Solve the second moment equation for xi in closed form.

    The equation sum((y - rate)^2 - rate * (1 + (1 + rate)/xi)) = 0 is
    linear in 1/xi, giving xi = sum(rate * (1 + rate)) over
    sum((y - rate)^2 - rate).  A nonpositive denominator means the data
    show no excess variance; math.inf is returned and callers fall back
    to the plain Poisson machinery.
    """
    rates = base_fit.fitted_rates
    y = base_fit.y.astype(np.float64)
    denom = float(np.sum((y - rates) ** 2 - rates))
    if denom <= 0.0:
        return math.inf
    return float(np.sum(rates * (1.0 + rates))) / denom


def estimate_xi_nr(base_fit: GlmFit, start: float | None = None,
                   tol: float = 1e-12, max_iter: int = 200) -> float:
    """One-variable Newton iteration for xi; cross-checks the closed form.

    The moment equation is hyperbolic in xi, so a plain Newton step from
    above the root lands at or below zero; steps are halved until the
    equation residual shrinks.
    """
    rates = base_fit.fitted_rates
    y = base_fit.y.astype(np.float64)
    n = rates.size
    excess = float(np.sum((y - rates) ** 2 - rates))
    if excess <= 0.0:
        return math.inf

    scale = float(np.sum(rates * (1.0 + rates)))

    def g(x: float) -> float:
        return (excess - scale / x) / n

    if start is None:
        start = 2.0 * scale / excess
    xi = float(start)
    gx = g(xi)
    for _ in range(max_iter):
        dg = scale / (n * xi * xi)
        step = gx / dg
        frac = 1.0
        for _ in range(60):
            cand = xi - frac * step
            if cand > 0:
                gc = g(cand)
                if abs(gc) <= abs(gx):
                    break
            frac *= 0.5
        else:
            return xi
        if abs(cand - xi) <= tol * max(1.0, abs(cand)):
            return cand
        xi, gx = cand, gc
    return xi


def _assemble_factors(theta, xi, X, y):
    """Sigma (outer-product) and Omega (derivative) estimates at (theta, xi)."""
    n, k = X.shape
    rates = np.exp(X @ theta)
    resid = y - rates
    disp = 1.0 + (1.0 + rates) / xi

    u_theta = X * resid[:, None]                       # n x k
    u_xi = resid ** 2 - rates * disp                   # n
    u_all = np.hstack([u_theta, u_xi[:, None]])        # n x (k+1)
    sigma = (u_all.T @ u_all) / n

    omega = np.zeros((k + 1, k + 1))
    omega[:k, :k] = -(X * rates[:, None]).T @ X / n
    omega[k, :k] = -(rates * (2.0 * resid + disp + rates / xi)) @ X / n
    omega[k, k] = float(np.sum(rates * (1.0 + rates))) / (n * xi * xi)
    return sigma, omega


def _invert_omega(omega: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(omega)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("derivative matrix of the estimating equations "
                               "is singular") from exc


def sandwich_covariance(base_fit: GlmFit, xi: float, X=None, y=None) -> np.ndarray:
    """Joint covariance estimate of (theta, xi) from the estimating equations.

    Assembles the outer-product estimate Sigma of the estimating
    function and the derivative matrix Omega (whose theta-block is the
    negative mean information, whose (theta, xi) block is zero, and
    whose xi-row follows from differentiating the moment equation),
    then returns Omega^-1 Sigma Omega^-T.
    """
    if not math.isfinite(xi) or xi <= 0:
        raise DomainError(f"sandwich_covariance requires finite xi > 0, got {xi}")
    X = base_fit.X if X is None else np.asarray(X, dtype=np.float64)
    y = base_fit.y if y is None else np.asarray(y)
    sigma, omega = _assemble_factors(base_fit.theta, xi, X, y.astype(np.float64))
    omega_inv = _invert_omega(omega)
    return omega_inv @ sigma @ omega_inv.T


def fit_overdispersed(base_fit: GlmFit) -> OverdispersedFit:
    """Estimate xi on top of a Poisson fit and assemble the sandwich."""
    xi = estimate_xi(base_fit)
    if math.isinf(xi):
        return OverdispersedFit(theta=base_fit.theta, xi=xi, sandwich=None,
                                sigma_hat=None, omega_hat=None, base_fit=base_fit)
    sigma, omega = _assemble_factors(base_fit.theta, xi, base_fit.X,
                                     base_fit.y.astype(np.float64))
    omega_inv = _invert_omega(omega)
    sandwich = omega_inv @ sigma @ omega_inv.T
    return OverdispersedFit(theta=base_fit.theta, xi=xi, sandwich=sandwich,
                            sigma_hat=sigma, omega_hat=omega, base_fit=base_fit)


def region_overdispersed(fit_: OverdispersedFit, x0, alpha: float) -> PredictionRegion:
    """Prediction interval for a new count under the frailty model.

    Width combines the inflated count variance with the parameter
    uncertainty carried by the theta-block of the sandwich.  The
    infinite-xi sentinel delegates to the plain normal region.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    if math.isinf(fit_.xi):
        return region_regression(fit_.base_fit, x0, alpha, "normal")
    x0 = np.asarray(x0, dtype=np.float64)
    n = fit_.base_fit.X.shape[0]
    k = x0.size
    lam0 = math.exp(float(x0 @ fit_.theta))
    xi11 = fit_.sandwich[:k, :k]
    var = (lam0 * (1.0 + lam0) / fit_.xi + lam0
           + lam0 * lam0 * float(x0 @ xi11 @ x0) / n)
    z = normal_quantile(1.0 - alpha / 2.0)
    half = z * math.sqrt(var)
    return _interval_region(max(0.0, lam0 - half), lam0 + half, alpha)


def gen_frailty_counts(rates, xi: float, rng: np.random.Generator) -> np.ndarray:
    """Draw counts as floor(z * y*) with y* Poisson and z gamma(xi, 1/xi)."""
    rates = np.asarray(rates, dtype=np.float64)
    if np.any(rates <= 0):
        raise DomainError("gen_frailty_counts requires positive rates")
    if xi <= 0:
        raise DomainError(f"gen_frailty_counts requires xi > 0, got {xi}")
    z = rng.gamma(shape=xi, scale=1.0 / xi, size=rates.shape)
    ystar = rng.poisson(rates)
    return np.floor(z * ystar).astype(np.int64)
