"""Prediction regions for a future Poisson count, rate known or estimated.

Two families live here.  The smallest-cardinality region orders the
support by probability mass and keeps the most likely values; exact
nominal coverage is achieved by including the tied boundary values with
a calibrated probability (an external uniform draw decides).  The
normal and square-root regions are closed-form intervals intersected
with the nonnegative integers.

Estimated-rate variants plug a pmf estimate into the same machinery:
plug-in maximum likelihood, a second-order Taylor correction, the
unbiased (binomial) estimator, and a gamma-prior predictive.  All pmfs
are represented as dense log-mass arrays over a truncated support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MomentFailure
from .special import (
    TAIL_MASS,
    normal_quantile,
    poisson_cdf,
    poisson_log_pmf,
    poisson_log_pmf_vector,
    poisson_upper_support,
)

__all__ = [
    "PredictionRegion",
    "EstimatedPmf",
    "pmf_poisson",
    "pmf_plugin_ml",
    "pmf_taylor",
    "pmf_umvue",
    "pmf_gamma_predictive",
    "region_smallest",
    "region_nonrandomized",
    "region_normal_known",
    "region_sqrt_known",
    "region_adjusted_normal",
    "region_adjusted_sqrt",
    "exact_region_properties",
    "hyper_from_mean_sd",
    "marginal_log_likelihood",
    "mom_gamma",
]

# Relative tolerance for declaring two log-masses tied.  Exact ties are
# real (integer rates give p(k-1) = p(k)) but arrive with rounding.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PredictionRegion:
    """Integer-support prediction region.

    ``core_lo..core_hi`` is the always-included interval (``core_hi ==
    core_lo - 1`` encodes an empty core).  ``boundary`` holds the values
    included only with probability ``boundary_prob``.  ``realized_lo ..
    realized_hi`` is the interval after the randomizer has been applied,
    again with ``hi == lo - 1`` for empty.  ``length`` is the real-line
    width for interval-type regions and ``realized_hi - realized_lo``
    for enumerated ones.
    """

    core_lo: int
    core_hi: int
    boundary: tuple[int, ...]
    boundary_prob: float
    realized_lo: int
    realized_hi: int
    level: float
    length: float
    # Populated only if the core is not contiguous (cannot happen for
    # unimodal pmfs; kept so coverage stays exact for arbitrary input).
    core_set: tuple[int, ...] | None = None

    def core_size(self) -> int:
        if self.core_set is not None:
            return len(self.core_set)
        return max(0, self.core_hi - self.core_lo + 1)

    def realized_contains(self, k: int) -> bool:
        return self.realized_lo <= k <= self.realized_hi


@dataclass(frozen=True)
class EstimatedPmf:
    """Dense pmf estimate on 0..support_hi with masses stored as logs."""

    log_mass: np.ndarray
    support_hi: int
    descriptor: str
    fallback: bool = False

    def mass(self, k: int) -> float:
        if 0 <= k <= self.support_hi:
            return float(math.exp(self.log_mass[k]))
        return 0.0


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly between 0 and 1, got {alpha}")


def pmf_poisson(lam: float, tail_mass: float = TAIL_MASS) -> EstimatedPmf:
    """Poisson pmf at rate ``lam`` truncated to all but ``tail_mass``."""
    if lam < 0:
        raise DomainError(f"pmf_poisson requires lam >= 0, got {lam}")
    if lam == 0.0:
        return EstimatedPmf(np.zeros(1), 0, "poisson")
    hi = poisson_upper_support(lam, tail_mass)
    return EstimatedPmf(poisson_log_pmf_vector(hi, lam), hi, "poisson")


def pmf_plugin_ml(n: int, t: int) -> EstimatedPmf:
    """Plug-in pmf at the rate estimate t/n; t = 0 degenerates to {0}."""
    if n < 1:
        raise DomainError(f"pmf_plugin_ml requires n >= 1, got {n}")
    if t < 0:
        raise DomainError(f"pmf_plugin_ml requires t >= 0, got {t}")
    pmf = pmf_poisson(t / n)
    return EstimatedPmf(pmf.log_mass, pmf.support_hi, "plug-in ML")


def pmf_taylor(n: int, t: int) -> EstimatedPmf:
    """Second-order correction of the plug-in pmf for estimation noise.

    Divides each plug-in mass by 1 + ((1 - k/r)^2 - k/r^2) r / (2n) with
    r = t/n, then renormalizes over the truncated support.  A nonpositive
    denominator (impossible for integer t >= 1, guarded anyway) falls
    back to the plug-in mass at that k and sets the ``fallback`` flag.
    """
    if n < 1:
        raise DomainError(f"pmf_taylor requires n >= 1, got {n}")
    if t < 1:
        raise DomainError(f"pmf_taylor requires t >= 1, got {t}")
    rate = t / n
    hi = poisson_upper_support(rate)
    base = np.exp(poisson_log_pmf_vector(hi, rate))
    ks = np.arange(hi + 1, dtype=np.float64)
    bracket = (1.0 - ks / rate) ** 2 - ks / rate**2
    denom = 1.0 + 0.5 * bracket * rate / n
    bad = denom <= 0.0
    adjusted = np.where(bad, base, base / np.where(bad, 1.0, denom))
    adjusted /= adjusted.sum()
    with np.errstate(divide="ignore"):
        logm = np.log(adjusted)
    return EstimatedPmf(logm, hi, "Taylor", fallback=bool(bad.any()))


def pmf_umvue(n: int, t: int) -> EstimatedPmf:
    """Unbiased pmf estimate: binomial(t, 1/n) masses on {0..t}."""
    if n < 1:
        raise DomainError(f"pmf_umvue requires n >= 1, got {n}")
    if t < 0:
        raise DomainError(f"pmf_umvue requires t >= 0, got {t}")
    if n == 1 or t == 0:
        logm = np.full(t + 1, -np.inf)
        logm[t] = 0.0
        return EstimatedPmf(logm, t, "UMVUE")
    ks = np.arange(t + 1, dtype=np.float64)
    lchoose = (math.lgamma(t + 1)
               - np.array([math.lgamma(k + 1) for k in range(t + 1)])
               - np.array([math.lgamma(t - k + 1) for k in range(t + 1)]))
    logm = lchoose + ks * math.log(1.0 / n) + (t - ks) * math.log1p(-1.0 / n)
    return EstimatedPmf(logm, t, "UMVUE")


def pmf_gamma_predictive(n: int, t: int, kappa: float, beta: float,
                         tail_mass: float = TAIL_MASS) -> EstimatedPmf:
    """Predictive pmf under a gamma(kappa, beta) prior on the rate.

    Negative binomial with t + kappa successes and success probability
    (beta + n)/(beta + n + 1), built by a log-space ratio recurrence.
    """
    if n < 1:
        raise DomainError(f"pmf_gamma_predictive requires n >= 1, got {n}")
    if t < 0:
        raise DomainError(f"pmf_gamma_predictive requires t >= 0, got {t}")
    if kappa <= 0 or beta <= 0:
        raise DomainError("pmf_gamma_predictive requires kappa > 0 and beta > 0")
    r = kappa + t
    log_fail = -math.log(beta + n + 1.0)          # ln 1/(beta+n+1)
    log_succ = math.log(beta + n) + log_fail      # ln (beta+n)/(beta+n+1)
    mean = r / (beta + n)
    sd = math.sqrt(r * (beta + n + 1.0)) / (beta + n)
    hi = int(mean + 10.0 * sd + 20.0)
    while True:
        ys = np.arange(1, hi + 1, dtype=np.float64)
        steps = np.log((r + ys - 1.0) / ys) + log_fail
        logm = np.empty(hi + 1)
        logm[0] = r * log_succ
        logm[1:] = logm[0] + np.cumsum(steps)
        total = np.exp(logm).sum()
        if 1.0 - total <= tail_mass:
            return EstimatedPmf(logm, hi, "gamma-predictive")
        hi = int(hi * 1.5) + 10


def hyper_from_mean_sd(mean: float, sd: float) -> tuple[float, float]:
    """Gamma hyper-parameters (kappa, beta) with the given mean and sd."""
    if mean <= 0 or sd <= 0:
        raise DomainError("hyper_from_mean_sd requires mean > 0 and sd > 0")
    return mean * mean / (sd * sd), mean / (sd * sd)


def marginal_log_likelihood(kappa: float, beta: float, y) -> float:
    """Log marginal likelihood of counts y under the gamma-mixed model."""
    if kappa <= 0 or beta <= 0:
        raise DomainError("marginal_log_likelihood requires kappa > 0, beta > 0")
    arr = np.asarray(y, dtype=np.int64)
    if arr.size == 0:
        raise DomainError("marginal_log_likelihood requires nonempty y")
    if (arr < 0).any():
        raise DomainError("marginal_log_likelihood requires nonnegative counts")
    n = arr.size
    total = int(arr.sum())
    lg = sum(math.lgamma(kappa + int(v)) for v in arr)
    lfact = sum(math.lgamma(int(v) + 1) for v in arr)
    return (lg - n * math.lgamma(kappa) - lfact
            + n * kappa * (math.log(beta) - math.log1p(beta))
            - total * math.log1p(beta))


def mom_gamma(y) -> tuple[float, float]:
    """Moment-match a gamma mixing distribution to counts y.

    Solves mean = kappa/beta and variance - mean = kappa/beta**2.  The
    solution only exists on the over-dispersed branch; when the sample
    variance (ddof=1) does not exceed the sample mean the model is
    unidentified from moments and a MomentFailure is raised.
    """
    arr = np.asarray(y, dtype=np.float64)
    if arr.size < 2:
        raise DomainError("mom_gamma requires at least two observations")
    if (arr < 0).any():
        raise DomainError("mom_gamma requires nonnegative counts")
    mean = float(arr.mean())
    var = float(arr.var(ddof=1))
    if var <= mean:
        raise MomentFailure(
            f"sample variance {var:.6g} does not exceed sample mean {mean:.6g}; "
            "gamma moment equations have no positive solution")
    beta = mean / (var - mean)
    kappa = mean * beta
    return kappa, beta


def _group_scan(log_mass: np.ndarray, target: float):
    """Sort masses descending, group ties, and split core/boundary.

    Returns (core_ks, boundary_ks, gamma, cum_before) where gamma is the
    inclusion probability of the boundary group.
    """
    order = np.argsort(-log_mass, kind="stable")
    slog = log_mass[order]
    npos = int(np.count_nonzero(slog > -np.inf))
    if npos == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), 0.0, 0.0
    slog = slog[:npos]
    order = order[:npos]
    if npos > 1:
        gaps = slog[:-1] - slog[1:]
        tol = TIE_RTOL * np.maximum(1.0, np.abs(slog[:-1]))
        new_group = gaps > tol
        ends = np.flatnonzero(np.append(new_group, True))
    else:
        ends = np.array([0])
    cum = np.cumsum(np.exp(slog))
    group_cum = cum[ends]
    # A group joins the core while the running total stays within the
    # target; the first group that would overshoot becomes the boundary.
    ncore = int(np.searchsorted(group_cum, target + 1e-15, side="right"))
    if ncore >= len(ends):
        return order, np.empty(0, dtype=np.int64), 0.0, float(group_cum[-1])
    core_end = ends[ncore - 1] + 1 if ncore > 0 else 0
    cum_before = float(group_cum[ncore - 1]) if ncore > 0 else 0.0
    gsum = float(group_cum[ncore] - cum_before)
    gamma = (target - cum_before) / gsum if gsum > 0 else 0.0
    gamma = min(1.0, max(0.0, gamma))
    core = order[:core_end]
    boundary = order[core_end:ends[ncore] + 1]
    return core, boundary, gamma, cum_before


def region_smallest(pmf: EstimatedPmf, alpha: float, u: float) -> PredictionRegion:
    """Smallest-cardinality region with randomized boundary inclusion.

    Keeps the most probable values until the next tie group would push
    the captured mass past 1 - alpha; that group is included only when
    u <= gamma, with gamma chosen so randomized coverage under ``pmf``
    is exactly 1 - alpha.
    """
    _check_alpha(alpha)
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0, 1], got {u}")
    target = 1.0 - alpha
    core, boundary, gamma, _ = _group_scan(np.asarray(pmf.log_mass), target)
    if core.size:
        core_lo, core_hi = int(core.min()), int(core.max())
        contiguous = core.size == core_hi - core_lo + 1
        core_set = None if contiguous else tuple(sorted(int(k) for k in core))
    else:
        core_lo, core_hi = 0, -1
        core_set = None
    include = boundary.size > 0 and u <= gamma
    if include:
        realized_lo = min(core_lo, int(boundary.min())) if core.size else int(boundary.min())
        realized_hi = max(core_hi, int(boundary.max())) if core.size else int(boundary.max())
    elif core.size:
        realized_lo, realized_hi = core_lo, core_hi
    else:
        realized_lo, realized_hi = 0, -1
    return PredictionRegion(
        core_lo=core_lo,
        core_hi=core_hi,
        boundary=tuple(sorted(int(k) for k in boundary)),
        boundary_prob=float(gamma) if boundary.size else 0.0,
        realized_lo=realized_lo,
        realized_hi=realized_hi,
        level=target,
        length=float(max(0, realized_hi - realized_lo)),
        core_set=core_set,
    )


def region_nonrandomized(region: PredictionRegion) -> PredictionRegion:
    """Fold the boundary into the core (the u = 0 convention).

    The result covers at least the nominal level under the pmf the
    region was built from, at the price of the randomized exactness.
    """
    if not region.boundary:
        return region
    lo = min(region.core_lo, region.boundary[0]) if region.core_hi >= region.core_lo \
        else region.boundary[0]
    hi = max(region.core_hi, region.boundary[-1]) if region.core_hi >= region.core_lo \
        else region.boundary[-1]
    return PredictionRegion(
        core_lo=lo, core_hi=hi, boundary=(), boundary_prob=0.0,
        realized_lo=lo, realized_hi=hi, level=region.level,
        length=float(hi - lo), core_set=None)


def _interval_region(lower: float, upper: float, alpha: float) -> PredictionRegion:
    lo = int(math.ceil(lower))
    hi = int(math.floor(upper))
    if hi < lo:
        lo, hi = 0, -1
    return PredictionRegion(
        core_lo=lo, core_hi=hi, boundary=(), boundary_prob=0.0,
        realized_lo=lo, realized_hi=hi, level=1.0 - alpha,
        length=float(upper - lower), core_set=None)


def region_normal_known(lam: float, alpha: float) -> PredictionRegion:
    """Central normal-approximation interval for a known rate."""
    _check_alpha(alpha)
    if lam <= 0:
        raise DomainError(f"region_normal_known requires lam > 0, got {lam}")
    z = normal_quantile(1.0 - alpha / 2.0)
    half = z * math.sqrt(lam)
    return _interval_region(max(0.0, lam - half), lam + half, alpha)


def region_sqrt_known(lam: float, alpha: float) -> PredictionRegion:
    """Variance-stabilized interval: normal limits on the sqrt scale."""
    _check_alpha(alpha)
    if lam <= 0:
        raise DomainError(f"region_sqrt_known requires lam > 0, got {lam}")
    z = normal_quantile(1.0 - alpha / 2.0)
    s = math.sqrt(lam)
    lower = max(0.0, s - z / 2.0) ** 2
    upper = (s + z / 2.0) ** 2
    return _interval_region(lower, upper, alpha)


def region_adjusted_normal(n: int, t: int, alpha: float) -> PredictionRegion:
    """Normal interval at rate t/n, widened for estimation noise.

    Half-width z * sqrt(rate * (1 + 1/n)); t = 0 gives the region {0}.
    """
    _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"region_adjusted_normal requires n >= 1, got {n}")
    if t < 0:
        raise DomainError(f"region_adjusted_normal requires t >= 0, got {t}")
    rate = t / n
    z = normal_quantile(1.0 - alpha / 2.0)
    half = z * math.sqrt(rate * (1.0 + 1.0 / n))
    return _interval_region(max(0.0, rate - half), rate + half, alpha)


def region_adjusted_sqrt(n: int, t: int, alpha: float) -> PredictionRegion:
    """Sqrt-scale interval at rate t/n, widened for estimation noise."""
    _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"region_adjusted_sqrt requires n >= 1, got {n}")
    if t < 0:
        raise DomainError(f"region_adjusted_sqrt requires t >= 0, got {t}")
    rate = t / n
    z = normal_quantile(1.0 - alpha / 2.0)
    c = z * math.sqrt(0.25 * (1.0 + 1.0 / n))
    s = math.sqrt(rate)
    lower = max(0.0, s - c) ** 2
    upper = (s + c) ** 2
    return _interval_region(lower, upper, alpha)


def exact_region_properties(region: PredictionRegion, lam: float) -> tuple[float, float]:
    """Exact coverage and expected length under a Poisson(lam) truth.

    Coverage is the core mass plus boundary mass weighted by the
    inclusion probability.  Expected length mixes the widths of the two
    possible realizations (with and without the boundary) the same way.
    """
    if lam <= 0:
        raise DomainError(f"exact_region_properties requires lam > 0, got {lam}")
    if region.core_set is not None:
        core_mass = sum(math.exp(poisson_log_pmf(k, lam)) for k in region.core_set)
    elif region.core_hi >= region.core_lo:
        core_mass = poisson_cdf(region.core_hi, lam) - poisson_cdf(region.core_lo - 1, lam)
    else:
        core_mass = 0.0
    bound_mass = sum(math.exp(poisson_log_pmf(k, lam)) for k in region.boundary)
    gamma = region.boundary_prob
    coverage = core_mass + gamma * bound_mass
    core_len = float(max(0, region.core_hi - region.core_lo))
    if region.boundary:
        lo = min(region.core_lo, region.boundary[0]) if region.core_hi >= region.core_lo \
            else region.boundary[0]
        hi = max(region.core_hi, region.boundary[-1]) if region.core_hi >= region.core_lo \
            else region.boundary[-1]
        incl_len = float(max(0, hi - lo))
    else:
        incl_len = core_len
    expected_length = gamma * incl_len + (1.0 - gamma) * core_len
    return coverage, expected_length
