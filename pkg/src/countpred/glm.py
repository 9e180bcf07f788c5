"""Poisson regression with exponential inverse link.

Design-matrix construction (polynomial in a scalar covariate plus an
optional weekday factor), Newton-Raphson maximum likelihood, the
information matrices, AIC, a residual-sign independence diagnostic, and
the covariate-setting prediction regions built from the fitted rate.

Columns other than the intercept can be centered and scaled; the
transform is recorded so prediction rows are mapped identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DesignError,
    DiagnosticsError,
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SingularityError,
)
from .regions import PredictionRegion, _interval_region, pmf_poisson, region_smallest
from .special import chisq_sf, normal_quantile

__all__ = [
    "DesignSpec",
    "GlmFit",
    "ResidualDiagnostics",
    "WEEKDAYS",
    "build_design",
    "design_row",
    "loglik",
    "score",
    "observed_info",
    "expected_info",
    "fit",
    "rate_and_variance",
    "region_regression",
    "residual_diagnostics",
]

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday",
            "Friday", "Saturday", "Sunday")

# exp overflows float64 just above this; treated as divergence.
_EXP_LIMIT = 700.0

# Rates larger than this make support enumeration pointless; the
# smallest-cardinality region is indistinguishable from the central
# normal interval at that scale.
_ENUM_LIMIT = 1e6


@dataclass(frozen=True)
class DesignSpec:
    """Recipe for building design rows.

    ``column_means``/``column_sds`` are populated by build_design when
    ``standardize`` is set; entries for columns left untouched (the
    intercept, any zero-variance dummy) are (0, 1) so the transform can
    be applied uniformly.
    """

    poly_order: int
    include_day_factor: bool = False
    standardize: bool = False
    column_means: tuple[float, ...] | None = None
    column_sds: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GlmFit:
    """Converged Newton-Raphson fit. ``X`` and ``y`` are the training data."""

    theta: np.ndarray
    info_observed: np.ndarray
    loglik: float
    aic: float
    fitted_rates: np.ndarray
    residuals: np.ndarray
    design: DesignSpec | None
    converged: bool
    iterations: int
    X: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class ResidualDiagnostics:
    """Sign-by-index-block contingency table and its chi-square test."""

    table: np.ndarray            # n_bins x 2: (nonpositive, positive) counts
    statistic: float
    df: int
    p_value: float
    bin_edges: tuple[int, ...]   # right edges, 1-based positions


def _weekday_index(label) -> int:
    if isinstance(label, (int, np.integer)):
        idx = int(label)
        if not 0 <= idx <= 6:
            raise DesignError(f"weekday index out of range 0..6: {label}")
        return idx
    name = str(label).strip().capitalize()
    if name not in WEEKDAYS:
        raise DesignError(f"invalid weekday label: {label!r}")
    return WEEKDAYS.index(name)


def build_design(w, day_labels, spec: DesignSpec) -> tuple[np.ndarray, DesignSpec]:
    """Build the design matrix and record any standardization.

    Columns: intercept, w^1..w^p, then six dummies for Tuesday..Sunday
    (Monday is the baseline).  With ``spec.standardize`` every
    non-constant column is centered and scaled by the sample sd
    (divisor n-1); a zero-variance polynomial column is an error since
    it cannot be scaled.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise DesignError("w must be a nonempty 1-d vector")
    n = w.size
    if spec.poly_order < 0:
        raise DesignError(f"poly_order must be >= 0, got {spec.poly_order}")
    cols = [np.ones(n)]
    for j in range(1, spec.poly_order + 1):
        cols.append(w ** j)
    if spec.include_day_factor:
        if day_labels is None:
            raise DesignError("day factor requested but no day labels given")
        idx = np.array([_weekday_index(d) for d in day_labels])
        if idx.size != n:
            raise DesignError("day labels length does not match w")
        for d in range(1, 7):
            cols.append((idx == d).astype(np.float64))
    X = np.column_stack(cols)
    means = np.zeros(X.shape[1])
    sds = np.ones(X.shape[1])
    if spec.standardize:
        for j in range(1, X.shape[1]):
            sd = float(X[:, j].std(ddof=1))
            if sd == 0.0:
                if j <= spec.poly_order:
                    raise DesignError(
                        f"polynomial column w^{j} has zero variance; cannot standardize")
                continue  # constant dummy left as-is; rank problems surface at fit
            means[j] = float(X[:, j].mean())
            sds[j] = sd
            X[:, j] = (X[:, j] - means[j]) / sds[j]
    out_spec = replace(spec, column_means=tuple(means), column_sds=tuple(sds))
    return X, out_spec


def design_row(w0: float, day_label, spec: DesignSpec) -> np.ndarray:
    """One prediction row under a spec returned by build_design."""
    row = [1.0]
    for j in range(1, spec.poly_order + 1):
        row.append(float(w0) ** j)
    if spec.include_day_factor:
        if day_label is None:
            raise DesignError("day factor in design but no day label given")
        idx = _weekday_index(day_label)
        row.extend(1.0 if idx == d else 0.0 for d in range(1, 7))
    x0 = np.asarray(row)
    if spec.standardize:
        if spec.column_means is None or spec.column_sds is None:
            raise DesignError("spec has no recorded standardization; build the design first")
        x0 = (x0 - np.asarray(spec.column_means)) / np.asarray(spec.column_sds)
        x0[0] = 1.0
    return x0


def _linear_predictor(theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    eta = X @ theta
    if np.any(eta > _EXP_LIMIT):
        raise DivergenceError(
            "linear predictor overflows exp; consider standardizing covariate columns")
    return eta


def loglik(theta, X, y) -> float:
    """Poisson log likelihood including the factorial term."""
    theta = np.asarray(theta, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = _linear_predictor(theta, X)
    lfact = np.array([math.lgamma(v + 1.0) for v in y])
    return float(np.sum(y * eta - np.exp(eta) - lfact))


def score(theta, X, y) -> np.ndarray:
    """Score vector sum x_i (y_i - exp(x_i theta))."""
    theta = np.asarray(theta, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = _linear_predictor(theta, X)
    return X.T @ (y - np.exp(eta))


def observed_info(theta, X, y=None) -> np.ndarray:
    """Observed information; equals expected information for this link."""
    return expected_info(theta, X)


def expected_info(theta, X) -> np.ndarray:
    """Expected information sum x_i x_i' exp(x_i theta)."""
    theta = np.asarray(theta, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    rates = np.exp(_linear_predictor(theta, X))
    return (X * rates[:, None]).T @ X


def _spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A."""
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(
            "information matrix is singular (rank-deficient design)") from exc
    return np.linalg.solve(A, b)


def fit(X, y, init=None, tol: float = 1e-8, max_iter: int = 100,
        design: DesignSpec | None = None) -> GlmFit:
    """Newton-Raphson maximum likelihood.

    Stops when the score max-norm falls below ``tol``, or when the
    Newton decrement g' I^-1 g drops below float64 resolution of the
    log likelihood (for large count totals the score noise floor can
    sit above any fixed absolute tolerance).  Steps that fail to
    improve the log likelihood are halved up to 30 times; once the
    likelihood is flat at float64 resolution the full step is still
    taken as long as it shrinks the score, otherwise the last iterate
    is reported in a non-convergence error.
    """
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y)
    if X.ndim != 2:
        raise DesignError("X must be a 2-d matrix")
    n, k = X.shape
    if y_arr.shape != (n,):
        raise DesignError("y length does not match X")
    if np.any(y_arr < 0) or np.any(y_arr != np.floor(y_arr)):
        raise DomainError("y must be nonnegative integers")
    if n < k:
        raise DesignError(f"need at least as many observations ({n}) as parameters ({k})")
    y_f = y_arr.astype(np.float64)

    if init is not None:
        theta = np.asarray(init, dtype=np.float64).copy()
    else:
        # Least squares on the log-linearized response; starting from
        # zeros can put the first Newton step outside the improving
        # region for steep designs.
        theta = np.linalg.lstsq(X, np.log(y_f + 0.5), rcond=None)[0]
    ll = loglik(theta, X, y_f)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        g = score(theta, X, y_f)
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        info = expected_info(theta, X)
        step = _spd_solve(info, g)
        if float(g @ step) <= 4e-16 * (abs(ll) + 1.0):
            converged = True
            break
        scale = 1.0
        for _ in range(31):
            cand = theta + scale * step
            try:
                cand_ll = loglik(cand, X, y_f)
            except DivergenceError:
                cand_ll = -np.inf
            if cand_ll > ll or (cand_ll == ll and scale == 1.0):
                break
            scale *= 0.5
        else:
            # Likelihood is flat at float64 resolution; accept the
            # full step if it still moves the score toward zero.
            cand = theta + step
            if np.max(np.abs(score(cand, X, y_f))) < np.max(np.abs(g)):
                theta = cand
                ll = loglik(theta, X, y_f)
                continue
            raise NonConvergenceError(
                "no improving Newton step found", theta=theta, iterations=iterations)
        theta = cand
        ll = cand_ll
    if not converged:
        raise NonConvergenceError(
            f"Newton-Raphson did not converge in {max_iter} iterations",
            theta=theta, iterations=iterations)

    rates = np.exp(_linear_predictor(theta, X))
    residuals = (y_f - rates) / np.sqrt(rates)
    info = expected_info(theta, X)
    ll = loglik(theta, X, y_f)
    return GlmFit(
        theta=theta,
        info_observed=info,
        loglik=ll,
        aic=-2.0 * ll + 2.0 * k,
        fitted_rates=rates,
        residuals=residuals,
        design=design,
        converged=True,
        iterations=iterations,
        X=X,
        y=y_arr.astype(np.int64),
    )


def rate_and_variance(fit_: GlmFit, x0) -> tuple[float, float]:
    """Predicted rate exp(x0 theta) and its pivotal variance factor.

    The factor is 1 + rate * x0' I(theta)^-1 x0; for an intercept-only
    design it reduces to 1 + 1/n.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eta0 = float(x0 @ fit_.theta)
    if eta0 > _EXP_LIMIT:
        raise DivergenceError("prediction point overflows exp")
    lam0 = math.exp(eta0)
    quad = float(x0 @ _spd_solve(fit_.info_observed, x0))
    return lam0, 1.0 + lam0 * quad


def region_regression(fit_: GlmFit, x0, alpha: float, variant: str,
                      u: float = 0.0) -> PredictionRegion:
    """Prediction region for a new count at covariate row x0.

    ``normal`` and ``sqrt`` account for parameter uncertainty through
    the pivotal variance factor; ``smallest-plugin`` enumerates the
    plug-in pmf at the predicted rate and ignores that factor.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    lam0, vhat = rate_and_variance(fit_, x0)
    z = normal_quantile(1.0 - alpha / 2.0)
    if variant == "normal":
        half = z * math.sqrt(lam0 * vhat)
        return _interval_region(max(0.0, lam0 - half), lam0 + half, alpha)
    if variant == "sqrt":
        c = z * math.sqrt(vhat / 4.0)
        s = math.sqrt(lam0)
        return _interval_region(max(0.0, s - c) ** 2, (s + c) ** 2, alpha)
    if variant == "smallest-plugin":
        if lam0 > _ENUM_LIMIT:
            half = z * math.sqrt(lam0)
            return _interval_region(max(0.0, lam0 - half), lam0 + half, alpha)
        return region_smallest(pmf_poisson(lam0), alpha, u)
    raise DomainError(f"unknown region variant: {variant!r}")


def residual_diagnostics(fit_: GlmFit, n_bins: int = 6) -> ResidualDiagnostics:
    """Chi-square test of residual sign against index block.

    Observations are split, in order, into ``n_bins`` blocks whose right
    edges are ceil(j*n/n_bins); each block contributes a (nonpositive,
    positive) residual count.  Independence is tested by Pearson
    chi-square with n_bins - 1 degrees of freedom.
    """
    if n_bins < 2:
        raise DomainError(f"n_bins must be >= 2, got {n_bins}")
    res = fit_.residuals
    n = res.size
    if n < n_bins:
        raise DiagnosticsError(f"cannot split {n} residuals into {n_bins} bins")
    edges = [math.ceil(j * n / n_bins) for j in range(1, n_bins + 1)]
    table = np.zeros((n_bins, 2), dtype=np.int64)
    start = 0
    for b, end in enumerate(edges):
        block = res[start:end]
        table[b, 0] = int(np.sum(block <= 0))
        table[b, 1] = int(np.sum(block > 0))
        start = end
    row_tot = table.sum(axis=1)
    col_tot = table.sum(axis=0)
    if np.any(row_tot == 0) or np.any(col_tot == 0):
        raise DiagnosticsError("a margin of the residual-sign table is empty")
    expected = np.outer(row_tot, col_tot) / n
    statistic = float(np.sum((table - expected) ** 2 / expected))
    df = n_bins - 1
    return ResidualDiagnostics(
        table=table,
        statistic=statistic,
        df=df,
        p_value=chisq_sf(statistic, df),
        bin_edges=tuple(edges),
    )
