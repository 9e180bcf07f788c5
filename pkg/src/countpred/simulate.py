"""Monte Carlo coverage and length studies.

Two experiment shapes: the no-covariate model (draw a rate-estimation
total T and a future count, build all six estimated-rate regions, tally
coverage and realized length) and the regression model (draw covariates
and responses, fit, build the three holdout regions).  Replication r of
a run seeded s uses its own generator derived from (s, r), and results
are reduced in replication order over fixed-size chunks, so output is
bit-identical no matter how many worker processes evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SingularityError,
)
from .glm import DesignSpec, build_design, design_row, fit, region_regression
from .regions import (
    hyper_from_mean_sd,
    pmf_gamma_predictive,
    pmf_plugin_ml,
    pmf_taylor,
    pmf_umvue,
    region_adjusted_normal,
    region_adjusted_sqrt,
    region_smallest,
)

__all__ = [
    "SimConfig",
    "SimResult",
    "RegionStats",
    "REGRESSION_CASES",
    "INTERCEPT_REGIONS",
    "REGRESSION_REGIONS",
    "poisson_sampler",
    "gen_poisson_regression_data",
    "run_intercept_experiment",
    "run_regression_experiment",
    "result_to_csv",
]

# Gamma-prior hyper-parameters used throughout the intercept studies:
# prior mean 50, prior sd 100.
PRIOR_KAPPA, PRIOR_BETA = hyper_from_mean_sd(50.0, 100.0)

# Built-in regression scenarios: poly order, theta, covariate law.
REGRESSION_CASES = {
    1: (1, (3.0, 5.0), ("uniform", 0.0, 1.0)),
    2: (2, (3.0, -0.2, 0.05), ("normal", 2.0, 2.0)),
    3: (3, (3.0, 0.2, -0.1, -0.05), ("normal", 1.0, 2.0)),
    4: (5, (3.0, -1.0, 3.0, -2.0, 1.0, -0.5), ("uniform", 0.0, 1.0)),
}

INTERCEPT_REGIONS = ("Gam0", "Gam1", "Gam2", "Gam3", "Gam4", "Gam5")
REGRESSION_REGIONS = ("Gam0", "Gam1", "Gam2")

# Rates beyond this cannot be sampled as 64-bit counts; such draws are
# discarded and redrawn, with the count reported.
_MAX_ETA = 42.0

_CHUNK = 250


@dataclass(frozen=True)
class SimConfig:
    """One experiment cell.

    ``scenario`` is "intercept" (needs ``lam``) or "regression" (needs
    either ``case`` or the explicit ``poly_order``/``theta``/``w_dist``
    triple, where w_dist is ("uniform", lo, hi) or ("normal", mu, sd)).
    """

    scenario: str
    n: int
    replications: int
    alpha: float
    seed: int
    lam: float | None = None
    case: int | None = None
    poly_order: int | None = None
    theta: tuple[float, ...] | None = None
    w_dist: tuple | None = None
    workers: int = 1


@dataclass(frozen=True)
class RegionStats:
    coverage_pct: float
    mean_length: float
    sd_length: float


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    regions: tuple[str, ...]
    stats: dict[str, RegionStats]
    redraws: int


def poisson_sampler(lam: float, rng: np.random.Generator) -> int:
    """One exact Poisson draw; lam = 0 gives 0."""
    if lam < 0:
        raise DomainError(f"poisson_sampler requires lam >= 0, got {lam}")
    return int(rng.poisson(lam))


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, rep)))


def _resolve_regression(config: SimConfig):
    if config.case is not None:
        if config.case not in REGRESSION_CASES:
            raise DomainError(f"unknown simulation case {config.case}")
        return REGRESSION_CASES[config.case]
    if config.poly_order is None or config.theta is None or config.w_dist is None:
        raise DomainError("regression scenario needs case or poly_order/theta/w_dist")
    return config.poly_order, tuple(config.theta), tuple(config.w_dist)


def _draw_w(w_dist, size: int, rng: np.random.Generator) -> np.ndarray:
    kind = w_dist[0]
    if kind == "uniform":
        lo, hi = float(w_dist[1]), float(w_dist[2])
        return lo + (hi - lo) * rng.random(size)
    if kind == "normal":
        mu, sd = float(w_dist[1]), float(w_dist[2])
        return mu + sd * rng.standard_normal(size)
    raise DomainError(f"unknown covariate law {kind!r}")


def _draw_regression_instance(p, theta, w_dist, n, rng):
    """Draw covariates, responses, and the holdout pair; redraw on overflow."""
    theta = np.asarray(theta, dtype=np.float64)
    redraws = 0
    while True:
        w = _draw_w(w_dist, n + 1, rng)
        powers = np.vander(w, p + 1, increasing=True)
        eta = powers @ theta
        if float(np.max(eta)) > _MAX_ETA:
            redraws += 1
            continue
        rates = np.exp(eta)
        y = rng.poisson(rates[:n]).astype(np.int64)
        y0 = int(rng.poisson(rates[n]))
        return w, y, y0, redraws


def gen_poisson_regression_data(p, theta, w_dist, n, seed):
    """Deterministic synthetic regression draw for a given seed.

    Returns ((y, X_raw), (y0, x0_raw)); X_raw holds the unstandardized
    polynomial covariate rows.
    """
    rng = np.random.default_rng(seed)
    w, y, y0, _ = _draw_regression_instance(p, theta, w_dist, n, rng)
    powers = np.vander(w, p + 1, increasing=True)
    return (y, powers[:n]), (y0, powers[n])


def _intercept_chunk(args):
    seed, start, stop, n, lam, alpha = args
    m = stop - start
    covers = np.zeros((m, 6), dtype=np.uint8)
    lengths = np.zeros((m, 6), dtype=np.float64)
    for j, rep in enumerate(range(start, stop)):
        rng = _rep_rng(seed, rep)
        t = poisson_sampler(n * lam, rng)
        y0 = poisson_sampler(lam, rng)
        u = rng.random()
        regs = (
            region_smallest(pmf_plugin_ml(n, t), alpha, u),
            region_adjusted_normal(n, t, alpha),
            region_adjusted_sqrt(n, t, alpha),
            region_smallest(pmf_taylor(n, t) if t >= 1 else pmf_plugin_ml(n, t),
                            alpha, u),
            region_smallest(pmf_umvue(n, t), alpha, u),
            region_smallest(pmf_gamma_predictive(n, t, PRIOR_KAPPA, PRIOR_BETA),
                            alpha, u),
        )
        for i, r in enumerate(regs):
            covers[j, i] = 1 if r.realized_contains(y0) else 0
            lengths[j, i] = max(0, r.realized_hi - r.realized_lo)
    return covers, lengths, 0


def _regression_chunk(args):
    seed, start, stop, n, p, theta, w_dist, alpha = args
    m = stop - start
    covers = np.zeros((m, 3), dtype=np.uint8)
    lengths = np.zeros((m, 3), dtype=np.float64)
    redraws = 0
    base_spec = DesignSpec(poly_order=p, standardize=True)
    for j, rep in enumerate(range(start, stop)):
        rng = _rep_rng(seed, rep)
        while True:
            w, y, y0, rd = _draw_regression_instance(p, theta, w_dist, n, rng)
            redraws += rd
            u = rng.random()
            try:
                X, spec = build_design(w[:n], None, base_spec)
                fit_ = fit(X, y, design=spec)
                x0 = design_row(w[n], None, spec)
                regs = (
                    region_regression(fit_, x0, alpha, "smallest-plugin", u),
                    region_regression(fit_, x0, alpha, "normal"),
                    region_regression(fit_, x0, alpha, "sqrt"),
                )
            except (SingularityError, NonConvergenceError, DivergenceError):
                redraws += 1
                continue
            break
        for i, r in enumerate(regs):
            covers[j, i] = 1 if r.realized_contains(y0) else 0
            lengths[j, i] = max(0, r.realized_hi - r.realized_lo)
    return covers, lengths, redraws


def _run_chunks(worker, arg_list, workers: int):
    if workers <= 1:
        return [worker(a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, arg_list))


def _reduce(config: SimConfig, region_names, chunk_results) -> SimResult:
    covers = np.concatenate([c for c, _, _ in chunk_results])
    lengths = np.concatenate([v for _, v, _ in chunk_results])
    redraws = sum(r for _, _, r in chunk_results)
    stats = {}
    for i, name in enumerate(region_names):
        col = lengths[:, i]
        stats[name] = RegionStats(
            coverage_pct=100.0 * float(covers[:, i].mean()),
            mean_length=float(col.mean()),
            sd_length=float(col.std(ddof=1)) if col.size > 1 else 0.0,
        )
    return SimResult(config=config, regions=tuple(region_names),
                     stats=stats, redraws=redraws)


def _chunk_bounds(total: int):
    return [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]


def run_intercept_experiment(config: SimConfig) -> SimResult:
    """Coverage/length table cell for the no-covariate model."""
    if config.scenario != "intercept":
        raise DomainError("config.scenario must be 'intercept'")
    if config.lam is None or config.lam <= 0:
        raise DomainError("intercept scenario requires lam > 0")
    if config.replications < 1 or config.n < 1:
        raise DomainError("replications and n must be >= 1")
    args = [(config.seed, s, e, config.n, config.lam, config.alpha)
            for s, e in _chunk_bounds(config.replications)]
    results = _run_chunks(_intercept_chunk, args, config.workers)
    return _reduce(config, INTERCEPT_REGIONS, results)


def run_regression_experiment(config: SimConfig) -> SimResult:
    """Coverage/length table cell for the regression model."""
    if config.scenario != "regression":
        raise DomainError("config.scenario must be 'regression'")
    if config.replications < 1 or config.n < 1:
        raise DomainError("replications and n must be >= 1")
    p, theta, w_dist = _resolve_regression(config)
    args = [(config.seed, s, e, config.n, p, theta, w_dist, config.alpha)
            for s, e in _chunk_bounds(config.replications)]
    results = _run_chunks(_regression_chunk, args, config.workers)
    return _reduce(config, REGRESSION_REGIONS, results)


def run_experiment(config: SimConfig) -> SimResult:
    if config.scenario == "intercept":
        return run_intercept_experiment(config)
    if config.scenario == "regression":
        return run_regression_experiment(config)
    raise DomainError(f"unknown scenario {config.scenario!r}")


def _meta_line(config: SimConfig) -> str:
    from . import __version__
    parts = [f"version={__version__}", f"seed={config.seed}",
             f"scenario={config.scenario}", f"n={config.n}",
             f"replications={config.replications}", f"alpha={config.alpha!r}"]
    if config.scenario == "intercept":
        parts.append(f"lam={config.lam!r}")
    else:
        p, theta, w_dist = _resolve_regression(config)
        if config.case is not None:
            parts.append(f"case={config.case}")
        parts.append(f"poly_order={p}")
        parts.append("theta=" + ",".join(repr(v) for v in theta))
        parts.append("w_dist=" + ",".join(str(v) for v in w_dist))
    return "# " + " ".join(parts)


def result_to_csv(result: SimResult) -> str:
    """Appendix-shaped CSV: n then CP/ML/SL per region, plus a meta line.

    The worker count is execution detail, not configuration, and is
    deliberately absent so outputs compare bit-identical across runs.
    """
    header = ["n"]
    row = [str(result.config.n)]
    for name in result.regions:
        st = result.stats[name]
        header += [f"{name}CP", f"{name}ML", f"{name}SL"]
        row += [repr(st.coverage_pct), repr(st.mean_length), repr(st.sd_length)]
    header.append("redraws")
    row.append(str(result.redraws))
    return "\n".join([_meta_line(result.config), ",".join(header), ",".join(row)]) + "\n"
