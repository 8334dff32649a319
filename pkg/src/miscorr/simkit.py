"""Simulation study engine: scenario grids, data generation, replicate
engine, and weighted mean squared error aggregation.

Replicate streams are derived by counter from (master_seed, stream tag,
replicate id), so results are bitwise reproducible regardless of execution
order or thread count.  Within a replicate, designs are generated once at
the largest sample size and truncated, so smaller samples are exact
prefixes of larger ones.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .categorical import CategoricalSpec, encode_dummy
from .errors import RankDeficient, UndefinedScenario, ValidationError
from .estimators import correct_intercept, correct_slopes, ols_fit
from .misclass import (
    DISTORTION_LEVELS,
    SCENARIO_THETAS,
    posterior_from,
    posterior_rows,
    scenario_theta,
)
from .moments import build_moment_blocks

METHODS = ("none", "partial", "full")
RANDOM_LEVEL_CHOICES = (2, 3, 4)
HIGH_DISTORTION_SIGMAS = (0.1, 1.0)

_STREAM_STRUCTURE = 1
_STREAM_X = 2
_STREAM_W = 3
_STREAM_Y = 4


@dataclass(frozen=True)
class TruthSpec:
    """True parameter vector (intercept first): beta_l = 0.5 + 0.2 l."""

    beta_star: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta_star, dtype=float).ravel()
        object.__setattr__(self, "beta_star", beta)
        if np.any(beta == 0):
            raise ValidationError("truth entries must be nonzero (EQP weights)")

    @classmethod
    def default(cls, n_slopes: int) -> "TruthSpec":
        return cls(0.5 + 0.2 * np.arange(n_slopes + 1))


@dataclass(frozen=True)
class ScenarioConfig:
    """Grid definition for one simulation run.

    ``levels`` fixes L_k per covariate; ``None`` draws each L_k uniformly
    from {2, 3, 4} per replicate (forced to 4 under high distortion).
    Marginals of the true categories are uniform per level.
    """

    distortion: str
    n_covariates: int = 1
    levels: tuple[int, ...] | None = None
    n_grid: tuple[int, ...] = tuple(range(50, 501, 25))
    sigma_list: tuple[float, ...] = (0.1, 0.2, 0.5, 1.0)
    replicates: int = 300
    master_seed: int = 0
    force_identity_theta: bool = False  # debug: disables the error mechanism

    def __post_init__(self):
        if self.distortion not in DISTORTION_LEVELS:
            raise ValidationError(f"unknown distortion {self.distortion!r}")
        if self.n_covariates < 1:
            raise ValidationError("need at least one covariate")
        if self.replicates < 1:
            raise ValidationError("need at least one replicate")
        object.__setattr__(self, "n_grid", tuple(sorted(int(n) for n in self.n_grid)))
        if not self.n_grid:
            raise ValidationError("empty n grid")
        levels = self.levels
        if levels is not None:
            levels = tuple(int(lk) for lk in levels)
            if len(levels) == 1 and self.n_covariates > 1:
                levels = levels * self.n_covariates
            if len(levels) != self.n_covariates:
                raise ValidationError("levels length does not match covariate count")
        if self.distortion == "high":
            if levels is None:
                levels = (4,) * self.n_covariates
            elif any(lk != 4 for lk in levels):
                bad = next(lk for lk in levels if lk != 4)
                raise UndefinedScenario("high", bad)
        elif levels is not None:
            for lk in levels:
                if (self.distortion, lk) not in _defined_levels():
                    raise UndefinedScenario(self.distortion, lk)
        object.__setattr__(self, "levels", levels)
        sigmas = tuple(float(s) for s in self.sigma_list)
        if self.distortion == "high":
            sigmas = tuple(s for s in sigmas if s in HIGH_DISTORTION_SIGMAS)
        if not sigmas:
            raise ValidationError("no usable sigma values for this scenario")
        object.__setattr__(self, "sigma_list", sigmas)

    @property
    def n_gen(self) -> int:
        """Designs are generated at this size and truncated per cell."""
        return max(500, max(self.n_grid))


def _defined_levels():
    return set(SCENARIO_THETAS)


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed) & (2**64 - 1), *map(int, key)])


def _sigma_key(sigma: float) -> int:
    # stable integer key so the y stream does not depend on grid ordering
    return int(round(sigma * 1_000_000))


def simulate_x(ps, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent categorical draws per covariate, one column each."""
    cols = [rng.choice(len(p), size=n, p=np.asarray(p, dtype=float)) for p in ps]
    return np.column_stack(cols).astype(int)


def simulate_w(x: np.ndarray, thetas, rng: np.random.Generator) -> np.ndarray:
    """Draw the observed category from the theta row of each true category."""
    x = np.asarray(x, dtype=int)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    out = np.empty_like(x)
    for j in range(k):
        cdf = np.cumsum(np.asarray(thetas[j], dtype=float), axis=1)[x[:, j]]
        u = rng.random(n)
        out[:, j] = (u[:, None] > cdf).sum(axis=1)
    return out


def simulate_y(
    x_design: np.ndarray, truth: TruthSpec, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """y = beta0 + design . beta + noise, noise iid normal(0, sigma^2)."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    x_design = np.asarray(x_design, dtype=float)
    mean = truth.beta_star[0] + x_design @ truth.beta_star[1:]
    return mean + sigma * rng.standard_normal(x_design.shape[0])


def eqp(beta_hat: np.ndarray, truth: TruthSpec) -> float:
    """Weighted mean squared error: mean over parameters of
    (beta_l - beta_hat_l)^2 / beta_l."""
    beta = truth.beta_star
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if beta_hat.shape != beta.shape:
        raise ValidationError("estimate length does not match truth length")
    return float(np.mean((beta - beta_hat) ** 2 / beta))


def replicate_structure(config: ScenarioConfig, replicate_id: int):
    """Per-replicate covariate layout and error mechanism."""
    if config.levels is not None:
        levels = config.levels
    else:
        rng = _rng(config.master_seed, _STREAM_STRUCTURE, replicate_id)
        if config.distortion == "high":
            levels = (4,) * config.n_covariates
        else:
            levels = tuple(
                int(v)
                for v in rng.choice(RANDOM_LEVEL_CHOICES, size=config.n_covariates)
            )
    spec = CategoricalSpec(levels)
    if config.force_identity_theta:
        thetas = [np.eye(lk) for lk in levels]
    else:
        thetas = [scenario_theta(config.distortion, lk) for lk in levels]
    ps = [np.full(lk, 1.0 / lk) for lk in levels]
    return spec, thetas, ps


def replicate_designs(config: ScenarioConfig, replicate_id: int):
    """Generate (spec, thetas, ps, x, w) at the full generation size."""
    spec, thetas, ps = replicate_structure(config, replicate_id)
    x = simulate_x(ps, config.n_gen, _rng(config.master_seed, _STREAM_X, replicate_id))
    w = simulate_w(x, thetas, _rng(config.master_seed, _STREAM_W, replicate_id))
    return spec, thetas, ps, x, w


def replicate_response(
    config: ScenarioConfig,
    replicate_id: int,
    spec: CategoricalSpec,
    x: np.ndarray,
    sigma: float,
) -> np.ndarray:
    truth = TruthSpec.default(spec.n_slopes)
    rng = _rng(config.master_seed, _STREAM_Y, replicate_id, _sigma_key(sigma))
    return simulate_y(encode_dummy(spec, x).design, truth, sigma, rng)


def _fit_methods(spec, thetas, ps, w, y):
    """All three estimate vectors for one truncated sample."""
    bundle = encode_dummy(spec, w)
    naive = ols_fit(bundle.design_star, y, bundle.column_map)
    blocks = build_moment_blocks(spec, thetas, ps)
    beta_c = correct_slopes(naive, blocks)
    posteriors = [posterior_from(t, p) for t, p in zip(thetas, ps)]
    pi = posterior_rows(posteriors, w)
    beta0_c = correct_intercept(y, pi, beta_c)
    return {
        "none": naive.gamma_star.copy(),
        "partial": np.concatenate([[naive.intercept], beta_c]),
        "full": np.concatenate([[beta0_c], beta_c]),
    }


def run_replicate(config: ScenarioConfig, cell: tuple[int, float], replicate_id: int):
    """Estimate vectors for one (n, sigma) cell of one replicate."""
    n, sigma = cell
    spec, thetas, ps, x, w = replicate_designs(config, replicate_id)
    y = replicate_response(config, replicate_id, spec, x, sigma)
    return _fit_methods(spec, thetas, ps, w[:n], y[:n])


@dataclass(frozen=True)
class InterceptVariancePoint:
    n: int
    theoretical: float
    empirical: float


def intercept_variance_curve(
    config: ScenarioConfig, sigma: float, n_list=None
) -> list[InterceptVariancePoint]:
    """Theoretical vs empirical variance of the corrected intercept per n.

    Every replicate redraws the designs and the response; the empirical
    variance is taken across replicates, the theoretical value is the
    closed-form conditional variance averaged over the replicate designs,
    with the exact conditional response variance as the plug-in.
    """
    from .diagnostics import conditional_response_variance, variance_report

    n_list = tuple(config.n_grid if n_list is None else n_list)
    out = []
    for n in n_list:
        beta0_hats = []
        theoreticals = []
        for rep in range(config.replicates):
            spec, thetas, ps, x, w = replicate_designs(config, rep)
            y = replicate_response(config, rep, spec, x, sigma)
            w_n, y_n = w[:n], y[:n]
            bundle = encode_dummy(spec, w_n)
            naive = ols_fit(bundle.design_star, y_n, bundle.column_map)
            blocks = build_moment_blocks(spec, thetas, ps)
            beta_c = correct_slopes(naive, blocks)
            posteriors = [posterior_from(t, p) for t, p in zip(thetas, ps)]
            pi = posterior_rows(posteriors, w_n)
            beta0_hats.append(correct_intercept(y_n, pi, beta_c))
            truth = TruthSpec.default(spec.n_slopes)
            sigma2 = float(
                conditional_response_variance(
                    posteriors, w_n, truth.beta_star[1:], sigma
                ).mean()
            )
            report = variance_report(bundle.design_star, blocks, pi, sigma2)
            theoreticals.append(report.var_beta0_c)
        empirical = float(np.var(beta0_hats, ddof=1))
        out.append(
            InterceptVariancePoint(
                n=n,
                theoretical=float(np.mean(theoreticals)),
                empirical=empirical,
            )
        )
    return out


@dataclass(frozen=True)
class EqpRecord:
    distortion: str
    n_covariates: int
    levels: str
    n: int
    sigma: float
    method: str
    eqp: float
    mcse: float
    failures: int
    replicates: int


@dataclass(frozen=True)
class EqpTable:
    records: tuple[EqpRecord, ...]

    HEADER = "distortion,K,levels,n,sigma,method,eqp,mcse,failures,replicates"

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for r in self.records:
            lines.append(
                f"{r.distortion},{r.n_covariates},{r.levels},{r.n},"
                f"{r.sigma:.17g},{r.method},{r.eqp:.17g},{r.mcse:.17g},"
                f"{r.failures},{r.replicates}"
            )
        return "\n".join(lines) + "\n"


def _replicate_eqps(config: ScenarioConfig, replicate_id: int):
    """EQP per (n, sigma, method) for one replicate, or failure markers."""
    spec, thetas, ps, x, w = replicate_designs(config, replicate_id)
    truth = TruthSpec.default(spec.n_slopes)
    out = {}
    for sigma in config.sigma_list:
        y = replicate_response(config, replicate_id, spec, x, sigma)
        for n in config.n_grid:
            try:
                estimates = _fit_methods(spec, thetas, ps, w[:n], y[:n])
            except RankDeficient:
                out[(n, sigma)] = None
                continue
            out[(n, sigma)] = {
                method: eqp(estimates[method], truth) for method in METHODS
            }
    return out


def run_grid(config: ScenarioConfig, threads: int = 1) -> EqpTable:
    """Full factorial over n_grid x sigma_list x methods, aggregated over
    replicates in fixed replicate order."""
    ids = range(config.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(lambda r: _replicate_eqps(config, r), ids))
    else:
        per_rep = [_replicate_eqps(config, r) for r in ids]

    levels_sig = (
        "-".join(str(lk) for lk in config.levels)
        if config.levels is not None
        else "random"
    )
    records = []
    for sigma in config.sigma_list:
        for n in config.n_grid:
            cells = [rep[(n, sigma)] for rep in per_rep]
            ok = [c for c in cells if c is not None]
            failures = len(cells) - len(ok)
            for method in METHODS:
                vals = np.array([c[method] for c in ok])
                if len(vals) == 0:
                    mean, mcse = math.nan, math.nan
                else:
                    mean = float(vals.mean())
                    mcse = (
                        float(vals.std(ddof=1) / math.sqrt(len(vals)))
                        if len(vals) > 1
                        else 0.0
                    )
                records.append(
                    EqpRecord(
                        distortion=config.distortion,
                        n_covariates=config.n_covariates,
                        levels=levels_sig,
                        n=n,
                        sigma=sigma,
                        method=method,
                        eqp=mean,
                        mcse=mcse,
                        failures=failures,
                        replicates=len(ok),
                    )
                )
    return EqpTable(records=tuple(records))
