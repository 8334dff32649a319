"""Naive least-squares fit on the error-prone design and the two-stage
correction: slopes through the attenuation inverse, intercept through the
posterior-expected indicators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .categorical import (
    CategoricalSpec,
    DesignBundle,
    ObservedDataset,
    encode_dummy,
    require_fit_ready,
)
from .errors import RankDeficient
from .misclass import posterior_from, posterior_rows
from .moments import MomentBlocks, build_moment_blocks

RANK_TOL = 1e-10


@dataclass(frozen=True)
class NaiveFit:
    """OLS result for the regression of y on the observed-category design."""

    gamma_star: np.ndarray
    sigma2_w: float
    xtx_inv: np.ndarray
    rss: float

    @property
    def intercept(self) -> float:
        return float(self.gamma_star[0])

    @property
    def slopes(self) -> np.ndarray:
        return self.gamma_star[1:]


@dataclass(frozen=True)
class CorrectedFit:
    """Corrected slopes and intercept, with the naive fit attached.

    ``beta_c_star`` keeps the uncorrected intercept alongside the corrected
    slopes; the corrected intercept is exposed separately as ``beta0_c``.
    """

    naive: NaiveFit
    beta_c: np.ndarray
    beta0_c: float
    blocks: MomentBlocks
    pi_rows: np.ndarray

    @property
    def beta_c_star(self) -> np.ndarray:
        return np.concatenate([[self.naive.intercept], self.beta_c])

    @property
    def beta_full(self) -> np.ndarray:
        """Fully corrected parameter vector (beta0_c, beta_c)."""
        return np.concatenate([[self.beta0_c], self.beta_c])


def _describe_column(column_map: dict | None, col: int) -> str:
    if column_map:
        for (k, level), idx in column_map.items():
            if idx == col - 1:  # col 0 is the intercept
                return f" (covariate {k}, level {level})"
    return ""


def ols_fit(design_star: np.ndarray, y: np.ndarray, column_map: dict | None = None) -> NaiveFit:
    """Least squares via QR factorization with a rank guard."""
    design_star = np.asarray(design_star, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, m = design_star.shape
    if n <= m:
        raise RankDeficient(f"need more than {m} rows, got {n}")
    q_mat, r_mat = np.linalg.qr(design_star)
    diag = np.abs(np.diag(r_mat))
    if diag.min() < RANK_TOL * max(diag.max(), 1.0):
        col = int(np.argmin(diag))
        raise RankDeficient(
            f"design column {col} is collinear{_describe_column(column_map, col)}"
        )
    gamma = np.linalg.solve(r_mat, q_mat.T @ y)
    resid = y - design_star @ gamma
    rss = float(resid @ resid)
    r_inv = np.linalg.solve(r_mat, np.eye(m))
    xtx_inv = r_inv @ r_inv.T
    return NaiveFit(
        gamma_star=gamma, sigma2_w=rss / (n - m), xtx_inv=xtx_inv, rss=rss
    )


def correct_slopes(naive: NaiveFit, blocks: MomentBlocks) -> np.ndarray:
    """Undo the asymptotic attenuation of the naive slopes."""
    return blocks.correction @ naive.slopes


def correct_intercept(y: np.ndarray, pi_rows: np.ndarray, beta_c: np.ndarray) -> float:
    """Mean of y minus the posterior-expected indicator row times the
    corrected slopes."""
    y = np.asarray(y, dtype=float).ravel()
    return float(np.mean(y - np.asarray(pi_rows) @ np.asarray(beta_c)))


def fit_corrected(
    spec: CategoricalSpec,
    ds: ObservedDataset,
    thetas: Sequence,
    ps: Sequence,
    bundle: DesignBundle | None = None,
) -> CorrectedFit:
    """Full pipeline: encode, naive fit, moment blocks, slope and intercept
    correction."""
    require_fit_ready(spec, ds)
    if bundle is None:
        bundle = encode_dummy(spec, ds.w)
    naive = ols_fit(bundle.design_star, ds.y, bundle.column_map)
    blocks = build_moment_blocks(spec, thetas, ps)
    beta_c = correct_slopes(naive, blocks)
    posteriors = [posterior_from(thetas[k], ps[k]) for k in range(spec.n_covariates)]
    pi = posterior_rows(posteriors, ds.w)
    beta0_c = correct_intercept(ds.y, pi, beta_c)
    return CorrectedFit(
        naive=naive, beta_c=beta_c, beta0_c=beta0_c, blocks=blocks, pi_rows=pi
    )
