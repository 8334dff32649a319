"""Categorical covariate layout and dummy (indicator) design matrices.

Each of the K covariates has L_k categories labelled 0..L_k-1.  The highest
label L_k-1 is the reference category: it gets no indicator column and its
effect is absorbed by the intercept.  Columns are ordered covariate-major,
level-minor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientRows, OutOfRangeCategory


@dataclass(frozen=True)
class CategoricalSpec:
    """Number of categories per covariate."""

    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if len(self.levels) < 1:
            raise ValueError("at least one covariate is required")
        if any(lk < 2 for lk in self.levels):
            raise ValueError("every covariate needs at least 2 categories")

    @property
    def n_covariates(self) -> int:
        return len(self.levels)

    @property
    def n_slopes(self) -> int:
        """Number of indicator columns: sum of (L_k - 1)."""
        return sum(lk - 1 for lk in self.levels)

    @property
    def n_params(self) -> int:
        """Total parameter count including the intercept."""
        return self.n_slopes + 1


@dataclass(frozen=True)
class ObservedDataset:
    """Response y plus observed categories w (and true categories x if known)."""

    y: np.ndarray
    w: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        w = np.asarray(self.w, dtype=int)
        if w.ndim == 1:
            w = w[:, None]
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        if self.x is not None:
            x = np.asarray(self.x, dtype=int)
            if x.ndim == 1:
                x = x[:, None]
            object.__setattr__(self, "x", x)
        if len(y) != w.shape[0]:
            raise ValueError("y and w row counts differ")
        if self.x is not None and self.x.shape != w.shape:
            raise ValueError("x and w shapes differ")

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class DesignBundle:
    """Indicator design matrices with and without the intercept column."""

    design: np.ndarray
    design_star: np.ndarray
    column_map: dict = field(compare=False)


def encode_dummy(spec: CategoricalSpec, categories: np.ndarray) -> DesignBundle:
    """Dummy-encode an n x K integer category matrix.

    For covariate k, levels 0..L_k-2 each get one 0/1 column; the last level
    is the reference and encodes to all zeros.  ``design_star`` prepends an
    all-ones intercept column.
    """
    cats = np.asarray(categories, dtype=int)
    if cats.ndim == 1:
        cats = cats[:, None]
    n, k = cats.shape
    if k != spec.n_covariates:
        raise ValueError(f"expected {spec.n_covariates} covariates, got {k}")
    for j, lk in enumerate(spec.levels):
        bad = np.nonzero((cats[:, j] < 0) | (cats[:, j] >= lk))[0]
        if bad.size:
            i = int(bad[0])
            raise OutOfRangeCategory(i, j, int(cats[i, j]))

    design = np.zeros((n, spec.n_slopes))
    column_map = {}
    col = 0
    for j, lk in enumerate(spec.levels):
        for level in range(lk - 1):
            design[:, col] = cats[:, j] == level
            column_map[(j, level)] = col
            col += 1
    design_star = np.hstack([np.ones((n, 1)), design])
    return DesignBundle(design=design, design_star=design_star, column_map=column_map)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    warnings: tuple[str, ...]
    errors: tuple[str, ...]
    level_counts: tuple


def validate_dataset(spec: CategoricalSpec, ds: ObservedDataset) -> ValidationReport:
    """Report-only sanity checks: level coverage and degrees of freedom."""
    warnings = []
    errors = []
    counts = []
    for j, lk in enumerate(spec.levels):
        cnt = np.bincount(ds.w[:, j], minlength=lk)
        counts.append(tuple(int(c) for c in cnt[:lk]))
        for level in range(lk):
            if cnt[level] == 0:
                warnings.append(f"RankRisk(k={j}, level={level})")
        if np.any((ds.w[:, j] < 0) | (ds.w[:, j] >= lk)):
            errors.append(f"OutOfRangeCategory(k={j})")
    if ds.n < spec.n_params + 1:
        errors.append("InsufficientRows")
    return ValidationReport(
        ok=not errors,
        warnings=tuple(warnings),
        errors=tuple(errors),
        level_counts=tuple(counts),
    )


def require_fit_ready(spec: CategoricalSpec, ds: ObservedDataset) -> None:
    """Raise when the dataset cannot support a fit at all."""
    if ds.n < spec.n_params + 1:
        raise InsufficientRows(
            f"need at least {spec.n_params + 1} rows to fit {spec.n_params} "
            f"parameters, got {ds.n}"
        )
