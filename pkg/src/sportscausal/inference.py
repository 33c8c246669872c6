"""Shared statistical kernels: OLS with t inference, BH adjustment, and
bootstrap-replicate aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    RankDeficientError,
    TooFewRowsError,
    ValidationError,
)

__all__ = [
    "EffectEstimate",
    "BootstrapSummary",
    "ols_fit",
    "bh_adjust",
    "aggregate_replicates",
]

METHODS = ("ancova", "bootstrap_matching", "causal_impact", "sports")


@dataclass(frozen=True)
class EffectEstimate:
    """Point effect with its standard error, p-value, and 95% interval."""

    effect: float
    std_error: float
    p_value: float
    ci_low: float
    ci_high: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError("p_value must lie in [0, 1]")
        if self.std_error < 0:
            raise ValidationError("std_error must be >= 0")


@dataclass(frozen=True)
class BootstrapSummary:
    """Replicate effects/p-values with their BH-adjusted aggregate.

    The headline p-value is the median BH q-value; the headline interval
    is the 2.5/97.5 percentile range of the replicate effects. Replicates
    that degenerated (and were dropped) are counted in ``n_failed``.
    """

    replicate_effects: np.ndarray
    replicate_pvalues: np.ndarray
    q_values: np.ndarray
    mean_effect: float
    B: int
    p_value: float
    ci_low: float
    ci_high: float
    n_failed: int = 0

    def __post_init__(self):
        for name in ("replicate_effects", "replicate_pvalues", "q_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        if not (len(self.replicate_effects) == len(self.replicate_pvalues)
                == len(self.q_values) == self.B):
            raise LengthMismatchError("replicate sequences must all have length B")


def ols_fit(design, response):
    """Least squares via QR with classical t-based inference.

    Returns (coefficients, std_errors, t_stats, p_values). Standard errors
    come from sigma^2 (X'X)^-1 with sigma^2 = RSS / (rows - columns);
    p-values are two-sided from the t distribution on rows - columns
    degrees of freedom. An exact fit yields zero standard errors and
    p-values of 0 for nonzero coefficients (1 for zero ones).
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim != 2:
        raise ValidationError("design must be 2-d")
    n, k = x.shape
    if y.shape != (n,):
        raise LengthMismatchError("response length must match design rows")
    if n <= k:
        raise TooFewRowsError(f"{n} rows cannot identify {k} coefficients")
    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if np.any(diag < 1e-10 * max(diag.max(), 1.0)):
        raise RankDeficientError("design matrix is rank-deficient")

    coef = np.linalg.solve(r, q.T @ y)
    resid = y - x @ coef
    rss = float(resid @ resid)
    dof = n - k
    sigma2 = rss / dof
    rinv = np.linalg.solve(r, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(rinv * rinv, axis=1))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.inf * np.sign(coef)))
    p_values = np.where(
        se > 0,
        2.0 * stats.t.sf(np.abs(t_stats), dof),
        np.where(coef == 0, 1.0, 0.0),
    )
    return coef, se, t_stats, p_values


def bh_adjust(p_values):
    """Benjamini-Hochberg step-up q-values, in the input order."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise EmptyInputError("p_values is empty")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValidationError("p-values must lie in [0, 1]")
    b = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * b / np.arange(1, b + 1)
    q_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    q = np.empty(b)
    q[order] = np.minimum(q_sorted, 1.0)
    return q


def aggregate_replicates(effects, p_values, n_failed: int = 0) -> BootstrapSummary:
    """Summarize bootstrap replicates: mean effect, BH q-values, percentile CI."""
    e = np.asarray(effects, dtype=float)
    p = np.asarray(p_values, dtype=float)
    if e.size != p.size:
        raise LengthMismatchError("effects and p_values must have equal length")
    if e.size == 0:
        raise EmptyInputError("no replicates to aggregate")
    q = bh_adjust(p)
    lo, hi = np.percentile(e, [2.5, 97.5])
    return BootstrapSummary(
        replicate_effects=e.copy(),
        replicate_pvalues=p.copy(),
        q_values=q,
        mean_effect=float(e.mean()),
        B=int(e.size),
        p_value=float(np.median(q)),
        ci_low=float(lo),
        ci_high=float(hi),
        n_failed=int(n_failed),
    )
