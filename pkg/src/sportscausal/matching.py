"""Propensity scores and greedy nearest-neighbor caliper matching.

The propensity model is a logistic regression fitted from scratch by
iteratively reweighted least squares; matching is the deterministic
Rosenbaum-Rubin recipe: greedy 1:1 without replacement on the logit scale,
caliper expressed in pooled standard deviations of the logit scores.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidPanelError,
    SingularDesignError,
    ValidationError,
)

__all__ = ["PropensityModel", "MatchSet", "fit_propensity", "score", "match_nearest"]

GRAD_TOL = 1e-8
MAX_ITER = 100
PROB_CLAMP = 1e-12
SATURATION = 1e-10


@dataclass(frozen=True)
class PropensityModel:
    """Logistic model P(D=1 | x) = sigmoid(intercept + weights . x)."""

    intercept: float
    weights: np.ndarray
    converged: bool
    iterations: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @property
    def n_features(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class MatchSet:
    """1:1 matches on the logit-propensity scale.

    pairs : (treated_index, control_index) tuples, controls never reused
    unmatched_treated : treated indices with no control inside the caliper
    caliper : absolute caliper on the logit scale
    """

    pairs: tuple[tuple[int, int], ...]
    unmatched_treated: tuple[int, ...]
    caliper: float


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_propensity(features, treatment) -> PropensityModel:
    """IRLS logistic regression of treatment on features (plus intercept).

    With no features the closed-form intercept-only model is returned.
    Detected separation (saturated probabilities with growing weights)
    stops early with ``converged=False`` rather than diverging.
    """
    d = np.asarray(treatment, dtype=float)
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(d.size, -1)
    if x.shape[0] != d.size:
        raise DimensionMismatchError("features rows must match treatment length")
    n_treated = float(d.sum())
    if n_treated == 0 or n_treated == d.size:
        raise InvalidPanelError("both treatment groups must be nonempty")

    if x.shape[1] == 0:
        share = n_treated / d.size
        return PropensityModel(
            intercept=math.log(share / (1.0 - share)),
            weights=np.empty(0),
            converged=True,
            iterations=0,
        )

    design = np.column_stack([np.ones(d.size), x])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesignError("feature columns are linearly dependent")
    beta = np.zeros(design.shape[1])
    beta[0] = math.log(n_treated / (d.size - n_treated))
    prev_norm = np.linalg.norm(beta)

    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITER + 1):
        eta = design @ beta
        mu = _sigmoid(eta)
        grad = design.T @ (d - mu)
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        w = mu * (1.0 - mu)
        hess = design.T @ (w[:, None] * design)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise SingularDesignError("singular information matrix in IRLS")
        if not np.all(np.isfinite(step)):
            raise SingularDesignError("non-finite IRLS step")
        beta = beta + step
        norm = np.linalg.norm(beta)
        saturated = np.any(mu < SATURATION) or np.any(mu > 1.0 - SATURATION)
        if saturated and norm > prev_norm:
            break
        prev_norm = norm

    return PropensityModel(
        intercept=float(beta[0]),
        weights=beta[1:].copy(),
        converged=converged,
        iterations=iterations,
    )


def score(model: PropensityModel, features_row) -> float:
    """Propensity of one subject, clamped away from 0 and 1."""
    row = np.asarray(features_row, dtype=float)
    if row.size != model.n_features:
        raise DimensionMismatchError(
            f"expected {model.n_features} features, got {row.size}"
        )
    eta = model.intercept + float(model.weights @ row)
    p = 1.0 / (1.0 + math.exp(-eta)) if eta >= 0 else math.exp(eta) / (1.0 + math.exp(eta))
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def score_all(model: PropensityModel, features) -> np.ndarray:
    """Vectorized :func:`score` over feature rows."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, model.n_features)
    if x.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected {model.n_features} features, got {x.shape[1]}"
        )
    p = _sigmoid(model.intercept + x @ model.weights)
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def match_nearest(scores, treatment, caliper_sd: float = 0.2) -> MatchSet:
    """Greedy 1:1 nearest-neighbor matching on logit propensity.

    Treated units are processed in descending logit order; each takes its
    nearest still-unused control within the caliper (distance ties go to
    the smaller control index). The caliper is caliper_sd pooled standard
    deviations of the logit scores, where pooled means the square root of
    the average of the two within-group variances.
    """
    if caliper_sd <= 0:
        raise ValidationError("caliper_sd must be > 0")
    p = np.asarray(scores, dtype=float)
    d = np.asarray(treatment, dtype=np.int64)
    if p.shape != d.shape:
        raise DimensionMismatchError("scores and treatment must have equal length")
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValidationError("scores must lie strictly inside (0, 1)")
    t_idx = np.flatnonzero(d == 1)
    c_idx = np.flatnonzero(d == 0)
    if t_idx.size == 0 or c_idx.size == 0:
        raise InvalidPanelError("both treatment groups must be nonempty")

    logit = np.log(p / (1.0 - p))
    var_t = float(np.var(logit[t_idx], ddof=1)) if t_idx.size > 1 else 0.0
    var_c = float(np.var(logit[c_idx], ddof=1)) if c_idx.size > 1 else 0.0
    pooled_sd = math.sqrt(0.5 * (var_t + var_c))
    caliper = caliper_sd * pooled_sd
    if pooled_sd <= 1e-12:  # roundoff-level spread counts as degenerate
        warnings.warn(
            "degenerate scores: zero pooled s.d., matching on exact equality only",
            stacklevel=2,
        )

    # descending treated logit; equal logits by ascending original index
    order = t_idx[np.argsort(-logit[t_idx], kind="stable")]
    c_logit = logit[c_idx]
    available = np.ones(c_idx.size, dtype=bool)

    pairs = []
    unmatched = []
    for ti in order:
        dist = np.abs(c_logit - logit[ti])
        dist[~available] = np.inf
        j = int(np.argmin(dist))
        if dist[j] <= caliper:
            pairs.append((int(ti), int(c_idx[j])))
            available[j] = False
        else:
            unmatched.append(int(ti))
    return MatchSet(tuple(pairs), tuple(unmatched), caliper)
