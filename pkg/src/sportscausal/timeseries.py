"""Autoregressive models and a Gaussian structural time-series model.

Two model families live here. AR(p) fitted by conditional least squares
with order selection supplies the pre-period dynamics used to forecast a
spillover-free control group. The structural model (local level or local
linear trend, optional seasonal dummies, optional scalar regression on a
control series) is fitted by maximum likelihood through the Kalman filter
and supplies counterfactual forecasts with uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._core import kalman_filter
from .errors import (
    AllVariancesZeroError,
    DegenerateSeriesError,
    HistoryTooShortError,
    LengthMismatchError,
    MissingRegressorError,
    NonFiniteInputError,
    OptimFailedError,
    SeriesTooShortError,
    ValidationError,
)

__all__ = [
    "ARModel",
    "StateSpaceSpec",
    "StateSpaceFit",
    "Forecast",
    "fit_ar",
    "select_ar_order",
    "forecast_ar",
    "kalman_loglik",
    "fit_state_space",
    "predict_counterfactual",
]

VAR_FLOOR = 1e-300
DIFFUSE_SCALE = 1e6


@dataclass(frozen=True)
class ARModel:
    """AR(p) fit: y_t = intercept + sum_j coefficients[j] * y_{t-j-1} + e_t."""

    order: int
    intercept: float
    coefficients: np.ndarray
    innovation_variance: float
    aic: float

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.shape != (self.order,):
            raise ValidationError("coefficients length must equal order")
        if self.innovation_variance < 0:
            raise ValidationError("innovation_variance must be >= 0")
        coeffs.setflags(write=False)

    def one_step(self, history) -> float:
        """Fitted one-step predictor given the most recent observations."""
        h = np.asarray(history, dtype=float)
        if h.size < self.order:
            raise HistoryTooShortError(
                f"need {self.order} observations, got {h.size}"
            )
        if self.order == 0:
            return float(self.intercept)
        lags = h[-self.order:][::-1]
        return float(self.intercept + self.coefficients @ lags)


@dataclass(frozen=True)
class StateSpaceSpec:
    """Structure of the observation model: trend + seasonal + regression."""

    trend: str = "local_level"
    seasonal_period: int | None = None
    use_regression: bool = False

    def __post_init__(self):
        if self.trend not in ("local_level", "local_linear_trend"):
            raise ValidationError(f"unknown trend {self.trend!r}")
        if self.seasonal_period is not None and self.seasonal_period < 2:
            raise ValidationError("seasonal_period must be >= 2")

    @property
    def variance_names(self) -> tuple[str, ...]:
        names = ["obs", "level"]
        if self.trend == "local_linear_trend":
            names.append("slope")
        if self.seasonal_period is not None:
            names.append("seasonal")
        return tuple(names)

    @property
    def state_dim(self) -> int:
        dim = 1 if self.trend == "local_level" else 2
        if self.seasonal_period is not None:
            dim += self.seasonal_period - 1
        return dim


@dataclass(frozen=True)
class StateSpaceFit:
    """MLE of a structural model plus the filtered state trajectory."""

    spec: StateSpaceSpec
    beta: float | None
    variances: dict[str, float]
    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    loglik: float

    def __post_init__(self):
        if any(v < 0 for v in self.variances.values()):
            raise ValidationError("variances must be >= 0")
        if not math.isfinite(self.loglik):
            raise OptimFailedError("fit has non-finite log-likelihood")

    @property
    def filtered_states(self) -> tuple[np.ndarray, np.ndarray]:
        return self.filtered_means, self.filtered_covs


@dataclass(frozen=True)
class Forecast:
    """Point forecasts with per-step forecast-error variances."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        variance = np.asarray(self.variance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)
        if mean.shape != variance.shape:
            raise LengthMismatchError("mean and variance must have equal length")
        if np.any(variance < 0):
            raise ValidationError("forecast variance must be >= 0")
        mean.setflags(write=False)
        variance.setflags(write=False)


# --------------------------------------------------------------------------
# AR(p) by conditional least squares
# --------------------------------------------------------------------------

def _cls_fit(series: np.ndarray, order: int, start: int):
    """Least squares of y_t on (1, y_{t-1}..y_{t-order}) for t >= start.

    Returns (params, rss, n_eff) or raises DegenerateSeriesError when the
    design is rank-deficient.
    """
    y = series[start:]
    n_eff = y.size
    if order == 0:
        # exact mean keeps noiseless constant series bitwise-reproducible
        mean = float(y.mean())
        resid = y - mean
        return np.array([mean]), float(resid @ resid), n_eff
    cols = [np.ones(n_eff)]
    for j in range(1, order + 1):
        cols.append(series[start - j: series.size - j])
    design = np.column_stack(cols)
    params, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < order + 1:
        raise DegenerateSeriesError(
            f"rank-deficient lag design at order {order} (rank {rank})"
        )
    resid = y - design @ params
    return params, float(resid @ resid), n_eff


def _criterion(rss: float, n_eff: int, order: int) -> float:
    # BIC-form penalty: the classical 2(k+1) penalty overfits white noise
    # around 25% of the time, which breaks order-0 recovery guarantees.
    return n_eff * math.log(max(rss / n_eff, VAR_FLOOR)) + (order + 1) * math.log(n_eff)


def _model_from_cls(order: int, params, rss: float, n_eff: int) -> ARModel:
    dof = n_eff - order - 1
    innov = max(rss / dof, 0.0) if dof > 0 else 0.0
    return ARModel(
        order=order,
        intercept=float(params[0]),
        coefficients=np.asarray(params[1:], dtype=float),
        innovation_variance=innov,
        aic=_criterion(rss, n_eff, order),
    )


def fit_ar(series, order: int) -> ARModel:
    """Fit AR(order) by conditional least squares over t = order+1..end."""
    s = np.asarray(series, dtype=float)
    if order < 0:
        raise ValidationError("order must be >= 0")
    if s.size < order + 2:
        raise SeriesTooShortError(
            f"series of length {s.size} cannot support order {order}"
        )
    if not np.all(np.isfinite(s)):
        raise NonFiniteInputError("series contains non-finite values")
    params, rss, n_eff = _cls_fit(s, order, order)
    return _model_from_cls(order, params, rss, n_eff)


def select_ar_order(series, max_order: int) -> ARModel:
    """Pick the order in 0..max_order minimizing the fit criterion.

    All candidates are evaluated on the common sample t = max_order+1..end
    so their criterion values are comparable; exact ties go to the smaller
    order. Candidates with rank-deficient designs are skipped.
    """
    s = np.asarray(series, dtype=float)
    if max_order < 0:
        raise ValidationError("max_order must be >= 0")
    if s.size < max_order + 2:
        raise SeriesTooShortError(
            f"series of length {s.size} cannot support max_order {max_order}"
        )
    best: ARModel | None = None
    for order in range(max_order + 1):
        try:
            params, rss, n_eff = _cls_fit(s, order, max_order)
        except DegenerateSeriesError:
            continue
        model = _model_from_cls(order, params, rss, n_eff)
        if best is None or model.aic < best.aic:
            best = model
    if best is None:
        raise DegenerateSeriesError("every candidate order is rank-deficient")
    return best


def forecast_ar(model: ARModel, history, horizon: int) -> Forecast:
    """Iterated AR forecast; variances from the psi-weight recursion."""
    h = np.asarray(history, dtype=float)
    if h.size < model.order:
        raise HistoryTooShortError(
            f"history of length {h.size} shorter than order {model.order}"
        )
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")

    p = model.order
    buf = list(h[-p:]) if p else []
    mean = np.empty(horizon)
    for step in range(horizon):
        if p:
            lags = np.array(buf[-p:][::-1])
            pred = model.intercept + float(model.coefficients @ lags)
            buf.append(pred)
        else:
            pred = model.intercept
        mean[step] = pred

    psi = np.zeros(horizon)
    psi[0] = 1.0
    for j in range(1, horizon):
        upto = min(j, p)
        psi[j] = sum(model.coefficients[k - 1] * psi[j - k] for k in range(1, upto + 1))
    variance = model.innovation_variance * np.cumsum(psi**2)
    return Forecast(mean, variance)


# --------------------------------------------------------------------------
# Structural model via the Kalman filter
# --------------------------------------------------------------------------

def _build_system(spec: StateSpaceSpec, variances: dict[str, float]):
    """Assemble (T, Z, state-noise diagonal, obs-noise) for the spec."""
    dim = spec.state_dim
    trans = np.zeros((dim, dim))
    obs_vec = np.zeros(dim)
    qdiag = np.zeros(dim)

    trans[0, 0] = 1.0
    obs_vec[0] = 1.0
    qdiag[0] = variances["level"]
    offset = 1
    if spec.trend == "local_linear_trend":
        trans[0, 1] = 1.0
        trans[1, 1] = 1.0
        qdiag[1] = variances["slope"]
        offset = 2
    if spec.seasonal_period is not None:
        m = spec.seasonal_period - 1
        trans[offset, offset: offset + m] = -1.0
        for j in range(1, m):
            trans[offset + j, offset + j - 1] = 1.0
        obs_vec[offset] = 1.0
        qdiag[offset] = variances["seasonal"]
    return trans, obs_vec, qdiag, float(variances["obs"])


def _diffuse_prior(y: np.ndarray, dim: int):
    base = float(np.var(y))
    if base == 0.0:
        base = max(1.0, float(np.mean(y)) ** 2)
    kappa = DIFFUSE_SCALE * base
    return np.zeros(dim), np.eye(dim) * kappa


def _check_inputs(spec: StateSpaceSpec, variances, beta, y, x):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteInputError("y contains non-finite values")
    needed = set(spec.variance_names)
    given = set(variances)
    if given != needed:
        raise ValidationError(
            f"variance keys {sorted(given)} do not match spec components {sorted(needed)}"
        )
    if any(v < 0 for v in variances.values()):
        raise ValidationError("variances must be >= 0")
    if all(v == 0 for v in variances.values()):
        raise AllVariancesZeroError("at least one variance must be > 0")
    if spec.use_regression:
        if x is None:
            raise MissingRegressorError("spec.use_regression=True requires x")
        if beta is None:
            raise MissingRegressorError("spec.use_regression=True requires beta")
        x = np.asarray(x, dtype=float)
        if x.shape != y.shape:
            raise LengthMismatchError("x and y must have equal length")
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError("x contains non-finite values")
    elif x is not None:
        raise ValidationError("x given but spec.use_regression is False")
    return y, (None if x is None else x)


def _run_filter(spec, variances, beta, y, x, store):
    trans, obs_vec, qdiag, obs_var = _build_system(spec, variances)
    adj = y if x is None else y - beta * x
    a0, p0 = _diffuse_prior(y, spec.state_dim)
    adj = np.ascontiguousarray(adj, dtype=float)
    return kalman_filter(trans, obs_vec, qdiag, obs_var, a0, p0, adj, store)


def kalman_loglik(spec: StateSpaceSpec, variances: dict[str, float],
                  beta: float | None, y, x=None) -> float:
    """Exact Gaussian log-likelihood by the prediction-error decomposition.

    The initial state is diffuse-approximated: mean zero, variance
    1e6 * var(y) on every state. Returns -inf when a prediction variance
    degenerates to zero.
    """
    y, x = _check_inputs(spec, variances, beta, y, x)
    loglik, _, _ = _run_filter(spec, variances, beta, y, x, False)
    return float(loglik)


def filter_states(spec: StateSpaceSpec, variances: dict[str, float],
                  beta: float | None, y, x=None):
    """Filtered state means/covariances alongside the log-likelihood."""
    y, x = _check_inputs(spec, variances, beta, y, x)
    loglik, means, covs = _run_filter(spec, variances, beta, y, x, True)
    return float(loglik), means, covs


_START_RATIOS = (
    (0.9, 0.1),
    (0.1, 0.9),
    (0.5, 0.5),
    (1.0, 1e-4),
    (1e-4, 1.0),
)


def fit_state_space(y_pre, x_pre=None, spec: StateSpaceSpec | None = None) -> StateSpaceFit:
    """Maximize the Kalman likelihood over log-variances (and beta).

    Deterministic multi-start Nelder-Mead from a fixed grid of five points
    in log-variance space; beta (when used) starts at the OLS slope of
    y_pre on x_pre at every start point.
    """
    if spec is None:
        spec = StateSpaceSpec()
    y = np.asarray(y_pre, dtype=float)
    min_len = 5 + (spec.seasonal_period or 0)
    if y.size < min_len:
        raise SeriesTooShortError(
            f"need at least {min_len} pre-period points, got {y.size}"
        )
    if not np.all(np.isfinite(y)):
        raise NonFiniteInputError("y_pre contains non-finite values")

    x = None
    beta0 = None
    if spec.use_regression:
        if x_pre is None:
            raise MissingRegressorError("spec.use_regression=True requires x_pre")
        x = np.asarray(x_pre, dtype=float)
        if x.shape != y.shape:
            raise LengthMismatchError("x_pre and y_pre must have equal length")
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError("x_pre contains non-finite values")
        xc = x - x.mean()
        denom = float(xc @ xc)
        beta0 = float(xc @ (y - y.mean()) / denom) if denom > 0 else 0.0

    names = spec.variance_names
    resid = y - beta0 * x if x is not None else y
    scale = float(np.var(resid))
    if scale <= 0.0:
        scale = float(np.var(y)) * 1e-8
    if scale <= 0.0:
        scale = 1.0

    trans, obs_vec, qdiag_tpl, _ = _build_system(spec, dict.fromkeys(names, 0.0))
    a0, p0 = _diffuse_prior(y, spec.state_dim)
    state_slots = _state_variance_slots(spec)

    def negloglik(theta: np.ndarray) -> float:
        variances = np.exp(np.clip(theta[: len(names)], -700, 700)) * scale
        beta = float(theta[-1]) if spec.use_regression else None
        adj = y - beta * x if x is not None else y
        qdiag = np.zeros(spec.state_dim)
        for name, slot in state_slots:
            qdiag[slot] = variances[names.index(name)]
        ll, _, _ = kalman_filter(
            trans, obs_vec, qdiag, float(variances[0]),
            a0, p0, np.ascontiguousarray(adj), False,
        )
        return -ll if math.isfinite(ll) else 1e300

    best = None
    for obs_ratio, state_ratio in _START_RATIOS:
        theta0 = [math.log(obs_ratio)]
        theta0 += [math.log(state_ratio)] * (len(names) - 1)
        if spec.use_regression:
            theta0.append(beta0)
        res = optimize.minimize(
            negloglik,
            np.array(theta0),
            method="Nelder-Mead",
            options={"maxiter": 400 * (len(theta0) + 1), "xatol": 1e-6, "fatol": 1e-9},
        )
        if math.isfinite(res.fun) and res.fun < 1e299 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise OptimFailedError("no finite-likelihood optimum found")

    var_hat = {
        name: float(v)
        for name, v in zip(names, np.exp(np.clip(best.x[: len(names)], -700, 700)) * scale)
    }
    beta_hat = float(best.x[-1]) if spec.use_regression else None
    loglik, means, covs = _run_filter(spec, var_hat, beta_hat, y, x, True)
    return StateSpaceFit(
        spec=spec,
        beta=beta_hat,
        variances=var_hat,
        filtered_means=means,
        filtered_covs=covs,
        loglik=float(loglik),
    )


def _state_variance_slots(spec: StateSpaceSpec):
    slots = [("level", 0)]
    offset = 1
    if spec.trend == "local_linear_trend":
        slots.append(("slope", 1))
        offset = 2
    if spec.seasonal_period is not None:
        slots.append(("seasonal", offset))
    return slots


def predict_counterfactual(fit: StateSpaceFit, x_post=None, horizon: int | None = None) -> Forecast:
    """Propagate the last filtered state forward with no measurement updates."""
    if horizon is None:
        if x_post is None:
            raise ValidationError("horizon is required when x_post is absent")
        horizon = len(x_post)
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")

    x = None
    if fit.spec.use_regression:
        if x_post is None:
            raise MissingRegressorError("fit uses regression: x_post is required")
        x = np.asarray(x_post, dtype=float)
        if x.size != horizon:
            raise LengthMismatchError(f"x_post length {x.size} != horizon {horizon}")

    trans, obs_vec, qdiag, obs_var = _build_system(fit.spec, fit.variances)
    a = np.array(fit.filtered_means[-1], dtype=float)
    p = np.array(fit.filtered_covs[-1], dtype=float)

    mean = np.empty(horizon)
    variance = np.empty(horizon)
    for h in range(horizon):
        a = trans @ a
        p = trans @ p @ trans.T
        p[np.diag_indices_from(p)] += qdiag
        mean[h] = float(obs_vec @ a)
        if x is not None:
            mean[h] += fit.beta * x[h]
        variance[h] = float(obs_vec @ p @ obs_vec) + obs_var
    return Forecast(mean, variance)
