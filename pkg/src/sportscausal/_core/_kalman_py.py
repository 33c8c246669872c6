"""Pure-NumPy Kalman filter kernel (fallback backend).

Semantics are shared with the compiled kernel in ``_kalman_cy``: a linear
Gaussian state-space filter evaluated by the prediction-error decomposition.
The prior (init_mean, init_cov) is the predictive distribution of the state
at the first observation; transitions happen between observations.

State dimension one is special-cased with scalar arithmetic because it is
by far the most common configuration and the generic path pays NumPy call
overhead on every step.
"""

from __future__ import annotations

import math

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def kalman_filter(trans, obs_vec, state_var, obs_var, init_mean, init_cov, y, store):
    """Run the filter over ``y`` and return (loglik, filtered means, filtered covs).

    trans : (s, s) transition matrix
    obs_vec : (s,) observation row vector
    state_var : (s,) diagonal of the state-noise covariance
    obs_var : scalar observation-noise variance
    init_mean, init_cov : prior for the state at the first observation
    y : (n,) observations, already adjusted for any regression offset
    store : when True, per-step filtered state means/covariances are returned
            (otherwise both are None)

    A non-positive prediction variance yields loglik = -inf and aborts.
    """
    n = y.shape[0]
    s = obs_vec.shape[0]
    if s == 1:
        return _filter_scalar(
            float(trans[0, 0]), float(obs_vec[0]), float(state_var[0]),
            float(obs_var), float(init_mean[0]), float(init_cov[0, 0]), y, store,
        )

    a = np.array(init_mean, dtype=float)
    p = np.array(init_cov, dtype=float)
    eye = np.eye(s)
    means = np.empty((n, s)) if store else None
    covs = np.empty((n, s, s)) if store else None

    loglik = 0.0
    for t in range(n):
        zp = p @ obs_vec
        f = float(obs_vec @ zp) + obs_var
        if f <= 0.0 or not math.isfinite(f):
            return -math.inf, means, covs
        v = float(y[t]) - float(obs_vec @ a)
        loglik -= 0.5 * (LOG_2PI + math.log(f) + v * v / f)
        k = zp / f
        a = a + k * v
        # Joseph-form update: stable under the huge diffuse prior variance
        ikz = eye - np.outer(k, obs_vec)
        p = ikz @ p @ ikz.T + obs_var * np.outer(k, k)
        p = 0.5 * (p + p.T)
        if store:
            means[t] = a
            covs[t] = p
        a = trans @ a
        p = trans @ p @ trans.T
        p[np.diag_indices(s)] += state_var
    return loglik, means, covs


def _filter_scalar(t11, z1, q1, h, a, p, y, store):
    n = y.shape[0]
    means = np.empty((n, 1)) if store else None
    covs = np.empty((n, 1, 1)) if store else None
    z2 = z1 * z1
    loglik = 0.0
    for i in range(n):
        f = z2 * p + h
        if f <= 0.0 or not math.isfinite(f):
            return -math.inf, means, covs
        v = y[i] - z1 * a
        loglik -= 0.5 * (LOG_2PI + math.log(f) + v * v / f)
        k = p * z1 / f
        a = a + k * v
        ikz = 1.0 - k * z1
        p = ikz * p * ikz + k * k * h
        if store:
            means[i, 0] = a
            covs[i, 0, 0] = p
        a = t11 * a
        p = t11 * p * t11 + q1
    return loglik, means, covs
