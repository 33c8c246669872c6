"""Synthetic experiment generator with known ground truth.

Outcomes follow

    y_it = baseline + offset_i(t) + seasonal_t + noise_it
           + 1{t > t0} * ramp(t) * (d * D_i + s * (1 - D_i))

where ``noise_it`` is AR(1) with a market-wide component shared by every
subject plus an idiosyncratic component (same autocorrelation, variance
split by ``common_noise_share``). The shared component is what makes the
control group series informative about the treated counterfactual; without
it the two group means would be independent and regression-based
counterfactuals would carry no signal.

Spillover flows treated -> control only: changing d never touches a
control cell, and the control group is affected solely through the fixed
``s`` term.

When ``confounder_strength`` > 0, a standard-normal feature z_i (exposed
as the single feature column) shifts assignment odds by strength * z_i,
shifts the subject's level by strength * z_i throughout, and adds
3 * strength * (z_i^2 - 1) from t0+1 onwards. The quadratic post-period
deepening is what defeats a linear covariate adjustment (a time-constant
level shift is fully absorbed by regressing on the pre-period mean and z),
while staying exactly balanceable by matching on z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfigError, InvalidFractionError
from .panel import PanelData

__all__ = ["SimConfig", "gen_experiment", "fraction_sweep"]


@dataclass(frozen=True)
class SimConfig:
    """Knobs of the synthetic experiment generator."""

    m: int = 100
    n: int = 100
    t0: int = 60
    t_post: int = 30
    baseline: float = 100.0
    ar_coefficient: float = 0.6
    noise_sd: float = 1.0
    direct_effect: float = 10.0
    spillover_effect: float = 0.0
    ramp_length: int = 0
    confounder_strength: float = 0.0
    seasonal_period: int | None = None
    seasonal_amplitude: float = 0.0
    common_noise_share: float = 0.5
    subject_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidConfigError("m and n must be >= 1")
        if self.t0 < 1 or self.t_post < 1:
            raise InvalidConfigError("t0 and t_post must be >= 1")
        if not abs(self.ar_coefficient) < 1:
            raise InvalidConfigError("|ar_coefficient| must be < 1")
        if self.noise_sd < 0 or self.subject_sd < 0:
            raise InvalidConfigError("noise_sd and subject_sd must be >= 0")
        if self.ramp_length < 0:
            raise InvalidConfigError("ramp_length must be >= 0")
        if not 0.0 <= self.common_noise_share <= 1.0:
            raise InvalidConfigError("common_noise_share must lie in [0, 1]")
        if self.seasonal_period is not None and self.seasonal_period < 2:
            raise InvalidConfigError("seasonal_period must be >= 2")
        if self.seed < 0:
            raise InvalidConfigError("seed must be >= 0")


def _ar1_paths(rng: np.random.Generator, rows: int, length: int,
               phi: float, innov_sd: float) -> np.ndarray:
    """Stationary AR(1) rows: x_t = phi x_{t-1} + innov, x_0 ~ N(0, marginal)."""
    out = np.zeros((rows, length))
    if innov_sd == 0.0 or rows == 0 or length == 0:
        return out
    marginal = innov_sd / math.sqrt(1.0 - phi * phi)
    out[:, 0] = rng.normal(0.0, marginal, rows)
    shocks = rng.normal(0.0, innov_sd, (rows, length - 1))
    for t in range(1, length):
        out[:, t] = phi * out[:, t - 1] + shocks[:, t - 1]
    return out


def gen_experiment(config: SimConfig) -> tuple[PanelData, dict]:
    """Generate one panel plus its ground truth, fully determined by the seed."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    total = config.m + config.n
    length = config.t0 + config.t_post
    phi = config.ar_coefficient

    # fixed draw order keeps control cells invariant to effect-size changes
    z = rng.standard_normal(total)
    if config.confounder_strength > 0:
        base_logit = math.log(config.n / config.m)
        probs = 1.0 / (1.0 + np.exp(-(base_logit + config.confounder_strength * z)))
        treatment = (rng.random(total) < probs).astype(np.int64)
        while treatment.sum() in (0, total):
            treatment = (rng.random(total) < probs).astype(np.int64)
    else:
        perm = rng.permutation(total)
        treatment = np.zeros(total, dtype=np.int64)
        treatment[perm[config.m:]] = 1

    subject_offsets = rng.normal(0.0, config.subject_sd, total) if config.subject_sd > 0 \
        else np.zeros(total)

    share = config.common_noise_share
    common_sd = config.noise_sd * math.sqrt(share)
    idio_sd = config.noise_sd * math.sqrt(1.0 - share)
    common = _ar1_paths(rng, 1, length, phi, common_sd)[0]
    idio = _ar1_paths(rng, total, length, phi, idio_sd)

    t_axis = np.arange(1, length + 1)
    seasonal = np.zeros(length)
    if config.seasonal_period is not None and config.seasonal_amplitude != 0.0:
        seasonal = config.seasonal_amplitude * np.sin(
            2.0 * np.pi * t_axis / config.seasonal_period
        )

    post = t_axis > config.t0
    if config.ramp_length > 0:
        ramp = np.clip((t_axis - config.t0) / config.ramp_length, 0.0, 1.0) * post
    else:
        ramp = post.astype(float)

    outcomes = config.baseline + subject_offsets[:, None] + seasonal[None, :] \
        + common[None, :] + idio
    effect_per_unit = np.where(
        treatment == 1, config.direct_effect, config.spillover_effect
    )
    outcomes += effect_per_unit[:, None] * ramp[None, :]

    if config.confounder_strength > 0:
        level = config.confounder_strength * z
        deepen = 3.0 * config.confounder_strength * (z * z - 1.0)
        outcomes += level[:, None]
        outcomes += deepen[:, None] * post[None, :].astype(float)
        features = z.reshape(-1, 1)
    else:
        features = np.empty((total, 0))

    width = len(str(total - 1))
    unit_ids = tuple(f"u{i:0{width}d}" for i in range(total))
    panel = PanelData(outcomes, treatment, features, config.t0, unit_ids)
    truth = {
        "direct_effect": config.direct_effect,
        "spillover_effect": config.spillover_effect,
    }
    return panel, truth


def fraction_sweep(base: SimConfig, fractions, conservation: float):
    """Panels over treated fractions with a conserved-total spillover profile.

    For each fraction rho the arm sizes become n = round(rho N), m = N - n
    (N fixed by the base config) and the spillover is
    s(rho) = -conservation * d * n / m: what the treated gain is drawn
    proportionally from the control pool. Seeds derive from
    (base.seed, fraction index).
    """
    total = base.m + base.n
    out = []
    for i, rho in enumerate(fractions):
        if not 0.0 < rho < 1.0:
            raise InvalidFractionError(f"fraction {rho} outside (0, 1)")
        n = round(rho * total)
        m = total - n
        if n < 1 or m < 1:
            raise InvalidFractionError(
                f"fraction {rho} leaves an empty arm for N={total}"
            )
        spill = -conservation * base.direct_effect * n / m
        seed = int(np.random.SeedSequence(entropy=base.seed, spawn_key=(i,))
                   .generate_state(1)[0])
        cfg = replace(base, m=m, n=n, spillover_effect=spill, seed=seed)
        panel, truth = gen_experiment(cfg)
        out.append((float(rho), panel, truth))
    return out
