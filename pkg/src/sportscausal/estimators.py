"""The four treatment-effect estimators.

ancova
    Regression of post-period means on pre-period means, the treatment
    indicator, and subject features.
bootstrap_matching_estimate
    Stratified resampling, propensity matching, and ANCOVA per replicate;
    replicates aggregated with BH-adjusted p-values.
causal_impact
    Structural time-series counterfactual for the treated group series,
    using the observed control series as regressor.
sports_causal
    Spillover correction: per-subject AR forecasts replace the post-period
    control outcomes before the impact step, so the regressor is the
    spillover-free control the pre-period dynamics imply. Reports the
    uncorrected (vanilla) impact alongside for the spillover gap.

Bootstrap replicates draw their RNG stream from (seed, replicate index)
and subjects are resampled in unit_id order, so results do not depend on
input row order, execution order, or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    AllReplicatesFailedError,
    DegenerateSeriesError,
    NumericalError,
    TooFewRowsError,
    TooShortPrePeriodError,
    ValidationError,
)
from .inference import BootstrapSummary, EffectEstimate, aggregate_replicates, ols_fit
from .matching import fit_propensity, match_nearest, score_all
from .panel import GroupSeries, PanelData, aggregate_groups
from .timeseries import (
    Forecast,
    StateSpaceSpec,
    fit_ar,
    fit_state_space,
    forecast_ar,
    predict_counterfactual,
    select_ar_order,
)

__all__ = [
    "ImpactResult",
    "SportsResult",
    "ancova",
    "bootstrap_matching_estimate",
    "causal_impact",
    "sports_causal",
]

Z_975 = float(stats.norm.ppf(0.975))
DEFAULT_CALIPER_SD = 0.2


@dataclass(frozen=True)
class ImpactResult:
    """Post-period impact: average and cumulative effect plus the counterfactual."""

    estimate: EffectEstimate
    cumulative_effect: float
    counterfactual: Forecast
    relative_effect: float


@dataclass(frozen=True)
class SportsResult:
    """Vanilla and spillover-corrected impact over the same post period."""

    vanilla: ImpactResult
    corrected: ImpactResult
    control_counterfactual: Forecast
    bootstrap: BootstrapSummary | None

    @property
    def spillover_gap(self) -> float:
        """vanilla - corrected: the estimated indirect-effect component."""
        return self.vanilla.estimate.effect - self.corrected.estimate.effect


# --------------------------------------------------------------------------
# ANCOVA
# --------------------------------------------------------------------------

def _ancova_arrays(outcomes, treatment, features, t0: int) -> EffectEstimate:
    n_units = outcomes.shape[0]
    k = features.shape[1]
    if n_units <= k + 3:
        raise TooFewRowsError(
            f"{n_units} subjects cannot identify {k + 3} ANCOVA coefficients"
        )
    pre = outcomes[:, :t0].mean(axis=1)
    post = outcomes[:, t0:].mean(axis=1)
    design = np.column_stack([np.ones(n_units), pre, treatment, features])
    coef, se, _, p = ols_fit(design, post)
    dof = n_units - design.shape[1]
    tcrit = float(stats.t.ppf(0.975, dof))
    effect = float(coef[2])
    return EffectEstimate(
        effect=effect,
        std_error=float(se[2]),
        p_value=float(p[2]),
        ci_low=effect - tcrit * float(se[2]),
        ci_high=effect + tcrit * float(se[2]),
        method="ancova",
    )


def ancova(panel: PanelData) -> EffectEstimate:
    """Effect of treatment on post-period means, adjusting for pre-period
    means and subject features; classical t inference."""
    return _ancova_arrays(panel.outcomes, panel.treatment, panel.features, panel.t0)


# --------------------------------------------------------------------------
# Bootstrap matching
# --------------------------------------------------------------------------

def _replicate_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))


def _canonical_arm_positions(panel: PanelData):
    # unit_id order, not row order: makes resampling invariant to CSV row order
    order = np.argsort(np.asarray(panel.unit_ids))
    ordered_treat = panel.treatment[order]
    return order[ordered_treat == 0], order[ordered_treat == 1]


def _matched_resample(panel: PanelData, rng: np.random.Generator, caliper_sd: float):
    """Stratified resample with replacement, then propensity matching.

    Returns (outcomes, treatment, features) of the matched sample, or None
    when the replicate degenerates (no matches or singular propensity fit).
    """
    control_pos, treated_pos = _canonical_arm_positions(panel)
    idx = np.concatenate([
        control_pos[rng.integers(0, control_pos.size, control_pos.size)],
        treated_pos[rng.integers(0, treated_pos.size, treated_pos.size)],
    ])
    outcomes = panel.outcomes[idx]
    treatment = panel.treatment[idx]
    features = panel.features[idx]

    pre_means = outcomes[:, : panel.t0].mean(axis=1)
    match_feats = np.column_stack([features, pre_means])
    try:
        model = fit_propensity(match_feats, treatment)
        scores = score_all(model, match_feats)
        match = match_nearest(scores, treatment, caliper_sd)
    except NumericalError:
        return None
    if not match.pairs:
        return None
    keep = np.array([i for pair in match.pairs for i in pair])
    return outcomes[keep], treatment[keep], features[keep]


def _bootstrap_matching_replicate(args):
    panel, b, seed, caliper_sd = args
    sample = _matched_resample(panel, _replicate_rng(seed, b), caliper_sd)
    if sample is None:
        return b, None
    outcomes, treatment, features = sample
    try:
        est = _ancova_arrays(outcomes, treatment, features, panel.t0)
    except (ValidationError, NumericalError):
        return b, None
    return b, (est.effect, est.p_value)


def _run_replicates(worker, arglist, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, arglist, chunksize=8))
    else:
        results = [worker(a) for a in arglist]
    results.sort(key=lambda r: r[0])
    return results


def bootstrap_matching_estimate(panel: PanelData, B: int, seed: int,
                                caliper_sd: float = DEFAULT_CALIPER_SD,
                                workers: int = 1) -> BootstrapSummary:
    """Alg.: resample within arms, match on propensity (features plus
    pre-period mean), ANCOVA on the matched sample, aggregate replicates.

    Degenerate replicates are dropped and counted in ``n_failed``.
    """
    if B < 1:
        raise ValidationError("B must be >= 1")
    if seed < 0:
        raise ValidationError("seed must be >= 0")
    args = [(panel, b, seed, caliper_sd) for b in range(1, B + 1)]
    results = _run_replicates(_bootstrap_matching_replicate, args, workers)
    effects = [r[1][0] for r in results if r[1] is not None]
    pvals = [r[1][1] for r in results if r[1] is not None]
    n_failed = B - len(effects)
    if not effects:
        raise AllReplicatesFailedError(f"all {B} replicates degenerated")
    return aggregate_replicates(effects, pvals, n_failed=n_failed)


# --------------------------------------------------------------------------
# causal impact
# --------------------------------------------------------------------------

def _impact_from_counterfactual(treated_post: np.ndarray, cf: Forecast,
                                method: str) -> ImpactResult:
    horizon = treated_post.size
    pointwise = treated_post - cf.mean
    cumulative = float(pointwise.sum())
    effect = cumulative / horizon
    se = float(np.sqrt(cf.variance.sum())) / horizon
    if se > 0:
        p = 2.0 * float(stats.norm.sf(abs(effect) / se))
    else:
        p = 0.0 if effect != 0 else 1.0
    cf_mean = float(cf.mean.mean())
    return ImpactResult(
        estimate=EffectEstimate(
            effect=effect,
            std_error=se,
            p_value=p,
            ci_low=effect - Z_975 * se,
            ci_high=effect + Z_975 * se,
            method=method,
        ),
        cumulative_effect=cumulative,
        counterfactual=cf,
        relative_effect=effect / cf_mean if cf_mean != 0 else float("inf"),
    )


def causal_impact(series: GroupSeries, spec: StateSpaceSpec | None = None,
                  method: str = "causal_impact") -> ImpactResult:
    """Fit the structural model on the pre period and read the effect off
    the gap between the observed treated series and its counterfactual."""
    if spec is None:
        spec = StateSpaceSpec(use_regression=True)
    min_pre = 5 + (spec.seasonal_period or 0)
    if series.t0 < min_pre:
        raise TooShortPrePeriodError(
            f"need t0 >= {min_pre} pre-period points, got {series.t0}"
        )
    t0 = series.t0
    x_pre = series.control[:t0] if spec.use_regression else None
    x_post = series.control[t0:] if spec.use_regression else None
    fit = fit_state_space(series.treated[:t0], x_pre, spec)
    cf = predict_counterfactual(fit, x_post, series.n_post)
    return _impact_from_counterfactual(series.treated[t0:], cf, method)


# --------------------------------------------------------------------------
# spillover-corrected impact
# --------------------------------------------------------------------------

def _corrected_series(panel: PanelData, ar_max_order: int):
    """Replace post-period control outcomes by per-subject AR forecasts.

    One lag order is selected on the aggregated control pre-period series;
    each control subject gets its own fit at that order, falling back to
    the aggregate-level model when its design is degenerate.
    """
    agg = aggregate_groups(panel)
    t0, horizon = panel.t0, panel.n_post
    control_rows = panel.outcomes[panel.control_mask]

    order = select_ar_order(agg.control[:t0], ar_max_order).order
    fallback = fit_ar(agg.control[:t0], order)

    forecasts = np.empty((control_rows.shape[0], horizon))
    variances = np.empty((control_rows.shape[0], horizon))
    for i, row in enumerate(control_rows):
        try:
            model = fit_ar(row[:t0], order)
        except DegenerateSeriesError:
            model = fallback
        fc = forecast_ar(model, row[:t0], horizon)
        forecasts[i] = fc.mean
        variances[i] = fc.variance

    predicted_control = forecasts.mean(axis=0)
    # variance of the mean of independent per-subject forecasts
    predicted_var = variances.sum(axis=0) / control_rows.shape[0] ** 2
    corrected = GroupSeries(
        control=np.concatenate([agg.control[:t0], predicted_control]),
        treated=agg.treated,
        t0=t0,
    )
    return agg, corrected, Forecast(predicted_control, predicted_var)


def _sports_single_pass(panel: PanelData, spec: StateSpaceSpec, ar_max_order: int):
    agg, corrected_series, control_cf = _corrected_series(panel, ar_max_order)
    vanilla = causal_impact(agg, spec, method="causal_impact")
    corrected = causal_impact(corrected_series, spec, method="sports")
    return vanilla, corrected, control_cf


def _sports_replicate(args):
    panel, b, seed, caliper_sd, spec, ar_max_order = args
    sample = _matched_resample(panel, _replicate_rng(seed, b), caliper_sd)
    if sample is None:
        return b, None
    outcomes, treatment, features = sample
    sub = PanelData(
        outcomes, treatment, features, panel.t0,
        tuple(f"r{j:06d}" for j in range(outcomes.shape[0])),
    )
    try:
        _, corrected, _ = _sports_single_pass(sub, spec, ar_max_order)
    except (ValidationError, NumericalError):
        return b, None
    return b, (corrected.estimate.effect, corrected.estimate.p_value)


def sports_causal(panel: PanelData, spec: StateSpaceSpec | None = None,
                  ar_max_order: int = 5, B: int = 1, seed: int = 0,
                  caliper_sd: float = DEFAULT_CALIPER_SD,
                  workers: int = 1) -> SportsResult:
    """Spillover-corrected impact with optional bootstrap-matching wrapper.

    The headline vanilla/corrected results come from one pass over the full
    panel. With B > 1, each replicate resamples within arms, re-matches,
    and re-runs the corrected pipeline; the replicate effects feed the
    bootstrap summary. With B = 1 the summary restates the single pass.
    """
    if spec is None:
        spec = StateSpaceSpec(use_regression=True)
    if B < 1:
        raise ValidationError("B must be >= 1")
    if seed < 0:
        raise ValidationError("seed must be >= 0")
    if panel.t0 < ar_max_order + 2:
        raise TooShortPrePeriodError(
            f"t0={panel.t0} too short for ar_max_order={ar_max_order}"
        )
    min_pre = 5 + (spec.seasonal_period or 0)
    if panel.t0 < min_pre:
        raise TooShortPrePeriodError(
            f"need t0 >= {min_pre} pre-period points, got {panel.t0}"
        )

    vanilla, corrected, control_cf = _sports_single_pass(panel, spec, ar_max_order)

    if B == 1:
        summary = aggregate_replicates(
            [corrected.estimate.effect], [corrected.estimate.p_value]
        )
    else:
        args = [(panel, b, seed, caliper_sd, spec, ar_max_order) for b in range(1, B + 1)]
        results = _run_replicates(_sports_replicate, args, workers)
        effects = [r[1][0] for r in results if r[1] is not None]
        pvals = [r[1][1] for r in results if r[1] is not None]
        if not effects:
            raise AllReplicatesFailedError(f"all {B} replicates degenerated")
        summary = aggregate_replicates(effects, pvals, n_failed=B - len(effects))

    return SportsResult(
        vanilla=vanilla,
        corrected=corrected,
        control_counterfactual=control_cf,
        bootstrap=summary,
    )
