"""Statistical tests for the seven ecosystem propositions.

Each test returns a PropositionVerdict: CONFIRMED or REFUTED only when the
declared condition is met at alpha = 0.05, INCONCLUSIVE otherwise. All
tests are pure functions of their inputs and the supplied random generator
seed. No multiple-comparison correction is applied across propositions by
default; pass bonferroni=True to run_battery for alpha/7.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import coarse, ei as ei_mod
from .errors import (
    EmergelabError,
    MisalignedSeries,
    MissingFields,
    NoVariation,
    TooFewLevels,
    TooFewSeries,
    TooShort,
)
from .events import CommitEvent
from .stats import (
    best_lead,
    logistic_fit,
    logistic_lrt,
    mann_kendall,
    ols_fit,
    permutation_mean_diff,
    power_law_mle,
    single_break_test,
)

CONFIRMED = "CONFIRMED"
REFUTED = "REFUTED"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class PropositionVerdict:
    id: str
    verdict: str
    statistics: dict[str, float] = field(default_factory=dict)
    p_values: dict[str, float] = field(default_factory=dict)
    effect: dict[str, float] = field(default_factory=dict)
    inputs: dict[str, object] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "verdict": self.verdict,
            "statistics": self.statistics,
            "p_values": self.p_values,
            "effect": self.effect,
            "inputs": self.inputs,
            "notes": list(self.notes),
        }


def p1_entropy_slopes(
    high: Sequence[Sequence[float]],
    low: Sequence[Sequence[float]],
    n_perm: int = 10000,
    alpha: float = 0.05,
    rng: Optional[np.random.Generator] = None,
) -> PropositionVerdict:
    """Entropy-trajectory slopes: agent-intensive vs low-agent ecosystems.

    OLS slope per series; group difference by label permutation. CONFIRMED
    when high-group slopes are significantly steeper; REFUTED when the
    difference is significantly inverted; INCONCLUSIVE otherwise.
    """
    if len(high) < 2 or len(low) < 2:
        raise TooFewSeries("need at least 2 series per group")
    for series in list(high) + list(low):
        if len(series) < 10:
            raise TooShort("each series needs at least 10 windows")
    rng = np.random.default_rng() if rng is None else rng
    slopes_h = np.array([ols_fit(np.arange(len(s)), s).slope for s in high])
    slopes_l = np.array([ols_fit(np.arange(len(s)), s).slope for s in low])
    diff, p_greater = permutation_mean_diff(
        slopes_h, slopes_l, n_perm=n_perm, rng=rng, alternative="greater"
    )
    _, p_less = permutation_mean_diff(
        slopes_h, slopes_l, n_perm=n_perm, rng=rng, alternative="less"
    )

    if diff > 0 and p_greater < alpha:
        verdict = CONFIRMED
    elif diff < 0 and p_less < alpha:
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P1",
        verdict=verdict,
        statistics={
            "mean_slope_high": float(slopes_h.mean()),
            "mean_slope_low": float(slopes_l.mean()),
            "slope_diff": diff,
        },
        p_values={"permutation": p_greater},
        effect={"slope_diff": diff},
        inputs={"n_high": len(high), "n_low": len(low)},
        notes=("slope difference significantly inverted",) if verdict == REFUTED else (),
    )


def p2_changepoint(
    r: Sequence[float],
    reliability: Sequence[float],
    n_perm: int = 5000,
    alpha: float = 0.05,
    threshold_range: tuple[float, float] = (1.0, 3.0),
    rng: Optional[np.random.Generator] = None,
) -> PropositionVerdict:
    """Reliability phase transition at a critical agent-to-human ratio.

    Single structural break by SSE minimization over reliability sorted by
    r; sup-F significance via residual-block permutation. CONFIRMED when a
    significant break lands inside the hypothesized ratio range; REFUTED
    when no significant break exists.
    """
    r = np.asarray(r, dtype=float)
    reliability = np.asarray(reliability, dtype=float)
    if len(r) != len(reliability):
        raise MisalignedSeries("r and reliability must be aligned")
    if len(r) < 30:
        raise TooShort("need at least 30 points")
    order = np.argsort(r, kind="stable")
    r, reliability = r[order], reliability[order]
    if np.ptp(r) == 0:
        return PropositionVerdict(
            id="P2",
            verdict=INCONCLUSIVE,
            inputs={"n": len(r)},
            notes=("no variation in agent-to-human ratio; threshold unidentifiable",),
        )
    rng = np.random.default_rng() if rng is None else rng
    result = single_break_test(reliability, n_perm=n_perm, rng=rng)
    k = result.index
    r_star = float((r[k - 1] + r[k]) / 2.0)

    lo, hi = threshold_range
    if result.p < alpha and lo <= r_star <= hi:
        verdict = CONFIRMED
    elif result.p >= alpha:
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P2",
        verdict=verdict,
        statistics={
            "sup_f": result.sup_f,
            "r_star": r_star,
            "left_mean": result.left_mean,
            "right_mean": result.right_mean,
        },
        p_values={"sup_f_permutation": result.p},
        effect={"mean_shift": result.right_mean - result.left_mean},
        inputs={"n": len(r), "threshold_range": list(threshold_range)},
        notes=()
        if verdict != INCONCLUSIVE
        else (f"significant break at r*={r_star:.3g} outside hypothesized range",),
    )


def p3_emergence(
    events: list[CommitEvent],
    dt: int = 86400,
    bins: int = 4,
    budget: int = 64,
    n_boot: int = 500,
    alpha: float = 0.05,
    rng: Optional[np.random.Generator] = None,
    dep_snapshots=(),
) -> PropositionVerdict:
    """Causal emergence: macro EI vs micro EI on a measured event log."""
    series = coarse.build_series(events, dep_snapshots=dep_snapshots, dt=dt)
    if len(series.windows) < 100:
        raise TooShort("need at least 100 windows for EI estimation")
    rng = np.random.default_rng() if rng is None else rng
    micros = [micro for micro, _ in series.windows]
    micro_seq, _ = ei_mod.compress_micro(micros, budget=budget)
    macro_seq, _ = ei_mod.discretize(series.macro_matrix, k=bins)
    result = ei_mod.causal_emergence(
        micro_seq, macro_seq, n_boot=n_boot, rng=rng, bins=bins
    )
    if result.classification == "TOP_HEAVY":
        verdict = CONFIRMED
    elif result.classification == "BOTTOM_HEAVY" or result.ce <= 0:
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P3",
        verdict=verdict,
        statistics={
            "ei_micro": result.ei_micro,
            "ei_macro": result.ei_macro,
            "ce": result.ce,
            "n_micro_states": result.n_micro_states,
            "n_macro_states": result.n_macro_states,
        },
        p_values={"bootstrap": result.p_value},
        effect={"ce_bits": result.ce},
        inputs={"windows": len(series.windows), "bins": bins, "budget": budget},
        notes=(result.classification,),
    )


def p4_powerlaw(
    levels: Sequence[tuple[float, Sequence[float]]],
    cascade_sizes: Optional[Sequence[int]] = None,
    n_boot: int = 2000,
    alpha: float = 0.05,
    rng: Optional[np.random.Generator] = None,
) -> PropositionVerdict:
    """Superlinear scaling of change rate with agent count.

    Fits log(rate) ~ alpha * log(n) by OLS over all replicates; the 95%
    confidence interval for the exponent comes from a within-level
    replicate bootstrap. Secondarily fits the cascade-size tail with the
    discrete power-law MLE when sizes are supplied.
    """
    levels = [(float(n), list(map(float, rates))) for n, rates in levels]
    if len({n for n, _ in levels}) < 4:
        raise TooFewLevels("need at least 4 distinct agent-count levels")
    for n, rates in levels:
        if len(rates) < 3:
            raise TooFewLevels(f"level n={n} needs at least 3 replicate rates")
    rng = np.random.default_rng() if rng is None else rng

    def exponent(sample_levels):
        xs, ys = [], []
        for n, rates in sample_levels:
            xs.extend([np.log(n)] * len(rates))
            ys.extend(np.log(np.maximum(rates, 1e-12)))
        return ols_fit(xs, ys).slope

    alpha_hat = exponent(levels)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        resampled = [
            (n, [rates[i] for i in rng.integers(0, len(rates), size=len(rates))])
            for n, rates in levels
        ]
        boots[b] = exponent(resampled)
    ci = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))

    stats = {"alpha_hat": float(alpha_hat), "ci_low": ci[0], "ci_high": ci[1]}
    notes = []
    if cascade_sizes is not None and len(cascade_sizes) >= 2:
        tail = power_law_mle(cascade_sizes, x_min=1)
        stats["cascade_alpha"] = tail.alpha
        stats["cascade_ks"] = tail.ks
        notes.append(f"cascade tail exponent {tail.alpha:.3f} (KS {tail.ks:.3f})")

    if alpha_hat > 1.0 and ci[0] > 1.0:
        verdict = CONFIRMED
    elif ci[0] <= 1.0 <= ci[1] or alpha_hat <= 1.0:
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P4",
        verdict=verdict,
        statistics=stats,
        p_values={},
        effect={"alpha_hat": float(alpha_hat)},
        inputs={"levels": sorted({n for n, _ in levels})},
        notes=tuple(notes),
    )


def p5_feedback(
    intervention_rate: Sequence[float],
    rule_count: Sequence[float],
    capability: Sequence[float],
    alpha: float = 0.05,
    max_lag: int = 5,
) -> PropositionVerdict:
    """Destabilizing governance feedback despite rising agent capability.

    Mann-Kendall one-sided increasing-trend tests on the intervention rate,
    the governance rule count, and the capability series, plus a check that
    rule-count changes precede or coincide with intervention-rate changes
    at the cross-correlation maximum.
    """
    series = [np.asarray(s, dtype=float) for s in (intervention_rate, rule_count, capability)]
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise MisalignedSeries("all three series must have equal length")
    if len(series[0]) < 12:
        raise TooShort("need at least 12 aligned windows")
    mk_i = mann_kendall(series[0], "greater")
    mk_r = mann_kendall(series[1], "greater")
    mk_c = mann_kendall(series[2], "greater")
    # Prewhiten by differencing: cross-correlation of trending levels is
    # dominated by the shared trend and says nothing about lead/lag.
    lead = best_lead(np.diff(series[1]), np.diff(series[0]), max_lag=max_lag)

    all_up = mk_i.p < alpha and mk_r.p < alpha and mk_c.p < alpha
    if all_up and lead >= 0:
        verdict = CONFIRMED
    elif mk_c.p < alpha and mk_i.p >= alpha:
        # capability rising while the intervention rate is stationary/decreasing
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P5",
        verdict=verdict,
        statistics={
            "mk_s_intervention": mk_i.s,
            "mk_z_intervention": mk_i.z,
            "mk_s_rules": mk_r.s,
            "mk_s_capability": mk_c.s,
            "rule_lead": lead,
        },
        p_values={
            "intervention": mk_i.p,
            "rules": mk_r.p,
            "capability": mk_c.p,
        },
        effect={"mk_z_intervention": mk_i.z},
        inputs={"n": len(series[0])},
    )


def p6_comprehension(
    events: list[CommitEvent],
    dt: int = 86400,
    theta_complexity: Optional[float] = None,
    rho_review: float = 0.5,
    alpha: float = 0.05,
) -> PropositionVerdict:
    """Monotone growth of the low-legibility commit fraction.

    A commit counts as low-legibility when its complexity delta exceeds
    theta (default: 75th percentile over the log) and its review depth is
    below rho. This proxy is declared and configurable; it stands in for an
    external understandability instrument and is flagged in the verdict.
    """
    if not events:
        raise MissingFields("empty log")
    deltas = [ev.complexity_delta for ev in events]
    if theta_complexity is None:
        theta_complexity = float(np.quantile(deltas, 0.75))
    series = coarse.build_series(events, dt=dt)
    fractions = []
    by_window: dict[int, list[CommitEvent]] = {}
    ordered = sorted(events, key=lambda e: (e.timestamp, e.commit_id))
    t0 = ordered[0].timestamp
    for ev in ordered:
        by_window.setdefault((ev.timestamp - t0) // dt, []).append(ev)
    for k in range(len(series.windows)):
        evs = by_window.get(k, [])
        if not evs:
            fractions.append(0.0)
            continue
        flagged = sum(
            1
            for ev in evs
            if ev.complexity_delta > theta_complexity
            and (ev.review.depth if ev.review else 0.0) < rho_review
        )
        fractions.append(flagged / len(evs))
    fractions = np.asarray(fractions)
    if len(fractions) < 3:
        raise TooShort("need at least 3 windows")

    if np.ptp(fractions) == 0:
        verdict = REFUTED
        mk = None
        notes = ("low-legibility fraction is identically constant",)
        p_values = {}
        statistics = {"theta": theta_complexity, "rho": rho_review}
    else:
        mk = mann_kendall(fractions, "greater")
        mk_down = mann_kendall(fractions, "less")
        if mk.p < alpha:
            verdict = CONFIRMED
        elif mk_down.p < alpha:
            verdict = REFUTED
        else:
            verdict = INCONCLUSIVE
        notes = ("legibility proxy: complexity_delta > theta and review depth < rho",)
        p_values = {"mk_increasing": mk.p}
        statistics = {
            "mk_s": mk.s,
            "mk_z": mk.z,
            "theta": theta_complexity,
            "rho": rho_review,
        }
    return PropositionVerdict(
        id="P6",
        verdict=verdict,
        statistics=statistics,
        p_values=p_values,
        effect={"final_fraction": float(fractions[-1])},
        inputs={"windows": len(fractions)},
        notes=notes,
    )


def p7_cascade_topology(
    occurrence: Sequence[int],
    clustering: Sequence[float],
    density: Sequence[float],
    alpha: float = 0.05,
) -> PropositionVerdict:
    """Cascade probability as an increasing function of graph topology.

    Logistic regression of the per-window cascade indicator on clustering
    and link density, with likelihood-ratio p-values per coefficient.
    """
    y = np.asarray(occurrence, dtype=float)
    clu = np.asarray(clustering, dtype=float)
    den = np.asarray(density, dtype=float)
    if not (len(y) == len(clu) == len(den)):
        raise MisalignedSeries("occurrence/clustering/density must be aligned")
    if len(y) < 50:
        raise TooShort("need at least 50 windows")
    if np.ptp(y) == 0:
        raise NoVariation("cascade occurrence has no variation")
    if np.ptp(clu) == 0 or np.ptp(den) == 0:
        raise NoVariation("both regressors must vary")

    X = np.column_stack([np.ones_like(y), clu, den])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = logistic_fit(X, y)
    ridge = 1.0 if fit.separation else 0.0
    p_clu = logistic_lrt(X, y, column=1, ridge=ridge)
    p_den = logistic_lrt(X, y, column=2, ridge=ridge)
    beta_clu, beta_den = float(fit.beta[1]), float(fit.beta[2])

    notes = []
    if fit.separation:
        notes.append("separation detected; ridge-stabilized fit")
    adequate_power = len(y) >= 50

    if beta_clu > 0 and beta_den > 0 and p_clu < alpha and p_den < alpha:
        verdict = CONFIRMED
    elif p_clu >= alpha and p_den >= alpha and adequate_power:
        verdict = REFUTED
        notes.append("occurrence independent of topology (adequate power)")
    else:
        verdict = INCONCLUSIVE
    return PropositionVerdict(
        id="P7",
        verdict=verdict,
        statistics={"beta_clustering": beta_clu, "beta_density": beta_den},
        p_values={"clustering": p_clu, "density": p_den},
        effect={"beta_clustering": beta_clu, "beta_density": beta_den},
        inputs={"n": len(y), "separation": fit.separation},
        notes=tuple(notes),
    )


def verdicts_to_json(
    verdicts: Sequence[PropositionVerdict],
    alpha: float = 0.05,
    seed: Optional[int] = None,
    proxies: Optional[dict] = None,
) -> str:
    return json.dumps(
        [
            {**v.to_dict(), "config": {"alpha": alpha, "seed": seed, "proxies": proxies or {}}}
            for v in verdicts
        ],
        sort_keys=True,
        indent=2,
    )


def guarded(test, pid: str, *args, **kwargs) -> PropositionVerdict:
    """Run a proposition test, mapping declared data errors to INCONCLUSIVE."""
    try:
        return test(*args, **kwargs)
    except (NoVariation, TooShort, TooFewSeries, TooFewLevels, MissingFields) as exc:
        return PropositionVerdict(
            id=pid,
            verdict=INCONCLUSIVE,
            notes=(f"{type(exc).__name__}: {exc}",),
        )
    except EmergelabError as exc:
        return PropositionVerdict(
            id=pid,
            verdict=INCONCLUSIVE,
            notes=(f"{type(exc).__name__}: {exc}",),
        )
