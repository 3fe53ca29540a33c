"""Proposition verdict logic on synthetic data with known ground truth."""

import json

import numpy as np
import pytest

from emergelab import propositions as props, sim
from emergelab.errors import (
    MisalignedSeries,
    NoVariation,
    TooFewLevels,
    TooFewSeries,
    TooShort,
)
from emergelab.events import AgentId, AgentKind, CommitEvent, Review


def rng_for(seed=0):
    return np.random.default_rng(seed)


class TestP1EntropySlopes:
    def _series(self, slope, n=5, length=50, seed=0):
        rng = rng_for(seed)
        t = np.arange(length)
        return [slope * t + rng.normal(0, 0.05, length) for _ in range(n)]

    def test_steeper_high_group_confirmed(self):
        v = props.p1_entropy_slopes(
            self._series(0.02), self._series(0.001, seed=1), rng=rng_for(2)
        )
        assert v.verdict == "CONFIRMED"
        assert v.effect["slope_diff"] > 0

    def test_inverted_difference_refuted(self):
        v = props.p1_entropy_slopes(
            self._series(0.001), self._series(0.02, seed=1), rng=rng_for(2)
        )
        assert v.verdict == "REFUTED"

    def test_equal_groups_inconclusive(self):
        v = props.p1_entropy_slopes(
            self._series(0.01, seed=3), self._series(0.01, seed=4), rng=rng_for(2)
        )
        assert v.verdict == "INCONCLUSIVE"

    def test_too_few_series(self):
        with pytest.raises(TooFewSeries):
            props.p1_entropy_slopes(self._series(0.01, n=1), self._series(0.01))


class TestP2Changepoint:
    def _step_data(self, r_star, n=60, seed=5):
        rng = rng_for(seed)
        r = np.linspace(0.5, 6.0, n)
        reliability = np.where(r < r_star, 0.9, 0.6) + rng.normal(0, 0.02, n)
        return r, reliability

    def test_break_inside_range_confirmed(self):
        r, rel = self._step_data(r_star=2.0)
        v = props.p2_changepoint(r, rel, n_perm=500, rng=rng_for(1))
        assert v.verdict == "CONFIRMED"
        assert 1.5 < v.statistics["r_star"] < 2.5

    def test_no_break_refuted(self):
        rng = rng_for(15)
        r = np.linspace(0.5, 6.0, 60)
        rel = 0.8 + rng.normal(0, 0.02, 60)
        v = props.p2_changepoint(r, rel, n_perm=500, rng=rng_for(1))
        assert v.verdict == "REFUTED"

    def test_break_outside_range_inconclusive(self):
        r, rel = self._step_data(r_star=5.0)
        v = props.p2_changepoint(r, rel, n_perm=500, rng=rng_for(1))
        assert v.verdict == "INCONCLUSIVE"
        assert "outside hypothesized range" in v.notes[0]

    def test_constant_ratio_inconclusive(self):
        v = props.p2_changepoint(
            np.full(40, 2.0), np.linspace(0, 1, 40), n_perm=100, rng=rng_for(1)
        )
        assert v.verdict == "INCONCLUSIVE"

    def test_misaligned(self):
        with pytest.raises(MisalignedSeries):
            props.p2_changepoint([1.0, 2.0], [0.5])


class TestP3Emergence:
    def test_constant_null_world_refuted(self):
        events, _ = sim.run(sim.presets()["null-world"])
        v = props.p3_emergence(events, n_boot=100, rng=rng_for(0))
        # macro observables are constant while reviewer rotation still gives
        # the micro level deterministic structure, so ce can only be <= 0
        assert v.verdict == "REFUTED"
        assert v.effect["ce_bits"] <= 0.0

    def test_short_log_raises(self):
        events, _ = sim.run(sim.SimConfig(steps=20))
        with pytest.raises(TooShort):
            props.p3_emergence(events)


class TestP4Powerlaw:
    def _levels(self, exponent, seed=0):
        rng = rng_for(seed)
        return [
            (n, (n ** exponent * np.exp(rng.normal(0, 0.05, 5))).tolist())
            for n in (1, 2, 4, 8, 16)
        ]

    def test_superlinear_confirmed(self):
        v = props.p4_powerlaw(self._levels(1.5), n_boot=400, rng=rng_for(1))
        assert v.verdict == "CONFIRMED"
        assert v.effect["alpha_hat"] == pytest.approx(1.5, abs=0.1)

    def test_linear_refuted(self):
        v = props.p4_powerlaw(self._levels(1.0), n_boot=400, rng=rng_for(1))
        assert v.verdict == "REFUTED"

    def test_cascade_tail_reported(self):
        v = props.p4_powerlaw(
            self._levels(1.5), cascade_sizes=[1, 1, 1, 2, 2, 3, 5, 8],
            n_boot=200, rng=rng_for(1),
        )
        assert "cascade_alpha" in v.statistics

    def test_too_few_levels(self):
        with pytest.raises(TooFewLevels):
            props.p4_powerlaw([(1, [1.0, 1, 1]), (2, [2.0, 2, 2])])
        with pytest.raises(TooFewLevels):
            props.p4_powerlaw([(n, [float(n)]) for n in (1, 2, 4, 8)])


class TestP5Feedback:
    def _confirming(self, n=60, seed=7):
        rng = rng_for(seed)
        bumps = (rng.random(n) < 0.15).astype(float)
        rules = np.cumsum(bumps)
        # intervention responds one window after each new rule
        intervention = 0.05 + 0.02 * np.roll(rules, 1) + 0.001 * np.arange(n)
        intervention[0] = 0.05
        capability = 0.8 + 0.002 * np.arange(n) + rng.normal(0, 0.001, n)
        return intervention, rules, capability

    def test_rising_rates_with_rule_lead_confirmed(self):
        inter, rules, cap = self._confirming()
        v = props.p5_feedback(inter, rules, cap)
        assert v.verdict == "CONFIRMED"
        assert v.statistics["rule_lead"] >= 0

    def test_stationary_intervention_refuted(self):
        rng = rng_for(9)
        n = 60
        inter = 0.1 + rng.normal(0, 0.01, n)
        rules = np.zeros(n)
        cap = 0.8 + 0.002 * np.arange(n)
        v = props.p5_feedback(inter, rules, cap)
        assert v.verdict == "REFUTED"

    def test_misaligned(self):
        with pytest.raises(MisalignedSeries):
            props.p5_feedback([1.0] * 12, [1.0] * 12, [1.0] * 11)

    def test_too_short(self):
        with pytest.raises(TooShort):
            props.p5_feedback([1.0] * 5, [1.0] * 5, [1.0] * 5)


def legibility_events(flag_fractions, per_window=10, dt=86400):
    events = []
    k = 0
    for w, frac in enumerate(flag_fractions):
        n_flagged = round(frac * per_window)
        for i in range(per_window):
            flagged = i < n_flagged
            events.append(
                CommitEvent(
                    commit_id=f"c{k:05d}",
                    timestamp=w * dt + i,
                    author=AgentId("bot", AgentKind.AI),
                    modules_touched=frozenset({"core"}),
                    complexity_delta=5.0 if flagged else 0.1,
                    review=Review(AgentId("amy"), 0.1 if flagged else 0.9),
                    ci_passed=True,
                )
            )
            k += 1
    return events


class TestP6Comprehension:
    def test_growing_fraction_confirmed(self):
        fracs = np.linspace(0.0, 0.8, 30)
        v = props.p6_comprehension(legibility_events(fracs), theta_complexity=1.0)
        assert v.verdict == "CONFIRMED"

    def test_constant_zero_fraction_refuted(self):
        v = props.p6_comprehension(
            legibility_events(np.zeros(20)), theta_complexity=1.0
        )
        assert v.verdict == "REFUTED"

    def test_shrinking_fraction_refuted(self):
        fracs = np.linspace(0.8, 0.0, 30)
        v = props.p6_comprehension(legibility_events(fracs), theta_complexity=1.0)
        assert v.verdict == "REFUTED"

    def test_proxy_is_declared_in_notes(self):
        fracs = np.linspace(0.0, 0.8, 30)
        v = props.p6_comprehension(legibility_events(fracs), theta_complexity=1.0)
        assert any("proxy" in note for note in v.notes)


class TestP7CascadeTopology:
    def _logit_data(self, beta_clu, beta_den, n=400, seed=13):
        rng = rng_for(seed)
        clu = rng.random(n)
        den = rng.random(n)
        eta = -2.0 + beta_clu * clu + beta_den * den
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(int)
        return y, clu, den

    def test_positive_dependence_confirmed(self):
        y, clu, den = self._logit_data(3.0, 3.0)
        v = props.p7_cascade_topology(y, clu, den)
        assert v.verdict == "CONFIRMED"
        assert v.statistics["beta_clustering"] > 0

    def test_independent_topology_refuted(self):
        y, clu, den = self._logit_data(0.0, 0.0)
        v = props.p7_cascade_topology(y, clu, den)
        assert v.verdict == "REFUTED"

    def test_constant_occurrence_raises(self):
        with pytest.raises(NoVariation):
            props.p7_cascade_topology(
                np.zeros(60), np.random.default_rng(0).random(60),
                np.random.default_rng(1).random(60),
            )

    def test_misaligned(self):
        with pytest.raises(MisalignedSeries):
            props.p7_cascade_topology([0, 1], [0.1], [0.2])


class TestHarness:
    def test_guarded_maps_data_errors_to_inconclusive(self):
        v = props.guarded(
            props.p7_cascade_topology, "P7", np.zeros(60), np.zeros(60), np.zeros(60)
        )
        assert v.verdict == "INCONCLUSIVE"
        assert "NoVariation" in v.notes[0]

    def test_verdicts_json_embeds_config(self):
        verdict = props.PropositionVerdict(id="P1", verdict="CONFIRMED")
        payload = json.loads(props.verdicts_to_json([verdict], alpha=0.05, seed=7))
        assert payload[0]["id"] == "P1"
        assert payload[0]["config"]["seed"] == 7
