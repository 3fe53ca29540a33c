"""Effective information, discretization, and causal-emergence oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emergelab import ei
from emergelab.errors import ConstantDimensionWarning, MisalignedSeries, TooShort
from emergelab.events import MicroState


def tm(rows):
    rows = np.asarray(rows, dtype=float)
    return ei.TransitionMatrix(rows=rows, counts=np.zeros_like(rows, dtype=np.int64))


class TestEffectiveInformation:
    def test_identity_two_states_is_one_bit(self):
        assert ei.effective_information(tm([[1, 0], [0, 1]])) == pytest.approx(1.0)

    def test_noisy_two_state_oracle(self):
        # symmetric 0.9/0.1 channel: EI = 1 - H(0.9) = 0.53100... bits
        expected = 1.0 - (-0.9 * np.log2(0.9) - 0.1 * np.log2(0.1))
        got = ei.effective_information(tm([[0.9, 0.1], [0.1, 0.9]]))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.531004, abs=1e-6)

    def test_uniform_rows_give_zero(self):
        assert ei.effective_information(tm([[0.5, 0.5], [0.5, 0.5]])) == 0.0

    def test_lumpable_chain_analytic(self):
        # three mixing states plus one absorbing state; lumping the mixing
        # block to a single macro state yields a 2-state identity map.
        micro = tm([
            [1 / 3, 1 / 3, 1 / 3, 0],
            [1 / 3, 1 / 3, 1 / 3, 0],
            [1 / 3, 1 / 3, 1 / 3, 0],
            [0, 0, 0, 1],
        ])
        expected = (3 * np.log2(4 / 3) + 2) / 4
        assert ei.effective_information(micro) == pytest.approx(expected, abs=1e-12)
        macro = tm([[1, 0], [0, 1]])
        ce = ei.effective_information(macro) - ei.effective_information(micro)
        assert ce == pytest.approx(1.0 - expected, abs=1e-12)

    def test_metric_variants_diverge_on_collapsing_map(self):
        # both rows land on state 0: no causal power under the canonical
        # reading, maximal determinism under the uniform-reference reading.
        collapse = tm([[1, 0], [1, 0]])
        assert ei.effective_information(collapse, metric="hoel") == 0.0
        assert ei.effective_information(collapse, metric="kl_uniform") == 1.0

    def test_empirical_intervention_weights(self):
        t = tm([[1, 0], [0, 1]])
        skewed = ei.effective_information(
            t, intervention="empirical", weights=np.array([3.0, 1.0])
        )
        # H(0.75) for the identity map under a (3/4, 1/4) intervention
        expected = -(0.75 * np.log2(0.75) + 0.25 * np.log2(0.25))
        assert skewed == pytest.approx(expected, abs=1e-12)

    def test_unknown_modes_rejected(self):
        with pytest.raises(ValueError):
            ei.effective_information(tm([[1, 0], [0, 1]]), metric="nope")
        with pytest.raises(ValueError):
            ei.effective_information(tm([[1, 0], [0, 1]]), intervention="nope")

    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_ei_bounded_by_log_states(self, n, seed):
        rng = np.random.default_rng(seed)
        rows = rng.dirichlet(np.ones(n), size=n)
        value = ei.effective_information(tm(rows))
        assert 0.0 <= value <= np.log2(n) + 1e-9


class TestTransitionMatrix:
    def test_rows_must_be_stochastic(self):
        with pytest.raises(ValueError):
            tm([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValueError):
            tm([[1.5, -0.5], [0.5, 0.5]])

    def test_rows_are_read_only(self):
        t = tm([[1, 0], [0, 1]])
        with pytest.raises(ValueError):
            t.rows[0, 0] = 0.0


class TestEstimateTransitions:
    def test_smoothing_oracle(self):
        # from state 0 there is one observed move to 1:
        # row 0 = (counts + 0.5) / (1 + 2 * 0.5) = [0.25, 0.75]
        t = ei.estimate_transitions([0, 1, 1], smoothing=0.5)
        np.testing.assert_allclose(t.rows[0], [0.25, 0.75])
        np.testing.assert_allclose(t.rows[1], [0.25, 0.75])

    def test_zero_smoothing_unseen_source_uniform(self):
        t = ei.estimate_transitions([0, 1, 0, 1], smoothing=0.0, n_states=3)
        np.testing.assert_allclose(t.rows[2], [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(t.rows[0], [0, 1, 0])

    def test_pairs_estimator_counts(self):
        t = ei.estimate_transitions_pairs(
            [(0, 1), (0, 1), (1, 0)], n_states=2, smoothing=0.0
        )
        assert t.counts[0, 1] == 2
        np.testing.assert_allclose(t.rows, [[0, 1], [1, 0]])

    def test_too_short(self):
        with pytest.raises(TooShort):
            ei.estimate_transitions([0])


class TestDiscretize:
    def test_k2_example(self):
        ids, n = ei.discretize(np.array([1.0, 2.0, 3.0, 4.0]), k=2)
        np.testing.assert_array_equal(ids, [0, 0, 1, 1])
        assert n == 2

    def test_constant_dimension_warns(self):
        with pytest.warns(ConstantDimensionWarning):
            ids, n = ei.discretize(np.ones(10), k=4)
        assert n == 1

    def test_joint_states_across_dimensions(self):
        series = np.column_stack([[1.0, 1.0, 2.0, 2.0], [1.0, 2.0, 1.0, 2.0]])
        ids, n = ei.discretize(series, k=2)
        assert n == 4
        assert len(set(ids.tolist())) == 4

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError):
            ei.discretize(np.arange(4.0), k=1)

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200),
        st.integers(2, 8),
    )
    @settings(max_examples=50, deadline=None)
    def test_state_count_never_exceeds_k(self, xs, k):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConstantDimensionWarning)
            ids, n = ei.discretize(np.array(xs), k=k)
        assert n <= k
        assert ids.max() + 1 == n


class TestCompressMicro:
    def _micro(self, rng, n_agents=50):
        return MicroState(
            t=0,
            commit_counts=tuple(int(v) for v in rng.integers(0, 10, n_agents)),
            review_participation=tuple(int(v) for v in rng.integers(0, 5, n_agents)),
            tests_passed=tuple(int(v) for v in rng.integers(0, 8, n_agents)),
            tests_failed=tuple(int(v) for v in rng.integers(0, 3, n_agents)),
            comm_tensor=rng.integers(0, 4, (n_agents, n_agents))
            * (1 - np.eye(n_agents, dtype=np.int64)),
        )

    def test_budget_is_respected_for_wide_micro(self):
        rng = np.random.default_rng(7)
        micro = [self._micro(rng) for _ in range(200)]
        ids, n = ei.compress_micro(micro, budget=64)
        assert 2 <= n <= 64
        assert len(ids) == 200

    def test_array_input_within_budget_untouched(self):
        series = np.array([[0.0], [1.0], [0.0], [1.0]])
        ids, n = ei.compress_micro(series, budget=64)
        assert n == 2
        np.testing.assert_array_equal(ids, [0, 1, 0, 1])

    def test_budget_below_two_rejected(self):
        with pytest.raises(ValueError):
            ei.compress_micro(np.zeros((5, 2)), budget=1)


class TestCausalEmergence:
    def test_identity_coarse_graining_has_zero_ce(self):
        rng = np.random.default_rng(3)
        seq = rng.integers(0, 3, size=400)
        result = ei.causal_emergence(seq, seq, n_boot=100, rng=rng)
        assert result.ce == pytest.approx(0.0, abs=1e-12)
        assert result.classification == "NEUTRAL"

    def test_iid_noise_is_neutral(self):
        rng = np.random.default_rng(11)
        micro = rng.integers(0, 8, size=5000)
        macro = rng.integers(0, 2, size=5000)
        result = ei.causal_emergence(micro, macro, n_boot=100, rng=rng)
        assert abs(result.ce) < 0.05
        assert result.classification == "NEUTRAL"

    def test_deterministic_macro_over_noisy_micro_is_top_heavy(self):
        rng = np.random.default_rng(5)
        t = 2000
        macro = np.arange(t) % 2  # perfectly alternating macro dynamics
        micro = macro * 4 + rng.integers(0, 4, size=t)  # 8 noisy micro states
        result = ei.causal_emergence(micro, macro, n_boot=200, rng=rng)
        assert result.ce > 0
        assert result.classification == "TOP_HEAVY"

    def test_misaligned_series_rejected(self):
        with pytest.raises(MisalignedSeries):
            ei.causal_emergence([0, 1, 0], [0, 1], n_boot=10)

    def test_too_short(self):
        with pytest.raises(TooShort):
            ei.causal_emergence([0, 1], [0, 1], n_boot=10)

    def test_result_json_fields(self):
        rng = np.random.default_rng(1)
        seq = rng.integers(0, 2, size=100)
        result = ei.causal_emergence(seq, seq, n_boot=50, rng=rng)
        import json

        payload = json.loads(result.to_json())
        assert set(payload) == {
            "ei_micro", "ei_macro", "ce", "p_value", "classification",
            "n_micro_states", "n_macro_states", "bins", "smoothing",
        }
