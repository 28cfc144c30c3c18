import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedmarket import functions
from fedmarket.clients import ClientState, EvalStrategy
from fedmarket.errors import InvalidConfigError
from fedmarket.fedeval import (
    EvaluationAssignment,
    ScoreReports,
    assign_evaluators,
    compute_punishments,
    consensus_error_by_adversaries,
    fed_eval,
    median_consensus,
    synthesize_reports,
)
from fedmarket.mechanism import MechanismConfig

TRUTHFUL = EvalStrategy.truthful()


def full(k):
    return EvaluationAssignment(np.ones((k, k), dtype=bool))


def single_model_reports(values):
    """Reports for model 0 from len(values) evaluators under a full assignment."""
    m = len(values)
    ind = np.full((m, m), 0.5)
    ind[0] = values
    return ScoreReports(ind, ind.copy()), full(m)


class TestAssignEvaluators:
    def test_zero_thresh_is_identity(self):
        a = assign_evaluators([0.1, 0.5, 0.6], functions.constant_thresh(0.0), np.random.default_rng(0))
        assert np.array_equal(a.matrix, np.eye(3, dtype=bool))

    def test_unit_thresh_is_all_ones(self):
        a = assign_evaluators([0.1, 0.5, 0.6], functions.constant_thresh(1.0), np.random.default_rng(0))
        assert a.matrix.all()

    def test_out_of_range_thresh(self):
        with pytest.raises(InvalidConfigError):
            assign_evaluators([0.5, 2.0], lambda b: b, np.random.default_rng(0))

    def test_marginal_frequency_half(self):
        rng = np.random.default_rng(77)
        k, draws = 4, 10_000
        total = np.zeros((k, k))
        for _ in range(draws):
            total += assign_evaluators([0.5] * k, lambda b: b, rng).matrix
        freq = total / draws
        sigma = np.sqrt(0.25 / draws)
        off = ~np.eye(k, dtype=bool)
        assert np.all(np.abs(freq[off] - 0.5) <= 3 * sigma)
        assert np.all(freq[~off] == 1.0)

    def test_derived_views(self):
        a = EvaluationAssignment(np.array([[1, 1, 0], [0, 1, 0], [1, 0, 1]], dtype=bool))
        assert a.evaluators_of(0) == [0, 1]
        assert a.received_by(0) == [0, 2]
        assert a.received_by(1) == [0, 1]

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.integers(0, 5), st.floats(0, 1), st.integers(0, 2**32))
    def test_monotone_exposure(self, bids, who, raise_by, seed):
        who %= len(bids)
        higher = list(bids)
        higher[who] = min(1.0, bids[who] + raise_by)
        lo = assign_evaluators(bids, lambda b: b, np.random.default_rng(seed))
        hi = assign_evaluators(higher, lambda b: b, np.random.default_rng(seed))
        assert set(lo.evaluators_of(who)) <= set(hi.evaluators_of(who))


class TestSynthesizeReports:
    def test_truthful_identity(self):
        r = synthesize_reports(full(3), [0.3, 0.5, 0.9], functions.aggr_max, [TRUTHFUL] * 3)
        for j in range(3):
            assert r.individual[:, j].tolist() == [0.3, 0.5, 0.9]

    def test_adversarial_offset(self):
        strategies = [TRUTHFUL, EvalStrategy.adversarial(0.4), TRUTHFUL]
        r = synthesize_reports(full(3), [0.3, 0.5, 0.9], functions.aggr_max, strategies)
        assert r.individual[1].tolist() == [0.5, 0.9, 0.5]

    def test_adversarial_clamped(self):
        strategies = [TRUTHFUL, EvalStrategy.adversarial(0.4)]
        r = synthesize_reports(full(2), [0.9, 0.9], functions.aggr_max, strategies)
        assert r.individual[0, 1] == 1.0

    def test_max_aggregate_full_assignment(self):
        r = synthesize_reports(full(3), [0.3, 0.5, 0.9], functions.aggr_max, [TRUTHFUL] * 3)
        assert np.all(r.aggregated == 0.9)

    def test_undefined_where_unassigned(self):
        a = EvaluationAssignment(np.eye(3, dtype=bool))
        r = synthesize_reports(a, [0.3, 0.5, 0.9], functions.aggr_max, [TRUTHFUL] * 3)
        assert np.array_equal(np.isnan(r.individual), ~np.eye(3, dtype=bool))
        # each client aggregates only its own model
        assert np.diag(r.aggregated).tolist() == [0.3, 0.5, 0.9]

    def test_noisy_stays_in_unit_interval(self):
        rng = np.random.default_rng(1)
        r = synthesize_reports(full(5), [0.0, 0.02, 0.5, 0.98, 1.0], functions.aggr_max, [EvalStrategy.noisy(0.1)] * 5, rng=rng)
        assert np.all((r.individual >= 0) & (r.individual <= 1))
        assert np.all(np.abs(r.individual - np.array([0.0, 0.02, 0.5, 0.98, 1.0])[:, None]) <= 0.1 + 1e-12)

    def test_weighted_mean_aggregate(self):
        r = synthesize_reports(full(2), [0.2, 0.8], functions.aggr_weighted_mean, [TRUTHFUL] * 2, data_shares=[0.75, 0.25])
        assert r.aggregated[0, 0] == pytest.approx(0.35)


class TestMedianConsensus:
    def test_odd(self):
        reports, a = single_model_reports([0.3, 0.5, 0.9])
        assert median_consensus(reports, a).scores[0] == 0.5

    def test_even_mean_of_middle(self):
        reports, a = single_model_reports([0.4, 0.6])
        assert median_consensus(reports, a).scores[0] == pytest.approx(0.5)

    def test_two_adversaries_of_five(self):
        # sorted: 0.7 0.7 0.7 1.0 1.0 -> middle is an honest report
        reports, a = single_model_reports([0.7, 0.7, 0.7, 1.0, 1.0])
        assert median_consensus(reports, a).scores[0] == 0.7

    def test_best_lowest_index_tiebreak(self):
        r = synthesize_reports(EvaluationAssignment(np.eye(3, dtype=bool)), [0.9, 0.4, 0.9], functions.aggr_max, [TRUTHFUL] * 3)
        c = median_consensus(r, EvaluationAssignment(np.eye(3, dtype=bool)))
        assert c.best == 0.9 and c.best_owner == 0

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_robust_within_honest_range(self, data):
        m = data.draw(st.integers(1, 9))
        bad = data.draw(st.integers(0, (m + 1) // 2 - 1))
        honest = data.draw(st.lists(st.floats(0, 1), min_size=m - bad, max_size=m - bad))
        adversarial = data.draw(st.lists(st.floats(0, 1), min_size=bad, max_size=bad))
        reports, a = single_model_reports(honest + adversarial)
        s = median_consensus(reports, a).scores[0]
        assert min(honest) <= s <= max(honest)


class TestPunishments:
    def setup_method(self):
        self.a = full(3)
        self.r = synthesize_reports(self.a, [0.3, 0.5, 0.9], functions.aggr_max, [TRUTHFUL] * 3)
        self.c = median_consensus(self.r, self.a)

    def test_zero_punish(self):
        assert compute_punishments(self.r, self.c, self.a, functions.zero_punish()) == (0, 0, 0)

    def test_truthful_abs(self):
        assert compute_punishments(self.r, self.c, self.a, functions.abs_punish()) == (0, 0, 0)

    def test_single_outlier(self):
        ind = np.array(self.r.individual)
        ind[1, 2] += 0.2
        r = ScoreReports(ind, self.r.aggregated)
        c = median_consensus(r, self.a)
        assert c.scores == self.c.scores
        assert compute_punishments(r, c, self.a, functions.abs_punish()) == (0, 0, 200_000_000)

    def test_punish_zero_must_vanish(self):
        with pytest.raises(InvalidConfigError):
            compute_punishments(self.r, self.c, self.a, lambda d: abs(d) + 1)

    @given(st.floats(0, 5))
    def test_zero_punishment_fixed_point(self, scale):
        for fn in (functions.abs_punish(scale), functions.square_punish(scale)):
            assert compute_punishments(self.r, self.c, self.a, fn) == (0, 0, 0)


class TestFedEval:
    def reference_clients(self):
        return [ClientState(v, s, quality=q) for v, s, q in zip((0.1, 0.5, 0.6), (0.5, 0.4, 0.1), (0.4, 0.7, 0.2))]

    def test_reference_configuration(self):
        cfg = MechanismConfig(3, 1)
        out = fed_eval(self.reference_clients(), (0.1, 0.5, 0.6), cfg, np.random.default_rng(0))
        assert out.punishments == (0, 0, 0)
        assert out.scores == (0.4, 0.7, 0.2)
        assert out.best_score == 0.7 and out.best_owner == 1

    def test_single_client_degenerate(self):
        cfg = MechanismConfig(2, 1)
        out = fed_eval([ClientState(0.5, 1.0, quality=0.6)], (0.5,), cfg, np.random.default_rng(0))
        assert out.scores == (0.6,) and out.best_score == 0.6 and out.punishments == (0,)

    def test_repeatable(self):
        cfg = MechanismConfig(3, 1, thresh_fn=functions.constant_thresh(0.5), punish_fn=functions.abs_punish())
        a = fed_eval(self.reference_clients(), (0.1, 0.5, 0.6), cfg, np.random.default_rng(8))
        b = fed_eval(self.reference_clients(), (0.1, 0.5, 0.6), cfg, np.random.default_rng(8))
        assert a == b


class TestRobustnessSweep:
    def test_five_evaluators(self):
        rows = dict(consensus_error_by_adversaries(5, 0.4, 0.5))
        assert rows[0] == 0.0
        assert rows[1] == 0.0
        assert rows[2] == 0.0
        assert rows[5] == pytest.approx(0.4)
