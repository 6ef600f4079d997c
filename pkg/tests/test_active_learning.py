"""Query strategies, stream budget, and the annotation queue."""

import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbench import active_learning as al
from loopbench.errors import LeaseError
from loopbench.types import Prediction, Provenance, Sample, SampleKind


def pred(scores, sid="s"):
    return Prediction(sample_id=sid, model_id="m", classes=tuple(f"c{i}" for i in range(len(scores))),
                      scores=np.asarray(scores, dtype=float))


def sample(features, sid="s", label=None):
    return Sample(id=sid, kind=SampleKind.TABULAR, payload_ref="", features=np.asarray(features, float),
                  provenance=Provenance.REAL, label=label)


class TestInformativeness:
    def test_uniform_four_class_entropy_is_one(self):
        assert al.score_informativeness(pred([0.25] * 4), "entropy") == pytest.approx(1.0)

    def test_one_hot_scores_zero_for_all_methods(self):
        p = pred([1.0, 0.0, 0.0])
        for method in ("least_confidence", "margin", "entropy"):
            assert al.score_informativeness(p, method) == pytest.approx(0.0)

    def test_hand_computed_entropy(self):
        # -sum p ln p = 1.0297 nats; normalized by ln 3
        p = pred([0.5, 0.3, 0.2])
        expected = 1.0296530140645737 / math.log(3)
        assert al.score_informativeness(p, "entropy") == pytest.approx(expected, abs=1e-9)

    def test_least_confidence_and_margin(self):
        p = pred([0.6, 0.3, 0.1])
        assert al.score_informativeness(p, "least_confidence") == pytest.approx(0.4)
        assert al.score_informativeness(p, "margin") == pytest.approx(1 - 0.3)

    def test_non_simplex_rejected(self):
        bad = pred([0.5, 0.5])
        bad.scores = np.array([0.9, 0.9])
        with pytest.raises(ValueError):
            al.score_informativeness(bad, "entropy")

    @settings(deadline=None, max_examples=40)
    @given(st.integers(0, 10_000), st.integers(2, 6))
    def test_scores_always_in_unit_interval(self, seed, k):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(k))
        for method in ("least_confidence", "margin", "entropy"):
            s = al.score_informativeness(pred(p), method)
            assert 0.0 <= s <= 1.0 + 1e-12


class _VoteModel:
    """Fixed-vote stand-in for a trained committee member."""

    def __init__(self, vote_idx, k=2):
        self.classes = tuple(f"c{i}" for i in range(k))
        self._vote = vote_idx

    def predict_proba(self, X):
        out = np.full((len(np.atleast_2d(X)), len(self.classes)), 0.01)
        out[:, self._vote] = 1.0 - 0.01 * (len(self.classes) - 1)
        return out


class TestQbc:
    def test_unanimous_committee_scores_zero(self):
        committee = [_VoteModel(0), _VoteModel(0), _VoteModel(0)]
        assert al.score_qbc(np.zeros(2), committee) == pytest.approx(0.0)

    def test_two_one_split_hand_value(self):
        committee = [_VoteModel(0), _VoteModel(0), _VoteModel(1)]
        expected = -(2 / 3 * math.log(2 / 3) + 1 / 3 * math.log(1 / 3))
        got = al.score_qbc(np.zeros(2), committee)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.6365, abs=5e-5)

    def test_even_split_of_four_gives_ln2(self):
        committee = [_VoteModel(0), _VoteModel(0), _VoteModel(1), _VoteModel(1)]
        assert al.score_qbc(np.zeros(2), committee) == pytest.approx(math.log(2), abs=1e-12)

    def test_mismatched_class_sets_rejected(self):
        with pytest.raises(ValueError):
            al.score_qbc(np.zeros(2), [_VoteModel(0, k=2), _VoteModel(0, k=3)])

    def test_doubling_committee_preserves_ordering(self):
        base = [_VoteModel(0), _VoteModel(0), _VoteModel(1)]
        doubled = base + [ _VoteModel(m._vote) for m in base]
        x = np.zeros(2)
        s1, s2 = al.score_qbc(x, base), al.score_qbc(x, doubled)
        assert s1 == pytest.approx(s2, abs=1e-12)  # proportional votes, same entropy


class TestReprDiv:
    def test_sample_equal_to_pool_is_fully_representative(self):
        pool = np.zeros((5, 2))
        rep, _ = al.score_repr_div(np.zeros(2), pool, None, sigma=1.0)
        assert rep == pytest.approx(1.0)

    def test_sample_on_labeled_point_has_zero_diversity(self):
        pool = np.array([[0.0], [1.0], [2.0]])
        _, div = al.score_repr_div(np.array([1.0]), pool, np.array([[1.0]]), sigma=1.0)
        assert div == pytest.approx(0.0)

    def test_three_point_line_hand_value(self):
        pool = np.array([[0.0], [1.0], [2.0]])
        rep, div = al.score_repr_div(np.array([1.0]), pool, None, sigma=1.0)
        assert rep == pytest.approx((math.exp(-1) + 1 + math.exp(-1)) / 3, abs=1e-12)
        assert div == pytest.approx(1.0)  # empty labeled set

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            al.score_repr_div(np.zeros(1), np.zeros((2, 1)), None, sigma=0.0)


class TestSelectPool:
    def test_batch_of_pool_size_selects_everything(self):
        pool = [sample([float(i)], sid=str(i)) for i in range(5)]
        params = al.StrategyParams(name="random", seed=1)
        selected, _, truncated = al.select_pool(pool, params, 5)
        assert {s.id for s in selected} == {str(i) for i in range(5)}
        assert not truncated

    def test_oversized_batch_flags_truncation(self):
        pool = [sample([0.0], sid="only")]
        selected, _, truncated = al.select_pool(pool, al.StrategyParams(name="random"), 3)
        assert len(selected) == 1 and truncated

    def test_pure_entropy_picks_the_uncertain_sample(self):
        pool = [sample([0.0], sid="sure"), sample([1.0], sid="unsure")]
        preds = [pred([1.0, 0.0], "sure"), pred([0.5, 0.5], "unsure")]
        params = al.StrategyParams(name="entropy")
        selected, scores, _ = al.select_pool(pool, params, 1, predictions=preds)
        assert selected[0].id == "unsure"
        assert scores[0] == pytest.approx(1.0)

    def test_random_strategy_reproducible_given_seed(self):
        pool = [sample([float(i)], sid=str(i)) for i in range(30)]
        params = al.StrategyParams(name="random", seed=77)
        first, _, _ = al.select_pool(pool, params, 10)
        second, _, _ = al.select_pool(pool, params, 10)
        assert [s.id for s in first] == [s.id for s in second]

    def test_combined_ordering_matches_brute_force(self):
        rng = np.random.default_rng(0)
        pool = [sample(rng.normal(size=3), sid=str(i)) for i in range(20)]
        raw = rng.dirichlet(np.ones(3), size=20)
        preds = [pred(raw[i], str(i)) for i in range(20)]
        labeled = [sample(rng.normal(size=3), sid=f"l{i}", label="a") for i in range(4)]
        params = al.StrategyParams(name="combined", weights=(0.5, 0.3, 0.2), kernel_sigma=2.0)
        selected, scores, _ = al.select_pool(pool, params, 20, predictions=preds, labeled=labeled)

        # independent recomputation, then sort
        pool_feats = np.stack([s.features for s in pool])
        labeled_feats = np.stack([s.features for s in labeled])
        expected = []
        for i in range(20):
            info = al.score_informativeness(preds[i], "entropy")
            rep, div = al.score_repr_div(pool[i].features, pool_feats, labeled_feats, 2.0)
            expected.append((0.5 * info + 0.3 * rep + 0.2 * div, i))
        order = [str(i) for _, i in sorted(((-s, i) for s, i in expected))]
        order = [i for _, i in sorted(((-s, i) for s, i in expected))]
        assert [s.id for s in selected] == [str(i) for i in order]
        for got, (exp, _) in zip(scores, sorted(expected, key=lambda t: (-t[0], t[1]))):
            assert got == pytest.approx(exp, abs=1e-12)


class TestStream:
    def test_query_spends_budget(self):
        budget = al.StreamBudget(budget=1, horizon=100)
        assert al.select_stream(pred([0.5, 0.5]), 0.5, budget)
        assert budget.remaining == 0

    def test_exhausted_budget_always_skips(self):
        budget = al.StreamBudget(budget=0, horizon=100)
        assert not al.select_stream(pred([0.5, 0.5]), 0.1, budget)

    def test_simulated_stream_respects_threshold_and_budget(self):
        rng = np.random.default_rng(4)
        budget = al.StreamBudget(budget=10, horizon=1000)
        queried_infos = []
        for _ in range(100):
            p1 = rng.uniform(0.5, 1.0)
            p = pred([p1, 1 - p1])
            info = al.score_informativeness(p, "entropy")
            if al.select_stream(p, 0.8, budget):
                queried_infos.append(info)
        assert len(queried_infos) <= 10
        assert all(i >= 0.8 for i in queried_infos)

    def test_budget_replenishes_outside_horizon(self):
        budget = al.StreamBudget(budget=1, horizon=10)
        assert al.select_stream(pred([0.5, 0.5]), 0.5, budget)
        for _ in range(9):
            assert not al.select_stream(pred([0.5, 0.5]), 0.5, budget)
        # the spent query has now slid out of the horizon window
        assert al.select_stream(pred([0.5, 0.5]), 0.5, budget)


class TestQueue:
    def test_happy_path_lease_and_answer(self):
        q = al.AnnotationQueue(lease_ttl_ms=10_000)
        task = q.enqueue("s1", "entropy", 0.9)
        leased = q.lease_next("ann1")
        assert leased.task_id == task.task_id
        record = q.answer(task.task_id, "ann1", "good", elapsed_ms=1500, hint_shown="saliency_map")
        assert record.label == "good"
        assert record.elapsed_ms == 1500
        assert record.hint_shown == "saliency_map"
        assert q.get(task.task_id).state == "answered"

    def test_empty_queue_gives_none(self):
        q = al.AnnotationQueue()
        assert q.lease_next("ann1") is None

    def test_concurrent_leases_never_double_lease(self):
        q = al.AnnotationQueue(lease_ttl_ms=10_000)
        q.enqueue("s1", "entropy", 0.5)
        results = []
        barrier = threading.Barrier(8)

        def worker(name):
            barrier.wait()
            results.append(q.lease_next(name))

        threads = [threading.Thread(target=worker, args=(f"a{i}",)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        got = [r for r in results if r is not None]
        assert len(got) == 1

    def test_expired_lease_rejected_and_requeued(self):
        clock = {"now": 1000}
        q = al.AnnotationQueue(lease_ttl_ms=100, clock=lambda: clock["now"])
        task = q.enqueue("s1", "entropy", 0.5)
        q.lease_next("ann1")
        clock["now"] += 200
        with pytest.raises(LeaseError):
            q.answer(task.task_id, "ann1", "good", 50)
        assert q.get(task.task_id).state == "queued"
        again = q.lease_next("ann2")
        assert again.task_id == task.task_id

    def test_answer_by_wrong_annotator_rejected(self):
        q = al.AnnotationQueue(lease_ttl_ms=10_000)
        task = q.enqueue("s1", "entropy", 0.5)
        q.lease_next("ann1")
        with pytest.raises(LeaseError):
            q.answer(task.task_id, "intruder", "good", 10)

    def test_queue_conservation(self):
        clock = {"now": 0}
        q = al.AnnotationQueue(lease_ttl_ms=50, clock=lambda: clock["now"])
        tasks = [q.enqueue(f"s{i}", "entropy", 0.5) for i in range(10)]
        for _ in range(4):
            q.lease_next("ann")
        clock["now"] += 100  # expire those leases
        leased = q.lease_next("ann2")
        q.answer(leased.task_id, "ann2", "good", 5)
        counts = q.counts()
        assert counts["total"] == 10
        assert counts["queued"] + counts["leased"] + counts["answered"] == 10


def test_strategy_params_validation():
    with pytest.raises(ValueError):
        al.StrategyParams(name="nope")
    with pytest.raises(ValueError):
        al.StrategyParams(name="combined", weights=(0.9, 0.2, 0.2))
    with pytest.raises(ValueError):
        al.StrategyParams(name="qbc_vote_entropy", committee_size=1)
    with pytest.raises(ValueError):
        al.StrategyParams(name="entropy", stream_threshold=1.5)
