import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_recall
from foodprompts.core import Arm, Corpus, Meal
from foodprompts.evaluation import (
    NoEligibleMealsError,
    NoEligibleRecallsError,
    NoPromptsShownError,
    PromptEvent,
    _remove_meal,
    _restore_meal,
    acceptance_stats,
    arm_metrics,
    coverage_stats,
    duration_stats,
    energy_stats,
    precision,
    simulate_leave_one_out,
)
from foodprompts.model import build_model


def corpus_of(*meals: tuple[str, ...]) -> Corpus:
    return Corpus.from_meals([Meal("", m) for m in meals], "test")


def event(recall_id, shown, accepted, arm=Arm.HANDCODED, meal_index=0):
    return PromptEvent(recall_id, meal_index, arm, tuple(shown), tuple(accepted))


# --- prompt events ----------------------------------------------------------


def test_event_accepted_must_be_subset_of_shown():
    with pytest.raises(Exception):
        event("r1", ["butter"], ["milk"])


def test_event_requires_shown():
    with pytest.raises(Exception):
        event("r1", [], [])


# --- leave one out ----------------------------------------------------------


def test_loo_recovers_repeated_pair():
    report = simulate_leave_one_out(corpus_of(("A", "B"), ("A", "B"), ("A", "B")), [1])
    assert report.cases_evaluated == 6
    assert report.recall_at_k[1] == 1.0


def test_loo_pair_lost_after_holdout():
    report = simulate_leave_one_out(corpus_of(("A", "B"), ("C", "D")), [1, 5])
    assert report.cases_evaluated == 4
    assert report.recall_at_k == {1: 0.0, 5: 0.0}


def test_loo_report_has_exactly_the_requested_ks():
    report = simulate_leave_one_out(corpus_of(("A", "B"), ("A", "B")), [1, 5, 15])
    assert set(report.recall_at_k) == {1, 5, 15}
    assert report.ks == (1, 5, 15)


def test_loo_recall_is_monotone_in_k():
    corpus = corpus_of(("A", "B"), ("A", "C"), ("B", "C"), ("A", "B", "C"), ("A", "D"))
    report = simulate_leave_one_out(corpus, [1, 2, 3, 5])
    values = [report.recall_at_k[k] for k in report.ks]
    assert values == sorted(values)
    assert all(0.0 <= v <= 1.0 for v in values)


def test_loo_requires_a_multi_food_meal():
    with pytest.raises(NoEligibleMealsError):
        simulate_leave_one_out(corpus_of(("A",), ("B",)), [1])


def test_loo_only_foods_filter_restricts_cases():
    corpus = corpus_of(("A", "B"), ("A", "B"), ("A", "B"))
    report = simulate_leave_one_out(corpus, [1], only_foods={"A"})
    assert report.cases_evaluated == 3
    assert report.recall_at_k[1] == 1.0


def test_loo_train_on_all_flag_keeps_meal_in_model():
    # with the held-out meal left in, the lost-pair corpus becomes recoverable
    corpus = corpus_of(("A", "B"), ("C", "D"))
    report = simulate_leave_one_out(corpus, [1], exclude_held_out_meal=False)
    assert report.recall_at_k[1] == 1.0


def test_loo_rejects_bad_ks():
    with pytest.raises(Exception):
        simulate_leave_one_out(corpus_of(("A", "B")), [0])


meal_sets = st.frozensets(
    st.sampled_from([f"f{i}" for i in range(8)]), min_size=1, max_size=4
)


@given(st.lists(meal_sets, min_size=1, max_size=20), meal_sets)
def test_remove_then_restore_is_identity(sets, extra):
    corpus = Corpus.from_meals([Meal("", tuple(sorted(s))) for s in sets], "hyp")
    model = build_model(corpus)
    reference = build_model(corpus)
    _remove_meal(model, corpus.meals[0].food_set)
    _restore_meal(model, corpus.meals[0].food_set)
    assert model == reference


@given(st.lists(meal_sets, min_size=2, max_size=20))
def test_removal_equals_rebuilding_without_the_meal(sets):
    corpus = Corpus.from_meals([Meal("", tuple(sorted(s))) for s in sets], "hyp")
    model = build_model(corpus)
    _remove_meal(model, corpus.meals[-1].food_set)
    rebuilt = build_model(Corpus(corpus.meals[:-1], "hyp"))
    assert model == rebuilt


# --- precision ----------------------------------------------------------------


def test_precision_definition():
    events = [event("r1", [f"s{i}" for i in range(100)], [f"s{i}" for i in range(24)])]
    assert precision(events) == pytest.approx(0.24)


def test_precision_bounds():
    full = [event("r1", ["a", "b"], ["a", "b"])]
    none = [event("r1", ["a", "b"], [])]
    assert precision(full) == 1.0
    assert precision(none) == 0.0


def test_precision_requires_prompts():
    with pytest.raises(NoPromptsShownError):
        precision([])


@given(
    st.lists(
        st.builds(
            lambda rid, shown, k: event(rid, shown, sorted(shown)[:k]),
            st.sampled_from(["r1", "r2", "r3"]),
            st.lists(
                st.sampled_from([f"f{i}" for i in range(6)]),
                min_size=1,
                max_size=4,
                unique=True,
            ),
            st.integers(min_value=0, max_value=4),
        ),
        min_size=1,
        max_size=12,
    ),
    st.randoms(use_true_random=False),
)
def test_precision_is_order_invariant(events, rng):
    shuffled = list(events)
    rng.shuffle(shuffled)
    assert precision(shuffled) == pytest.approx(precision(events))


# --- acceptance ----------------------------------------------------------------


def test_acceptance_stats_by_hand():
    events = [
        event("r1", ["a", "b"], []),
        event("r2", ["a", "b"], ["a", "b"]),
        event("r3", ["a", "b", "c", "d"], ["a", "b", "c", "d"]),
    ]
    stats = acceptance_stats(events)
    assert stats.fraction_recalls_with_acceptance == pytest.approx(2 / 3)
    assert stats.mean_accepted_among_accepting == pytest.approx(3.0)


def test_acceptance_stats_nobody_accepts():
    stats = acceptance_stats([event("r1", ["a"], []), event("r2", ["b"], [])])
    assert stats.fraction_recalls_with_acceptance == 0.0
    assert stats.mean_accepted_among_accepting is None


def test_acceptance_stats_single_accepting_recall():
    stats = acceptance_stats([event("r1", ["a"], ["a"])])
    assert stats.fraction_recalls_with_acceptance == 1.0
    assert stats.mean_accepted_among_accepting == 1.0


def test_acceptance_counts_accumulate_per_recall():
    events = [
        event("r1", ["a"], ["a"], meal_index=0),
        event("r1", ["b"], ["b"], meal_index=1),
    ]
    stats = acceptance_stats(events)
    assert stats.mean_accepted_among_accepting == 2.0


# --- coverage -------------------------------------------------------------------


def test_coverage_unions_accepted_sets():
    events = [event("r1", ["butter"], ["butter"]), event("r2", ["butter", "jam"], ["butter", "jam"])]
    stats = coverage_stats(events, {"toast", "butter", "jam", "tea"})
    assert stats.unique_accepted == 2
    assert stats.unique_reported == 4


def test_coverage_no_events():
    stats = coverage_stats([], {"a", "b"})
    assert (stats.unique_accepted, stats.unique_reported) == (0, 2)


def test_coverage_ratio_example():
    shown = [f"f{i}" for i in range(40)]
    events = [event("r1", shown, shown[:30])]
    reported = {f"r{i}" for i in range(165)}
    stats = coverage_stats(events, reported)
    assert stats.unique_accepted == 30
    assert stats.unique_reported == 165
    assert stats.unique_accepted / stats.unique_reported == pytest.approx(0.18, abs=0.005)


# --- energy and duration ----------------------------------------------------------


def recalls_with_energy(*energies):
    return [
        make_recall(f"r{i}", Arm.HANDCODED, [("toast",)], energy=e)
        for i, e in enumerate(energies)
    ]


def test_energy_stats_excludes_low_days():
    stats = energy_stats(recalls_with_energy(200, 1800, 2200))
    assert stats.mean == pytest.approx(2000.0)
    assert (stats.n_included, stats.n_excluded, stats.n_missing) == (2, 1, 0)


def test_energy_boundary_is_inclusive():
    stats = energy_stats(recalls_with_energy(250.0))
    assert stats.n_included == 1


def test_energy_all_below_floor():
    with pytest.raises(NoEligibleRecallsError):
        energy_stats(recalls_with_energy(100, 249.9))


def test_energy_missing_counted_separately():
    stats = energy_stats(recalls_with_energy(300, None))
    assert (stats.n_included, stats.n_excluded, stats.n_missing) == (1, 0, 1)


def recalls_with_duration(*durations):
    return [
        make_recall(f"r{i}", Arm.HANDCODED, [("toast",)], duration=d)
        for i, d in enumerate(durations)
    ]


def test_duration_stats_excludes_long_days():
    stats = duration_stats(recalls_with_duration(10, 20, 90))
    assert stats.mean == pytest.approx(15.0)
    assert (stats.n_included, stats.n_excluded) == (2, 1)


def test_duration_boundary_is_inclusive():
    stats = duration_stats(recalls_with_duration(60.0))
    assert stats.n_included == 1


def test_duration_all_above_ceiling():
    with pytest.raises(NoEligibleRecallsError):
        duration_stats(recalls_with_duration(61, 1000))


# --- per-arm aggregation -------------------------------------------------------------


def test_arm_metrics_no_data():
    metrics = arm_metrics([], [])
    for arm in ("handcoded", "generated"):
        m = metrics[arm]
        assert m["recalls"] == 0
        assert m["precision"] is None
        assert m["energy_mean"] is None
        assert m["unique_accepted"] == 0


def test_arm_metrics_separates_arms():
    recalls = [
        make_recall("h1", Arm.HANDCODED, [("toast", "butter")]),
        make_recall("g1", Arm.GENERATED, [("coffee",)]),
    ]
    events = [
        event("h1", ["butter"], ["butter"], arm=Arm.HANDCODED),
        event("g1", ["milk", "sugar"], [], arm=Arm.GENERATED),
    ]
    metrics = arm_metrics(recalls, events)
    assert metrics["handcoded"]["precision"] == 1.0
    assert metrics["generated"]["precision"] == 0.0
    assert metrics["handcoded"]["unique_reported"] == 2
    assert metrics["generated"]["unique_reported"] == 1
    assert metrics["generated"]["fraction_recalls_with_acceptance"] == 0.0
