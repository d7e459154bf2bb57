from datetime import datetime, timezone

import pytest

from foodprompts.core import (
    Arm,
    Corpus,
    DeviceClass,
    EmptyFoodCodeError,
    EmptyMealError,
    EmptyRecallError,
    Meal,
    NegativeDurationError,
    RecallDay,
    RecallValidationError,
    food_code,
    validate_recall,
)

NOW = datetime(2024, 5, 2, 9, 0, tzinfo=timezone.utc)


def test_food_code_trims_and_keeps_case():
    assert food_code("  Toast ") == "Toast"
    assert food_code("toast") != food_code("Toast")


@pytest.mark.parametrize("raw", ["", "   ", "\t\n"])
def test_food_code_rejects_empty(raw):
    with pytest.raises(EmptyFoodCodeError):
        food_code(raw)


def test_meal_food_set_deduplicates():
    meal = Meal("breakfast", ("toast", "toast", "butter"))
    assert meal.entries == ("toast", "toast", "butter")
    assert meal.food_set == {"toast", "butter"}


def test_meal_entries_are_normalized():
    meal = Meal("b", (" toast ", "butter"))
    assert meal.entries == ("toast", "butter")


def test_meal_rejects_empty_entry():
    with pytest.raises(EmptyFoodCodeError):
        Meal("b", ("toast", " "))


def test_recall_day_requires_a_meal():
    with pytest.raises(EmptyRecallError):
        RecallDay("r1", "p1", (), NOW, 10.0, Arm.HANDCODED)


def test_recall_day_rejects_negative_duration():
    with pytest.raises(NegativeDurationError):
        RecallDay("r1", "p1", (Meal("", ("toast",)),), NOW, -1.0, Arm.HANDCODED)


def test_reported_foods_unions_meals():
    recall = RecallDay(
        "r1",
        "p1",
        (Meal("", ("toast", "butter")), Meal("", ("toast", "coffee"))),
        NOW,
        10.0,
        Arm.GENERATED,
    )
    assert recall.reported_foods() == {"toast", "butter", "coffee"}


def test_corpus_rejects_empty_meal():
    with pytest.raises(EmptyMealError):
        Corpus.from_meals([Meal("", ("toast",)), Meal("", ())])


def test_corpus_from_recalls_flattens():
    recalls = [
        RecallDay("r1", "p1", (Meal("", ("a", "b")),), NOW, 5.0, Arm.HANDCODED),
        RecallDay("r2", "p2", (Meal("", ("c",)), Meal("", ("d",))), NOW, 5.0, Arm.GENERATED),
    ]
    corpus = Corpus.from_recalls(recalls, "flat")
    assert len(corpus.meals) == 3
    assert corpus.source_label == "flat"


RAW_OK = {
    "recall_id": "r1",
    "respondent_id": "p1",
    "meals": [{"name": "breakfast", "entries": ["toast"]}],
    "submitted_at": "2024-05-02T09:00:00+00:00",
    "duration_minutes": 12.5,
    "energy_kcal": 1900,
    "device_class": "mobile",
    "arm": "generated",
}


def test_validate_recall_minimal_well_formed():
    recall = validate_recall(RAW_OK)
    assert recall.recall_id == "r1"
    assert recall.meals[0].food_set == {"toast"}
    assert recall.arm is Arm.GENERATED
    assert recall.device_class is DeviceClass.MOBILE
    assert recall.energy_kcal == 1900.0


def test_validate_recall_is_idempotent():
    recall = validate_recall(RAW_OK)
    assert validate_recall(recall) is recall


def test_validate_recall_no_meals():
    raw = dict(RAW_OK, meals=[])
    with pytest.raises(RecallValidationError) as exc:
        validate_recall(raw)
    assert any(v.startswith("EmptyRecall") for v in exc.value.violations)


def test_validate_recall_collects_every_violation():
    raw = dict(
        RAW_OK,
        meals=[{"name": "b", "entries": ["toast", "  "]}],
        duration_minutes=-3,
        arm="mystery",
    )
    with pytest.raises(RecallValidationError) as exc:
        validate_recall(raw)
    joined = "; ".join(exc.value.violations)
    assert "EmptyFoodCode" in joined
    assert "NegativeDuration" in joined
    assert "UnknownArm" in joined


def test_validate_recall_duplicate_entries_collapse_in_food_set():
    raw = dict(RAW_OK, meals=[{"name": "b", "entries": ["toast", "toast", "butter"]}])
    recall = validate_recall(raw)
    assert recall.meals[0].food_set == {"toast", "butter"}
    assert recall.meals[0].entries == ("toast", "toast", "butter")
