from datetime import datetime, timezone

import pytest

from foodprompts.core import Arm, Corpus, DeviceClass, Meal, RecallDay
from foodprompts.model import build_model

TOY_MEALS = [
    ("toast", "butter"),
    ("toast", "butter", "jam"),
    ("toast",),
    ("coffee", "milk"),
]


@pytest.fixture
def toy_corpus() -> Corpus:
    return Corpus.from_meals([Meal("", m) for m in TOY_MEALS], "toy")


@pytest.fixture
def toy_model(toy_corpus):
    return build_model(toy_corpus)


def make_recall(
    recall_id: str,
    arm: Arm,
    meal_foods: list[tuple[str, ...]],
    duration: float = 10.0,
    energy: float | None = 1800.0,
    device: DeviceClass = DeviceClass.DESKTOP,
) -> RecallDay:
    return RecallDay(
        recall_id=recall_id,
        respondent_id=f"p-{recall_id}",
        meals=tuple(Meal(f"meal {i}", foods) for i, foods in enumerate(meal_foods)),
        submitted_at=datetime(2024, 5, 2, 9, 0, tzinfo=timezone.utc),
        duration_minutes=duration,
        arm=arm,
        device_class=device,
        energy_kcal=energy,
    )
