"""Domain vocabulary for dietary recall data.

A food is an opaque string code. A meal is the group of foods reported
for one eating occasion, and a recall day bundles everything one
respondent reported for a single day. The co-occurrence model and all
metrics consume these types and never look inside a food code, so code
granularity (e.g. whether "toast" and "white bread" are distinct) is
entirely up to whoever authors the training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping


class DomainError(ValueError):
    """Base class for every validation failure raised by this package."""


class EmptyFoodCodeError(DomainError):
    """A food code was empty or whitespace only."""


class EmptyRecallError(DomainError):
    """A recall was submitted without any meal."""


class EmptyMealError(DomainError):
    """A meal with no foods was used where foods are required."""


class NegativeDurationError(DomainError):
    """A recall reported a negative completion time."""


class EmptyCorpusError(DomainError):
    """A training corpus contained no meals."""


class ParseError(DomainError):
    """A line of an external file could not be parsed.

    Carries the 1-based line number so operators can find the offender.
    """

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class RecallValidationError(DomainError):
    """Raised by :func:`validate_recall`, listing every violated invariant."""

    def __init__(self, violations: Iterable[str]):
        self.violations = tuple(violations)
        super().__init__("invalid recall: " + "; ".join(self.violations))


class Arm(str, Enum):
    """Prompting condition a survey session runs under."""

    HANDCODED = "handcoded"
    GENERATED = "generated"


class DeviceClass(str, Enum):
    """Kind of device a recall was completed on."""

    DESKTOP = "desktop"
    MOBILE = "mobile"
    TABLET = "tablet"
    UNKNOWN = "unknown"


def food_code(raw: str) -> str:
    """Normalize a food code: trim surrounding whitespace, keep case.

    Codes are compared byte for byte, so "Toast" and "toast" are
    deliberately different foods.
    """
    code = raw.strip()
    if not code:
        raise EmptyFoodCodeError("food code is empty")
    return code


@dataclass(frozen=True)
class Meal:
    """Foods reported for one eating occasion.

    ``entries`` keeps codes in reported order, duplicates included.
    ``food_set`` is the deduplicated view; it is what every modeling
    operation consumes, so reporting a food twice in one meal counts
    once.
    """

    name: str
    entries: tuple[str, ...]
    food_set: frozenset[str] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        entries = tuple(food_code(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "food_set", frozenset(entries))


@dataclass(frozen=True)
class RecallDay:
    """One respondent's reported intake for a single day.

    ``energy_kcal`` is carried as supplied by the caller; this package
    never derives energy from foods.
    """

    recall_id: str
    respondent_id: str
    meals: tuple[Meal, ...]
    submitted_at: datetime
    duration_minutes: float
    arm: Arm
    device_class: DeviceClass = DeviceClass.UNKNOWN
    energy_kcal: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "meals", tuple(self.meals))
        if not self.meals:
            raise EmptyRecallError(f"recall {self.recall_id!r} has no meals")
        if self.duration_minutes < 0:
            raise NegativeDurationError(
                f"recall {self.recall_id!r} has negative duration"
            )
        if self.energy_kcal is not None and self.energy_kcal < 0:
            raise DomainError(f"recall {self.recall_id!r} has negative energy")

    def reported_foods(self) -> frozenset[str]:
        """Union of the food sets of all meals in this recall."""
        out: set[str] = set()
        for meal in self.meals:
            out |= meal.food_set
        return frozenset(out)


@dataclass
class Corpus:
    """Flat list of meals used to train the co-occurrence model."""

    meals: list[Meal]
    source_label: str = ""

    @classmethod
    def from_meals(cls, meals: Iterable[Meal], source_label: str = "") -> "Corpus":
        """Build a corpus, rejecting meals with no foods."""
        out: list[Meal] = []
        for i, meal in enumerate(meals):
            if not meal.food_set:
                raise EmptyMealError(f"meal {i} has no foods")
            out.append(meal)
        return cls(out, source_label)

    @classmethod
    def from_recalls(
        cls, recalls: Iterable[RecallDay], source_label: str = ""
    ) -> "Corpus":
        """Flatten recall days into one training corpus."""
        meals = [meal for recall in recalls for meal in recall.meals]
        return cls.from_meals(meals, source_label)


def validate_recall(raw: Mapping | RecallDay) -> RecallDay:
    """Normalize a raw recall record into a :class:`RecallDay`.

    Accepts either a mapping (one parsed record of the recall log
    format) or an already-built RecallDay, which is returned unchanged.
    All violated invariants are collected and reported together in a
    single :class:`RecallValidationError` rather than one at a time.
    """
    if isinstance(raw, RecallDay):
        return raw

    violations: list[str] = []

    recall_id = str(raw.get("recall_id", "") or "")
    if not recall_id.strip():
        violations.append("MissingRecallId")
    respondent_id = str(raw.get("respondent_id", "") or "")

    meals: list[Meal] = []
    raw_meals = raw.get("meals") or []
    if not raw_meals:
        violations.append("EmptyRecall: no meals")
    for i, raw_meal in enumerate(raw_meals):
        name = str(raw_meal.get("name", "") or "")
        entries: list[str] = []
        for j, entry in enumerate(raw_meal.get("entries") or []):
            try:
                entries.append(food_code(str(entry)))
            except EmptyFoodCodeError:
                violations.append(f"EmptyFoodCode: meal {i} entry {j}")
        meals.append(Meal(name, tuple(entries)))

    duration = raw.get("duration_minutes", 0.0)
    try:
        duration = float(duration)
    except (TypeError, ValueError):
        violations.append(f"BadDuration: {duration!r}")
        duration = 0.0
    if duration < 0:
        violations.append("NegativeDuration")

    energy = raw.get("energy_kcal")
    if energy is not None:
        try:
            energy = float(energy)
        except (TypeError, ValueError):
            violations.append(f"BadEnergy: {energy!r}")
            energy = None
        else:
            if energy < 0:
                violations.append("NegativeEnergy")

    try:
        arm = Arm(raw.get("arm"))
    except ValueError:
        violations.append(f"UnknownArm: {raw.get('arm')!r}")
        arm = Arm.HANDCODED

    try:
        device = DeviceClass(raw.get("device_class", DeviceClass.UNKNOWN))
    except ValueError:
        violations.append(f"UnknownDeviceClass: {raw.get('device_class')!r}")
        device = DeviceClass.UNKNOWN

    submitted_raw = raw.get("submitted_at")
    submitted_at = None
    if isinstance(submitted_raw, datetime):
        submitted_at = submitted_raw
    else:
        try:
            submitted_at = datetime.fromisoformat(str(submitted_raw))
        except (TypeError, ValueError):
            violations.append(f"BadTimestamp: {submitted_raw!r}")

    if violations:
        raise RecallValidationError(violations)
    assert submitted_at is not None
    return RecallDay(
        recall_id=recall_id,
        respondent_id=respondent_id,
        meals=tuple(meals),
        submitted_at=submitted_at,
        duration_minutes=duration,
        arm=arm,
        device_class=device,
        energy_kcal=energy,
    )
