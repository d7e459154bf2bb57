"""Population-level food co-occurrence model and omitted-food scoring.

Training scans a corpus of meals and keeps two tallies: for every food,
the number of meals containing it, and for every unordered pair of
distinct foods, the number of meals containing both. Duplicates inside a
meal count once; a meal contributes each of its unique pairs exactly
once.

Given the foods a respondent has reported for the current meal, a
candidate food is ranked by ``score = conditional_sum * support_weight``
where:

* ``conditional_sum`` adds, over every reported food, the probability of
  seeing the candidate in a meal given that reported food (pair count
  divided by the reported food's meal count);
* ``support_weight`` adds the meal counts of exactly those reported
  foods that have been seen together with the candidate at least once,
  so associations anchored on frequent foods outrank ones anchored on
  rare foods.

Candidates are every food that pairs with at least one reported food and
is not itself reported. Ties are broken by ascending food code so that
rankings are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from itertools import combinations
from typing import Iterable, NamedTuple

from .core import Corpus, DomainError, EmptyCorpusError

# Cap on the checkbox list shown to respondents at the end of a meal.
DEFAULT_RECOMMENDATION_LIMIT = 15

Pair = tuple[str, str]


class SelfPairError(DomainError):
    """A food was paired with itself; self-pairs do not exist."""


class UnknownGivenFoodError(DomainError):
    """Conditional probability was requested on a food the model has never seen."""


class CandidateIsReportedError(DomainError):
    """A candidate food cannot be scored against a set that contains it."""


class EmptyReportedSetError(DomainError):
    """Scoring requires at least one reported food."""


def pair_key(a: str, b: str) -> Pair:
    """Canonical dictionary key for the unordered pair {a, b}.

    The lexicographically smaller code always comes first.
    """
    if a == b:
        raise SelfPairError(f"no self-pair for {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass
class CoOccurrenceModel:
    """Pair and single-food meal counts over a training corpus.

    ``corpus_label`` and ``built_at`` are provenance metadata and do not
    take part in equality; two models are equal when they encode the
    same counts.
    """

    total_meals: int
    food_counts: dict[str, int]
    pair_counts: dict[Pair, int]
    corpus_label: str = field(default="", compare=False)
    built_at: datetime | None = field(default=None, compare=False)

    @classmethod
    def empty(cls, corpus_label: str = "") -> "CoOccurrenceModel":
        """Identity element for :func:`merge_models`."""
        return cls(0, {}, {}, corpus_label)

    def food_count(self, food: str) -> int:
        return self.food_counts.get(food, 0)

    def pair_count(self, a: str, b: str) -> int:
        return self.pair_counts.get(pair_key(a, b), 0)


class FoodScore(NamedTuple):
    """Score components for one candidate food against a reported set."""

    conditional_sum: float
    support_weight: int
    score: float


@dataclass(frozen=True)
class Recommendation:
    """A candidate omitted food with its score breakdown.

    ``supporting_foods`` lists the reported foods that pair with the
    candidate, with the pair's meal count, sorted by food code.
    """

    food: str
    score: float
    conditional_sum: float
    support_weight: int
    supporting_foods: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.supporting_foods:
            raise DomainError(f"recommendation for {self.food!r} has no support")


def build_model(
    corpus: Corpus, *, built_at: datetime | None = None
) -> CoOccurrenceModel:
    """Count foods and unique food pairs per meal across a corpus.

    Meals with a single food contribute to the food tallies only.
    """
    if not corpus.meals:
        raise EmptyCorpusError("corpus has no meals")
    food_counts: dict[str, int] = {}
    pair_counts: dict[Pair, int] = {}
    for meal in corpus.meals:
        foods = sorted(meal.food_set)
        for f in foods:
            food_counts[f] = food_counts.get(f, 0) + 1
        for key in combinations(foods, 2):
            pair_counts[key] = pair_counts.get(key, 0) + 1
    return CoOccurrenceModel(
        total_meals=len(corpus.meals),
        food_counts=food_counts,
        pair_counts=pair_counts,
        corpus_label=corpus.source_label,
        built_at=built_at,
    )


def merge_models(a: CoOccurrenceModel, b: CoOccurrenceModel) -> CoOccurrenceModel:
    """Combine two models by summing all counts.

    Merging models built from two corpora equals building one model from
    the concatenated corpus, so ingestion can proceed in shards. The
    operation is associative and commutative with ``empty()`` as the
    identity.
    """
    food_counts = dict(a.food_counts)
    for food, n in b.food_counts.items():
        food_counts[food] = food_counts.get(food, 0) + n
    pair_counts = dict(a.pair_counts)
    for key, n in b.pair_counts.items():
        pair_counts[key] = pair_counts.get(key, 0) + n
    if a.corpus_label == b.corpus_label or not b.corpus_label:
        label = a.corpus_label
    elif not a.corpus_label:
        label = b.corpus_label
    else:
        label = f"{a.corpus_label}+{b.corpus_label}"
    if a.built_at and b.built_at:
        built_at = max(a.built_at, b.built_at)
    else:
        built_at = a.built_at or b.built_at
    return CoOccurrenceModel(
        total_meals=a.total_meals + b.total_meals,
        food_counts=food_counts,
        pair_counts=pair_counts,
        corpus_label=label,
        built_at=built_at,
    )


def conditional_probability(
    model: CoOccurrenceModel, candidate: str, given: str
) -> float:
    """Probability of seeing ``candidate`` in a meal containing ``given``.

    Zero when the pair has never been observed. The given food must
    itself appear in the model.
    """
    n_given = model.food_count(given)
    if n_given <= 0:
        raise UnknownGivenFoodError(f"{given!r} does not appear in the model")
    return model.pair_count(candidate, given) / n_given


def score(
    model: CoOccurrenceModel,
    reported: Iterable[str],
    candidate: str,
    *,
    min_pair_count: int = 1,
) -> FoodScore:
    """Score one candidate food against the reported set.

    Pairs observed fewer than ``min_pair_count`` times are treated as
    unobserved; the default of 1 applies no pruning. Reported foods the
    model has never seen contribute nothing. When no reported food pairs
    with the candidate, all three components are zero.

    The summation runs over the reported foods in sorted order so that
    repeated runs produce bit-identical floating point results.
    """
    reported_set = frozenset(reported)
    if not reported_set:
        raise EmptyReportedSetError("reported set is empty")
    if candidate in reported_set:
        raise CandidateIsReportedError(f"{candidate!r} is already reported")
    conditional_sum = 0.0
    support_weight = 0
    for fi in sorted(reported_set):
        n_fi = model.food_count(fi)
        if n_fi <= 0:
            continue
        n_pair = model.pair_count(candidate, fi)
        if n_pair < min_pair_count or n_pair <= 0:
            continue
        conditional_sum += n_pair / n_fi
        support_weight += n_fi
    return FoodScore(conditional_sum, support_weight, conditional_sum * support_weight)


def recommend(
    model: CoOccurrenceModel,
    reported: Iterable[str],
    limit: int = DEFAULT_RECOMMENDATION_LIMIT,
    *,
    min_pair_count: int = 1,
) -> list[Recommendation]:
    """Rank candidate omitted foods for a reported set.

    Returns at most ``limit`` recommendations, sorted by descending
    score with ties broken by ascending food code. Every returned
    recommendation has a positive score and names a food outside the
    reported set.
    """
    if limit < 1:
        raise DomainError(f"limit must be at least 1, got {limit}")
    reported_set = frozenset(reported)
    if not reported_set:
        raise EmptyReportedSetError("reported set is empty")

    support: dict[str, list[tuple[str, int]]] = {}
    for (a, b), n in model.pair_counts.items():
        if n < min_pair_count:
            continue
        if a in reported_set:
            if b not in reported_set:
                support.setdefault(b, []).append((a, n))
        elif b in reported_set:
            support.setdefault(a, []).append((b, n))

    recs = []
    for food, pairs in support.items():
        s = score(model, reported_set, food, min_pair_count=min_pair_count)
        recs.append(
            Recommendation(
                food=food,
                score=s.score,
                conditional_sum=s.conditional_sum,
                support_weight=s.support_weight,
                supporting_foods=tuple(sorted(pairs)),
            )
        )
    recs.sort(key=lambda r: (-r.score, r.food))
    return recs[:limit]
