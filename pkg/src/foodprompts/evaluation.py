"""Evaluation pipeline for the two prompting strategies.

Covers the offline simulation (hold out one food of one meal at a time
and check whether it comes back in the top k recommendations) and the
survey-side metrics computed from prompt event logs: precision of shown
prompts, acceptance rates per recall, coverage in unique foods, and mean
energy and duration under the standard exclusion rules. Significance of
a difference between two samples is tested with a rank-sum test that
falls back to exact enumeration for small tie-free samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from .core import Arm, Corpus, DomainError, RecallDay
from .model import CoOccurrenceModel, build_model, recommend

ENERGY_FLOOR_KCAL = 250.0
DURATION_CEILING_MINUTES = 60.0

# Largest pooled sample for which the exact rank-sum distribution is
# enumerated instead of the normal approximation.
EXACT_ENUMERATION_LIMIT = 16


class NoEligibleMealsError(DomainError):
    """The corpus had no meal with at least two foods to hold out from."""


class NoPromptsShownError(DomainError):
    """Metrics over prompt events need at least one shown prompt."""


class NoEligibleRecallsError(DomainError):
    """Every recall was excluded by the cutoff."""


class EmptySampleError(DomainError):
    """Both samples of a rank-sum test must be non-empty."""


@dataclass(frozen=True)
class PromptEvent:
    """Audit record of one prompt shown to a respondent.

    ``shown`` lists the foods offered; ``accepted`` the subset the
    respondent confirmed eating. An ignored or dismissed prompt is a
    valid event with an empty acceptance.
    """

    recall_id: str
    meal_index: int
    prompt_type: Arm
    shown: tuple[str, ...]
    accepted: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "shown", tuple(self.shown))
        object.__setattr__(self, "accepted", tuple(self.accepted))
        if self.meal_index < 0:
            raise DomainError("meal_index must be non-negative")
        if not self.shown:
            raise DomainError("a prompt event must have shown at least one food")
        if not set(self.accepted) <= set(self.shown):
            raise DomainError("accepted foods must be a subset of shown foods")


@dataclass(frozen=True)
class EvaluationReport:
    """Recall-at-k results of the omission simulation."""

    recall_at_k: dict[int, float]
    cases_evaluated: int
    ks: tuple[int, ...]


@dataclass(frozen=True)
class AcceptanceStats:
    fraction_recalls_with_acceptance: float
    mean_accepted_among_accepting: float | None


@dataclass(frozen=True)
class CoverageStats:
    unique_accepted: int
    unique_reported: int


@dataclass(frozen=True)
class EnergyStats:
    mean: float
    n_included: int
    n_excluded: int
    n_missing: int


@dataclass(frozen=True)
class DurationStats:
    mean: float
    n_included: int
    n_excluded: int


@dataclass(frozen=True)
class MannWhitneyResult:
    u_statistic: float
    n1: int
    n2: int
    z_score: float
    p_two_sided: float
    tie_corrected: bool
    method: str
    degenerate: bool = False


def _remove_meal(model: CoOccurrenceModel, food_set: frozenset[str]) -> None:
    """Subtract one meal's contribution from the model in place."""
    model.total_meals -= 1
    foods = sorted(food_set)
    for f in foods:
        n = model.food_counts[f] - 1
        if n:
            model.food_counts[f] = n
        else:
            del model.food_counts[f]
    for key in combinations(foods, 2):
        n = model.pair_counts[key] - 1
        if n:
            model.pair_counts[key] = n
        else:
            del model.pair_counts[key]


def _restore_meal(model: CoOccurrenceModel, food_set: frozenset[str]) -> None:
    """Exact inverse of :func:`_remove_meal`."""
    model.total_meals += 1
    foods = sorted(food_set)
    for f in foods:
        model.food_counts[f] = model.food_counts.get(f, 0) + 1
    for key in combinations(foods, 2):
        model.pair_counts[key] = model.pair_counts.get(key, 0) + 1


def simulate_leave_one_out(
    corpus: Corpus,
    ks: Sequence[int],
    min_pair_count: int = 1,
    *,
    exclude_held_out_meal: bool = True,
    only_foods: Iterable[str] | None = None,
) -> EvaluationReport:
    """Replay past meals as if the respondent had omitted each food.

    For every meal with at least two foods and every food in it, the
    remaining foods are fed to the recommender and a case counts as a
    hit at k when the held-out food appears in the top k. While a meal
    is under evaluation its own contribution is subtracted from the
    model so it cannot support its own prediction; pass
    ``exclude_held_out_meal=False`` to score against the full model
    instead. ``only_foods`` restricts the held-out foods evaluated,
    which is useful when only a known subset of foods is of interest.
    """
    ks_sorted = tuple(sorted({int(k) for k in ks}))
    if not ks_sorted or ks_sorted[0] < 1:
        raise DomainError(f"ks must be positive integers, got {list(ks)!r}")
    target_filter = None if only_foods is None else frozenset(only_foods)

    model = build_model(corpus)
    max_k = ks_sorted[-1]
    hits = dict.fromkeys(ks_sorted, 0)
    cases = 0
    for meal in corpus.meals:
        food_set = meal.food_set
        if len(food_set) < 2:
            continue
        if target_filter is None:
            targets = sorted(food_set)
        else:
            targets = sorted(food_set & target_filter)
        if not targets:
            continue
        if exclude_held_out_meal:
            _remove_meal(model, food_set)
        try:
            for held_out in targets:
                recs = recommend(
                    model,
                    food_set - {held_out},
                    max_k,
                    min_pair_count=min_pair_count,
                )
                cases += 1
                rank = None
                for i, rec in enumerate(recs):
                    if rec.food == held_out:
                        rank = i + 1
                        break
                if rank is not None:
                    for k in ks_sorted:
                        if rank <= k:
                            hits[k] += 1
        finally:
            if exclude_held_out_meal:
                _restore_meal(model, food_set)
    if cases == 0:
        raise NoEligibleMealsError("no meal with at least two eligible foods")
    return EvaluationReport(
        recall_at_k={k: hits[k] / cases for k in ks_sorted},
        cases_evaluated=cases,
        ks=ks_sorted,
    )


def precision(events: Sequence[PromptEvent]) -> float:
    """Accepted foods divided by shown foods, over all events."""
    shown = sum(len(e.shown) for e in events)
    if shown == 0:
        raise NoPromptsShownError("no prompts were shown")
    accepted = sum(len(e.accepted) for e in events)
    return accepted / shown


def acceptance_stats(events: Sequence[PromptEvent]) -> AcceptanceStats:
    """Per-recall acceptance: how many recalls accepted anything, and
    the mean number of accepted foods among exactly those recalls.

    Recalls enter the denominator only if they were prompted at least
    once, which holds by construction since every event records a shown
    prompt.
    """
    if not events:
        raise NoPromptsShownError("no prompts were shown")
    totals: dict[str, int] = {}
    for e in events:
        totals[e.recall_id] = totals.get(e.recall_id, 0) + len(e.accepted)
    accepting = [n for n in totals.values() if n > 0]
    fraction = len(accepting) / len(totals)
    mean = sum(accepting) / len(accepting) if accepting else None
    return AcceptanceStats(fraction, mean)


def coverage_stats(
    events: Sequence[PromptEvent], reported_foods: Iterable[str]
) -> CoverageStats:
    """Unique foods ever accepted from prompts vs unique foods reported."""
    accepted: set[str] = set()
    for e in events:
        accepted.update(e.accepted)
    return CoverageStats(len(accepted), len(set(reported_foods)))


def energy_stats(
    recalls: Sequence[RecallDay], min_kcal: float = ENERGY_FLOOR_KCAL
) -> EnergyStats:
    """Mean reported energy, excluding implausibly low days.

    Recalls below ``min_kcal`` are excluded (the boundary itself is
    kept); recalls without an energy figure are counted separately as
    missing.
    """
    present = [r.energy_kcal for r in recalls if r.energy_kcal is not None]
    missing = len(recalls) - len(present)
    included = [e for e in present if e >= min_kcal]
    if not included:
        raise NoEligibleRecallsError(f"no recall at or above {min_kcal} kcal")
    return EnergyStats(
        mean=sum(included) / len(included),
        n_included=len(included),
        n_excluded=len(present) - len(included),
        n_missing=missing,
    )


def duration_stats(
    recalls: Sequence[RecallDay], max_minutes: float = DURATION_CEILING_MINUTES
) -> DurationStats:
    """Mean completion time, ignoring recalls that ran too long.

    Recalls longer than ``max_minutes`` are excluded as likely
    interrupted; the boundary itself is kept.
    """
    durations = [r.duration_minutes for r in recalls]
    included = [d for d in durations if d <= max_minutes]
    if not included:
        raise NoEligibleRecallsError(f"no recall within {max_minutes} minutes")
    return DurationStats(
        mean=sum(included) / len(included),
        n_included=len(included),
        n_excluded=len(durations) - len(included),
    )


def _pooled_ranks(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Average ranks (1-based) for a pooled sample, plus tie group sizes."""
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    tie_sizes: list[int] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


@lru_cache(maxsize=None)
def _u_count(u: int, n1: int, n2: int) -> int:
    """Number of rank arrangements of (n1, n2) samples with statistic u."""
    if u < 0:
        return 0
    if n1 == 0 or n2 == 0:
        return 1 if u == 0 else 0
    return _u_count(u - n2, n1 - 1, n2) + _u_count(u, n1, n2 - 1)


def exact_two_sided_p(u: int, n1: int, n2: int) -> float:
    """Two-sided p for the smaller U by exact enumeration (tie-free)."""
    total = math.comb(n1 + n2, n1)
    cum = sum(_u_count(v, n1, n2) for v in range(0, u + 1))
    return min(1.0, 2.0 * cum / total)


def normal_two_sided_p(
    u: float, n1: int, n2: int, tie_sizes: Sequence[int] = ()
) -> tuple[float, float, bool]:
    """Normal approximation for the smaller U.

    Returns (p, z, degenerate). Uses the tie-corrected variance and a
    continuity correction of one half toward the mean. When the
    variance collapses (every pooled value identical) the p-value is 1
    by convention and the degenerate flag is set.
    """
    n = n1 + n2
    mean = n1 * n2 / 2.0
    tie_term = sum(t**3 - t for t in tie_sizes)
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return 1.0, 0.0, True
    delta = max(0.0, abs(u - mean) - 0.5)
    z = delta / math.sqrt(variance)
    return math.erfc(z / math.sqrt(2.0)), z, False


def mann_whitney_u(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    *,
    method: str = "auto",
) -> MannWhitneyResult:
    """Rank-sum test of whether two samples come from the same distribution.

    Both samples are ranked jointly with average ranks for ties, and the
    smaller of the two U statistics is reported. With ``method="auto"``
    the p-value comes from exact enumeration of the U distribution for
    tie-free pooled samples of at most 16 values, and from the normal
    approximation (tie-corrected variance, continuity correction)
    otherwise. ``"exact"`` and ``"normal"`` force a path; the exact path
    refuses tied samples.
    """
    a = [float(x) for x in sample_a]
    b = [float(x) for x in sample_b]
    if not a or not b:
        raise EmptySampleError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    ranks, tie_sizes = _pooled_ranks(a + b)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    u = min(u1, u2)
    has_ties = any(t > 1 for t in tie_sizes)

    if method == "auto":
        use_exact = n1 + n2 <= EXACT_ENUMERATION_LIMIT and not has_ties
    elif method == "exact":
        if has_ties:
            raise DomainError("exact enumeration requires tie-free samples")
        use_exact = True
    elif method == "normal":
        use_exact = False
    else:
        raise DomainError(f"unknown method {method!r}")

    p_normal, z, degenerate = normal_two_sided_p(u, n1, n2, tie_sizes)
    if use_exact:
        p = exact_two_sided_p(int(round(u)), n1, n2)
        return MannWhitneyResult(u, n1, n2, z, p, False, "exact")
    return MannWhitneyResult(
        u, n1, n2, z, p_normal, has_ties, "normal", degenerate=degenerate
    )


def _mean_or_none(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def arm_metrics(
    recalls: Sequence[RecallDay],
    events: Sequence[PromptEvent],
    *,
    min_kcal: float = ENERGY_FLOOR_KCAL,
    max_minutes: float = DURATION_CEILING_MINUTES,
) -> dict[str, dict]:
    """Aggregate survey metrics separately for each prompting arm.

    Means are ``None`` whenever no data qualifies; counters are zero.
    This is the single source consumed by both the stats command and the
    service metrics endpoint, so the two always agree.
    """
    out: dict[str, dict] = {}
    for arm in Arm:
        arm_recalls = [r for r in recalls if r.arm == arm]
        arm_events = [e for e in events if e.prompt_type == arm]
        shown = sum(len(e.shown) for e in arm_events)
        accepted = sum(len(e.accepted) for e in arm_events)

        if arm_events:
            acc = acceptance_stats(arm_events)
            fraction = acc.fraction_recalls_with_acceptance
            mean_accepted = acc.mean_accepted_among_accepting
        else:
            fraction = None
            mean_accepted = None

        reported: set[str] = set()
        for r in arm_recalls:
            reported |= r.reported_foods()
        coverage = coverage_stats(arm_events, reported)

        energies = [r.energy_kcal for r in arm_recalls if r.energy_kcal is not None]
        energy_ok = [e for e in energies if e >= min_kcal]
        durations = [r.duration_minutes for r in arm_recalls]
        duration_ok = [d for d in durations if d <= max_minutes]

        out[arm.value] = {
            "recalls": len(arm_recalls),
            "prompt_events": len(arm_events),
            "foods_shown": shown,
            "foods_accepted": accepted,
            "precision": accepted / shown if shown else None,
            "fraction_recalls_with_acceptance": fraction,
            "mean_accepted_among_accepting": mean_accepted,
            "unique_accepted": coverage.unique_accepted,
            "unique_reported": coverage.unique_reported,
            "energy_mean": _mean_or_none(energy_ok),
            "energy_included": len(energy_ok),
            "energy_excluded": len(energies) - len(energy_ok),
            "energy_missing": len(arm_recalls) - len(energies),
            "duration_mean": _mean_or_none(duration_ok),
            "duration_included": len(duration_ok),
            "duration_excluded": len(durations) - len(duration_ok),
        }
    return out
