"""Independent brute-force oracles the implementation is checked against.

Everything here recomputes results from raw inputs (corpus scans,
combinatorial enumeration) and never calls into the model or ranking
code, so a bug in the implementation cannot hide in its own oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence


@dataclass(frozen=True)
class OracleRecommendation:
    food: str
    score: float
    conditional_sum: float
    support_weight: int
    supporting_foods: tuple[tuple[str, int], ...]


def _meals_with(meals: Sequence[frozenset[str]], *foods: str) -> int:
    return sum(1 for m in meals if all(f in m for f in foods))


def brute_force_recommendations(
    meals: Sequence[Iterable[str]],
    reported: Iterable[str],
    limit: int,
    min_pair_count: int = 1,
) -> list[OracleRecommendation]:
    """Recompute the ranking by scanning the raw meal list.

    Candidate foods are everything observed in the corpus that is not
    reported; scores are rebuilt from scratch with whole-corpus counts.
    The reported foods are visited in sorted order so floating point
    sums match a same-ordered implementation bit for bit.
    """
    meal_sets = [frozenset(m) for m in meals]
    reported_set = frozenset(reported)
    universe = sorted(set().union(*meal_sets) if meal_sets else set())

    out = []
    for food in universe:
        if food in reported_set:
            continue
        conditional_sum = 0.0
        support_weight = 0
        supporting: list[tuple[str, int]] = []
        for fi in sorted(reported_set):
            count_fi = _meals_with(meal_sets, fi)
            if count_fi == 0:
                continue
            count_pair = _meals_with(meal_sets, food, fi)
            if count_pair < min_pair_count or count_pair == 0:
                continue
            conditional_sum += count_pair / count_fi
            support_weight += count_fi
            supporting.append((fi, count_pair))
        if supporting:
            out.append(
                OracleRecommendation(
                    food=food,
                    score=conditional_sum * support_weight,
                    conditional_sum=conditional_sum,
                    support_weight=support_weight,
                    supporting_foods=tuple(sorted(supporting)),
                )
            )
    out.sort(key=lambda r: (-r.score, r.food))
    return out[:limit]


def enumerate_mwu_two_sided_p(
    sample_a: Sequence[float], sample_b: Sequence[float]
) -> tuple[float, float]:
    """Exact two-sided p by enumerating every split of the pooled sample.

    Returns (u_min, p). Valid for tie-free pooled samples; uses no rank
    recurrence, only direct counting of pairwise wins over all
    C(n1+n2, n1) assignments.
    """
    pooled = [float(x) for x in sample_a] + [float(x) for x in sample_b]
    n = len(pooled)
    n1 = len(sample_a)

    def u_min_for(a_idx: tuple[int, ...]) -> float:
        a_vals = [pooled[i] for i in a_idx]
        b_vals = [pooled[i] for i in range(n) if i not in set(a_idx)]
        u_a = sum(1 for x in a_vals for y in b_vals if x > y)
        return min(u_a, len(a_vals) * len(b_vals) - u_a)

    observed = u_min_for(tuple(range(n1)))
    total = math.comb(n, n1)
    at_most = sum(
        1 for idx in combinations(range(n), n1) if u_min_for(idx) <= observed
    )
    # Both tails: arrangements whose min-U is as small as observed already
    # count each tail once, so halve nothing; p = P(U_min <= observed).
    # For the symmetric U distribution this equals 2 * P(U_A <= observed).
    return observed, min(1.0, at_most / total)
