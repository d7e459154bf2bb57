"""Hand-authored food association prompts.

The curated baseline: each rule links a trigger food to one partner food
and carries the question wording shown to the respondent. Rules fire
immediately when their trigger is reported, unlike the learned
recommendations, which arrive as a list at the end of a meal.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import DomainError, ParseError, food_code


class SelfRuleError(DomainError):
    """A rule suggested its own trigger food."""


class DuplicateRuleError(DomainError):
    """Two rules shared the same identifier or the same food pairing."""


@dataclass(frozen=True)
class AssociatedFoodRule:
    rule_id: str
    antecedent: str
    consequent: str
    prompt_text: str

    def __post_init__(self):
        object.__setattr__(self, "antecedent", food_code(self.antecedent))
        object.__setattr__(self, "consequent", food_code(self.consequent))
        if self.antecedent == self.consequent:
            raise SelfRuleError(
                f"rule {self.rule_id!r} suggests its own trigger {self.antecedent!r}"
            )


def load_rules(source: str | Iterable[str]) -> tuple[AssociatedFoodRule, ...]:
    """Parse a rule file, preserving file order.

    One record per line, tab separated: rule id, trigger food code,
    suggested food code, prompt text (which may itself contain tabs).
    Lines starting with '#' are comments; blank lines are skipped.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    rules: list[AssociatedFoodRule] = []
    seen_ids: set[str] = set()
    seen_pairs: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t", maxsplit=3)
        if len(parts) != 4:
            raise ParseError(lineno, f"expected 4 tab-separated fields, got {len(parts)}")
        rule_id, antecedent, consequent, prompt_text = parts
        rule_id = rule_id.strip()
        if not rule_id:
            raise ParseError(lineno, "empty rule id")
        if not prompt_text.strip():
            raise ParseError(lineno, "empty prompt text")
        try:
            rule = AssociatedFoodRule(rule_id, antecedent, consequent, prompt_text)
        except DomainError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
        if rule.rule_id in seen_ids:
            raise DuplicateRuleError(f"line {lineno}: duplicate rule id {rule.rule_id!r}")
        pairing = (rule.antecedent, rule.consequent)
        if pairing in seen_pairs:
            raise DuplicateRuleError(
                f"line {lineno}: duplicate rule {rule.antecedent!r} -> {rule.consequent!r}"
            )
        seen_ids.add(rule.rule_id)
        seen_pairs.add(pairing)
        rules.append(rule)
    return tuple(rules)


def read_rules(path: str | Path) -> tuple[AssociatedFoodRule, ...]:
    return load_rules(Path(path).read_text(encoding="utf-8"))


def prompts_for(
    rules: Sequence[AssociatedFoodRule],
    just_reported: str,
    meal_so_far: Iterable[str],
) -> list[AssociatedFoodRule]:
    """Rules that fire after ``just_reported`` was added to a meal.

    A rule fires when its trigger is the food just reported and its
    suggestion is not already in the meal. Results keep rule file order.
    Pure: same inputs, same output.
    """
    meal = frozenset(meal_so_far)
    if just_reported not in meal:
        raise DomainError(f"{just_reported!r} is not part of the meal so far")
    return [
        r
        for r in rules
        if r.antecedent == just_reported and r.consequent not in meal
    ]
