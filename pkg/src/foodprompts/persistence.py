"""File formats for corpora, models, logs, and reports.

Everything is UTF-8 and line oriented so fixtures can be written by hand
and diffs stay readable. Serialization is deterministic: the same object
always produces byte-identical output.

Corpus file
    One meal per line, food codes separated by whitespace. Lines whose
    first non-space character is '#' are comments; blank lines are
    skipped.

Model file
    Tab separated, strictly ordered::

        model\t1
        label\t<corpus label>
        meals\t<total meal count>
        food\t<code>\t<count>          (one per food, codes ascending)
        pair\t<a>\t<b>\t<count>        (one per pair, a < b, keys ascending)

    The first line carries the format version. Counts are positive;
    loading verifies the structural invariants (a pair can never be
    seen more often than either of its foods) and rejects anything
    older or newer than the supported version.

Recall log / prompt event log
    One JSON object per line (sorted keys, compact separators). Recall
    records carry recall_id, respondent_id, arm, submitted_at (ISO
    8601), duration_minutes, energy_kcal (nullable), device_class and
    meals as a list of {name, entries}. Event records carry recall_id,
    meal_index, prompt_type, shown and accepted.

Evaluation report
    A single JSON document with cases_evaluated, ks and recall_at_k.

Food list
    Tab separated: code, display name. The name is optional and
    defaults to the code. '#' comments and blank lines as above.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import (
    Arm,
    Corpus,
    DomainError,
    EmptyCorpusError,
    Meal,
    ParseError,
    RecallDay,
    RecallValidationError,
    validate_recall,
)
from .evaluation import EvaluationReport, PromptEvent
from .model import CoOccurrenceModel

MODEL_FORMAT_VERSION = 1


class VersionMismatchError(DomainError):
    """The model file was written by an unsupported format version."""


class CorruptCountsError(DomainError):
    """The model file violates a counting invariant."""


class ValidationError(DomainError):
    """A parsed record violates domain invariants.

    Distinct from :class:`ParseError`: the line was well formed but its
    content is invalid. Carries the 1-based line number.
    """

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


# --- corpus ---------------------------------------------------------------


def parse_corpus(text: str, source_label: str = "") -> Corpus:
    meals: list[Meal] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            meals.append(Meal("", tuple(line.split())))
        except DomainError as exc:
            raise ParseError(lineno, str(exc)) from exc
    if not meals:
        raise EmptyCorpusError("corpus file contains no meals")
    return Corpus(meals, source_label)


def read_corpus(path: str | Path, source_label: str | None = None) -> Corpus:
    path = Path(path)
    label = str(path) if source_label is None else source_label
    return parse_corpus(path.read_text(encoding="utf-8"), label)


def format_corpus(corpus: Corpus) -> str:
    return "".join(" ".join(sorted(m.food_set)) + "\n" for m in corpus.meals)


# --- model ----------------------------------------------------------------


def save_model(model: CoOccurrenceModel) -> bytes:
    label = model.corpus_label
    if any(c in label for c in "\t\n\r"):
        raise DomainError("corpus label must not contain tabs or newlines")
    lines = [
        f"model\t{MODEL_FORMAT_VERSION}",
        f"label\t{label}",
        f"meals\t{model.total_meals}",
    ]
    for code in sorted(model.food_counts):
        lines.append(f"food\t{code}\t{model.food_counts[code]}")
    for a, b in sorted(model.pair_counts):
        lines.append(f"pair\t{a}\t{b}\t{model.pair_counts[(a, b)]}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_count(lineno: int, raw: str, what: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ParseError(lineno, f"{what} is not an integer: {raw!r}") from None
    return value


def load_model(data: bytes | str) -> CoOccurrenceModel:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if len(lines) < 3:
        raise ParseError(1, "model file is truncated")

    head = lines[0].split("\t")
    if len(head) != 2 or head[0] != "model":
        raise ParseError(1, f"expected 'model\\t<version>' header, got {lines[0]!r}")
    version = _parse_count(1, head[1], "format version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatchError(
            f"unsupported model format version {version}, expected {MODEL_FORMAT_VERSION}"
        )

    label_parts = lines[1].split("\t")
    if len(label_parts) != 2 or label_parts[0] != "label":
        raise ParseError(2, f"expected 'label\\t<text>', got {lines[1]!r}")
    label = label_parts[1]

    meals_parts = lines[2].split("\t")
    if len(meals_parts) != 2 or meals_parts[0] != "meals":
        raise ParseError(3, f"expected 'meals\\t<count>', got {lines[2]!r}")
    total_meals = _parse_count(3, meals_parts[1], "meal count")
    if total_meals < 0:
        raise CorruptCountsError("total meal count is negative")

    food_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    in_pairs = False
    last_food: str | None = None
    last_pair: tuple[str, str] | None = None
    for lineno, line in enumerate(lines[3:], start=4):
        parts = line.split("\t")
        if parts[0] == "food":
            if in_pairs:
                raise ParseError(lineno, "food entry after pair entries")
            if len(parts) != 3:
                raise ParseError(lineno, "expected 'food\\t<code>\\t<count>'")
            code = parts[1]
            if not code:
                raise ParseError(lineno, "empty food code")
            if last_food is not None and code <= last_food:
                raise ParseError(lineno, f"food entries out of order at {code!r}")
            count = _parse_count(lineno, parts[2], "food count")
            if count <= 0:
                raise CorruptCountsError(f"line {lineno}: food count must be positive")
            if count > total_meals:
                raise CorruptCountsError(
                    f"line {lineno}: food {code!r} counted in {count} of "
                    f"{total_meals} meals"
                )
            food_counts[code] = count
            last_food = code
        elif parts[0] == "pair":
            in_pairs = True
            if len(parts) != 4:
                raise ParseError(lineno, "expected 'pair\\t<a>\\t<b>\\t<count>'")
            a, b = parts[1], parts[2]
            if not a or not b:
                raise ParseError(lineno, "empty food code in pair")
            if a == b:
                raise CorruptCountsError(f"line {lineno}: self-pair {a!r}")
            if a > b:
                raise ParseError(lineno, f"pair key not ordered: {a!r} > {b!r}")
            key = (a, b)
            if last_pair is not None and key <= last_pair:
                raise ParseError(lineno, f"pair entries out of order at {key!r}")
            count = _parse_count(lineno, parts[3], "pair count")
            if count <= 0:
                raise CorruptCountsError(f"line {lineno}: pair count must be positive")
            for code in key:
                if code not in food_counts:
                    raise CorruptCountsError(
                        f"line {lineno}: pair references unknown food {code!r}"
                    )
            if count > min(food_counts[a], food_counts[b]):
                raise CorruptCountsError(
                    f"line {lineno}: pair {key!r} counted {count} times but its "
                    "foods appear less often"
                )
            pair_counts[key] = count
            last_pair = key
        else:
            raise ParseError(lineno, f"unknown entry kind {parts[0]!r}")

    return CoOccurrenceModel(
        total_meals=total_meals,
        food_counts=food_counts,
        pair_counts=pair_counts,
        corpus_label=label,
    )


def write_model(model: CoOccurrenceModel, path: str | Path) -> None:
    Path(path).write_bytes(save_model(model))


def read_model(path: str | Path) -> CoOccurrenceModel:
    return load_model(Path(path).read_bytes())


# --- recall log -----------------------------------------------------------


def format_recall(recall: RecallDay) -> str:
    record = {
        "recall_id": recall.recall_id,
        "respondent_id": recall.respondent_id,
        "arm": recall.arm.value,
        "submitted_at": recall.submitted_at.isoformat(),
        "duration_minutes": recall.duration_minutes,
        "energy_kcal": recall.energy_kcal,
        "device_class": recall.device_class.value,
        "meals": [
            {"name": m.name, "entries": list(m.entries)} for m in recall.meals
        ],
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def parse_recall_log(text: str) -> list[RecallDay]:
    recalls: list[RecallDay] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ParseError(lineno, "recall record must be a JSON object")
        try:
            recalls.append(validate_recall(record))
        except RecallValidationError as exc:
            raise ValidationError(lineno, "; ".join(exc.violations)) from exc
    return recalls


def read_recall_log(path: str | Path) -> list[RecallDay]:
    return parse_recall_log(Path(path).read_text(encoding="utf-8"))


# --- prompt event log -----------------------------------------------------


def format_prompt_event(event: PromptEvent) -> str:
    record = {
        "recall_id": event.recall_id,
        "meal_index": event.meal_index,
        "prompt_type": event.prompt_type.value,
        "shown": list(event.shown),
        "accepted": list(event.accepted),
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def parse_prompt_events(text: str) -> list[PromptEvent]:
    events: list[PromptEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ParseError(lineno, "event record must be a JSON object")
        try:
            events.append(
                PromptEvent(
                    recall_id=str(record["recall_id"]),
                    meal_index=int(record["meal_index"]),
                    prompt_type=Arm(record["prompt_type"]),
                    shown=tuple(record["shown"]),
                    accepted=tuple(record.get("accepted") or ()),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(lineno, str(exc)) from exc
    return events


def read_prompt_events(path: str | Path) -> list[PromptEvent]:
    return parse_prompt_events(Path(path).read_text(encoding="utf-8"))


# --- evaluation report ----------------------------------------------------


def format_report(report: EvaluationReport) -> str:
    record = {
        "cases_evaluated": report.cases_evaluated,
        "ks": list(report.ks),
        "recall_at_k": {str(k): v for k, v in sorted(report.recall_at_k.items())},
    }
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def parse_report(text: str) -> EvaluationReport:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(1, f"invalid JSON: {exc}") from exc
    try:
        return EvaluationReport(
            recall_at_k={int(k): float(v) for k, v in record["recall_at_k"].items()},
            cases_evaluated=int(record["cases_evaluated"]),
            ks=tuple(int(k) for k in record["ks"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(1, str(exc)) from exc


def write_report(report: EvaluationReport, path: str | Path) -> None:
    Path(path).write_text(format_report(report), encoding="utf-8")


# --- food list ------------------------------------------------------------


def parse_food_list(text: str) -> dict[str, str]:
    """Code to display name mapping, in file order."""
    foods: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        code = parts[0].strip()
        if not code:
            raise ParseError(lineno, "empty food code")
        if code in foods:
            raise ParseError(lineno, f"duplicate food code {code!r}")
        name = parts[1].strip() if len(parts) > 1 and parts[1].strip() else code
        foods[code] = name
    return foods


def read_food_list(path: str | Path) -> dict[str, str]:
    return parse_food_list(Path(path).read_text(encoding="utf-8"))
