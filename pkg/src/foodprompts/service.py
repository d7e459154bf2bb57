"""Survey service running recall sessions in either prompting arm.

Session state lives in memory; completed recalls and their prompt events
are appended to on-disk logs before the submit call is acknowledged, so
a restart never loses a submitted recall. The model and rule set are
immutable snapshots shared by every request; swapping in a new model is
a single attribute assignment.

Prompting contract per arm:

* handcoded: adding a food returns any rule prompts for it immediately;
  accepting a suggested food can trigger that food's own rules, with the
  chain capped at depth 5 and each rule firing at most once per meal.
* generated: finishing a meal returns one checkbox list of at most 15
  foods recommended by the co-occurrence model; accepting foods from the
  list never triggers further prompting for that meal.
"""

from __future__ import annotations

import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import Arm, DeviceClass, DomainError, Meal, RecallDay, food_code
from .evaluation import PromptEvent, arm_metrics
from .model import (
    DEFAULT_RECOMMENDATION_LIMIT,
    CoOccurrenceModel,
    recommend,
)
from .persistence import (
    format_prompt_event,
    format_recall,
    parse_prompt_events,
    parse_recall_log,
    read_food_list,
    read_model,
)
from .rules import AssociatedFoodRule, prompts_for, read_rules

CHAIN_DEPTH_LIMIT = 5
SEARCH_RESULT_CAP = 50
DEFAULT_SESSION_TTL_SECONDS = 24 * 3600.0

RECALL_LOG_NAME = "recalls.jsonl"
EVENT_LOG_NAME = "prompt_events.jsonl"


class ServiceError(Exception):
    """Request-level failure with a stable error code and HTTP status."""

    def __init__(self, code: str, status: int, detail: str):
        self.code = code
        self.status = status
        self.detail = detail
        super().__init__(f"{code}: {detail}")


@dataclass
class ServiceConfig:
    model_path: str | None = None
    rules_path: str | None = None
    food_list_path: str | None = None
    arm_policy: str = "alternate"
    seed: int = 0
    log_dir: str = "logs"
    session_ttl_seconds: float = DEFAULT_SESSION_TTL_SECONDS


class ArmPolicy:
    """Assigns an arm to each new session.

    Policies: ``fixed:handcoded``, ``fixed:generated``, ``alternate``
    (handcoded first), ``random`` (seeded).
    """

    def __init__(self, spec: str, seed: int = 0):
        self.spec = spec
        self._lock = threading.Lock()
        self._counter = 0
        self._rng = random.Random(seed)
        if spec == "alternate":
            self._next = self._alternate
        elif spec == "random":
            self._next = self._random
        elif spec.startswith("fixed:"):
            try:
                self._fixed_arm = Arm(spec.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"unknown arm in policy {spec!r}") from None
            self._next = self._fixed
        else:
            raise DomainError(f"unknown arm policy {spec!r}")

    def _fixed(self) -> Arm:
        return self._fixed_arm

    def _alternate(self) -> Arm:
        arm = Arm.HANDCODED if self._counter % 2 == 0 else Arm.GENERATED
        self._counter += 1
        return arm

    def _random(self) -> Arm:
        return self._rng.choice([Arm.HANDCODED, Arm.GENERATED])

    def next_arm(self) -> Arm:
        with self._lock:
            return self._next()


@dataclass
class _MealDraft:
    name: str
    entries: list[str] = field(default_factory=list)
    fired_rule_ids: set[str] = field(default_factory=set)
    prompted: bool = False

    def food_set(self) -> frozenset[str]:
        return frozenset(self.entries)


@dataclass
class _EventRecord:
    event_id: str
    meal_index: int
    prompt_type: Arm
    shown: tuple[str, ...]
    questions: tuple[tuple[str, str], ...]
    depth: int
    accepted: tuple[str, ...] | None = None


@dataclass
class _SessionState:
    session_id: str
    arm: Arm
    respondent_id: str
    created_at: float
    last_active: float
    meals: list[_MealDraft] = field(default_factory=list)
    events: dict[str, _EventRecord] = field(default_factory=dict)
    event_order: list[str] = field(default_factory=list)
    event_seq: int = 0
    closed: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


def _event_view(event: _EventRecord) -> dict:
    view = {
        "event_id": event.event_id,
        "prompt_type": event.prompt_type.value,
        "shown": list(event.shown),
    }
    if event.prompt_type is Arm.HANDCODED:
        view["questions"] = [
            {"food": food, "text": text} for food, text in event.questions
        ]
    return view


class SurveyService:
    """All survey behavior behind the HTTP layer; directly testable."""

    def __init__(self, config: ServiceConfig, *, clock=time.time):
        self.config = config
        self._clock = clock
        self.model: CoOccurrenceModel | None = (
            read_model(config.model_path) if config.model_path else None
        )
        self.rules: tuple[AssociatedFoodRule, ...] | None = (
            read_rules(config.rules_path) if config.rules_path else None
        )
        self.food_list: dict[str, str] | None = (
            read_food_list(config.food_list_path) if config.food_list_path else None
        )
        self._policy = ArmPolicy(config.arm_policy, config.seed)
        self._sessions: dict[str, _SessionState] = {}
        self._registry_lock = threading.Lock()
        self._log_lock = threading.Lock()
        log_dir = Path(config.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        self.recall_log_path = log_dir / RECALL_LOG_NAME
        self.event_log_path = log_dir / EVENT_LOG_NAME

    def reload_model(self, path: str) -> None:
        """Atomically swap in a new model snapshot."""
        self.model = read_model(path)

    # -- session registry --

    def _get_session(self, session_id: str) -> _SessionState:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            now = self._clock()
            if session is not None and not session.closed:
                if now - session.last_active > self.config.session_ttl_seconds:
                    del self._sessions[session_id]
                    session = None
            if session is None:
                raise ServiceError(
                    "UnknownSession", 404, f"no session {session_id!r}"
                )
            session.last_active = now
            return session

    def _open_session(self, session_id: str) -> _SessionState:
        session = self._get_session(session_id)
        if session.closed:
            raise ServiceError(
                "SessionClosed", 409, f"session {session_id!r} already submitted"
            )
        return session

    def create_session(self, respondent_id: str = "") -> dict:
        arm = self._policy.next_arm()
        if arm is Arm.GENERATED and self.model is None:
            raise ServiceError(
                "ArmUnavailable", 409, "generated arm requested but no model loaded"
            )
        if arm is Arm.HANDCODED and self.rules is None:
            raise ServiceError(
                "ArmUnavailable", 409, "handcoded arm requested but no rules loaded"
            )
        now = self._clock()
        session = _SessionState(
            session_id=uuid.uuid4().hex[:12],
            arm=arm,
            respondent_id=respondent_id,
            created_at=now,
            last_active=now,
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
        return {"session_id": session.session_id, "arm": session.arm.value}

    # -- meal building --

    def add_meal(self, session_id: str, name: str) -> dict:
        session = self._open_session(session_id)
        with session.lock:
            session.meals.append(_MealDraft(name=name))
            return {"meal_index": len(session.meals) - 1}

    def _meal(self, session: _SessionState, meal_index: int) -> _MealDraft:
        if not 0 <= meal_index < len(session.meals):
            raise ServiceError(
                "UnknownMeal", 404, f"session has no meal {meal_index}"
            )
        return session.meals[meal_index]

    def _new_event(
        self,
        session: _SessionState,
        meal_index: int,
        prompt_type: Arm,
        shown: tuple[str, ...],
        questions: tuple[tuple[str, str], ...],
        depth: int,
    ) -> _EventRecord:
        session.event_seq += 1
        event = _EventRecord(
            event_id=f"e{session.event_seq}",
            meal_index=meal_index,
            prompt_type=prompt_type,
            shown=shown,
            questions=questions,
            depth=depth,
        )
        session.events[event.event_id] = event
        session.event_order.append(event.event_id)
        return event

    def _fire_rules(
        self, session: _SessionState, meal_index: int, just_added: str, depth: int
    ) -> list[_EventRecord]:
        """Hand-coded prompts for one newly present food, if any fire."""
        if session.arm is not Arm.HANDCODED or not self.rules:
            return []
        if depth > CHAIN_DEPTH_LIMIT:
            return []
        meal = session.meals[meal_index]
        firing = [
            r
            for r in prompts_for(self.rules, just_added, meal.food_set())
            if r.rule_id not in meal.fired_rule_ids
        ]
        if not firing:
            return []
        meal.fired_rule_ids.update(r.rule_id for r in firing)
        event = self._new_event(
            session,
            meal_index,
            Arm.HANDCODED,
            shown=tuple(r.consequent for r in firing),
            questions=tuple((r.consequent, r.prompt_text) for r in firing),
            depth=depth,
        )
        return [event]

    def add_food(self, session_id: str, meal_index: int, food: str) -> dict:
        session = self._open_session(session_id)
        with session.lock:
            meal = self._meal(session, meal_index)
            code = food_code(food)
            meal.entries.append(code)
            events = self._fire_rules(session, meal_index, code, depth=1)
            return {
                "meal_index": meal_index,
                "foods": list(meal.entries),
                "prompts": [_event_view(e) for e in events],
            }

    def finish_meal(self, session_id: str, meal_index: int) -> dict:
        session = self._open_session(session_id)
        with session.lock:
            meal = self._meal(session, meal_index)
            if not meal.entries:
                raise ServiceError(
                    "EmptyMeal", 400, f"meal {meal_index} has no foods"
                )
            prompt = None
            if (
                session.arm is Arm.GENERATED
                and self.model is not None
                and not meal.prompted
            ):
                recs = recommend(
                    self.model, meal.food_set(), DEFAULT_RECOMMENDATION_LIMIT
                )
                if recs:
                    event = self._new_event(
                        session,
                        meal_index,
                        Arm.GENERATED,
                        shown=tuple(r.food for r in recs),
                        questions=(),
                        depth=1,
                    )
                    prompt = _event_view(event)
            meal.prompted = True
            return {"meal_index": meal_index, "prompts": prompt}

    def respond(self, session_id: str, event_id: str, accepted: list[str]) -> dict:
        session = self._open_session(session_id)
        with session.lock:
            event = session.events.get(event_id)
            if event is None:
                raise ServiceError("UnknownEvent", 404, f"no event {event_id!r}")
            if event.accepted is not None:
                raise ServiceError(
                    "AlreadyResponded", 409, f"event {event_id!r} already answered"
                )
            codes = [food_code(f) for f in accepted]
            if not set(codes) <= set(event.shown):
                raise ServiceError(
                    "NotShown", 400, "accepted foods must be among the shown foods"
                )
            event.accepted = tuple(codes)
            meal = session.meals[event.meal_index]
            new_events: list[_EventRecord] = []
            for code in codes:
                meal.entries.append(code)
            if event.prompt_type is Arm.HANDCODED:
                for code in codes:
                    new_events.extend(
                        self._fire_rules(
                            session, event.meal_index, code, depth=event.depth + 1
                        )
                    )
            return {
                "meal_index": event.meal_index,
                "foods": list(meal.entries),
                "prompts": [_event_view(e) for e in new_events],
            }

    # -- submission and persistence --

    def submit_recall(
        self,
        session_id: str,
        duration_minutes: float,
        energy_kcal: float | None = None,
        device_class: str = DeviceClass.UNKNOWN.value,
    ) -> dict:
        session = self._open_session(session_id)
        with session.lock:
            meals = [
                Meal(d.name, tuple(d.entries)) for d in session.meals if d.entries
            ]
            if not meals:
                raise ServiceError(
                    "EmptyRecall", 400, "a recall needs at least one non-empty meal"
                )
            try:
                device = DeviceClass(device_class)
            except ValueError:
                raise ServiceError(
                    "UnknownDeviceClass", 400, f"unknown device class {device_class!r}"
                ) from None
            recall = RecallDay(
                recall_id=uuid.uuid4().hex[:12],
                respondent_id=session.respondent_id,
                meals=tuple(meals),
                submitted_at=datetime.now(timezone.utc),
                duration_minutes=float(duration_minutes),
                arm=session.arm,
                device_class=device,
                energy_kcal=energy_kcal,
            )
            events = [
                PromptEvent(
                    recall_id=recall.recall_id,
                    meal_index=e.meal_index,
                    prompt_type=e.prompt_type,
                    shown=e.shown,
                    accepted=e.accepted or (),
                )
                for eid in session.event_order
                for e in [session.events[eid]]
            ]
            self._persist(recall, events)
            session.closed = True
            return {"recall_id": recall.recall_id, "arm": session.arm.value}

    def _persist(self, recall: RecallDay, events: list[PromptEvent]) -> None:
        with self._log_lock:
            with open(self.recall_log_path, "a", encoding="utf-8") as f:
                f.write(format_recall(recall) + "\n")
                f.flush()
                os.fsync(f.fileno())
            with open(self.event_log_path, "a", encoding="utf-8") as f:
                for event in events:
                    f.write(format_prompt_event(event) + "\n")
                f.flush()
                os.fsync(f.fileno())

    # -- read-only endpoints --

    def search_foods(self, query: str, limit: int = SEARCH_RESULT_CAP) -> dict:
        query = query.strip().lower()
        limit = max(1, min(int(limit), SEARCH_RESULT_CAP))
        if self.food_list is not None:
            catalog = self.food_list
        elif self.model is not None:
            catalog = {code: code for code in sorted(self.model.food_counts)}
        else:
            catalog = {}
        results = []
        if query:
            for code, name in catalog.items():
                if query in code.lower() or query in name.lower():
                    results.append({"code": code, "name": name})
                    if len(results) >= limit:
                        break
        return {"results": results}

    def metrics(self) -> dict:
        """Aggregate per-arm metrics over everything persisted so far."""
        recalls = []
        events = []
        if self.recall_log_path.exists():
            recalls = parse_recall_log(
                self.recall_log_path.read_text(encoding="utf-8")
            )
        if self.event_log_path.exists():
            events = parse_prompt_events(
                self.event_log_path.read_text(encoding="utf-8")
            )
        return {"arms": arm_metrics(recalls, events)}

    def health(self) -> dict:
        with self._registry_lock:
            open_sessions = sum(1 for s in self._sessions.values() if not s.closed)
        return {
            "status": "ok",
            "model_loaded": self.model is not None,
            "rules_loaded": self.rules is not None,
            "open_sessions": open_sessions,
        }


# --- HTTP layer -------------------------------------------------------------


class CreateSessionBody(BaseModel):
    respondent_id: str = ""


class AddMealBody(BaseModel):
    name: str = ""


class AddFoodBody(BaseModel):
    food: str


class RespondBody(BaseModel):
    accepted: list[str] = []


class SubmitBody(BaseModel):
    duration_minutes: float
    energy_kcal: float | None = None
    device_class: str = DeviceClass.UNKNOWN.value


def create_app(config_or_service: ServiceConfig | SurveyService) -> FastAPI:
    if isinstance(config_or_service, SurveyService):
        service = config_or_service
    else:
        service = SurveyService(config_or_service)

    app = FastAPI(title="foodprompts survey service")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "detail": exc.detail}
        )

    @app.exception_handler(DomainError)
    async def domain_error_handler(_request, exc: DomainError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return service.health()

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody | None = None):
        respondent = body.respondent_id if body else ""
        return service.create_session(respondent)

    @app.post("/sessions/{session_id}/meals")
    def add_meal(session_id: str, body: AddMealBody):
        return service.add_meal(session_id, body.name)

    @app.post("/sessions/{session_id}/meals/{meal_index}/foods")
    def add_food(session_id: str, meal_index: int, body: AddFoodBody):
        return service.add_food(session_id, meal_index, body.food)

    @app.post("/sessions/{session_id}/meals/{meal_index}/finish")
    def finish_meal(session_id: str, meal_index: int):
        return service.finish_meal(session_id, meal_index)

    @app.post("/sessions/{session_id}/events/{event_id}/respond")
    def respond(session_id: str, event_id: str, body: RespondBody):
        return service.respond(session_id, event_id, body.accepted)

    @app.post("/sessions/{session_id}/submit")
    def submit(session_id: str, body: SubmitBody):
        return service.submit_recall(
            session_id,
            duration_minutes=body.duration_minutes,
            energy_kcal=body.energy_kcal,
            device_class=body.device_class,
        )

    @app.get("/foods")
    def search_foods(q: str = "", limit: int = SEARCH_RESULT_CAP):
        return service.search_foods(q, limit)

    @app.get("/metrics")
    def metrics():
        return service.metrics()

    return app
