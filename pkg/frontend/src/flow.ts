/**
 * Survey session state machine, independent of the DOM.
 *
 * Drives one respondent through meal reporting: food entry, the
 * immediate accept/reject question dialogs, the end-of-meal checkbox
 * list, and final submission. Two invariants are owned here:
 *
 * - every prompt surfaced to the respondent comes from a service
 *   response (nothing is fabricated client side), and every acceptance
 *   sent back is a subset of what that event showed;
 * - immediate questions are presented one at a time in arrival order,
 *   and food entry is blocked while a question is open.
 *
 * The duration timer starts when the session is created and stops at
 * submission; the service receives it in minutes.
 */

import { ApiClient, PromptView } from "./api.js";

export const CHECKLIST_CAP = 15;

export interface OpenQuestion {
    eventId: string;
    food: string;
    text: string;
}

export interface ChecklistItem {
    food: string;
    checked: boolean;
}

export interface Checklist {
    eventId: string;
    items: ChecklistItem[];
}

export interface MealState {
    index: number;
    name: string;
    foods: string[];
    finished: boolean;
}

interface PendingEvent {
    eventId: string;
    accepted: string[];
    remaining: number;
}

export class SurveyFlow {
    private sessionId: string | null = null;
    private startedAtMs = 0;
    private submittedRecallId: string | null = null;

    readonly meals: MealState[] = [];
    private currentMeal: MealState | null = null;

    private questionQueue: OpenQuestion[] = [];
    private pendingEvents = new Map<string, PendingEvent>();
    private checklistState: Checklist | null = null;

    constructor(
        private readonly api: ApiClient,
        private readonly clock: () => number = () => Date.now(),
    ) {}

    get started(): boolean {
        return this.sessionId !== null;
    }

    get submitted(): boolean {
        return this.submittedRecallId !== null;
    }

    get recallId(): string | null {
        return this.submittedRecallId;
    }

    get meal(): MealState | null {
        return this.currentMeal;
    }

    /** The question the respondent must answer before anything else. */
    currentQuestion(): OpenQuestion | null {
        return this.questionQueue[0] ?? null;
    }

    checklist(): Checklist | null {
        return this.checklistState;
    }

    async start(respondentId = ""): Promise<void> {
        if (this.sessionId) throw new Error("session already started");
        const session = await this.api.createSession(respondentId);
        this.sessionId = session.session_id;
        this.startedAtMs = this.clock();
    }

    private requireSession(): string {
        if (!this.sessionId) throw new Error("session not started");
        if (this.submittedRecallId) throw new Error("recall already submitted");
        return this.sessionId;
    }

    private requireNoBlockingPrompt(): void {
        if (this.questionQueue.length > 0) {
            throw new Error("answer the open prompt first");
        }
        if (this.checklistState) {
            throw new Error("confirm the food checklist first");
        }
    }

    async startMeal(name: string): Promise<MealState> {
        const sessionId = this.requireSession();
        this.requireNoBlockingPrompt();
        const created = await this.api.addMeal(sessionId, name);
        const meal: MealState = { index: created.meal_index, name, foods: [], finished: false };
        this.meals.push(meal);
        this.currentMeal = meal;
        return meal;
    }

    /** Enqueue the individual questions of prompt events, arrival order. */
    private enqueuePrompts(prompts: PromptView[]): void {
        for (const prompt of prompts) {
            const questions =
                prompt.questions ?? prompt.shown.map((food) => ({ food, text: `Did you also have ${food}?` }));
            this.pendingEvents.set(prompt.event_id, {
                eventId: prompt.event_id,
                accepted: [],
                remaining: questions.length,
            });
            for (const q of questions) {
                this.questionQueue.push({ eventId: prompt.event_id, food: q.food, text: q.text });
            }
        }
    }

    async addFood(food: string): Promise<void> {
        const sessionId = this.requireSession();
        this.requireNoBlockingPrompt();
        const meal = this.currentMeal;
        if (!meal || meal.finished) throw new Error("no meal in progress");
        const resp = await this.api.addFood(sessionId, meal.index, food);
        meal.foods = resp.foods;
        this.enqueuePrompts(resp.prompts);
    }

    /** Answer the current immediate question with accept or reject. */
    async answerQuestion(accept: boolean): Promise<void> {
        const sessionId = this.requireSession();
        const question = this.questionQueue.shift();
        if (!question) throw new Error("no question is open");
        const pending = this.pendingEvents.get(question.eventId);
        if (!pending) throw new Error(`unknown event ${question.eventId}`);
        if (accept) pending.accepted.push(question.food);
        pending.remaining -= 1;
        if (pending.remaining > 0) return;

        // all questions of this event answered: send one response
        this.pendingEvents.delete(pending.eventId);
        const resp = await this.api.respond(sessionId, pending.eventId, pending.accepted);
        const meal = this.meals.find((m) => m.index === resp.meal_index);
        if (meal) meal.foods = resp.foods;
        this.enqueuePrompts(resp.prompts);
    }

    /** End the current meal; in the generated arm this opens the checklist. */
    async finishMeal(): Promise<Checklist | null> {
        const sessionId = this.requireSession();
        this.requireNoBlockingPrompt();
        const meal = this.currentMeal;
        if (!meal || meal.finished) throw new Error("no meal in progress");
        const resp = await this.api.finishMeal(sessionId, meal.index);
        meal.finished = true;
        this.currentMeal = null;
        if (resp.prompts) {
            this.checklistState = {
                eventId: resp.prompts.event_id,
                items: resp.prompts.shown
                    .slice(0, CHECKLIST_CAP)
                    .map((food) => ({ food, checked: false })),
            };
        }
        return this.checklistState;
    }

    toggleChecklistItem(food: string): void {
        const item = this.checklistState?.items.find((i) => i.food === food);
        if (!item) throw new Error(`${food} is not on the checklist`);
        item.checked = !item.checked;
    }

    /** Send the ticked foods; an untouched list records an empty acceptance. */
    async confirmChecklist(): Promise<void> {
        const sessionId = this.requireSession();
        const checklist = this.checklistState;
        if (!checklist) throw new Error("no checklist is open");
        const accepted = checklist.items.filter((i) => i.checked).map((i) => i.food);
        this.checklistState = null;
        const resp = await this.api.respond(sessionId, checklist.eventId, accepted);
        const meal = this.meals.find((m) => m.index === resp.meal_index);
        if (meal) meal.foods = resp.foods;
    }

    /** Dismissing the list without interacting records an empty acceptance. */
    async dismissChecklist(): Promise<void> {
        const checklist = this.checklistState;
        if (!checklist) throw new Error("no checklist is open");
        for (const item of checklist.items) item.checked = false;
        await this.confirmChecklist();
    }

    async submit(energyKcal?: number): Promise<string> {
        const sessionId = this.requireSession();
        this.requireNoBlockingPrompt();
        const durationMinutes = (this.clock() - this.startedAtMs) / 60_000;
        const resp = await this.api.submitRecall(sessionId, durationMinutes, energyKcal);
        this.submittedRecallId = resp.recall_id;
        return resp.recall_id;
    }
}
