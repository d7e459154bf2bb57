/**
 * Thin typed client for the survey service HTTP API.
 *
 * Every method maps to one endpoint and returns the parsed JSON body.
 * Non-2xx responses raise ApiError carrying the service's stable error
 * code (e.g. "NotShown", "SessionClosed") so the UI can surface it.
 */

export interface SessionInfo {
    session_id: string;
    arm: string;
}

export interface PromptQuestionView {
    food: string;
    text: string;
}

export interface PromptView {
    event_id: string;
    prompt_type: string;
    shown: string[];
    questions?: PromptQuestionView[];
}

export interface AddFoodResponse {
    meal_index: number;
    foods: string[];
    prompts: PromptView[];
}

export interface FinishMealResponse {
    meal_index: number;
    prompts: PromptView | null;
}

export interface RespondResponse {
    meal_index: number;
    foods: string[];
    prompts: PromptView[];
}

export interface FoodHit {
    code: string;
    name: string;
}

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        detail: string,
    ) {
        super(`${code}: ${detail}`);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
    ) {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const init: RequestInit = { method };
        if (body !== undefined) {
            init.headers = { "content-type": "application/json" };
            init.body = JSON.stringify(body);
        }
        const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        const text = await resp.text();
        const payload = text ? JSON.parse(text) : null;
        if (!resp.ok) {
            const code = payload?.error ?? `HTTP${resp.status}`;
            const detail = payload?.detail ?? text;
            throw new ApiError(resp.status, code, detail);
        }
        return payload as T;
    }

    health(): Promise<{ status: string }> {
        return this.request("GET", "/health");
    }

    createSession(respondentId = ""): Promise<SessionInfo> {
        return this.request("POST", "/sessions", { respondent_id: respondentId });
    }

    addMeal(sessionId: string, name: string): Promise<{ meal_index: number }> {
        return this.request("POST", `/sessions/${sessionId}/meals`, { name });
    }

    addFood(sessionId: string, mealIndex: number, food: string): Promise<AddFoodResponse> {
        return this.request("POST", `/sessions/${sessionId}/meals/${mealIndex}/foods`, { food });
    }

    finishMeal(sessionId: string, mealIndex: number): Promise<FinishMealResponse> {
        return this.request("POST", `/sessions/${sessionId}/meals/${mealIndex}/finish`);
    }

    respond(sessionId: string, eventId: string, accepted: string[]): Promise<RespondResponse> {
        return this.request("POST", `/sessions/${sessionId}/events/${eventId}/respond`, { accepted });
    }

    submitRecall(
        sessionId: string,
        durationMinutes: number,
        energyKcal?: number,
    ): Promise<{ recall_id: string }> {
        return this.request("POST", `/sessions/${sessionId}/submit`, {
            duration_minutes: durationMinutes,
            energy_kcal: energyKcal ?? null,
        });
    }

    searchFoods(query: string): Promise<{ results: FoodHit[] }> {
        return this.request("GET", `/foods?q=${encodeURIComponent(query)}`);
    }
}
