/**
 * DOM shell around SurveyFlow: food search, the one-question prompt
 * dialog, the end-of-meal checkbox list, and submission.
 *
 * The respondent never sees which prompting condition they are in and
 * no scores are displayed; prompts render exactly as the service sent
 * them.
 */

import { ApiClient, ApiError } from "./api.js";
import { SurveyFlow } from "./flow.js";

function el<T extends HTMLElement>(root: ParentNode, selector: string): T {
    const node = root.querySelector(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node as T;
}

// dialog.show()/close() are missing from some DOM implementations
// (notably jsdom); reflecting the open attribute is equivalent here.
function openDialog(dialog: HTMLDialogElement): void {
    if (typeof dialog.show === "function") dialog.show();
    else dialog.setAttribute("open", "");
}

function closeDialog(dialog: HTMLDialogElement): void {
    if (typeof dialog.close === "function") dialog.close();
    else dialog.removeAttribute("open");
}

const TEMPLATE = `
<div class="survey">
  <section data-testid="intro">
    <h1>Food diary for yesterday</h1>
    <p>Tell us everything you ate and drank, one meal at a time.</p>
    <button data-testid="start">Start</button>
  </section>

  <section data-testid="meal-section" hidden>
    <h2 data-testid="meal-title"></h2>
    <ul data-testid="meal-foods"></ul>
    <input data-testid="food-search" type="search"
           placeholder="Search for a food or drink" autocomplete="off">
    <ul data-testid="search-results"></ul>
    <button data-testid="finish-meal">I had nothing else in this meal</button>
  </section>

  <dialog data-testid="prompt-dialog">
    <p data-testid="prompt-text"></p>
    <button data-testid="prompt-yes">Yes, add it</button>
    <button data-testid="prompt-no">No</button>
  </dialog>

  <section data-testid="checklist-section" hidden>
    <h2>Did you also have any of these?</h2>
    <ul data-testid="checklist"></ul>
    <button data-testid="checklist-confirm">Add selected</button>
    <button data-testid="checklist-none">None of these</button>
  </section>

  <section data-testid="between-meals" hidden>
    <input data-testid="meal-name" placeholder="Next meal (e.g. lunch)">
    <button data-testid="next-meal">Add a meal</button>
    <input data-testid="energy" type="number" placeholder="Energy (kcal), optional">
    <button data-testid="submit">Finish and submit my day</button>
  </section>

  <section data-testid="done" hidden>
    <h2>Thank you!</h2>
    <p data-testid="receipt"></p>
  </section>

  <p data-testid="error" role="alert" hidden></p>
</div>
`;

export class SurveyApp {
    readonly flow: SurveyFlow;
    private readonly root: HTMLElement;

    constructor(
        container: HTMLElement,
        private readonly api: ApiClient,
        clock?: () => number,
    ) {
        this.flow = new SurveyFlow(api, clock);
        container.innerHTML = TEMPLATE;
        this.root = el(container, ".survey");
        this.wire();
    }

    private wire(): void {
        el<HTMLButtonElement>(this.root, "[data-testid=start]").addEventListener("click", () =>
            this.guard(async () => {
                await this.flow.start();
                el(this.root, "[data-testid=intro]").hidden = true;
                await this.flow.startMeal("first meal");
                this.render();
            }),
        );

        const search = el<HTMLInputElement>(this.root, "[data-testid=food-search]");
        search.addEventListener("input", () => this.guard(() => this.renderSearch(search.value)));

        el<HTMLElement>(this.root, "[data-testid=search-results]").addEventListener("click", (ev) => {
            const code = (ev.target as HTMLElement).dataset?.code;
            if (!code) return;
            this.guard(async () => {
                await this.flow.addFood(code);
                search.value = "";
                this.render();
            });
        });

        el<HTMLButtonElement>(this.root, "[data-testid=prompt-yes]").addEventListener("click", () =>
            this.guard(async () => {
                await this.flow.answerQuestion(true);
                this.render();
            }),
        );
        el<HTMLButtonElement>(this.root, "[data-testid=prompt-no]").addEventListener("click", () =>
            this.guard(async () => {
                await this.flow.answerQuestion(false);
                this.render();
            }),
        );

        el<HTMLButtonElement>(this.root, "[data-testid=finish-meal]").addEventListener("click", () =>
            this.guard(async () => {
                await this.flow.finishMeal();
                this.render();
            }),
        );

        el<HTMLElement>(this.root, "[data-testid=checklist]").addEventListener("change", (ev) => {
            const food = (ev.target as HTMLElement).dataset?.food;
            if (food) this.flow.toggleChecklistItem(food);
        });
        el<HTMLButtonElement>(this.root, "[data-testid=checklist-confirm]").addEventListener(
            "click",
            () =>
                this.guard(async () => {
                    await this.flow.confirmChecklist();
                    this.render();
                }),
        );
        el<HTMLButtonElement>(this.root, "[data-testid=checklist-none]").addEventListener("click", () =>
            this.guard(async () => {
                await this.flow.dismissChecklist();
                this.render();
            }),
        );

        el<HTMLButtonElement>(this.root, "[data-testid=next-meal]").addEventListener("click", () =>
            this.guard(async () => {
                const nameInput = el<HTMLInputElement>(this.root, "[data-testid=meal-name]");
                await this.flow.startMeal(nameInput.value || `meal ${this.flow.meals.length + 1}`);
                nameInput.value = "";
                this.render();
            }),
        );

        el<HTMLButtonElement>(this.root, "[data-testid=submit]").addEventListener("click", () =>
            this.guard(async () => {
                const energyInput = el<HTMLInputElement>(this.root, "[data-testid=energy]");
                const energy = energyInput.value ? Number(energyInput.value) : undefined;
                const recallId = await this.flow.submit(energy);
                el(this.root, "[data-testid=receipt]").textContent =
                    `Your day was recorded (reference ${recallId}).`;
                this.render();
            }),
        );
    }

    private async guard(action: () => void | Promise<void>): Promise<void> {
        const errorBox = el(this.root, "[data-testid=error]");
        try {
            await action();
            errorBox.hidden = true;
            errorBox.textContent = "";
        } catch (err) {
            errorBox.hidden = false;
            errorBox.textContent =
                err instanceof ApiError ? err.message : String((err as Error).message ?? err);
        }
    }

    private async renderSearch(query: string): Promise<void> {
        const list = el(this.root, "[data-testid=search-results]");
        if (!query.trim()) {
            list.innerHTML = "";
            return;
        }
        const { results } = await this.api.searchFoods(query);
        list.innerHTML = results
            .map(
                (hit) =>
                    `<li><button type="button" data-code="${hit.code}">${hit.name}</button></li>`,
            )
            .join("");
    }

    /** Reflect the flow state into the DOM. */
    render(): void {
        const flow = this.flow;

        const mealSection = el(this.root, "[data-testid=meal-section]");
        const meal = flow.meal;
        mealSection.hidden = !meal || flow.submitted;
        if (meal) {
            el(this.root, "[data-testid=meal-title]").textContent = meal.name;
            el(this.root, "[data-testid=meal-foods]").innerHTML = meal.foods
                .map((f) => `<li>${f}</li>`)
                .join("");
        }

        const dialog = el<HTMLDialogElement>(this.root, "[data-testid=prompt-dialog]");
        const question = flow.currentQuestion();
        if (question) {
            el(this.root, "[data-testid=prompt-text]").textContent = question.text;
            if (!dialog.open) openDialog(dialog);
        } else if (dialog.open) {
            closeDialog(dialog);
        }

        const checklistSection = el(this.root, "[data-testid=checklist-section]");
        const checklist = flow.checklist();
        checklistSection.hidden = !checklist;
        if (checklist) {
            el(this.root, "[data-testid=checklist]").innerHTML = checklist.items
                .map(
                    (item) => `
                    <li>
                      <label>
                        <input type="checkbox" data-food="${item.food}"
                               ${item.checked ? "checked" : ""}>
                        ${item.food}
                      </label>
                    </li>`,
                )
                .join("");
        }

        el(this.root, "[data-testid=between-meals]").hidden =
            !flow.started || flow.submitted || meal !== null || checklist !== null || question !== null;
        el(this.root, "[data-testid=done]").hidden = !flow.submitted;
    }
}

export function mountSurveyApp(container: HTMLElement, baseUrl: string): SurveyApp {
    return new SurveyApp(container, new ApiClient(baseUrl));
}
