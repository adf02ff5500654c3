/**
 * DOM glue for the questionnaire: one Likert step per module item, the
 * four-question staircase, then the live prediction with CSV export.
 * Session state persists in localStorage so a reload resumes mid-flow.
 */

import { ApiClient, ApiError } from "./api.js";
import { responseCsv } from "./csv.js";
import {
  advance,
  allItemsAnswered,
  answerLikert,
  answerStaircase,
  canAdvance,
  contractQuestion,
  currentStep,
  deserialize,
  formatGamma,
  goBack,
  likertLocked,
  newState,
  serialize,
  STAIRCASE_DEPTH,
  switchpoint,
  walkStaircase,
  QuestionnaireState,
} from "./state.js";
import { isTerminal, ModuleSpec, Prediction, StaircaseDoc } from "./types.js";

const STORAGE_KEY = "debtmod-questionnaire-v1";

function loadState(): QuestionnaireState {
  try {
    const stored = window.localStorage.getItem(STORAGE_KEY);
    return stored ? deserialize(stored) : newState();
  } catch {
    return newState();
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class QuestionnaireApp {
  private state: QuestionnaireState = newState();
  private spec: ModuleSpec | null = null;
  private staircase: StaircaseDoc | null = null;
  private prediction: Prediction | null = null;
  private submitting = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient
  ) {}

  async start(): Promise<void> {
    this.renderMessage("Loading questionnaire…");
    try {
      [this.spec, this.staircase] = await Promise.all([
        this.api.getModule(),
        this.api.getStaircase(),
      ]);
    } catch (err) {
      this.renderRetry(`Could not reach the service: ${String(err)}`, () => this.start());
      return;
    }
    this.state = loadState();
    this.render();
  }

  private save(): void {
    window.localStorage.setItem(STORAGE_KEY, serialize(this.state));
  }

  private set(state: QuestionnaireState): void {
    this.state = state;
    this.save();
    this.render();
  }

  private renderMessage(text: string): void {
    this.root.replaceChildren(el("p", { class: "status" }, text));
  }

  private renderRetry(text: string, retry: () => void): void {
    const box = el("div", { class: "error-box" });
    box.append(el("p", {}, text));
    const button = el("button", { class: "primary" }, "Retry");
    button.addEventListener("click", retry);
    box.append(button);
    this.root.replaceChildren(box);
  }

  private render(): void {
    const spec = this.spec;
    const staircase = this.staircase;
    if (!spec || !staircase) return;
    const step = currentStep(spec, this.state);
    if (step.kind === "likert") {
      this.renderLikert(spec, step.itemIndex);
    } else if (step.kind === "staircase") {
      this.renderStaircase(staircase, spec);
    } else {
      void this.renderResult(spec, staircase);
    }
  }

  private renderLikert(spec: ModuleSpec, itemIndex: number): void {
    const item = spec.items[itemIndex];
    if (!item) return;
    const chosen = this.state.likertAnswers[item.item_id];
    const locked = likertLocked(this.state);

    const box = el("div", { class: "card" });
    box.append(el("p", { class: "progress" }, `Question ${itemIndex + 1} of ${spec.items.length}`));
    box.append(el("p", { class: "prompt" }, item.prompt));

    const scale = el("div", { class: "likert-scale" });
    for (let value = 1; value <= 6; value++) {
      const button = el(
        "button",
        {
          class: "likert" + (chosen === value ? " selected" : ""),
          "data-value": String(value),
        },
        String(value)
      );
      if (locked) button.setAttribute("disabled", "disabled");
      button.addEventListener("click", () =>
        this.set(answerLikert(this.state, spec, item.item_id, value))
      );
      scale.append(button);
    }
    box.append(scale);
    box.append(
      el("p", { class: "scale-ends" }, "1 = left-most answer, 6 = right-most answer")
    );

    const nav = el("div", { class: "nav" });
    const back = el("button", {}, "Back");
    if (this.state.stepIndex === 0) back.setAttribute("disabled", "disabled");
    back.addEventListener("click", () => this.set(goBack(this.state)));
    const next = el("button", { class: "primary" }, "Next");
    if (!canAdvance(spec, this.state)) next.setAttribute("disabled", "disabled");
    next.addEventListener("click", () => this.set(advance(spec, this.state)));
    nav.append(back, next);
    box.append(nav);
    this.root.replaceChildren(box);
  }

  private renderStaircase(doc: StaircaseDoc, spec: ModuleSpec): void {
    const node = walkStaircase(doc.tree, this.state.staircasePath);
    const box = el("div", { class: "card" });
    const asked = this.state.staircasePath.length;

    if (isTerminal(node) || asked === STAIRCASE_DEPTH) {
      const sp = switchpoint(doc.tree, this.state);
      box.append(el("p", { class: "progress" }, "Hypothetical debt contracts: done"));
      box.append(el("p", {}, `Your switchpoint is SP=${sp}.`));
      const next = el("button", { class: "primary" }, "See your result");
      next.addEventListener("click", () => this.set(advance(spec, this.state)));
      box.append(next);
      this.root.replaceChildren(box);
      return;
    }

    box.append(
      el("p", { class: "progress" }, `Hypothetical debt contract ${asked + 1} of ${STAIRCASE_DEPTH}`)
    );
    const question = el("p", { class: "prompt contract" });
    question.innerText = contractQuestion(doc.question_template, node);
    box.append(question);
    box.append(
      el(
        "p",
        { class: "note" },
        "Answers here cannot be revised: each one decides which contract you see next."
      )
    );
    const nav = el("div", { class: "nav" });
    const rejectBtn = el("button", {}, "No, I would not accept");
    rejectBtn.addEventListener("click", () => this.set(answerStaircase(this.state, false)));
    const acceptBtn = el("button", { class: "primary" }, "Yes, I would accept");
    acceptBtn.addEventListener("click", () => this.set(answerStaircase(this.state, true)));
    nav.append(rejectBtn, acceptBtn);
    box.append(nav);
    this.root.replaceChildren(box);
  }

  private async renderResult(spec: ModuleSpec, doc: StaircaseDoc): Promise<void> {
    if (!allItemsAnswered(spec, this.state)) {
      this.renderMessage("Some questions are unanswered; go back and complete them.");
      return;
    }
    if (!this.prediction && !this.submitting) {
      this.submitting = true;
      this.renderMessage("Computing your result…");
      const answers = spec.items.map((item) => ({
        item_id: item.item_id,
        value: this.state.likertAnswers[item.item_id] as number,
      }));
      try {
        this.prediction = await this.api.submitResponses(
          answers,
          switchpoint(doc.tree, this.state)
        );
      } catch (err) {
        this.submitting = false;
        if (err instanceof ApiError && err.status === 422) {
          this.renderRetry(`The service rejected the answers: ${err.message}`, () => {
            this.set(newState());
          });
        } else {
          this.renderRetry(`Could not reach the service: ${String(err)}`, () => {
            void this.renderResult(spec, doc);
          });
        }
        return;
      }
      this.submitting = false;
    }
    const prediction = this.prediction;
    if (!prediction) return;

    const box = el("div", { class: "card" });
    box.append(el("p", { class: "progress" }, "Your result"));
    box.append(el("p", { class: "gamma" }, formatGamma(prediction.gamma_hat)));
    box.append(el("p", { class: "classification" }, prediction.classification));
    const sp = switchpoint(doc.tree, this.state);
    if (sp !== null) {
      box.append(el("p", {}, `Staircase switchpoint: SP=${sp}`));
    }

    const download = el("button", {}, "Download your responses (CSV)");
    download.addEventListener("click", () => {
      const subjectId = prediction.subject_id ?? "respondent";
      const csv = responseCsv(spec, this.state, doc.tree, subjectId);
      const blob = new Blob([csv], { type: "text/csv" });
      const link = el("a", {
        href: URL.createObjectURL(blob),
        download: `${subjectId}.csv`,
      });
      link.click();
      URL.revokeObjectURL(link.href);
    });
    const restart = el("button", {}, "Start over");
    restart.addEventListener("click", () => {
      this.prediction = null;
      window.localStorage.removeItem(STORAGE_KEY);
      this.set(newState());
    });
    const nav = el("div", { class: "nav" });
    nav.append(download, restart);
    box.append(nav);
    this.root.replaceChildren(box);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const base = (window as { DEBTMOD_API?: string }).DEBTMOD_API ?? "";
  const app = new QuestionnaireApp(root, new ApiClient(base));
  void app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
