/**
 * Pure questionnaire state machine.
 *
 * Flow: one step per Likert item, then four staircase questions, then the
 * result. Likert answers stay editable (back navigation) until the first
 * staircase answer is given; staircase answers are immutable once recorded
 * because the instrument's path through the tree depends on them. All
 * transitions return new state objects, so the whole module is trivially
 * serializable for resume-after-reload.
 */

import {
  isTerminal,
  ModuleSpec,
  StaircaseNode,
  StaircaseTerminal,
} from "./types.js";

export const STAIRCASE_DEPTH = 4;

export interface QuestionnaireState {
  /** item_id -> chosen increment (1..6, left to right) */
  likertAnswers: Record<string, number>;
  /** staircase answers in order; true = accept */
  staircasePath: boolean[];
  /** index into the flow: likert items, then the staircase, then the result */
  stepIndex: number;
}

export type StepKind =
  | { kind: "likert"; itemIndex: number }
  | { kind: "staircase" }
  | { kind: "result" };

export function newState(): QuestionnaireState {
  return { likertAnswers: {}, staircasePath: [], stepIndex: 0 };
}

export function stepAt(spec: ModuleSpec, index: number): StepKind {
  if (index < spec.items.length) return { kind: "likert", itemIndex: index };
  if (index === spec.items.length) return { kind: "staircase" };
  return { kind: "result" };
}

export function currentStep(spec: ModuleSpec, state: QuestionnaireState): StepKind {
  return stepAt(spec, state.stepIndex);
}

export function staircaseStarted(state: QuestionnaireState): boolean {
  return state.staircasePath.length > 0;
}

export function likertLocked(state: QuestionnaireState): boolean {
  return staircaseStarted(state);
}

/** Record a Likert answer; rejects bad values and post-staircase edits. */
export function answerLikert(
  state: QuestionnaireState,
  spec: ModuleSpec,
  itemId: string,
  value: number
): QuestionnaireState {
  if (!spec.items.some((item) => item.item_id === itemId)) {
    throw new Error(`unknown module item ${itemId}`);
  }
  if (!Number.isInteger(value) || value < 1 || value > 6) {
    throw new Error(`Likert answers are integers 1..6, got ${value}`);
  }
  if (likertLocked(state)) {
    throw new Error("Likert answers are locked once the staircase has started");
  }
  return {
    ...state,
    likertAnswers: { ...state.likertAnswers, [itemId]: value },
  };
}

export function allItemsAnswered(spec: ModuleSpec, state: QuestionnaireState): boolean {
  return spec.items.every((item) => state.likertAnswers[item.item_id] !== undefined);
}

/** The staircase node the respondent currently faces, or the reached terminal. */
export function walkStaircase(
  tree: StaircaseNode,
  path: boolean[]
): StaircaseNode | StaircaseTerminal {
  let node: StaircaseNode | StaircaseTerminal = tree;
  for (const accept of path) {
    if (isTerminal(node)) throw new Error("staircase path walks past a terminal");
    node = accept ? node.accept : node.reject;
  }
  return node;
}

/** Record one staircase answer; answers are append-only and capped at four. */
export function answerStaircase(
  state: QuestionnaireState,
  accept: boolean
): QuestionnaireState {
  if (state.staircasePath.length >= STAIRCASE_DEPTH) {
    throw new Error("the staircase is complete; answers cannot be revised");
  }
  return { ...state, staircasePath: [...state.staircasePath, accept] };
}

/** Switchpoint 1..16, present exactly when all four answers are given. */
export function switchpoint(
  tree: StaircaseNode,
  state: QuestionnaireState
): number | null {
  if (state.staircasePath.length !== STAIRCASE_DEPTH) return null;
  const node = walkStaircase(tree, state.staircasePath);
  if (!isTerminal(node)) throw new Error("four answers did not reach a terminal");
  return node.switchpoint;
}

/** Contract question text with the node's repayment substituted for XX. */
export function contractQuestion(template: string, node: StaircaseNode): string {
  return template.replaceAll("XX", String(Math.abs(node.repay_in_6m)));
}

export function canAdvance(spec: ModuleSpec, state: QuestionnaireState): boolean {
  const step = currentStep(spec, state);
  if (step.kind === "likert") {
    const item = spec.items[step.itemIndex];
    return item !== undefined && state.likertAnswers[item.item_id] !== undefined;
  }
  if (step.kind === "staircase") {
    return state.staircasePath.length === STAIRCASE_DEPTH;
  }
  return false;
}

export function advance(spec: ModuleSpec, state: QuestionnaireState): QuestionnaireState {
  if (!canAdvance(spec, state)) {
    throw new Error("cannot advance: the current step is unanswered");
  }
  return { ...state, stepIndex: state.stepIndex + 1 };
}

/** Step back within the Likert section (answers are preserved). */
export function goBack(state: QuestionnaireState): QuestionnaireState {
  if (state.stepIndex === 0) return state;
  return { ...state, stepIndex: state.stepIndex - 1 };
}

export function serialize(state: QuestionnaireState): string {
  return JSON.stringify(state);
}

export function deserialize(text: string): QuestionnaireState {
  const raw = JSON.parse(text) as QuestionnaireState;
  if (
    typeof raw !== "object" ||
    raw === null ||
    typeof raw.stepIndex !== "number" ||
    !Array.isArray(raw.staircasePath) ||
    typeof raw.likertAnswers !== "object"
  ) {
    throw new Error("not a serialized questionnaire state");
  }
  if (raw.staircasePath.length > STAIRCASE_DEPTH) {
    throw new Error("serialized staircase path is too long");
  }
  return {
    likertAnswers: { ...raw.likertAnswers },
    staircasePath: raw.staircasePath.map(Boolean),
    stepIndex: raw.stepIndex,
  };
}

/** gamma_hat display convention: four decimals, matching the published style. */
export function formatGamma(gammaHat: number): string {
  return gammaHat.toFixed(4);
}
