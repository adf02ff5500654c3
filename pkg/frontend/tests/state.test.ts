import { describe, expect, it } from "vitest";

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
  switchpoint,
  walkStaircase,
} from "../src/state.js";
import { ModuleSpec, StaircaseNode } from "../src/types.js";

const spec: ModuleSpec = {
  schema_version: 1,
  version: "test",
  intercept: 1.0694,
  items: [
    { item_id: "Q1", prompt: "first", weight: 0.0045, scale_min: 1, scale_max: 6 },
    { item_id: "Q2", prompt: "second", weight: -0.0067, scale_min: 1, scale_max: 6 },
  ],
};

/** depth-2 miniature tree: enough structure to exercise the walk logic */
const miniTree: StaircaseNode = {
  receive_today: 100,
  repay_in_6m: -100,
  repay_months: 6,
  reject: {
    receive_today: 100,
    repay_in_6m: -90,
    repay_months: 6,
    reject: { switchpoint: 1 },
    accept: { switchpoint: 2 },
  },
  accept: {
    receive_today: 100,
    repay_in_6m: -110,
    repay_months: 6,
    reject: { switchpoint: 3 },
    accept: { switchpoint: 4 },
  },
};

describe("likert flow", () => {
  it("records answers 1..6 and rejects everything else", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 1);
    expect(state.likertAnswers.Q1).toBe(1);
    state = answerLikert(state, spec, "Q1", 6);
    expect(state.likertAnswers.Q1).toBe(6);
    expect(() => answerLikert(state, spec, "Q1", 0)).toThrow(/1\.\.6/);
    expect(() => answerLikert(state, spec, "Q1", 7)).toThrow(/1\.\.6/);
    expect(() => answerLikert(state, spec, "Q1", 2.5)).toThrow(/1\.\.6/);
    expect(() => answerLikert(state, spec, "Q9", 3)).toThrow(/unknown/);
  });

  it("cannot advance an unanswered step", () => {
    let state = newState();
    expect(canAdvance(spec, state)).toBe(false);
    expect(() => advance(spec, state)).toThrow(/unanswered/);
    state = answerLikert(state, spec, "Q1", 5);
    expect(canAdvance(spec, state)).toBe(true);
  });

  it("back navigation preserves answers", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 5);
    state = advance(spec, state);
    state = answerLikert(state, spec, "Q2", 2);
    state = goBack(state);
    expect(currentStep(spec, state)).toEqual({ kind: "likert", itemIndex: 0 });
    expect(state.likertAnswers).toEqual({ Q1: 5, Q2: 2 });
    state = answerLikert(state, spec, "Q1", 3); // still editable
    expect(state.likertAnswers.Q1).toBe(3);
    expect(goBack(state).stepIndex).toBe(0); // floor at the first step
  });

  it("tracks completeness of the module items", () => {
    let state = newState();
    expect(allItemsAnswered(spec, state)).toBe(false);
    state = answerLikert(state, spec, "Q1", 4);
    expect(allItemsAnswered(spec, state)).toBe(false);
    state = answerLikert(state, spec, "Q2", 4);
    expect(allItemsAnswered(spec, state)).toBe(true);
  });
});

describe("staircase flow", () => {
  it("walks the tree by answers", () => {
    expect(walkStaircase(miniTree, [])).toBe(miniTree);
    const afterReject = walkStaircase(miniTree, [false]);
    expect("repay_in_6m" in afterReject && afterReject.repay_in_6m).toBe(-90);
    expect(walkStaircase(miniTree, [true, true])).toEqual({ switchpoint: 4 });
  });

  it("locks likert answers once the staircase starts", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 5);
    expect(likertLocked(state)).toBe(false);
    state = answerStaircase(state, true);
    expect(likertLocked(state)).toBe(true);
    expect(() => answerLikert(state, spec, "Q2", 1)).toThrow(/locked/);
  });

  it("staircase answers are append-only and capped at four", () => {
    let state = newState();
    for (const accept of [true, false, true, false]) {
      state = answerStaircase(state, accept);
    }
    expect(state.staircasePath).toEqual([true, false, true, false]);
    expect(() => answerStaircase(state, true)).toThrow(/cannot be revised/);
  });

  it("switchpoint exists exactly when the path has four answers", () => {
    // uniform depth-4 tree with terminals 1..16 in binary order
    const build = (depth: number, offset: number): StaircaseNode => ({
      receive_today: 100,
      repay_in_6m: -100,
      repay_months: 6,
      reject:
        depth === 1 ? { switchpoint: offset } : build(depth - 1, offset),
      accept:
        depth === 1
          ? { switchpoint: offset + 1 }
          : build(depth - 1, offset + 2 ** (depth - 1)),
    });
    const fullTree = build(4, 1);
    let state = newState();
    expect(switchpoint(fullTree, state)).toBeNull();
    for (const accept of [true, false, false]) {
      state = answerStaircase(state, accept);
      expect(switchpoint(fullTree, state)).toBeNull();
    }
    state = answerStaircase(state, false);
    expect(switchpoint(fullTree, state)).toBe(9); // 1 + 8*accept
  });

  it("substitutes the repayment for XX in the question", () => {
    const template = "pay back XX EUR in 6 months; XX EUR is due";
    const rendered = contractQuestion(template, miniTree);
    expect(rendered).toBe("pay back 100 EUR in 6 months; 100 EUR is due");
  });
});

describe("persistence", () => {
  it("serializes and restores mid-flow state", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 5);
    state = advance(spec, state);
    state = answerLikert(state, spec, "Q2", 2);
    state = advance(spec, state);
    state = answerStaircase(state, true);
    state = answerStaircase(state, false);
    const restored = deserialize(serialize(state));
    expect(restored).toEqual(state);
    const node = walkStaircase(miniTree, restored.staircasePath.slice(0, 2));
    expect("switchpoint" in node && node.switchpoint).toBe(3);
  });

  it("rejects corrupt payloads", () => {
    expect(() => deserialize("[]")).toThrow();
    expect(() => deserialize('{"stepIndex": "x"}')).toThrow();
    expect(() =>
      deserialize('{"stepIndex":0,"likertAnswers":{},"staircasePath":[1,1,1,1,1]}')
    ).toThrow(/too long/);
  });
});

describe("display", () => {
  it("formats gamma to four decimals", () => {
    expect(formatGamma(1.0784999999999998)).toBe("1.0785");
    expect(formatGamma(1.0)).toBe("1.0000");
  });
});
