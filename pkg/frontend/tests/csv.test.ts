import { describe, expect, it } from "vitest";

import { responseCsv } from "../src/csv.js";
import { answerLikert, answerStaircase, newState } from "../src/state.js";
import { ModuleSpec, StaircaseNode, StaircaseTerminal } from "../src/types.js";

const spec: ModuleSpec = {
  schema_version: 1,
  version: "test",
  intercept: 1.0694,
  items: [
    { item_id: "Q1", prompt: "", weight: 0.0045, scale_min: 1, scale_max: 6 },
    { item_id: "Q2", prompt: "", weight: -0.0067, scale_min: 1, scale_max: 6 },
  ],
};

function leaf(sp: number): StaircaseTerminal {
  return { switchpoint: sp };
}

function node(repay: number, reject: StaircaseNode | StaircaseTerminal, accept: StaircaseNode | StaircaseTerminal): StaircaseNode {
  return { receive_today: 100, repay_in_6m: repay, repay_months: 6, reject, accept };
}

// four levels deep along the all-reject spine; enough for a full path
const tree = node(
  -100,
  node(-90, node(-75, node(-60, leaf(1), leaf(2)), leaf(3)), leaf(4)),
  leaf(9)
);

describe("response export", () => {
  it("writes the survey-response schema with the switchpoint row", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 5);
    state = answerLikert(state, spec, "Q2", 2);
    for (let i = 0; i < 4; i++) state = answerStaircase(state, false);
    const csv = responseCsv(spec, state, tree, "alice");
    expect(csv).toBe(
      "subject_id,item_id,value\nalice,Q1,5\nalice,Q2,2\nalice,sp,1\n"
    );
  });

  it("omits the switchpoint row when the staircase is incomplete", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 3);
    state = answerLikert(state, spec, "Q2", 4);
    const csv = responseCsv(spec, state, tree, "bob");
    expect(csv).toBe("subject_id,item_id,value\nbob,Q1,3\nbob,Q2,4\n");
  });

  it("refuses to export unanswered modules", () => {
    let state = newState();
    state = answerLikert(state, spec, "Q1", 3);
    expect(() => responseCsv(spec, state, tree, "x")).toThrow(/unanswered/);
  });
});
