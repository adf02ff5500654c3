/**
 * Response-record export in the survey-response CSV schema
 * (subject_id,item_id,value), re-ingestible by the batch prediction CLI.
 */

import { QuestionnaireState } from "./state.js";
import { ModuleSpec, StaircaseNode } from "./types.js";
import { switchpoint } from "./state.js";

export function responseCsv(
  spec: ModuleSpec,
  state: QuestionnaireState,
  tree: StaircaseNode,
  subjectId: string
): string {
  const lines = ["subject_id,item_id,value"];
  for (const item of spec.items) {
    const value = state.likertAnswers[item.item_id];
    if (value === undefined) {
      throw new Error(`cannot export: ${item.item_id} is unanswered`);
    }
    lines.push(`${subjectId},${item.item_id},${value}`);
  }
  const sp = switchpoint(tree, state);
  if (sp !== null) {
    lines.push(`${subjectId},sp,${sp}`);
  }
  return lines.join("\n") + "\n";
}
