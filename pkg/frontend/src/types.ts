/** Wire types shared across the questionnaire, mirroring the service schemas. */

export interface ModuleItem {
  item_id: string;
  prompt: string;
  weight: number;
  scale_min: number;
  scale_max: number;
}

export interface ModuleSpec {
  schema_version: number;
  version: string;
  intercept: number;
  items: ModuleItem[];
}

export interface StaircaseTerminal {
  switchpoint: number;
}

export interface StaircaseNode {
  receive_today: number;
  repay_in_6m: number;
  repay_months: number;
  reject: StaircaseNode | StaircaseTerminal;
  accept: StaircaseNode | StaircaseTerminal;
}

export interface StaircaseDoc {
  schema_version: number;
  question_template: string;
  repay_months: number;
  tree: StaircaseNode;
}

export interface PredictionTerm {
  label: string;
  value: number;
}

export interface Prediction {
  schema_version: number;
  gamma_hat: number;
  classification: string;
  terms: PredictionTerm[];
  subject_id?: string;
}

export function isTerminal(
  node: StaircaseNode | StaircaseTerminal
): node is StaircaseTerminal {
  return "switchpoint" in node;
}
