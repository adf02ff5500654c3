/**
 * Typed client for the questionnaire service.
 *
 * The UI performs no gamma arithmetic of its own; every prediction comes
 * from POST /predict so the service stays the single source of truth for
 * the module weights. Responses are validated with zod before use.
 */

import { z } from "zod";
import {
  ModuleSpec,
  Prediction,
  StaircaseDoc,
  StaircaseNode,
  StaircaseTerminal,
} from "./types.js";

const moduleItemSchema = z.object({
  item_id: z.string(),
  prompt: z.string(),
  weight: z.number(),
  scale_min: z.number(),
  scale_max: z.number(),
});

const moduleSpecSchema = z.object({
  schema_version: z.number(),
  version: z.string(),
  intercept: z.number(),
  items: z.array(moduleItemSchema).min(1),
});

const terminalSchema = z.object({ switchpoint: z.number().int().min(1).max(16) });

const nodeSchema: z.ZodType<StaircaseNode | StaircaseTerminal> = z.lazy(() =>
  z.union([
    terminalSchema,
    z.object({
      receive_today: z.number(),
      repay_in_6m: z.number(),
      repay_months: z.number(),
      reject: nodeSchema,
      accept: nodeSchema,
    }),
  ])
);

const staircaseDocSchema = z.object({
  schema_version: z.number(),
  question_template: z.string(),
  repay_months: z.number(),
  tree: nodeSchema.refine((n): n is StaircaseNode => !("switchpoint" in n), {
    message: "tree root cannot be a terminal",
  }),
});

const predictionSchema = z.object({
  schema_version: z.number(),
  gamma_hat: z.number(),
  classification: z.string(),
  terms: z.array(z.object({ label: z.string(), value: z.number() })),
  subject_id: z.string().optional(),
});

export interface AnswerPayload {
  item_id: string;
  value: number;
  scale_min?: number;
  scale_max?: number;
}

/** Error carrying the HTTP status so the UI can distinguish 422 validation. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
  }
}

async function parseJson(response: Response): Promise<unknown> {
  const text = await response.text();
  try {
    return JSON.parse(text);
  } catch {
    throw new ApiError(response.status, `non-JSON response: ${text.slice(0, 120)}`);
  }
}

async function check(response: Response): Promise<unknown> {
  const body = await parseJson(response);
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : JSON.stringify(body);
    throw new ApiError(response.status, detail);
  }
  return body;
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  async getModule(): Promise<ModuleSpec> {
    const body = await check(await fetch(`${this.baseUrl}/module`));
    return moduleSpecSchema.parse(body) as ModuleSpec;
  }

  async getStaircase(): Promise<StaircaseDoc> {
    const body = await check(await fetch(`${this.baseUrl}/staircase`));
    return staircaseDocSchema.parse(body) as StaircaseDoc;
  }

  async predict(answers: AnswerPayload[]): Promise<Prediction> {
    const body = await check(
      await fetch(`${this.baseUrl}/predict`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ answers }),
      })
    );
    return predictionSchema.parse(body) as Prediction;
  }

  async submitResponses(
    answers: AnswerPayload[],
    switchpoint: number | null,
    subjectId?: string
  ): Promise<Prediction> {
    const payload: Record<string, unknown> = { answers };
    if (switchpoint !== null) payload.switchpoint = switchpoint;
    if (subjectId) payload.subject_id = subjectId;
    const body = await check(
      await fetch(`${this.baseUrl}/responses`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      })
    );
    return predictionSchema.parse(body) as Prediction;
  }
}
