"""HTTP service exposing the two-item predictor and the staircase to survey UIs.

Endpoints (all JSON, all responses carry ``schema_version``):

    GET  /module     the active survey-module spec (items, weights, scales)
    GET  /staircase  the full staircase tree and the contract question template
    POST /predict    {"answers": [{item_id, value, scale_min?, scale_max?}]}
                     -> {"gamma_hat", "classification", "terms"}
    POST /responses  persists a submitted questionnaire (CSV append) and
                     returns the prediction

Malformed payloads get 400 with field-level messages; well-formed answers
outside their scale get 422.  Prediction is stateless; response persistence
is serialized through a single writer lock.
"""

from __future__ import annotations

import csv
import io
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .predictor import SurveyModuleSpec, load_module_spec, predict_gamma
from .staircase import REPAY_MONTHS, tree_as_dict

__all__ = ["create_app", "CONTRACT_QUESTION_TEMPLATE"]

SCHEMA_VERSION = 1

# Question shown for every staircase node; XX is replaced by the repayment.
CONTRACT_QUESTION_TEMPLATE = (
    "Imagine your bank offered you a debt contract. Under this contract you "
    "receive 100 EUR from your bank today and have to pay back XX EUR in 6 "
    "months. Please assume that you must pay the full amount you owe to the "
    "bank on time.\n\nWould you accept such a contract?"
)


class AnswerIn(BaseModel):
    item_id: str
    value: float
    scale_min: float | None = None
    scale_max: float | None = None


class PredictIn(BaseModel):
    answers: list[AnswerIn] = Field(min_length=1)


class ResponsesIn(BaseModel):
    answers: list[AnswerIn] = Field(min_length=1)
    subject_id: str | None = None
    switchpoint: int | None = None


def _prediction_payload(spec: SurveyModuleSpec, answers: list[AnswerIn]) -> dict:
    from .predictor import ModuleAnswer

    try:
        prediction = predict_gamma(
            spec,
            [
                ModuleAnswer(
                    item_id=a.item_id, value=a.value, scale_min=a.scale_min, scale_max=a.scale_max
                )
                for a in answers
            ],
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    return {
        "schema_version": SCHEMA_VERSION,
        "gamma_hat": prediction.gamma_hat,
        "classification": prediction.classification,
        "terms": [{"label": label, "value": value} for label, value in prediction.terms],
        "answers": [
            {"item_id": i, "value": raw, "coded": coded} for i, raw, coded in prediction.answers
        ],
    }


def create_app(module_spec_path=None, responses_path=None, ui_dir=None) -> FastAPI:
    """Build the service around one module spec and one response sink.

    ``ui_dir`` optionally mounts a built questionnaire frontend at /ui.
    CORS is wide open: this is a desk-scale tool meant to sit behind a
    proxy if it is ever exposed.
    """
    spec = load_module_spec(module_spec_path)
    sink = Path(responses_path) if responses_path else None
    write_lock = threading.Lock()
    app = FastAPI(title="debtmod", version=str(SCHEMA_VERSION))
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        details = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": details})

    @app.get("/module")
    def get_module():
        return spec.as_dict()

    @app.get("/staircase")
    def get_staircase():
        return {
            "schema_version": SCHEMA_VERSION,
            "question_template": CONTRACT_QUESTION_TEMPLATE,
            "repay_months": REPAY_MONTHS,
            "tree": tree_as_dict(),
        }

    @app.post("/predict")
    def post_predict(payload: PredictIn):
        return _prediction_payload(spec, payload.answers)

    @app.post("/responses")
    def post_responses(payload: ResponsesIn):
        if payload.switchpoint is not None and not 1 <= payload.switchpoint <= 16:
            raise HTTPException(status_code=422, detail="switchpoint must be in 1..16")
        result = _prediction_payload(spec, payload.answers)
        subject_id = payload.subject_id or f"resp-{uuid.uuid4().hex[:12]}"
        rows = [
            (subject_id, a.item_id, int(a.value) if a.value == int(a.value) else a.value)
            for a in payload.answers
        ]
        if payload.switchpoint is not None:
            rows.append((subject_id, "sp", payload.switchpoint))
        if sink is not None:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            for row in rows:
                writer.writerow(row)
            with write_lock:
                new = not sink.exists() or sink.stat().st_size == 0
                with open(sink, "a", newline="") as fh:
                    if new:
                        fh.write("subject_id,item_id,value\n")
                    fh.write(buf.getvalue())
        result["subject_id"] = subject_id
        return result

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
