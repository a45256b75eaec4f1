"""HTTP front end wrapping the availability toolkit.

Stateless: every request carries the model document (or names a built-in
scenario).  Outcome status travels in the body ("ok", "invalid",
"infeasible") so thin clients can map it to exit codes.
"""

from __future__ import annotations

import math

from fastapi import FastAPI

from .. import document, oracle, scenarios
from ..compiler import (CompileOptions, InvalidModelError, channel_count,
                        create_service_model, route_count)
from ..inference import InferenceInfeasible, service_marginal
from ..model import Violation, validate
from . import schemas

app = FastAPI(title="availnet", description="Service availability models over Bayesian networks")


def _violations(report) -> list[schemas.ViolationDoc]:
    out = []
    for v in report:
        if isinstance(v, Violation):
            out.append(schemas.ViolationDoc(code=v.code, message=v.message))
        else:
            out.append(schemas.ViolationDoc(code="invalid", message=str(v)))
    return out


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/validate", response_model=schemas.ValidateResponse)
def validate_model(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
    try:
        model = req.model.to_system_model()
    except document.DocumentError as exc:
        return schemas.ValidateResponse(
            valid=False, violations=[schemas.ViolationDoc(code="document", message=str(exc))])
    report = validate(model)
    return schemas.ValidateResponse(valid=not report, violations=_violations(report))


@app.post("/compile", response_model=schemas.CompileResponse)
def compile_model(req: schemas.CompileRequest) -> schemas.CompileResponse:
    try:
        model = req.model.to_system_model()
        net = create_service_model(model, CompileOptions(
            gate_mode=req.gate_mode, route_limit=req.route_limit))
    except (document.DocumentError, InvalidModelError) as exc:
        report = exc.report if isinstance(exc, InvalidModelError) else [str(exc)]
        return schemas.CompileResponse(status="invalid", violations=_violations(report))
    return schemas.CompileResponse(
        status="ok", nodes=len(net), edges=net.edge_count(),
        channels=channel_count(net), routes=route_count(net),
        dump=net.dump() if req.include_dump else None)


@app.post("/infer", response_model=schemas.InferResponse)
def infer(req: schemas.InferRequest) -> schemas.InferResponse:
    try:
        model = req.model.to_system_model()
        net = create_service_model(model, CompileOptions(
            gate_mode=req.gate_mode, route_limit=req.route_limit))
    except (document.DocumentError, InvalidModelError) as exc:
        report = exc.report if isinstance(exc, InvalidModelError) else [str(exc)]
        return schemas.InferResponse(status="invalid", violations=_violations(report))
    try:
        result = service_marginal(net, req.method, samples=req.samples, seed=req.seed)
    except InferenceInfeasible as exc:
        return schemas.InferResponse(status="infeasible", method=req.method, error=str(exc))
    return schemas.InferResponse(
        status="ok", method=result.method, availability=result.p_working,
        p_fault=result.p_fault, samples=result.samples,
        std_error=result.std_error, ci95=result.ci95)


@app.post("/oracle", response_model=schemas.InferResponse)
def oracle_availability(req: schemas.OracleRequest) -> schemas.InferResponse:
    try:
        model = req.model.to_system_model()
        if req.method == "enumerate":
            value = oracle.enumerate_availability(model)
            return schemas.InferResponse(status="ok", method="enumerate",
                                         availability=value, p_fault=1.0 - value)
        est = oracle.mc_availability(model, samples=req.samples, seed=req.seed)
        return schemas.InferResponse(
            status="ok", method="mc", availability=est.value, p_fault=1.0 - est.value,
            samples=est.samples, std_error=est.std_error, ci95=est.ci95)
    except document.DocumentError as exc:
        return schemas.InferResponse(
            status="invalid", violations=[schemas.ViolationDoc(code="document", message=str(exc))])
    except oracle.EnumerationLimit as exc:
        return schemas.InferResponse(status="infeasible", method=req.method, error=str(exc))
    except oracle.OracleError as exc:
        return schemas.InferResponse(
            status="invalid", violations=[schemas.ViolationDoc(code="invalid", message=str(exc))])


def _scenario(infra: str, seed: int, instances: int | None, replicated: bool):
    if infra == "small":
        model = scenarios.small_infrastructure(seed, replicated=replicated)
    else:
        model = scenarios.large_infrastructure(seed, replicated=replicated)
    if instances is not None:
        model = scenarios.with_instances(model, instances)
    return model


@app.post("/generate", response_model=schemas.GenerateResponse)
def generate(req: schemas.GenerateRequest) -> schemas.GenerateResponse:
    model = _scenario(req.infra, req.seed, req.instances, req.kind == "replicated")
    return schemas.GenerateResponse(model=document.to_document(model))


@app.post("/sweep", response_model=schemas.SweepResponse)
def run_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    if req.min_n < 1 or req.max_n < req.min_n or req.step < 1:
        return schemas.SweepResponse(status="invalid", error="bad instance range")
    base = _scenario(req.infra, req.seed, None, req.kind == "replicated")
    n_values = range(req.min_n, req.max_n + 1, req.step)
    records = scenarios.sweep(base, n_values, req.kind, req.method, seed=req.seed,
                              samples=req.samples, route_limit=req.route_limit,
                              gate_mode=req.gate_mode)
    points = [schemas.SweepPoint(
        n=r.n, availability=None if math.isnan(r.availability) else r.availability,
        build_time_s=r.build_time_s, inference_time_s=r.inference_time_s,
        method=r.method, seed=r.seed) for r in records]
    return schemas.SweepResponse(status="ok", records=points)
