"""Request and response bodies for the availability service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from ..document import from_document
from ..model import SystemModel

GateMode = Literal["auto", "dense", "scalable"]
InferMethod = Literal["exact", "forward"]
OracleMethod = Literal["enumerate", "mc"]
Infra = Literal["small", "large"]
ServiceKind = Literal["redundant", "replicated"]


class ComponentDoc(BaseModel):
    id: str
    kind: str
    q: float = 0.0


class QuorumDoc(BaseModel):
    sets: list[list[str]] | None = None
    votes: list[int] | None = None
    threshold: int | None = None


class ModelDocument(BaseModel):
    components: list[ComponentDoc]
    fault_edges: list[tuple[str, str]] = Field(default_factory=list)
    fault_trees: dict[str, Any] = Field(default_factory=dict)
    network_nodes: list[str] = Field(default_factory=list)
    network_edges: list[tuple[str, str]] = Field(default_factory=list)
    deployment: dict[str, str] = Field(default_factory=dict)
    gateways: list[str] = Field(default_factory=list)
    quorum: QuorumDoc
    replicated: bool = False

    def to_system_model(self) -> SystemModel:
        return from_document(self.model_dump())


class ValidateRequest(BaseModel):
    model: ModelDocument


class ViolationDoc(BaseModel):
    code: str
    message: str


class ValidateResponse(BaseModel):
    valid: bool
    violations: list[ViolationDoc] = Field(default_factory=list)


class CompileRequest(BaseModel):
    model: ModelDocument
    gate_mode: GateMode = "auto"
    route_limit: int | None = None
    include_dump: bool = True


class CompileResponse(BaseModel):
    status: Literal["ok", "invalid"]
    violations: list[ViolationDoc] = Field(default_factory=list)
    nodes: int = 0
    edges: int = 0
    channels: int = 0
    routes: int = 0
    dump: str | None = None


class InferRequest(BaseModel):
    model: ModelDocument
    method: InferMethod = "exact"
    samples: int = 1_000_000
    seed: int = 0
    gate_mode: GateMode = "auto"
    route_limit: int | None = None


class InferResponse(BaseModel):
    status: Literal["ok", "invalid", "infeasible"]
    method: str = ""
    availability: float | None = None
    p_fault: float | None = None
    samples: int | None = None
    std_error: float | None = None
    ci95: tuple[float, float] | None = None
    violations: list[ViolationDoc] = Field(default_factory=list)
    error: str | None = None


class OracleRequest(BaseModel):
    model: ModelDocument
    method: OracleMethod = "enumerate"
    samples: int = 100_000
    seed: int = 0


class GenerateRequest(BaseModel):
    infra: Infra = "small"
    seed: int = 7
    instances: int | None = None
    kind: ServiceKind = "replicated"


class GenerateResponse(BaseModel):
    model: dict


class SweepRequest(BaseModel):
    infra: Infra = "small"
    kind: ServiceKind = "replicated"
    min_n: int = 3
    max_n: int = 7
    step: int = 1
    method: InferMethod = "forward"
    samples: int = 100_000
    seed: int = 0
    gate_mode: GateMode = "auto"
    route_limit: int | None = None


class SweepPoint(BaseModel):
    n: int
    availability: float | None
    build_time_s: float
    inference_time_s: float
    method: str
    seed: int


class SweepResponse(BaseModel):
    status: Literal["ok", "invalid"]
    records: list[SweepPoint] = Field(default_factory=list)
    error: str | None = None
