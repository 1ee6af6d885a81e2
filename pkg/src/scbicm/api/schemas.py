"""Pydantic models for artifact files and HTTP payloads."""

from __future__ import annotations

import os
from typing import List, Literal, Optional, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from scbicm.config import Config
from scbicm.core.protograph import (
    build_connected,
    build_continuous_connected,
    build_loop_connected,
    build_single_chain,
)
from scbicm.exceptions import ArtifactError, InvalidParametersError
from scbicm.models.bit_mapping import BitMapping, ValidationReport
from scbicm.models.ensemble import ChainEnd, ConnectionEdge, ConnectionSpec, Protograph, SingleChainParams
from scbicm.models.results import ChannelAssignment, LiftedCode, ThresholdResult

Model = TypeVar("Model", bound=BaseModel)


class ConnectionEdgeSchema(BaseModel):
    source_chain: int
    cn_slot: int
    target_chain: int
    target_vn: int
    multiplicity: int = 1
    end: Optional[ChainEnd] = None


class ConnectionSchema(BaseModel):
    num_chains: int
    connecting_end: List[ChainEnd]
    edges: List[ConnectionEdgeSchema] = Field(default_factory=list)

    def to_spec(self) -> ConnectionSpec:
        return ConnectionSpec(
            self.num_chains,
            tuple(self.connecting_end),
            tuple(ConnectionEdge(**edge.model_dump()) for edge in self.edges),
        )

    @classmethod
    def from_spec(cls, spec: ConnectionSpec) -> "ConnectionSchema":
        return cls(
            num_chains=spec.num_chains,
            connecting_end=list(spec.connecting_end),
            edges=[ConnectionEdgeSchema(**edge.__dict__) for edge in spec.edges],
        )


class EnsembleDescription(BaseModel):
    """How to build an ensemble: a single chain, an existing connected family, or explicit connections."""

    family: Literal["single", "loop", "continuous", "custom"] = "single"
    J: int = 3
    K: int = 6
    L: int = 10
    w: int = 2
    b_c: int = 1
    b_v: int = 2
    spreading: Optional[List[List[List[int]]]] = None
    connect_positions: Optional[List[int]] = None
    end: ChainEnd = ChainEnd.RIGHT
    start: int = 5
    connection: Optional[ConnectionSchema] = None
    constraints: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])

    @model_validator(mode="after")
    def _custom_needs_connection(self) -> "EnsembleDescription":
        if self.family == "custom" and self.connection is None:
            raise ValueError("family 'custom' requires a connection")
        return self

    def params(self) -> SingleChainParams:
        spreading = None
        if self.spreading is not None:
            spreading = tuple(tuple(tuple(row) for row in comp) for comp in self.spreading)
        return SingleChainParams(self.J, self.K, self.L, self.w, self.b_c, self.b_v, spreading)

    def build(self) -> Protograph:
        params = self.params()
        if self.family == "single":
            return build_single_chain(params)
        if self.family == "loop":
            return build_loop_connected(params, self.connect_positions, self.end)
        if self.family == "continuous":
            return build_continuous_connected(params, self.start)
        return build_connected(params, self.connection.to_spec(), self.constraints)


class GraphFile(BaseModel):
    family: str
    num_chains: int
    max_check_degree: int
    variable_degree: int
    design_rate: str
    multiplicity: List[List[int]]
    position_of_vn: List[Tuple[int, int]]
    position_of_cn: List[Tuple[int, int]]
    flags: List[str] = Field(default_factory=list)
    connection: Optional[ConnectionSchema] = None

    @classmethod
    def from_protograph(cls, graph: Protograph, connection: Optional[ConnectionSpec] = None) -> "GraphFile":
        return cls(
            family=graph.family,
            num_chains=graph.num_chains,
            max_check_degree=graph.max_check_degree,
            variable_degree=graph.variable_degree,
            design_rate=str(graph.design_rate),
            multiplicity=graph.multiplicity.tolist(),
            position_of_vn=list(graph.position_of_vn),
            position_of_cn=list(graph.position_of_cn),
            flags=list(graph.flags),
            connection=ConnectionSchema.from_spec(connection) if connection else None,
        )

    def to_protograph(self) -> Protograph:
        graph = Protograph(
            multiplicity=np.array(self.multiplicity, dtype=np.int64),
            position_of_vn=tuple(self.position_of_vn),
            position_of_cn=tuple(self.position_of_cn),
            max_check_degree=self.max_check_degree,
            variable_degree=self.variable_degree,
            num_chains=self.num_chains,
            family=self.family,
            flags=tuple(self.flags),
        )
        if str(graph.design_rate) != self.design_rate:
            raise ArtifactError(f"graph file states rate {self.design_rate}, grid gives {graph.design_rate}")
        return graph


class MappingFile(BaseModel):
    m: int
    V: int
    columns: List[List[float]]

    @model_validator(mode="after")
    def _shape(self) -> "MappingFile":
        if len(self.columns) != self.V or any(len(col) != self.m for col in self.columns):
            raise ValueError(f"expected {self.V} columns of {self.m} fractions")
        return self

    @classmethod
    def from_mapping(cls, mapping: BitMapping) -> "MappingFile":
        return cls(m=mapping.m, V=mapping.V, columns=mapping.a.T.tolist())

    def to_mapping(self) -> BitMapping:
        return BitMapping(np.array(self.columns, dtype=float).T)


class ViolationSchema(BaseModel):
    constraint: str
    index: int
    magnitude: float


class ValidationResponse(BaseModel):
    ok: bool
    violations: List[ViolationSchema] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: ValidationReport) -> "ValidationResponse":
        return cls(
            ok=report.ok,
            violations=[ViolationSchema(**v.__dict__) for v in report.violations],
        )


class ThresholdRequest(BaseModel):
    ensemble: EnsembleDescription
    mapping: Union[Literal["uniform"], MappingFile] = "uniform"


class ThresholdResponse(BaseModel):
    avg_erasure: float
    snr_db: Optional[float] = None
    ebn0_db: Optional[float] = None

    @classmethod
    def from_result(cls, result: ThresholdResult) -> "ThresholdResponse":
        return cls(**result.__dict__)


class ProfileSummary(BaseModel):
    constellation: str
    labeling: str
    m: int
    snr_min_db: float
    snr_max_db: float
    rows: int


class ParityCheckFile(BaseModel):
    n: int
    n_checks: int
    Q: int
    seed: int
    checks: List[int]
    bits: List[int]
    shifts: List[int] = Field(default_factory=list)

    @classmethod
    def from_code(cls, code: LiftedCode) -> "ParityCheckFile":
        return cls(
            n=code.n,
            n_checks=code.n_checks,
            Q=code.Q,
            seed=code.seed,
            checks=code.checks.tolist(),
            bits=code.bits.tolist(),
            shifts=code.shifts.tolist(),
        )

    def to_code(self) -> LiftedCode:
        if len(self.checks) != len(self.bits):
            raise ArtifactError("parity-check file has mismatched coordinate lists")
        return LiftedCode(
            checks=np.array(self.checks, dtype=np.int64),
            bits=np.array(self.bits, dtype=np.int64),
            n=self.n,
            n_checks=self.n_checks,
            Q=self.Q,
            seed=self.seed,
            shifts=np.array(self.shifts, dtype=np.int64),
        )


class AssignmentFile(BaseModel):
    """Per-bit channel indices, run-length encoded as (channel, run length) pairs."""

    m: int
    n: int
    runs: List[Tuple[int, int]]

    @classmethod
    def from_assignment(cls, assignment: ChannelAssignment) -> "AssignmentFile":
        channels = assignment.channel_of_bit
        edges = np.flatnonzero(np.diff(channels)) + 1
        starts = np.concatenate([[0], edges])
        lengths = np.diff(np.concatenate([starts, [channels.size]]))
        runs = [(int(channels[s]), int(k)) for s, k in zip(starts, lengths)]
        return cls(m=assignment.m, n=assignment.n, runs=runs)

    def to_assignment(self) -> ChannelAssignment:
        channels = np.repeat(
            np.array([c for c, _ in self.runs], dtype=np.int64),
            np.array([k for _, k in self.runs], dtype=np.int64),
        )
        if channels.size != self.n:
            raise ArtifactError(f"assignment runs cover {channels.size} bits, header says {self.n}")
        return ChannelAssignment(channels, self.m)


class WorkflowConfig(BaseModel):
    """Settings for multi-stage workflows; CLI flags override file values."""

    seed: int = Config.SEED
    profile_path: str = Config.PROFILE_PATH
    artifact_dir: str = Config.ARTIFACT_DIR
    params: str = "3,6,10,2"
    chains: int = 2
    Q: int = 500
    ebn0: str = "2.0:0.25:4.0"
    max_frames: int = Config.SIM_MAX_FRAMES
    target_errors: int = Config.SIM_TARGET_ERRORS
    bp_iters: int = Config.SIM_BP_ITERS
    population: int = Config.OPT_POPULATION
    generations: int = Config.OPT_GENERATIONS
    screen_top: Optional[int] = Config.OPT_SCREEN_TOP
    workers: int = Config.OPT_WORKERS
    designed_graph: Optional[str] = None
    designed_mapping: Optional[str] = None


def parse_params(text: str) -> SingleChainParams:
    try:
        J, K, L, w = (int(part) for part in text.split(","))
    except ValueError as err:
        raise InvalidParametersError(f"expected J,K,L,w, got {text!r}") from err
    return SingleChainParams(J, K, L, w)


def write_json(model: BaseModel, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w") as handle:
        handle.write(model.model_dump_json(indent=2))


def read_json(cls: Type[Model], path: str) -> Model:
    try:
        with open(path) as handle:
            return cls.model_validate_json(handle.read())
    except FileNotFoundError as err:
        raise ArtifactError(f"{path} not found") from err
    except ValidationError as err:
        raise ArtifactError(f"{path} is not a valid {cls.__name__}: {err.error_count()} errors") from err
