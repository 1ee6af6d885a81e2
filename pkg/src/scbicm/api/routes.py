from fastapi import APIRouter, Request

from scbicm.api.schemas import (
    EnsembleDescription,
    GraphFile,
    MappingFile,
    ProfileSummary,
    ThresholdRequest,
    ThresholdResponse,
    ValidationResponse,
)
from scbicm.core.bitmap import uniform_mapping, validate
from scbicm.core.density_evolution import threshold
from scbicm.models.results import DEOptions

# ScbicmError raised here is turned into a 4xx response by the handler in app.py
router = APIRouter(
    tags=["scbicm"],
    responses={400: {"description": "Invalid input"}, 422: {"description": "Constraint violation"}},
)


@router.post("/ensembles", response_model=GraphFile)
def build_ensemble(description: EnsembleDescription):
    graph = description.build()
    connection = description.connection.to_spec() if description.connection else None
    return GraphFile.from_protograph(graph, connection)


@router.post("/bitmaps/validate", response_model=ValidationResponse)
def validate_bitmap(payload: MappingFile):
    return ValidationResponse.from_report(validate(payload.to_mapping()))


@router.post("/thresholds", response_model=ThresholdResponse)
def compute_threshold(payload: ThresholdRequest, request: Request):
    profile = request.app.state.profile
    graph = payload.ensemble.build()
    if payload.mapping == "uniform":
        mapping = uniform_mapping(profile.m, graph.vn_count)
    else:
        mapping = payload.mapping.to_mapping()
    result = threshold(graph, mapping, profile, DEOptions.from_config(request.app.state.config))
    return ThresholdResponse.from_result(result)


@router.get("/profile", response_model=ProfileSummary)
def profile_summary(request: Request):
    profile = request.app.state.profile
    low, high = profile.snr_range
    return ProfileSummary(
        constellation=profile.constellation,
        labeling=profile.labeling,
        m=profile.m,
        snr_min_db=low,
        snr_max_db=high,
        rows=profile.snr_db.size,
    )
