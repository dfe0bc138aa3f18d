"""Request/response models for the annotation API.

These models are the published wire contract; the JSON schema document in
``docs/service_schema.json`` is generated from them (see
``emocnet.service.schema_doc``).
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class SyntheticDatasetRef(BaseModel):
    num_classes: int = 2
    feature_dim: int = 16
    class_mean_scale: float = 3.0
    noise_sigma: float = 0.5
    samples_per_class: int = 60
    rng_seed: int = 0
    test_per_class: int = 20


class CifarDatasetRef(BaseModel):
    directory: str


class DatasetRef(BaseModel):
    synthetic: SyntheticDatasetRef | None = None
    cifar: CifarDatasetRef | None = None


class ProtocolBlock(BaseModel):
    num_known_classes: int = 1
    num_novel_classes: int = 1
    initial_per_class: int = 20
    pool_per_class: int = 20


class TrainingBlock(BaseModel):
    learning_rate: float = 0.01
    momentum: float = 0.9
    mini_batch_size: int = 16
    iterations_per_update: int = 50
    old_data_weight: float = 0.9
    initial_iterations: int = 200


class SelectionBlock(BaseModel):
    num_sets: int = 25
    set_size: int = 5
    eval_subset_size: int = 20
    gamma: float = 1.0
    strategy: str = "emoc"


class CreateSessionRequest(BaseModel):
    dataset: DatasetRef
    protocol: ProtocolBlock = Field(default_factory=ProtocolBlock)
    training: TrainingBlock = Field(default_factory=TrainingBlock)
    selection: SelectionBlock = Field(default_factory=SelectionBlock)
    architecture: list[dict] | None = None
    seed: int = 0
    name: str | None = None


class CreateSessionResponse(BaseModel):
    session_id: str
    status: str
    created_at: str


class HistoryPoint(BaseModel):
    labeled_count: int
    accuracy_pct: float | None
    discovered_classes: int


class CurveData(BaseModel):
    labeled_counts: list[int]
    accuracy_pct: list[float | None]
    discovered_classes: list[int]


class SessionView(BaseModel):
    session_id: str
    name: str | None
    status: str
    created_at: str
    labeled_count: int
    pool_count: int
    discovered_classes: int
    class_registry: dict[int, str]
    strategy: str
    batch_size: int
    history: list[HistoryPoint]
    curves: CurveData
    outstanding_batch_id: str | None
    state_digest: str


class BatchSample(BaseModel):
    sample_id: int
    posterior: list[float]
    features: list[float] | None = None
    image_url: str | None = None


class QueryBatchView(BaseModel):
    batch_id: str
    session_id: str
    issued_at: str
    suggested_label: int
    suggested_label_name: str
    samples: list[BatchSample]


class LabelEntry(BaseModel):
    sample_id: int
    class_id: int | None = None
    new_class_name: str | None = None


class SubmitLabelsRequest(BaseModel):
    batch_id: str
    labels: list[LabelEntry]


class SubmitLabelsResponse(BaseModel):
    session_id: str
    status: str
    labeled_count: int
    discovered_classes: int
    new_classes: dict[int, str]
    record: HistoryPoint


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody


class HealthResponse(BaseModel):
    status: str
