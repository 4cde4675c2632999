# data/model_file.py  ──  model JSON (schema in docs/model_schema.md)
#
# Floats are written with Python's shortest round-trip repr, so
# load_model(save_model(net)) reproduces every double exactly.

import json
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from config import MODEL_SCHEMA_VERSION, RNG_ALGORITHM
from errors import ModelFileError
from shared_types import DeepSplineNet, Layer, LinearSpline


class SplineRecord(BaseModel):
    b1: float
    b2: float
    knots: list[float] = Field(default_factory=list)
    coeffs: list[float] = Field(default_factory=list)


class LayerRecord(BaseModel):
    weights: list[list[float]]
    activations: list[SplineRecord]
    normalized: bool = True


class TrainingMetadata(BaseModel):
    lam: Optional[float] = None
    mu: Optional[float] = None
    seed: Optional[int] = None
    rng: str = RNG_ALGORITHM
    epochs: Optional[int] = None
    source: Optional[str] = None


class ModelFile(BaseModel):
    schema_version: int
    nodes: list[int]
    layers: list[LayerRecord]
    metadata: TrainingMetadata = Field(default_factory=TrainingMetadata)


# ── Conversion ────────────────────────────────────────────────────────────────

def to_record(net: DeepSplineNet, metadata: Optional[TrainingMetadata] = None) -> ModelFile:
    return ModelFile(
        schema_version=MODEL_SCHEMA_VERSION,
        nodes=list(net.nodes),
        layers=[
            LayerRecord(
                weights=layer.weights.tolist(),
                activations=[
                    SplineRecord(b1=a.b1, b2=a.b2, knots=list(a.knots), coeffs=list(a.coeffs))
                    for a in layer.activations
                ],
                normalized=layer.normalized,
            )
            for layer in net.layers
        ],
        metadata=metadata or TrainingMetadata(),
    )


def from_record(record: ModelFile) -> DeepSplineNet:
    if record.schema_version != MODEL_SCHEMA_VERSION:
        raise ModelFileError(
            f"unsupported schema_version {record.schema_version} (expected {MODEL_SCHEMA_VERSION})"
        )
    try:
        net = DeepSplineNet(
            [
                Layer(
                    weights=np.array(lr.weights, dtype=float),
                    activations=tuple(
                        LinearSpline(b1=s.b1, b2=s.b2, knots=tuple(s.knots), coeffs=tuple(s.coeffs))
                        for s in lr.activations
                    ),
                    normalized=lr.normalized,
                )
                for lr in record.layers
            ]
        )
    except ValueError as e:
        raise ModelFileError(f"inconsistent model: {e}") from e
    if list(net.nodes) != record.nodes:
        raise ModelFileError(f"node descriptor {record.nodes} does not match layer shapes {list(net.nodes)}")
    return net


# ── Files ─────────────────────────────────────────────────────────────────────

def save_model(net: DeepSplineNet, path: str | Path, metadata: Optional[TrainingMetadata] = None) -> None:
    payload = to_record(net, metadata).model_dump()
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> DeepSplineNet:
    return from_record(read_model_file(path))


def read_model_file(path: str | Path) -> ModelFile:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ModelFileError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ModelFileError(f"malformed JSON in {path}: {e.msg} (line {e.lineno})") from e
    try:
        return ModelFile.model_validate(raw)
    except ValidationError as e:
        raise ModelFileError(f"{path} does not follow the model schema: {e.error_count()} error(s)") from e
