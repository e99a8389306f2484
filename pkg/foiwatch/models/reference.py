from typing import Annotated, Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationInfo

from foiwatch.utils import settings
from foiwatch.vectorspace import as_embedding


def _context_dim(info: ValidationInfo) -> Optional[int]:
    if info.context:
        return info.context.get('dim')
    return None


def validate_embedding(value: Any, info: ValidationInfo) -> np.ndarray:
    return as_embedding(value, _context_dim(info))


def serialize_embedding(value: np.ndarray) -> list[float]:
    # float32 -> float64 repr round-trips the stored value exactly
    return value.astype(np.float64).tolist()


# validated on the way in against the session dim passed as context={"dim": ...}
Embedding = Annotated[
    np.ndarray,
    BeforeValidator(validate_embedding),
    PlainSerializer(serialize_embedding, return_type=list),
]


class ReferenceRecord(BaseModel):
    """One entry of the reference embedding dataset"""
    model_config = ConfigDict(arbitrary_types_allowed=True, extra='ignore')

    index: Optional[int] = Field(None, ge=0)
    label: str = Field(min_length=1)
    source_path: str = ''
    embedding: Embedding

    def same_as(self, other: 'ReferenceRecord') -> bool:
        return (self.index == other.index and self.label == other.label
                and self.source_path == other.source_path
                and np.array_equal(self.embedding, other.embedding))


class Match(BaseModel):
    model_config = ConfigDict(frozen=True)

    record_index: int
    label: str
    similarity: float = Field(ge=-1.0, le=1.0)


class VoteSummary(BaseModel):
    label: str
    votes: int
    total: int
    counts: dict[str, int]
    mean_similarity: dict[str, float]

    @property
    def support(self) -> float:
        return self.votes / self.total if self.total else 0.0

    @property
    def label_similarity(self) -> float:
        return self.mean_similarity.get(self.label, 0.0)


class SnapshotHeader(BaseModel):
    format: Literal['foi-store'] = settings.STORE_FORMAT
    version: Literal[1] = settings.STORE_VERSION
    dim: int = Field(gt=0)
    count: int = Field(ge=0)


class ClassTaxonomy(BaseModel):
    """Fine label -> aggregate label mapping"""
    name: str
    mapping: dict[str, str]
    unknown_bucket: Optional[str] = None

    @property
    def aggregates(self) -> list[str]:
        return sorted(set(self.mapping.values()))

    def covers(self, fine: str) -> bool:
        return fine in self.mapping or self.unknown_bucket is not None
