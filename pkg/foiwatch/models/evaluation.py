from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from foiwatch.models.box import BoxField


class EvalLevel(Enum):
    FINE = 'fine'
    AGGREGATE = 'aggregate'


class ConfusionCounts(BaseModel):
    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)


class Scores(BaseModel):
    precision: float
    recall: float
    f1: float


class ScoredBox(BaseModel):
    """A prediction; image_id groups boxes of the same frame"""
    image_id: int
    box: BoxField
    label: str
    confidence: float = Field(ge=0.0, le=1.0)


class LabeledBox(BaseModel):
    image_id: int
    box: BoxField
    label: str


class PredictionFlag(BaseModel):
    image_id: int
    label: str
    confidence: float
    tp: bool
    # position of the matched ground truth in the input list
    matched_gt: Optional[int] = None


class MatchResult(BaseModel):
    counts: ConfusionCounts
    flags: list[PredictionFlag]
    gt_counts: dict[str, int]


class APResult(BaseModel):
    per_label: dict[str, float]
    mean_ap: float


class EvalSummary(BaseModel):
    level: EvalLevel
    iou_threshold: float
    frames: int
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    per_label_ap: dict[str, float]
    mean_ap: float
    id_switches: Optional[int] = None
