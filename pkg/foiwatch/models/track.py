from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from foiwatch.models.reference import Match


class AssociationMode(Enum):
    IOU = 'IoU'
    FEATURE = 'Feature'


class TrackState(Enum):
    ACTIVE = 'Active'
    LOST = 'Lost'


class AlertKind(Enum):
    ENTERED = 'Entered'
    APPROACHING = 'Approaching'


class Assignment(BaseModel):
    track_id: int
    detection_index: int
    mode: AssociationMode
    iou: float
    similarity: Optional[float] = None


class FrameResult(BaseModel):
    frame_index: int
    assignments: list[Assignment] = Field(default_factory=list)
    new_tracks: list[int] = Field(default_factory=list)
    lost_tracks: list[int] = Field(default_factory=list)
    # track id per detection index, whether matched or spawned
    detection_track_ids: list[int] = Field(default_factory=list)
    # filled in by the pipeline, aligned with detection index
    classifications: list[Match] = Field(default_factory=list)

    def assignment_for(self, detection_index: int) -> Optional[Assignment]:
        for assignment in self.assignments:
            if assignment.detection_index == detection_index:
                return assignment
        return None


class TrailEntry(BaseModel):
    frame_index: int
    record_index: int
    label: str
    similarity: float


class AlertEvent(BaseModel):
    frame_index: int
    track_id: int
    kind: AlertKind
    zone: str
    label: str
    mean_similarity: float


class TrackReport(BaseModel):
    track_id: int
    final_label: str
    aggregate_label: Optional[str] = None
    state: TrackState
    first_frame: int
    last_frame: int
    # share of the votes won by final_label
    support: float = 0.0
    vote_counts: dict[str, int]
    mean_similarity: dict[str, float]
    votes: list[TrailEntry]
    trajectory: list[list[float]]


class StageTimings(BaseModel):
    """Per-frame wall-clock split in milliseconds; total is the sum of the laps"""
    frame_index: int
    parse_ms: float = 0.0
    associate_ms: float = 0.0
    classify_ms: float = 0.0
    alert_ms: float = 0.0
    total_ms: float = 0.0


class TrackerConfig(BaseModel):
    iou_threshold: float = Field(0.5, ge=0.0, le=1.0)
    # values above 1 switch the feature fallback off
    feature_threshold: float = Field(0.70, ge=0.0)
    max_misses: int = Field(30, ge=1)
    buffer_size: int = Field(5, ge=1)


class DetectionDiagnostics(BaseModel):
    box: list[float]
    confidence: float
    track_id: int
    # None for a detection that started a new track
    mode: Optional[AssociationMode] = None
    iou: Optional[float] = None
    similarity: Optional[float] = None
    label: str
    label_similarity: float


class FrameDiagnostics(BaseModel):
    frame_index: int
    detections: list[DetectionDiagnostics] = Field(default_factory=list)
