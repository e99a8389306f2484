from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from foiwatch.models.box import BoxField
from foiwatch.models.reference import Embedding


class Detection(BaseModel):
    """
    One detector output: box, confidence and appearance embedding.

    `agg_class` is an advisory hint from the detector; `gt_label` / `gt_identity` are only
    present in ground-truth files.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, extra='ignore')

    box: BoxField
    confidence: float = Field(ge=0.0, le=1.0)
    agg_class: Optional[str] = None
    embedding: Embedding
    gt_label: Optional[str] = None
    gt_identity: Optional[Union[int, str]] = None


class FrameDetections(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra='ignore')

    frame_index: int = Field(ge=0)
    timestamp_ms: int = Field(ge=0)
    detections: list[Detection] = Field(default_factory=list)
