from typing import Optional

from pydantic import BaseModel, Field, model_validator

from foiwatch.models.box import BoxField


class ObjectMotion(BaseModel):
    """Linear motion of one synthetic object; velocity is pixels per frame"""
    label: str
    start_box: BoxField
    velocity: tuple[float, float] = (0.0, 0.0)


class OcclusionWindow(BaseModel):
    """Frames [start, end] (inclusive) in which the object's detection is dropped"""
    object: int = Field(ge=0)
    start: int = Field(ge=0)
    end: int = Field(ge=0)

    @model_validator(mode='after')
    def check_order(self):
        if self.end < self.start:
            raise ValueError(f'occlusion window ends before it starts: {self.start}..{self.end}')
        return self


class CameraJump(BaseModel):
    """From `frame` on every box is offset by (dx, dy) on top of earlier jumps"""
    frame: int = Field(ge=0)
    dx: float = 0.0
    dy: float = 0.0


class ScenarioConfig(BaseModel):
    n_frames: int = Field(ge=1)
    width: float = Field(1280.0, gt=0)
    height: float = Field(720.0, gt=0)
    objects: list[ObjectMotion] = Field(min_length=1)
    classes: list[str] = Field(min_length=1)
    dim: int = Field(1024, gt=0)
    # expected norm of the noise added to a unit prototype
    sigma: float = Field(0.05, ge=0.0)
    reference_sigma: float = Field(0.05, ge=0.0)
    refs_per_class: int = Field(4, ge=0)
    occlusions: list[OcclusionWindow] = Field(default_factory=list)
    camera_jumps: list[CameraJump] = Field(default_factory=list)
    frame_interval_ms: int = Field(40, gt=0)
    seed: int = 0
    prototype_seed: Optional[int] = None

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @model_validator(mode='after')
    def check_references(self):
        unknown = sorted({o.label for o in self.objects} - set(self.classes))
        if unknown:
            raise ValueError(f'object labels missing from classes: {unknown}')
        if self.dim < len(self.classes):
            raise ValueError(f'dim {self.dim} cannot hold {len(self.classes)} orthogonal prototypes')
        for window in self.occlusions:
            if window.object >= len(self.objects):
                raise ValueError(f'occlusion refers to object {window.object}, only {len(self.objects)} exist')
        return self


class ObjectDiagnostics(BaseModel):
    frame_index: int
    object: int
    box: list[float]
    visible: bool
    clamped: bool
    # IoU with the same object's previous visible box
    iou_prev: Optional[float] = None
