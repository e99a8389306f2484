from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from foiwatch.utils import settings


class TripletConfig(BaseModel):
    margin: float = Field(settings.DEFAULT_TRIPLET_MARGIN, gt=0.0)


class LogitModel(BaseModel):
    """Single logistic unit, z = w.x + bias"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    w: np.ndarray
    bias: float = 0.0

    @field_validator('w', mode='before')
    @classmethod
    def coerce_weights(cls, value: Any) -> np.ndarray:
        weights = np.asarray(value, dtype=np.float64)
        if weights.ndim != 1:
            raise ValueError('weights must be a 1-D vector')
        if not np.all(np.isfinite(weights)):
            raise ValueError('weights must be finite')
        return weights


class CompositeWeights(BaseModel):
    alpha: float = Field(1.0, ge=0.0)
    beta: float = Field(1.0, ge=0.0)


class LossTerms(BaseModel):
    class_loss: float = 0.0
    box_loss: float = 0.0
    seg_bce: float = 0.0
    seg_dice: float = 0.0
