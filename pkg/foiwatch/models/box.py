import math
import re
from typing import Annotated, Optional, Sequence

from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer, model_validator


class Point(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float

    @model_validator(mode='after')
    def check_finite(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError('point coordinates must be finite')
        return self


class BoundingBox(BaseModel):
    """Axis-aligned pixel rectangle; zero-area boxes are allowed"""
    model_config = ConfigDict(frozen=True)

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @model_validator(mode='after')
    def check_corners(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError('box coordinates must be finite')
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f'box corners out of order: {list(coords)}')
        return self

    @classmethod
    def from_list(cls, values: Sequence[float]) -> 'BoundingBox':
        if len(values) != 4:
            raise ValueError(f'box needs 4 values [x_min, y_min, x_max, y_max], got {len(values)}')
        x_min, y_min, x_max, y_max = (float(v) for v in values)
        return cls(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max)

    def to_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def shift(self, dx: float, dy: float) -> 'BoundingBox':
        return BoundingBox(x_min=self.x_min + dx, y_min=self.y_min + dy,
                           x_max=self.x_max + dx, y_max=self.y_max + dy)


_ZONE_PATTERN = re.compile(r'^(?:(?P<name>[^:]+):)?(?P<coords>[^:]+)$')


class Zone(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    box: BoundingBox

    @classmethod
    def parse(cls, text: str, default_name: Optional[str] = None) -> 'Zone':
        """
        Parses ``x_min,y_min,x_max,y_max`` with an optional ``name:`` prefix.

        Args:
            text: Zone description from the CLI or a config file
            default_name: Name used when the text carries none

        Raises:
            ValueError: malformed text or an invalid box
        """
        match = _ZONE_PATTERN.match(text.strip())
        if not match:
            raise ValueError(f"zone '{text}' is not of the form [name:]x_min,y_min,x_max,y_max")
        try:
            values = [float(part) for part in match.group('coords').split(',')]
        except ValueError:
            raise ValueError(f"zone '{text}' has non-numeric coordinates") from None
        name = (match.group('name') or default_name or 'zone').strip()
        return cls(name=name, box=BoundingBox.from_list(values))


def _box_from_list(value):
    if isinstance(value, (list, tuple)):
        return BoundingBox.from_list(value)
    return value


# Serialised as [x_min, y_min, x_max, y_max] in every file format
BoxField = Annotated[
    BoundingBox,
    BeforeValidator(_box_from_list),
    PlainSerializer(lambda box: box.to_list(), return_type=list),
]
