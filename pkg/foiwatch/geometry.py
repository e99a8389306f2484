"""Box math: IoU, centers, zone membership and the approach predicate"""
import math
from typing import Sequence

from foiwatch.errors import ContractViolation, InvalidBoxError
from foiwatch.models.box import BoundingBox, Point, Zone


def _check(box: BoundingBox) -> None:
    # model_construct() skips validation, so corners are re-checked here
    if box.x_min > box.x_max or box.y_min > box.y_max:
        raise InvalidBoxError(f"box corners out of order: {box.to_list()}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    _check(a)
    _check(b)
    inter_w = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    inter_h = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    intersection = inter_w * inter_h
    union = a.area + b.area - intersection
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, intersection / union))


def center(a: BoundingBox) -> Point:
    _check(a)
    return Point(x=(a.x_min + a.x_max) / 2.0, y=(a.y_min + a.y_max) / 2.0)


def zone_contains(z: Zone, p: Point) -> bool:
    # closed boundary
    box = z.box
    return box.x_min <= p.x <= box.x_max and box.y_min <= p.y <= box.y_max


def point_to_box_distance(p: Point, box: BoundingBox) -> float:
    dx = max(box.x_min - p.x, 0.0, p.x - box.x_max)
    dy = max(box.y_min - p.y, 0.0, p.y - box.y_max)
    return math.hypot(dx, dy)


def approaching(centers: Sequence[Point], z: Zone, window: int) -> bool:
    """
    True when the most recent center is inside the zone, or when the distance to the zone
    strictly decreased between the first and last of the last `window` centers.

    Raises:
        ContractViolation: fewer than 2 centers or window < 2
    """
    if window < 2:
        raise ContractViolation(f"approach window must be at least 2, got {window}")
    if len(centers) < 2:
        raise ContractViolation(f"approaching needs at least 2 centers, got {len(centers)}")
    recent = list(centers)[-window:]
    if zone_contains(z, recent[-1]):
        return True
    return point_to_box_distance(recent[-1], z.box) < point_to_box_distance(recent[0], z.box)
