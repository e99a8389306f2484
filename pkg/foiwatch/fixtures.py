"""
Golden tracking traces for the crane and dust-proof net sequences.

Both are built in closed form so the published per-transition scores can be audited:

* boxes slide horizontally; for equal boxes of width w the overlap o giving IoU r solves
  o / (2w - o) = r, so the step is w - 2wr / (1 + r) (a gap of 20 px for r = 0)
* embeddings follow e[k+1] = c[k] e[k] + sqrt(1 - c[k]^2) b[k+1] over fresh basis vectors b,
  so cos(e[k], e[k+1]) = c[k] and every older embedding scores lower
"""
import math
from typing import NamedTuple, Sequence

import numpy as np
import yaml
from loguru import logger

from foiwatch.models.box import BoundingBox, Zone
from foiwatch.models.frame import Detection, FrameDetections
from foiwatch.models.reference import ReferenceRecord
from foiwatch.store import ReferenceStore, save_snapshot
from foiwatch.taxonomy import CRANE_VEHICLE, DUST_PROOF_NET, FINE_CLASSES, TOWER_CRANE
from foiwatch.utils import settings
from foiwatch.utils.io import build_path, open_text, write_jsonl
from foiwatch.vectorspace import STORAGE_DTYPE

CRANE_IOU = (0.1568, 0.3261, 0.4375, 0.3632, 0.3420)
CRANE_SIMILARITY = (0.7789, 0.7873, 0.8470, 0.7057, 0.8829)
NET_IOU = (0.4665, 0.0, 0.0, 0.2375, 0.4076)
NET_SIMILARITY = (0.7463, 0.8008, 0.9075, 0.8300, 0.8239)

CRANE_ZONE = Zone(name='critical', box=BoundingBox(x_min=300, y_min=250, x_max=420, y_max=450))
NET_ZONE = Zone(name='clearance', box=BoundingBox(x_min=400, y_min=450, x_max=700, y_max=650))
DISTRACTOR_BOX = BoundingBox(x_min=900, y_min=100, x_max=1000, y_max=400)

FIRST_FRAME = 1
FRAME_INTERVAL_MS = 40
DISJOINT_GAP = 20.0
REFERENCE_OFFSET = 0.3

# basis vector layout
_CRANE_CHAIN = 0
_NET_CHAIN = 6
_CRANE_REFS = 30
_NET_REFS = 36
_PROTOTYPES = 50


class FixtureTrace(NamedTuple):
    name: str
    label: str
    frames: list[FrameDetections]
    zone: Zone
    expected_iou: tuple[float, ...]
    expected_similarity: tuple[float, ...]
    entered_frame: int


def _basis(i: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.float64)
    v[i] = 1.0
    return v


def sliding_boxes(start: BoundingBox, ious: Sequence[float]) -> list[BoundingBox]:
    """Boxes of the start box's size moved right so consecutive IoUs equal `ious`"""
    w = start.width
    boxes = [start]
    for r in ious:
        step = w + DISJOINT_GAP if r == 0 else w - 2.0 * w * r / (1.0 + r)
        boxes.append(boxes[-1].shift(step, 0.0))
    return boxes


def rotation_chain(cosines: Sequence[float], first_basis: int, dim: int) -> list[np.ndarray]:
    """Unit vectors whose consecutive cosines equal `cosines`"""
    chain = [_basis(first_basis, dim)]
    for k, c in enumerate(cosines, start=1):
        chain.append(c * chain[-1] + math.sqrt(1.0 - c * c) * _basis(first_basis + k, dim))
    return chain


def _frames(boxes: Sequence[BoundingBox], embeddings: Sequence[np.ndarray], label: str,
            extra: Sequence[Detection] = ()) -> list[FrameDetections]:
    frames = []
    for k, (box, embedding) in enumerate(zip(boxes, embeddings)):
        detection = Detection(box=box, confidence=0.9, embedding=embedding.astype(STORAGE_DTYPE),
                              gt_label=label, gt_identity=label)
        frames.append(FrameDetections(frame_index=FIRST_FRAME + k, timestamp_ms=k * FRAME_INTERVAL_MS,
                                      detections=[detection, *extra]))
    return frames


def crane_trace(dim: int = settings.DEFAULT_DIM) -> FixtureTrace:
    boxes = sliding_boxes(BoundingBox(x_min=40, y_min=300, x_max=200, y_max=400), CRANE_IOU)
    chain = rotation_chain(CRANE_SIMILARITY, _CRANE_CHAIN, dim)
    return FixtureTrace(name='crane', label=CRANE_VEHICLE, frames=_frames(boxes, chain, CRANE_VEHICLE),
                        zone=CRANE_ZONE, expected_iou=CRANE_IOU, expected_similarity=CRANE_SIMILARITY,
                        entered_frame=3)


def net_trace(dim: int = settings.DEFAULT_DIM, with_distractor: bool = False) -> FixtureTrace:
    """Dust-proof net trace; the distractor is a stationary tower crane outside the zone"""
    boxes = sliding_boxes(BoundingBox(x_min=50, y_min=500, x_max=150, y_max=600), NET_IOU)
    chain = rotation_chain(NET_SIMILARITY, _NET_CHAIN, dim)
    extra = []
    if with_distractor:
        extra.append(Detection(box=DISTRACTOR_BOX, confidence=0.8,
                               embedding=_prototype(TOWER_CRANE, dim).astype(STORAGE_DTYPE),
                               gt_label=TOWER_CRANE, gt_identity=TOWER_CRANE))
    return FixtureTrace(name='net', label=DUST_PROOF_NET, frames=_frames(boxes, chain, DUST_PROOF_NET, extra),
                        zone=NET_ZONE, expected_iou=NET_IOU, expected_similarity=NET_SIMILARITY,
                        entered_frame=5)


def _prototype(label: str, dim: int) -> np.ndarray:
    return _basis(_PROTOTYPES + FINE_CLASSES.index(label), dim)


def _references(chain: Sequence[np.ndarray], first_basis: int, dim: int) -> list[np.ndarray]:
    refs = []
    for k, e in enumerate(chain):
        v = e + REFERENCE_OFFSET * _basis(first_basis + k, dim)
        refs.append(v / np.linalg.norm(v))
    return refs


def fixture_store(dim: int = settings.DEFAULT_DIM) -> ReferenceStore:
    """
    Reference rows near every crane and net frame, plus one prototype per other fine class
    (orthogonal to both chains).
    """
    store = ReferenceStore(dim=dim)
    crane_refs = _references(rotation_chain(CRANE_SIMILARITY, _CRANE_CHAIN, dim), _CRANE_REFS, dim)
    net_refs = _references(rotation_chain(NET_SIMILARITY, _NET_CHAIN, dim), _NET_REFS, dim)
    for k, ref in enumerate(crane_refs):
        store.insert(ReferenceRecord(label=CRANE_VEHICLE, source_path=f'fixtures/crane/{k}.jpg',
                                     embedding=ref.astype(STORAGE_DTYPE)))
    for k, ref in enumerate(net_refs):
        store.insert(ReferenceRecord(label=DUST_PROOF_NET, source_path=f'fixtures/net/{k}.jpg',
                                     embedding=ref.astype(STORAGE_DTYPE)))
    for label in FINE_CLASSES:
        if label in (CRANE_VEHICLE, DUST_PROOF_NET):
            continue
        store.insert(ReferenceRecord(label=label, source_path=f'fixtures/{label}/prototype.jpg',
                                     embedding=_prototype(label, dim).astype(STORAGE_DTYPE)))
    return store


def write_fixtures(out_dir: str, dim: int = settings.DEFAULT_DIM) -> dict[str, str]:
    """
    Writes both traces, the fixture store and a run config per trace (carrying its zone).

    Returns:
        Output name -> path
    """
    paths = {'store': build_path(out_dir, 'fixture_store.jsonl')}
    save_snapshot(fixture_store(dim), paths['store'])
    for trace in (crane_trace(dim), net_trace(dim, with_distractor=True)):
        frames_path = build_path(out_dir, f'{trace.name}_frames.jsonl')
        config_path = build_path(out_dir, f'{trace.name}_config.yml')
        write_jsonl(trace.frames, frames_path, exclude_none=True)
        box = trace.zone.box
        run_config = {
            'dim': dim,
            'zone': [f'{trace.zone.name}:{box.x_min:g},{box.y_min:g},{box.x_max:g},{box.y_max:g}'],
        }
        with open_text(config_path, 'w') as out:
            yaml.safe_dump(run_config, out, sort_keys=False)
        paths[f'{trace.name}_frames'] = frames_path
        paths[f'{trace.name}_config'] = config_path
    logger.info(f"Wrote fixture traces to {out_dir}")
    return paths
