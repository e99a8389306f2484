"""
Deterministic synthetic scenarios: objects on linear paths with class-prototype embeddings,
occlusion windows and camera jumps, plus ground truth and a matching reference store.
"""
import os
from typing import NamedTuple, Optional

import numpy as np
from loguru import logger
from tqdm import tqdm

from foiwatch.geometry import iou
from foiwatch.models.box import BoundingBox
from foiwatch.models.frame import Detection, FrameDetections
from foiwatch.models.reference import ReferenceRecord
from foiwatch.models.scenario import CameraJump, ObjectDiagnostics, ObjectMotion, OcclusionWindow, ScenarioConfig
from foiwatch.store import ReferenceStore, save_snapshot
from foiwatch.taxonomy import FINE_CLASSES
from foiwatch.utils.io import build_path, write_jsonl
from foiwatch.vectorspace import STORAGE_DTYPE


class Scenario(NamedTuple):
    frames: list[FrameDetections]
    store: ReferenceStore
    diagnostics: list[ObjectDiagnostics]


def class_prototypes(n_classes: int, dim: int, seed: int) -> np.ndarray:
    """Orthonormal rows, so different classes have cosine 0"""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, n_classes)))
    return q.T.copy()


def jitter(prototype: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """normalize(prototype + noise) with E||noise|| ~ sigma"""
    if sigma == 0:
        return prototype.astype(STORAGE_DTYPE)
    noisy = prototype + rng.normal(0.0, sigma / np.sqrt(prototype.size), prototype.size)
    return (noisy / np.linalg.norm(noisy)).astype(STORAGE_DTYPE)


def _camera_offset(jumps: list[CameraJump], frame: int) -> tuple[float, float]:
    dx = sum(j.dx for j in jumps if j.frame <= frame)
    dy = sum(j.dy for j in jumps if j.frame <= frame)
    return dx, dy


def _occluded(windows: list[OcclusionWindow], obj: int, frame: int) -> bool:
    return any(w.object == obj and w.start <= frame <= w.end for w in windows)


def _clamp(box: BoundingBox, width: float, height: float) -> tuple[BoundingBox, bool]:
    """Slides the box back onto the canvas, keeping its size where possible"""
    w = min(box.width, width)
    h = min(box.height, height)
    x_min = min(max(box.x_min, 0.0), width - w)
    y_min = min(max(box.y_min, 0.0), height - h)
    clamped = BoundingBox(x_min=x_min, y_min=y_min, x_max=x_min + w, y_max=y_min + h)
    return clamped, clamped != box


def _position(motion: ObjectMotion, frame: int, offset: tuple[float, float]) -> BoundingBox:
    vx, vy = motion.velocity
    return motion.start_box.shift(vx * frame + offset[0], vy * frame + offset[1])


def synth(config: ScenarioConfig, progress: bool = False) -> Scenario:
    """
    Generates frames (with ground-truth label and identity per detection), the reference
    store and per-object geometry diagnostics. Identical configs give identical output.
    """
    rng = np.random.default_rng(config.seed)
    proto_seed = config.seed if config.prototype_seed is None else config.prototype_seed
    prototypes = class_prototypes(len(config.classes), config.dim, proto_seed)
    class_row = {label: i for i, label in enumerate(config.classes)}

    store = ReferenceStore(dim=config.dim)
    for c, label in enumerate(config.classes):
        store.insert(ReferenceRecord(label=label, source_path=f'synth/{label}/prototype',
                                     embedding=prototypes[c].astype(STORAGE_DTYPE)))
        for k in range(config.refs_per_class):
            store.insert(ReferenceRecord(label=label, source_path=f'synth/{label}/{k}',
                                         embedding=jitter(prototypes[c], config.reference_sigma, rng)))

    frames = []
    diagnostics = []
    previous: dict[int, BoundingBox] = {}
    warned = set()
    for frame_index in tqdm(range(config.n_frames), desc='Synthesizing', disable=not progress):
        offset = _camera_offset(config.camera_jumps, frame_index)
        detections = []
        for obj, motion in enumerate(config.objects):
            box, clamped = _clamp(_position(motion, frame_index, offset), config.width, config.height)
            if clamped and obj not in warned:
                warned.add(obj)
                logger.warning(f"Object {obj} leaves the {config.width:g}x{config.height:g} canvas "
                               f"at frame {frame_index}, clamping its box")
            visible = not _occluded(config.occlusions, obj, frame_index)
            iou_prev = iou(previous[obj], box) if visible and obj in previous else None
            diagnostics.append(ObjectDiagnostics(frame_index=frame_index, object=obj, box=box.to_list(),
                                                 visible=visible, clamped=clamped, iou_prev=iou_prev))
            # noise is drawn for hidden objects too so occlusions do not shift later draws
            embedding = jitter(prototypes[class_row[motion.label]], config.sigma, rng)
            confidence = float(rng.uniform(0.6, 0.99))
            if not visible:
                continue
            previous[obj] = box
            detections.append(Detection(box=box, confidence=confidence, embedding=embedding,
                                        gt_label=motion.label, gt_identity=obj))
        frames.append(FrameDetections(frame_index=frame_index,
                                      timestamp_ms=frame_index * config.frame_interval_ms,
                                      detections=detections))

    logger.info(f"Synthesized {config.n_frames} frames with {config.n_objects} objects and "
                f"{len(store)} reference records", seed=config.seed)
    return Scenario(frames=frames, store=store, diagnostics=diagnostics)


def crossing_scenario(seed: int, n_frames: int = 120, sigma: float = 0.05, dim: int = 1024,
                      classes: Optional[list[str]] = None) -> ScenarioConfig:
    """
    Three objects of distinct classes in lanes 30 px apart, two of them crossing head-on.

    Lanes keep cross-object IoU at or below 1/3, camera jumps at frames 40 and 80 force IoU 0
    for every object, and the second object is hidden for frames 60-64.
    """
    classes = list(classes or FINE_CLASSES)
    rng = np.random.default_rng(seed)
    labels = [classes[i] for i in rng.choice(len(classes), size=3, replace=False)]
    objects = [
        ObjectMotion(label=labels[0], start_box=[100, 300, 160, 360], velocity=(4.0, 0.0)),
        ObjectMotion(label=labels[1], start_box=[900, 330, 960, 390], velocity=(-4.0, 0.0)),
        ObjectMotion(label=labels[2], start_box=[200, 360, 260, 420], velocity=(2.0, 0.0)),
    ]
    return ScenarioConfig(
        n_frames=n_frames,
        objects=objects,
        classes=classes,
        dim=dim,
        sigma=sigma,
        reference_sigma=sigma,
        occlusions=[OcclusionWindow(object=1, start=60, end=64)],
        camera_jumps=[CameraJump(frame=40, dy=200.0), CameraJump(frame=80, dy=-200.0)],
        seed=seed,
    )


def strip_ground_truth(frame: FrameDetections) -> FrameDetections:
    detections = [d.model_copy(update={'gt_label': None, 'gt_identity': None}) for d in frame.detections]
    return frame.model_copy(update={'detections': detections})


def write_scenario(scenario: Scenario, out_dir: str) -> dict[str, str]:
    """
    Writes frames.jsonl, gt.jsonl, store.jsonl and synth_diagnostics.jsonl into `out_dir`.

    Returns:
        Output name -> path
    """
    paths = {name: build_path(out_dir, f'{name}.jsonl')
             for name in ('frames', 'gt', 'store', 'synth_diagnostics')}
    write_jsonl((strip_ground_truth(f) for f in scenario.frames), paths['frames'], exclude_none=True)
    write_jsonl(scenario.frames, paths['gt'], exclude_none=True)
    save_snapshot(scenario.store, paths['store'])
    write_jsonl(scenario.diagnostics, paths['synth_diagnostics'])
    logger.info(f"Wrote scenario files to {os.path.abspath(out_dir)}")
    return paths
