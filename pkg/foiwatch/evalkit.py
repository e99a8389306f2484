"""
Scoring: precision / recall / F1, greedy IoU matching, all-point interpolated AP and
identity-switch counting.
"""
from collections import Counter
from typing import Hashable, Optional, Sequence

import numpy as np
from loguru import logger

from foiwatch.errors import DimensionMismatchError, InputError
from foiwatch.geometry import iou
from foiwatch.models.evaluation import (APResult, ConfusionCounts, EvalLevel, EvalSummary, LabeledBox, MatchResult,
                                        PredictionFlag, ScoredBox, Scores)
from foiwatch.models.reference import ClassTaxonomy
from foiwatch.models.track import FrameDiagnostics
from foiwatch.pipeline import read_frames
from foiwatch.taxonomy import aggregate_label
from foiwatch.utils.io import Source, iter_jsonl, parse_model


def precision_recall_f1(c: ConfusionCounts) -> Scores:
    """Zero denominators give 0 rather than an error"""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores(precision=precision, recall=recall, f1=f1)


def match_detections(preds: Sequence[ScoredBox], gts: Sequence[LabeledBox],
                     iou_threshold: float = 0.5) -> MatchResult:
    """
    Greedy matching in descending confidence: each prediction takes the unmatched ground truth
    of the same image and label with the highest IoU >= iou_threshold.

    Returns:
        Counts, one flag per prediction in ranked order, and the ground-truth count per label
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = [False] * len(gts)
    flags = []
    for i in order:
        pred = preds[i]
        best, best_iou = None, iou_threshold
        for g, gt in enumerate(gts):
            if taken[g] or gt.image_id != pred.image_id or gt.label != pred.label:
                continue
            overlap = iou(pred.box, gt.box)
            if overlap >= best_iou and (best is None or overlap > best_iou):
                best, best_iou = g, overlap
        if best is not None:
            taken[best] = True
        flags.append(PredictionFlag(image_id=pred.image_id, label=pred.label, confidence=pred.confidence,
                                    tp=best is not None, matched_gt=best))

    tp = sum(flag.tp for flag in flags)
    counts = ConfusionCounts(tp=tp, fp=len(flags) - tp, fn=len(gts) - tp)
    return MatchResult(counts=counts, flags=flags, gt_counts=dict(Counter(gt.label for gt in gts)))


def _label_ap(tp_flags: np.ndarray, n_gt: int) -> float:
    if tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    # precision envelope, non-increasing from the right
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changed = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def average_precision(flags: Sequence[PredictionFlag], gt_counts: dict[str, int]) -> APResult:
    """
    All-point interpolated AP per label from confidence-ranked flags.

    Labels without ground truth are left out of the mean; labels with ground truth but no
    predictions score 0.
    """
    per_label = {}
    for label in sorted(gt_counts):
        n_gt = gt_counts[label]
        if n_gt <= 0:
            continue
        ranked = sorted((f for f in flags if f.label == label), key=lambda f: -f.confidence)
        per_label[label] = _label_ap(np.array([f.tp for f in ranked], dtype=bool), n_gt)
    mean_ap = float(np.mean(list(per_label.values()))) if per_label else 0.0
    return APResult(per_label=per_label, mean_ap=mean_ap)


def id_switches(gt_tracks: Sequence[Sequence[Optional[Hashable]]],
                pred_assignments: Sequence[Sequence[int]]) -> int:
    """
    Counts frames where a ground-truth identity is bound to a different track id than before.

    Args:
        gt_tracks: Per frame, the ground-truth identity of each detection (None to skip one)
        pred_assignments: Per frame, the predicted track id of each detection, same order

    Raises:
        DimensionMismatchError: sequences not aligned frame by frame
    """
    if len(gt_tracks) != len(pred_assignments):
        raise DimensionMismatchError(f"{len(gt_tracks)} ground-truth frames vs {len(pred_assignments)} predicted")
    binding: dict[Hashable, int] = {}
    switches = 0
    for frame_no, (identities, track_ids) in enumerate(zip(gt_tracks, pred_assignments)):
        if len(identities) != len(track_ids):
            raise DimensionMismatchError(
                f"frame {frame_no}: {len(identities)} ground-truth detections vs {len(track_ids)} predicted")
        for identity, track_id in zip(identities, track_ids):
            if identity is None:
                continue
            if identity in binding and binding[identity] != track_id:
                switches += 1
            binding[identity] = track_id
    return switches


def evaluate_files(pred_path: Source, gt_path: Source, iou_threshold: float = 0.5,
                   level: EvalLevel = EvalLevel.FINE, taxonomy: Optional[ClassTaxonomy] = None) -> EvalSummary:
    """
    Scores a `track` diagnostics file against a ground-truth frames file.

    Predictions are ranked by detector confidence. ID switches are counted when every frame
    carries the same number of detections on both sides and identities are present.
    """
    if level is EvalLevel.AGGREGATE and taxonomy is None:
        raise InputError("aggregate-level evaluation needs a taxonomy")

    def relabel(label: str) -> str:
        if level is EvalLevel.AGGREGATE and taxonomy.covers(label):
            return aggregate_label(taxonomy, label)
        return label

    predicted = {}
    for line_no, data in iter_jsonl(pred_path):
        frame = parse_model(FrameDiagnostics, data, line=line_no)
        predicted[frame.frame_index] = frame
    truth = {frame.frame_index: frame for frame in read_frames(gt_path, dim=None)}

    preds, gts = [], []
    for frame_index, frame in predicted.items():
        for d in frame.detections:
            preds.append(ScoredBox(image_id=frame_index, box=d.box, label=relabel(d.label), confidence=d.confidence))
    for frame_index, frame in truth.items():
        for d in frame.detections:
            if d.gt_label is None:
                raise InputError(f"frame {frame_index} has a detection without gt_label")
            gts.append(LabeledBox(image_id=frame_index, box=d.box, label=relabel(d.gt_label)))

    matched = match_detections(preds, gts, iou_threshold)
    scores = precision_recall_f1(matched.counts)
    ap = average_precision(matched.flags, matched.gt_counts)

    switches = None
    frames = sorted(truth)
    aligned = (set(frames) == set(predicted)
               and all(len(truth[f].detections) == len(predicted[f].detections) for f in frames))
    has_identity = any(d.gt_identity is not None for f in frames for d in truth[f].detections)
    if aligned and has_identity:
        switches = id_switches([[d.gt_identity for d in truth[f].detections] for f in frames],
                               [[d.track_id for d in predicted[f].detections] for f in frames])
    elif has_identity:
        logger.warning("Prediction and ground-truth frames are not aligned, skipping ID switches")

    logger.info(f"Evaluated {len(preds)} predictions against {len(gts)} ground truths: "
                f"P={scores.precision:.4f} R={scores.recall:.4f} F1={scores.f1:.4f} mAP={ap.mean_ap:.4f}")
    return EvalSummary(
        level=level,
        iou_threshold=iou_threshold,
        frames=len(frames),
        counts=matched.counts,
        precision=scores.precision,
        recall=scores.recall,
        f1=scores.f1,
        per_label_ap=ap.per_label,
        mean_ap=ap.mean_ap,
        id_switches=switches,
    )
