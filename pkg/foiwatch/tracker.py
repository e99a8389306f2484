"""
Feature-assisted IoU tracker.

Association per frame:
  1. greedy IoU matching in descending IoU while IoU >= iou_threshold; exact IoU ties go to the
     higher appearance similarity, then to the lower track id
  2. leftover detections are matched to leftover tracks by appearance similarity (max cosine
     against the track's recent embeddings), greedily, while similarity >= feature_threshold
  3. still unmatched detections start new tracks; still unmatched tracks accrue a miss
"""
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger

from foiwatch.errors import ContractViolation, FrameOrderError
from foiwatch.geometry import center, iou
from foiwatch.models.box import BoundingBox, Point
from foiwatch.models.frame import Detection
from foiwatch.models.reference import Match
from foiwatch.models.track import (Assignment, AssociationMode, FrameResult, TrackerConfig, TrackState,
                                   TrailEntry)
from foiwatch.vectorspace import cosine_similarity


@dataclass
class Track:
    track_id: int
    last_box: BoundingBox
    first_frame: int
    last_frame: int
    embedding_buffer: deque
    center_history: list[Point] = field(default_factory=list)
    votes: list[TrailEntry] = field(default_factory=list)
    misses: int = 0
    state: TrackState = TrackState.ACTIVE

    @classmethod
    def start(cls, track_id: int, detection: Detection, frame_index: int, buffer_size: int) -> 'Track':
        track = cls(track_id=track_id, last_box=detection.box, first_frame=frame_index,
                    last_frame=frame_index, embedding_buffer=deque(maxlen=buffer_size))
        track.embedding_buffer.append(detection.embedding)
        track.center_history.append(center(detection.box))
        return track

    @property
    def is_active(self) -> bool:
        return self.state is TrackState.ACTIVE

    def update(self, detection: Detection, frame_index: int) -> None:
        self.last_box = detection.box
        self.last_frame = frame_index
        self.center_history.append(center(detection.box))
        # deque(maxlen=K) drops the oldest embedding
        self.embedding_buffer.append(detection.embedding)
        self.misses = 0

    def add_vote(self, frame_index: int, match: Match) -> None:
        self.votes.append(TrailEntry(frame_index=frame_index, record_index=match.record_index,
                                     label=match.label, similarity=match.similarity))

    def vote_matches(self) -> list[Match]:
        return [Match(record_index=v.record_index, label=v.label, similarity=v.similarity)
                for v in self.votes]


def track_similarity(t: Track, e: np.ndarray) -> float:
    """Maximum cosine similarity between `e` and any buffered embedding of the track"""
    if not t.embedding_buffer:
        raise ContractViolation(f"track {t.track_id} has an empty embedding buffer")
    return max(cosine_similarity(buffered, e) for buffered in t.embedding_buffer)


class Association(NamedTuple):
    assignments: list[Assignment]
    unmatched_detections: list[int]
    unmatched_tracks: list[int]


def associate(tracks: Sequence[Track], detections: Sequence[Detection],
              cfg: TrackerConfig = TrackerConfig()) -> Association:
    """
    One-to-one assignment of detections to active tracks (see module docstring).

    Returns:
        Assignments in commit order, plus unmatched detection indices and track ids (ascending)
    """
    ious = {}
    sims = {}
    for t in tracks:
        for d, detection in enumerate(detections):
            ious[t.track_id, d] = iou(t.last_box, detection.box)
            sims[t.track_id, d] = track_similarity(t, detection.embedding)

    free_tracks = {t.track_id for t in tracks}
    free_detections = set(range(len(detections)))
    assignments: list[Assignment] = []

    def commit(track_id: int, d: int, mode: AssociationMode) -> None:
        free_tracks.discard(track_id)
        free_detections.discard(d)
        assignments.append(Assignment(track_id=track_id, detection_index=d, mode=mode,
                                      iou=ious[track_id, d], similarity=sims[track_id, d]))

    # zero overlap never counts as an IoU match, even with a zero threshold
    iou_pairs = sorted(
        (pair for pair, value in ious.items() if value >= cfg.iou_threshold and value > 0.0),
        key=lambda pair: (-ious[pair], -sims[pair], pair[0], pair[1]),
    )
    for track_id, d in iou_pairs:
        if track_id in free_tracks and d in free_detections:
            commit(track_id, d, AssociationMode.IOU)

    feature_pairs = sorted(
        (pair for pair in sims
         if pair[0] in free_tracks and pair[1] in free_detections and sims[pair] >= cfg.feature_threshold),
        key=lambda pair: (-sims[pair], pair[0], pair[1]),
    )
    for track_id, d in feature_pairs:
        if track_id in free_tracks and d in free_detections:
            commit(track_id, d, AssociationMode.FEATURE)

    return Association(assignments=assignments,
                       unmatched_detections=sorted(free_detections),
                       unmatched_tracks=sorted(free_tracks))


class Tracker:
    """One instance per stream; calls must be serialised"""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.tracks: dict[int, Track] = {}
        self._next_id = 1
        self._last_frame: Optional[int] = None

    def active_tracks(self) -> list[Track]:
        return [t for t in self.tracks.values() if t.is_active]

    def step(self, detections: Sequence[Detection], frame_index: int) -> FrameResult:
        """
        Associates one frame of detections and updates track lifecycles.

        Raises:
            FrameOrderError: frame_index not strictly greater than the previous one
        """
        if self._last_frame is not None and frame_index <= self._last_frame:
            raise FrameOrderError(f"frame {frame_index} does not follow frame {self._last_frame}")
        self._last_frame = frame_index

        association = associate(self.active_tracks(), detections, self.config)
        detection_track_ids = [0] * len(detections)

        for assignment in association.assignments:
            self.tracks[assignment.track_id].update(detections[assignment.detection_index], frame_index)
            detection_track_ids[assignment.detection_index] = assignment.track_id

        lost_tracks = []
        for track_id in association.unmatched_tracks:
            track = self.tracks[track_id]
            track.misses += 1
            if track.misses >= self.config.max_misses:
                track.state = TrackState.LOST
                lost_tracks.append(track_id)
                logger.info(f"Track {track_id} lost at frame {frame_index} after {track.misses} misses")

        new_tracks = []
        for d in association.unmatched_detections:
            track_id = self._next_id
            self._next_id += 1
            self.tracks[track_id] = Track.start(track_id, detections[d], frame_index, self.config.buffer_size)
            detection_track_ids[d] = track_id
            new_tracks.append(track_id)
            logger.debug(f"Track {track_id} started at frame {frame_index}")

        logger.debug(f"Frame {frame_index}: {len(association.assignments)} matched, "
                     f"{len(new_tracks)} new, {len(lost_tracks)} lost")
        return FrameResult(
            frame_index=frame_index,
            assignments=association.assignments,
            new_tracks=new_tracks,
            lost_tracks=lost_tracks,
            detection_track_ids=detection_track_ids,
        )
