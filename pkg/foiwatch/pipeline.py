"""
Per-frame orchestration: track, classify every detection against the reference store,
evaluate zone predicates and finalize tracks by majority vote.
"""
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

from loguru import logger

from foiwatch.errors import ContractViolation, DimensionMismatchError, EmptyStoreError, ParseError
from foiwatch.geometry import approaching, zone_contains
from foiwatch.models.box import Zone
from foiwatch.models.frame import FrameDetections
from foiwatch.models.reference import ClassTaxonomy, Match
from foiwatch.models.track import (AlertEvent, AlertKind, DetectionDiagnostics, FrameDiagnostics, FrameResult,
                                   StageTimings, TrackerConfig, TrackReport)
from foiwatch.store import ReferenceStore, majority_vote
from foiwatch.taxonomy import aggregate_label
from foiwatch.tracker import Track, Tracker
from foiwatch.utils import settings
from foiwatch.utils.io import Source, iter_jsonl, parse_model, write_jsonl

STAGES = ('parse', 'associate', 'classify', 'alert')


class StageClock:
    """Lap timer; each lap runs from the previous lap (or start) so the laps sum to the total"""

    def __init__(self, timer: Callable[[], float] = time.perf_counter):
        self._timer = timer
        self._last: Optional[float] = None
        self.laps: dict[str, float] = {}

    def start(self) -> 'StageClock':
        self._last = self._timer()
        self.laps = {}
        return self

    def lap(self, stage: str) -> float:
        if self._last is None:
            self.start()
        now = self._timer()
        elapsed = (now - self._last) * 1000.0
        self.laps[stage] = self.laps.get(stage, 0.0) + elapsed
        self._last = now
        return elapsed

    def timings(self, frame_index: int) -> StageTimings:
        values = {f'{stage}_ms': self.laps.get(stage, 0.0) for stage in STAGES}
        return StageTimings(frame_index=frame_index, total_ms=sum(self.laps.values()), **values)


@dataclass
class _AlertLatch:
    """Fires once per episode; re-arms after the condition has been false for `window` frames"""
    window: int
    armed: bool = True
    clear_frames: int = 0

    def update(self, condition: bool) -> bool:
        if condition:
            self.clear_frames = 0
            if self.armed:
                self.armed = False
                return True
            return False
        if not self.armed:
            self.clear_frames += 1
            if self.clear_frames >= self.window:
                self.armed = True
                self.clear_frames = 0
        return False


class TrackingSession:
    """
    One stream's state: tracker, store handle, zones and alert latches.

    process_frame calls must be serialised and arrive in frame order.
    """

    def __init__(self, store: ReferenceStore, taxonomy: Optional[ClassTaxonomy] = None,
                 tracker_config: Optional[TrackerConfig] = None, zones: Sequence[Zone] = (),
                 approach_window: int = settings.DEFAULT_APPROACH_WINDOW):
        if approach_window < 2:
            raise ContractViolation(f"approach window must be at least 2, got {approach_window}")
        names = [zone.name for zone in zones]
        if len(set(names)) != len(names):
            raise ContractViolation(f"zone names must be unique, got {names}")
        self.store = store
        self.taxonomy = taxonomy
        self.tracker = Tracker(tracker_config)
        self.zones = list(zones)
        self.approach_window = approach_window
        self.timings: list[StageTimings] = []
        self.frames_processed = 0
        self._latches: dict[tuple[int, str, AlertKind], _AlertLatch] = {}

    def process_frame(self, frame: FrameDetections,
                      clock: Optional[StageClock] = None) -> tuple[FrameResult, list[AlertEvent]]:
        """
        Runs one frame through association, classification and alerting.

        Args:
            frame: Parsed frame record
            clock: Clock already started before parsing (a fresh one is started otherwise)

        Returns:
            The frame result (with per-detection classifications) and any alerts raised

        Raises:
            FrameOrderError: frame_index not after the previous frame
            EmptyStoreError: detections present but the store has no records
            DimensionMismatchError: a detection embedding does not match the store dim
        """
        if clock is None:
            clock = StageClock().start()

        # checked up front so a rejected frame leaves the tracker untouched
        if frame.detections and len(self.store) == 0:
            raise EmptyStoreError(f"frame {frame.frame_index} has detections but the reference store is empty")
        for d, detection in enumerate(frame.detections):
            if detection.embedding.shape[0] != self.store.dim:
                raise DimensionMismatchError(f"frame {frame.frame_index} detection {d} has dim "
                                             f"{detection.embedding.shape[0]}, store dim is {self.store.dim}")

        result = self.tracker.step(frame.detections, frame.frame_index)
        clock.lap('associate')

        classifications = []
        for d, detection in enumerate(frame.detections):
            match = self.store.classify_frame(detection.embedding)
            self.tracker.tracks[result.detection_track_ids[d]].add_vote(frame.frame_index, match)
            classifications.append(match)
        result.classifications = classifications
        clock.lap('classify')

        alerts = []
        for track in self.tracker.active_tracks():
            alerts.extend(self._evaluate_zones(track, frame.frame_index))
        clock.lap('alert')

        self.timings.append(clock.timings(frame.frame_index))
        self.frames_processed += 1
        return result, alerts

    def _latch(self, track_id: int, zone: str, kind: AlertKind) -> _AlertLatch:
        key = (track_id, zone, kind)
        if key not in self._latches:
            self._latches[key] = _AlertLatch(window=self.approach_window)
        return self._latches[key]

    def _evaluate_zones(self, track: Track, frame_index: int) -> list[AlertEvent]:
        alerts = []
        centers = track.center_history
        for zone in self.zones:
            inside = zone_contains(zone, centers[-1])
            # Approaching only counts while outside the zone
            nearing = (not inside and len(centers) >= 2
                       and approaching(centers, zone, self.approach_window))
            fired = []
            if self._latch(track.track_id, zone.name, AlertKind.ENTERED).update(inside):
                fired.append(AlertKind.ENTERED)
            if self._latch(track.track_id, zone.name, AlertKind.APPROACHING).update(nearing):
                fired.append(AlertKind.APPROACHING)
            for kind in fired:
                label, similarity = self._current_label(track)
                alert = AlertEvent(frame_index=frame_index, track_id=track.track_id, kind=kind,
                                   zone=zone.name, label=label, mean_similarity=similarity)
                logger.info(f"{kind.value} alert: track {track.track_id} ({label}) zone '{zone.name}' "
                            f"at frame {frame_index}")
                alerts.append(alert)
        return alerts

    @staticmethod
    def _current_label(track: Track) -> tuple[str, float]:
        if not track.votes:
            return settings.UNCLASSIFIED_LABEL, 0.0
        summary = majority_vote(track.vote_matches())
        return summary.label, summary.label_similarity

    def finalize(self) -> list[TrackReport]:
        """One report per track, Active or Lost, ordered by track id"""
        reports = [self._report(track) for _, track in sorted(self.tracker.tracks.items())]
        logger.info(f"Finalized {len(reports)} tracks over {self.frames_processed} frames")
        return reports

    def _report(self, track: Track) -> TrackReport:
        trajectory = [[p.x, p.y] for p in track.center_history]
        if not track.votes:
            return TrackReport(track_id=track.track_id, final_label=settings.UNCLASSIFIED_LABEL,
                               state=track.state, first_frame=track.first_frame, last_frame=track.last_frame,
                               vote_counts={}, mean_similarity={}, votes=[], trajectory=trajectory)
        summary = majority_vote(track.vote_matches())
        aggregate = None
        if self.taxonomy is not None and self.taxonomy.covers(summary.label):
            aggregate = aggregate_label(self.taxonomy, summary.label)
        return TrackReport(
            track_id=track.track_id,
            final_label=summary.label,
            aggregate_label=aggregate,
            state=track.state,
            first_frame=track.first_frame,
            last_frame=track.last_frame,
            support=summary.support,
            vote_counts=summary.counts,
            mean_similarity=summary.mean_similarity,
            votes=list(track.votes),
            trajectory=trajectory,
        )


def diagnostics(frame: FrameDetections, result: FrameResult) -> FrameDiagnostics:
    """Deterministic per-detection record of how a frame was associated and classified"""
    entries = []
    for d, detection in enumerate(frame.detections):
        assignment = result.assignment_for(d)
        match: Optional[Match] = result.classifications[d] if d < len(result.classifications) else None
        entries.append(DetectionDiagnostics(
            box=detection.box.to_list(),
            confidence=detection.confidence,
            track_id=result.detection_track_ids[d],
            mode=assignment.mode if assignment else None,
            iou=assignment.iou if assignment else None,
            similarity=assignment.similarity if assignment else None,
            label=match.label if match else settings.UNCLASSIFIED_LABEL,
            label_similarity=match.similarity if match else 0.0,
        ))
    return FrameDiagnostics(frame_index=frame.frame_index, detections=entries)


def read_frames(source: Source, dim: Optional[int] = settings.DEFAULT_DIM) -> Iterator[FrameDetections]:
    """
    Streams frame records from line-delimited JSON.

    Raises:
        ParseError: malformed JSON, missing or invalid field, embedding of the wrong dim,
            frame_index not strictly increasing
    """
    context = {'dim': dim}
    previous = None
    for line_no, data in iter_jsonl(source):
        frame = parse_model(FrameDetections, data, line=line_no, context=context)
        if previous is not None and frame.frame_index <= previous:
            raise ParseError(f"frame_index {frame.frame_index} does not follow {previous}",
                             line=line_no, field='frame_index')
        previous = frame.frame_index
        yield frame


def write_frames(frames: Iterable[FrameDetections], sink: Source) -> int:
    return write_jsonl(frames, sink, exclude_none=True)


def write_events(events: Iterable[AlertEvent], sink: Source) -> int:
    return write_jsonl(events, sink)


def write_reports(reports: Iterable[TrackReport], sink: Source) -> int:
    return write_jsonl(reports, sink)
