"""Runs a frame stream through a tracking session and writes its outputs"""
import contextlib
import os
import sys
from typing import Any, Dict, Optional

from loguru import logger

# Add foiwatch to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from foiwatch.models.track import AlertKind, TrackState
from foiwatch.pipeline import StageClock, TrackingSession, diagnostics, read_frames
from foiwatch.store import load_snapshot
from foiwatch.utils.io import Source, dumps, open_text

from config import Config


class TrackingService:
    """One `track` run: store, session and output sinks"""

    def __init__(self, store_path: Source):
        """
        Load the reference store and set up the session from Config

        Args:
            store_path: Reference store snapshot
        """
        taxonomy = Config.taxonomy()
        self.store = load_snapshot(store_path, dim=Config.DIM, taxonomy=taxonomy)
        unmapped = self.store.unmapped_labels()
        if unmapped:
            logger.warning(f"{len(unmapped)} store labels are not mapped by taxonomy '{taxonomy.name}'")
        self.session = TrackingSession(
            store=self.store,
            taxonomy=taxonomy,
            tracker_config=Config.tracker_config(),
            zones=Config.ZONES,
            approach_window=Config.APPROACH_WINDOW,
        )
        logger.info(f"Tracking service initialized ({len(self.store)} references, {len(Config.ZONES)} zones)")

    def run(self, frames: Source, events: Source, reports: Optional[Source] = None,
            diagnostics_out: Optional[Source] = None, timings_out: Optional[Source] = None) -> Dict[str, Any]:
        """
        Process every frame, streaming alerts and diagnostics, then write track reports

        Returns:
            Dict with counts: frames, detections, tracks, lost, entered, approaching, plus mean_total_ms
        """
        stats = {"frames": 0, "detections": 0, "tracks": 0, "lost": 0,
                 "entered": 0, "approaching": 0, "mean_total_ms": 0.0}

        try:
            with contextlib.ExitStack() as stack:
                events_out = stack.enter_context(open_text(events, 'w'))
                diag_out = stack.enter_context(open_text(diagnostics_out, 'w')) if diagnostics_out else None
                time_out = stack.enter_context(open_text(timings_out, 'w')) if timings_out else None

                stream = read_frames(frames, dim=Config.DIM)
                while True:
                    clock = StageClock().start()
                    frame = next(stream, None)
                    if frame is None:
                        break
                    clock.lap('parse')

                    result, alerts = self.session.process_frame(frame, clock)
                    stats["frames"] += 1
                    stats["detections"] += len(frame.detections)
                    for alert in alerts:
                        events_out.write(dumps(alert) + '\n')
                        stats["entered" if alert.kind is AlertKind.ENTERED else "approaching"] += 1
                    if diag_out:
                        diag_out.write(dumps(diagnostics(frame, result)) + '\n')
                    if time_out:
                        time_out.write(dumps(self.session.timings[-1]) + '\n')

                reports_list = self.session.finalize()
                if reports is not None:
                    with open_text(reports, 'w') as reports_out:
                        for report in reports_list:
                            reports_out.write(dumps(report) + '\n')

        except Exception as e:
            logger.error(f"Tracking run failed after {stats['frames']} frames: {e}")
            raise

        stats["tracks"] = len(reports_list)
        stats["lost"] = sum(1 for report in reports_list if report.state is TrackState.LOST)
        if self.session.timings:
            stats["mean_total_ms"] = sum(t.total_ms for t in self.session.timings) / len(self.session.timings)
        logger.info(f"Tracking complete: {stats['frames']} frames, {stats['tracks']} tracks, "
                    f"{stats['entered']} entered / {stats['approaching']} approaching alerts")
        return stats
