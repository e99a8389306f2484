import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from conftest import detection, unit
from foiwatch.errors import ContractViolation, FrameOrderError
from foiwatch.evalkit import id_switches
from foiwatch.models.track import AssociationMode, TrackerConfig, TrackState
from foiwatch.synth import jitter
from foiwatch.tracker import Track, Tracker, associate, track_similarity

DIM = 16


def test_iou_match():
    tracker = Tracker()
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 0)
    result = tracker.step([detection([1, 0, 11, 10], unit(1, DIM))], 1)
    assert [(a.track_id, a.detection_index, a.mode) for a in result.assignments] == [(1, 0, AssociationMode.IOU)]
    assert result.assignments[0].iou == pytest.approx(90 / 110)
    assert result.new_tracks == []


def test_disjoint_detections_start_tracks_one_and_two():
    tracker = Tracker()
    result = tracker.step([detection([0, 0, 10, 10], unit(0, DIM)), detection([50, 50, 60, 60], unit(1, DIM))], 0)
    assert result.new_tracks == [1, 2]
    assert result.detection_track_ids == [1, 2]
    assert result.assignments == []


def test_track_lost_exactly_after_max_misses():
    tracker = Tracker(TrackerConfig(max_misses=3))
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 10)
    lost_at = None
    for frame in range(11, 20):
        result = tracker.step([], frame)
        if result.lost_tracks:
            assert lost_at is None
            lost_at = frame
    assert lost_at == 13
    assert tracker.tracks[1].state is TrackState.LOST
    assert tracker.active_tracks() == []


def test_lost_tracks_are_kept_but_not_matched_and_ids_not_reused():
    tracker = Tracker(TrackerConfig(max_misses=1))
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 0)
    tracker.step([], 1)
    result = tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 2)
    assert result.new_tracks == [2]
    assert sorted(tracker.tracks) == [1, 2]


def test_misses_reset_on_update():
    tracker = Tracker(TrackerConfig(max_misses=5))
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 0)
    tracker.step([], 1)
    tracker.step([], 2)
    assert tracker.tracks[1].misses == 2
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 3)
    assert tracker.tracks[1].misses == 0


def test_frame_order_enforced():
    tracker = Tracker()
    tracker.step([], 5)
    with pytest.raises(FrameOrderError):
        tracker.step([], 5)
    with pytest.raises(FrameOrderError):
        tracker.step([], 4)


def test_track_similarity():
    rng = np.random.default_rng(0)
    track = Track.start(1, detection([0, 0, 1, 1], unit(0, DIM)), 0, buffer_size=5)
    assert track_similarity(track, unit(0, DIM)) == pytest.approx(1.0)
    assert track_similarity(track, unit(1, DIM)) == 0.0

    vectors = rng.standard_normal((3, DIM)).astype(np.float32)
    track = Track.start(2, detection([0, 0, 1, 1], vectors[0]), 0, buffer_size=5)
    for v in vectors[1:]:
        track.update(detection([0, 0, 1, 1], v), 1)
    query = rng.standard_normal(DIM)
    expected = max(float(np.dot(v, query) / (np.linalg.norm(v) * np.linalg.norm(query))) for v in vectors)
    assert track_similarity(track, query) == pytest.approx(expected, abs=1e-6)

    track.embedding_buffer.clear()
    with pytest.raises(ContractViolation):
        track_similarity(track, query)


def test_buffer_keeps_last_k_embeddings():
    tracker = Tracker(TrackerConfig(buffer_size=2))
    for frame in range(3):
        tracker.step([detection([0, 0, 10, 10], unit(frame, DIM))], frame)
    buffer = tracker.tracks[1].embedding_buffer
    assert len(buffer) == 2
    assert track_similarity(tracker.tracks[1], unit(0, DIM)) == 0.0
    assert track_similarity(tracker.tracks[1], unit(2, DIM)) == pytest.approx(1.0)


def test_iou_ties_go_to_higher_similarity_then_lower_id():
    tracker = Tracker()
    same_box = [0, 0, 10, 10]
    tracker.step([detection(same_box, unit(0, DIM)), detection(same_box, unit(1, DIM))], 0)
    result = tracker.step([detection(same_box, unit(1, DIM))], 1)
    assert result.assignments[0].track_id == 2

    tracker = Tracker()
    tracker.step([detection(same_box, unit(0, DIM)), detection(same_box, unit(0, DIM))], 0)
    result = tracker.step([detection(same_box, unit(0, DIM))], 1)
    assert result.assignments[0].track_id == 1


def test_feature_fallback_reassociates_low_iou_detections():
    tracker = Tracker()
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM)), detection([100, 0, 110, 10], unit(1, DIM))], 0)
    # both moved far: IoU 0 everywhere, appearance picks the track
    result = tracker.step([detection([140, 0, 150, 10], unit(0, DIM)), detection([40, 0, 50, 10], unit(1, DIM))], 1)
    assert result.detection_track_ids == [1, 2]
    assert {a.mode for a in result.assignments} == {AssociationMode.FEATURE}


def test_feature_fallback_respects_threshold():
    tracker = Tracker(TrackerConfig(feature_threshold=0.9))
    e0 = unit(0, DIM)
    tracker.step([detection([0, 0, 10, 10], e0)], 0)
    weak = 0.8 * unit(0, DIM) + 0.6 * unit(1, DIM)
    result = tracker.step([detection([50, 0, 60, 10], weak)], 1)
    assert result.new_tracks == [2]


def test_threshold_above_one_disables_fallback():
    tracker = Tracker(TrackerConfig(feature_threshold=1.01))
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 0)
    result = tracker.step([detection([50, 0, 60, 10], unit(0, DIM))], 1)
    assert result.new_tracks == [2]


def test_zero_overlap_is_never_an_iou_match():
    tracker = Tracker(TrackerConfig(iou_threshold=0.0, feature_threshold=1.01))
    tracker.step([detection([0, 0, 10, 10], unit(0, DIM))], 0)
    result = tracker.step([detection([20, 0, 30, 10], unit(0, DIM))], 1)
    assert result.assignments == []


def test_clear_iou_matches_never_use_features():
    tracks = [Track.start(i + 1, detection([100 * i, 0, 100 * i + 20, 20], unit(i, DIM)), 0, 5) for i in range(3)]
    # appearance deliberately swapped; IoU alone decides
    dets = [detection([100 * i + 2, 0, 100 * i + 22, 20], unit((i + 1) % 3, DIM)) for i in range(3)]
    result = associate(tracks, dets, TrackerConfig())
    assert sorted((a.track_id, a.detection_index) for a in result.assignments) == [(1, 0), (2, 1), (3, 2)]
    assert all(a.mode is AssociationMode.IOU for a in result.assignments)


def test_config_validation():
    with pytest.raises(ValidationError):
        TrackerConfig(iou_threshold=1.5)
    with pytest.raises(ValidationError):
        TrackerConfig(max_misses=0)


boxes = st.tuples(st.integers(0, 80), st.integers(0, 80), st.integers(1, 30), st.integers(1, 30)).map(
    lambda t: [t[0], t[1], t[0] + t[2], t[1] + t[3]])


@settings(max_examples=200)
@given(st.lists(st.lists(st.tuples(boxes, st.integers(0, 3)), max_size=5), min_size=1, max_size=8))
def test_assignments_injective_and_ids_monotonic(frames):
    tracker = Tracker(TrackerConfig(max_misses=2))
    seen_ids = set()
    for frame_index, frame in enumerate(frames):
        result = tracker.step([detection(b, unit(e, DIM)) for b, e in frame], frame_index)
        tracks = [a.track_id for a in result.assignments]
        dets = [a.detection_index for a in result.assignments]
        assert len(set(tracks)) == len(tracks)
        assert len(set(dets)) == len(dets)
        assert not seen_ids & set(result.new_tracks)
        assert result.new_tracks == sorted(result.new_tracks)
        seen_ids |= set(result.new_tracks)
        assert len(result.detection_track_ids) == len(frame)


def test_stepwise_and_replayed_runs_agree():
    rng = np.random.default_rng(5)
    frames = [[detection([x, 0, x + 10, 10], rng.standard_normal(DIM)) for x in rng.integers(0, 60, 3)]
              for _ in range(10)]
    a, b = Tracker(), Tracker()
    results_a = [a.step(dets, i) for i, dets in enumerate(frames)]
    results_b = []
    for i, dets in enumerate(frames):
        results_b.append(b.step(list(dets), i))
    assert [r.model_dump() for r in results_a] == [r.model_dump() for r in results_b]


def test_crossing_objects_keep_identities():
    rng = np.random.default_rng(21)
    protos = [unit(0, 256).astype(np.float64), unit(1, 256).astype(np.float64)]
    tracker = Tracker()
    gt, pred = [], []
    for frame in range(20):
        a = [30 * frame, 100, 30 * frame + 40, 140]
        b = [570 - 30 * frame, 120, 610 - 30 * frame, 160]
        dets = [detection(a, jitter(protos[0], 0.3, rng)), detection(b, jitter(protos[1], 0.3, rng))]
        result = tracker.step(dets, frame)
        gt.append(['a', 'b'])
        pred.append(result.detection_track_ids)
    assert id_switches(gt, pred) == 0
    assert len(tracker.tracks) == 2
