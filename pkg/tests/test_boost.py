import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import boost_formula
from trackboost.boost import (
    TrackConsistencyError,
    boost_sequence,
    boost_track,
    boost_track_causal,
)
from trackboost.core import BoundingBox, Detection
from trackboost.dataio import TrackRecord
from trackboost.tracker import TrackedDetection

score = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
score_lists = st.lists(score, min_size=1, max_size=50)


def make_track(track_id, scores, first_frame=0):
    """Tracked detections for every history entry plus the matching record."""
    tracked = [
        TrackedDetection(Detection(first_frame + j, BoundingBox(j, 0, j + 5, 5), s), track_id, j)
        for j, s in enumerate(scores)
    ]
    record = TrackRecord(track_id, tuple(range(first_frame, first_frame + len(scores))), tuple(scores))
    return tracked, record


def test_boost_examples():
    assert boost_track([0.7, 0.7, 0.7]) == [0.7, 0.7, 0.7]
    assert boost_track([0.4, 0.8, 0.6]) == pytest.approx([0.6, 0.8, 0.7])


def test_empty_track_rejected():
    with pytest.raises(ValueError):
        boost_track([])
    with pytest.raises(ValueError):
        boost_track_causal([])


def test_random_tracks_match_formula():
    rng = random.Random(0)
    for _ in range(200):
        scores = [rng.random() for _ in range(100)]
        out = boost_track(scores)
        ref = boost_formula(scores)
        assert max(abs(a - b) for a, b in zip(out, ref)) <= 1e-15


def test_sequence_offline_and_causal():
    tracked, record = make_track(1, [0.4, 0.8, 0.6])
    off = boost_sequence(tracked, [record], "offline")
    assert [b.boosted_confidence for b in off] == pytest.approx([0.6, 0.8, 0.7])
    assert [b.original_confidence for b in off] == [0.4, 0.8, 0.6]
    causal = boost_sequence(tracked, [record], "causal")
    assert [b.boosted_confidence for b in causal] == pytest.approx([0.4, 0.8, 0.7])


def test_max_uses_unemitted_history():
    # only the last two detections were emitted; the max comes from earlier history
    tracked, record = make_track(4, [0.9, 0.2, 0.4])
    out = boost_sequence(tracked[1:], [record])
    assert [b.boosted_confidence for b in out] == pytest.approx([0.55, 0.65])


def test_no_cross_track_leakage():
    rng = random.Random(5)
    a_scores = [rng.random() for _ in range(20)]
    b_scores = [rng.random() * 0.3 for _ in range(15)]
    ta, ra = make_track(1, a_scores)
    tb, rb = make_track(2, b_scores, first_frame=100)
    together = boost_sequence(ta + tb, [ra, rb])
    alone = boost_sequence(ta, [ra]) + boost_sequence(tb, [rb])
    assert together == alone
    assert [b.boosted_confidence for b in together[:20]] == boost_formula(a_scores)


def test_permuting_track_ids_changes_nothing_but_ids():
    ta, ra = make_track(1, [0.1, 0.5, 0.3])
    tb, rb = make_track(2, [0.9, 0.6], first_frame=10)
    base = boost_sequence(ta + tb, [ra, rb])
    ta2, ra2 = make_track(7, [0.1, 0.5, 0.3])
    tb2, rb2 = make_track(3, [0.9, 0.6], first_frame=10)
    swapped = boost_sequence(ta2 + tb2, [rb2, ra2])
    assert [b.boosted_confidence for b in base] == [b.boosted_confidence for b in swapped]


def test_dangling_track_id():
    tracked, record = make_track(1, [0.5, 0.6])
    with pytest.raises(TrackConsistencyError):
        boost_sequence(tracked, [TrackRecord(2, (0, 1), (0.5, 0.6))])
    with pytest.raises(TrackConsistencyError):
        boost_sequence(tracked, [TrackRecord(1, (0,), (0.5,))])
    with pytest.raises(TrackConsistencyError):
        boost_sequence(tracked, [TrackRecord(1, (0, 1), (0.5, 0.7))])
    with pytest.raises(ValueError):
        boost_sequence(tracked, [record], mode="median")


def test_not_idempotent():
    once = boost_track([0.4, 0.8, 0.6])
    twice = boost_track(once)
    assert twice != once
    assert twice[0] == pytest.approx(0.7)


@given(score_lists)
def test_offline_properties(scores):
    out = boost_track(scores)
    best = max(scores)
    for s, b in zip(scores, out):
        assert s <= b <= best
        assert 0.0 <= b <= 1.0
    assert out[scores.index(best)] == best
    order = sorted(range(len(scores)), key=scores.__getitem__)
    assert all(out[i] <= out[j] for i, j in zip(order, order[1:]))


@given(score_lists)
def test_causal_properties(scores):
    out = boost_track_causal(scores)
    for j, (s, b) in enumerate(zip(scores, out)):
        assert s <= b <= max(scores[: j + 1])
        assert b == (s + max(scores[: j + 1])) / 2
