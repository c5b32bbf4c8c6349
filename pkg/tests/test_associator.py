import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aistrack.ais_data import Dataset, Node
from aistrack.associator import (
    AssociationResult,
    Decision,
    Thresholds,
    TrackState,
    best_match,
    decide,
    dissimilarity,
    predict_next_position,
    run_online,
    step,
)
from aistrack.errors import EmptyDataset, InvalidConfig, NoOpenTracks
from aistrack.geodesy import EARTH_RADIUS_M, GeoPoint, destination_point, haversine_distance

TH = Thresholds()


def node(index, t, lat, lon, speed=5.0, course=0.0):
    return Node(index, float(t), GeoPoint(lat, lon), speed, course)


def straight_vessel(start, course, speed, times, first_index=0):
    out = []
    for k, t in enumerate(times):
        pos = destination_point(start, course, speed * (t - times[0]))
        out.append(Node(first_index + k, float(t), pos, speed, course))
    return out


def dataset(nodes):
    return Dataset(tuple(sorted(nodes, key=lambda n: (n.t, n.index))), has_ground_truth=False)


# thresholds ---------------------------------------------------------------

def test_default_thresholds():
    assert TH.as_dict() == {"beta_small": 40, "beta_large": 550, "mu": 20, "alpha": 25,
                            "tau": 300, "gamma": 3000, "eta": 20}


@pytest.mark.parametrize("kwargs", [{"mu": 0}, {"gamma": -1}, {"beta_small": 600},
                                    {"alpha": float("nan")}])
def test_threshold_validation(kwargs):
    with pytest.raises(InvalidConfig):
        Thresholds(**kwargs)


def test_threshold_file(tmp_path):
    path = tmp_path / "th.conf"
    path.write_text("# tuned\n" + "".join(f"{k} = {v}\n" for k, v in TH.as_dict().items()))
    assert Thresholds.from_file(path) == TH


def test_threshold_file_missing_key(tmp_path):
    path = tmp_path / "th.conf"
    path.write_text("".join(f"{k}={v}\n" for k, v in TH.as_dict().items() if k != "eta"))
    with pytest.raises(InvalidConfig, match="eta"):
        Thresholds.from_file(path)


def test_threshold_file_unknown_key(tmp_path):
    path = tmp_path / "th.conf"
    path.write_text("".join(f"{k}={v}\n" for k, v in TH.as_dict().items()) + "zeta=1\n")
    with pytest.raises(InvalidConfig, match="zeta"):
        Thresholds.from_file(path)


# prediction and scoring ---------------------------------------------------

def test_predict_same_time_zero_speed():
    tr = TrackState.open(1, node(0, 10, 36.9, -76.2, speed=0.0))
    pred, d = predict_next_position(tr, node(1, 10, 36.9, -76.2, speed=0.0))
    assert d == 0.0
    assert pred == tr.last.pos


def test_predict_one_degree_north():
    tr = TrackState.open(1, node(0, 0, 0.0, 0.0, speed=4.0, course=0.0))
    dt = EARTH_RADIUS_M * math.pi / 180 / 4
    pred, d = predict_next_position(tr, node(1, dt, 5.0, 5.0, speed=4.0))
    assert pred.lat == pytest.approx(1.0, abs=1e-9)
    assert pred.lon == pytest.approx(0.0, abs=1e-9)


@given(st.floats(-60, 60), st.floats(-179, 179), st.floats(0, 359.9), st.floats(0, 15),
       st.floats(0, 15), st.floats(0, 1500))
def test_predicted_distance_matches_travel(lat, lon, course, v1, v2, dt):
    tr = TrackState.open(1, node(0, 0, lat, lon, speed=v1, course=course))
    pred, d = predict_next_position(tr, node(1, dt, lat, lon, speed=v2))
    assert haversine_distance(tr.last.pos, pred) == pytest.approx(d, rel=1e-3, abs=1e-6)


def test_score_zero_on_perfect_continuation():
    a, b = straight_vessel(GeoPoint(36.9, -76.3), 45.0, 5.0, [0, 10])
    bd = dissimilarity(TrackState.open(1, a), b)
    assert bd.s_jk == pytest.approx(0.0, abs=1e-6)


def test_score_equals_distance_when_course_kept():
    a, b = straight_vessel(GeoPoint(36.9, -76.3), 0.0, 5.0, [0, 10])
    off = destination_point(b.pos, 90.0, 100.0)
    bd = dissimilarity(TrackState.open(1, a), Node(1, b.t, off, b.speed, b.course))
    assert bd.c_ang == 0.0
    assert bd.s_jk == pytest.approx(100.0, rel=1e-6)


def test_score_course_flip_on_stationary_track():
    tr = TrackState.open(1, node(0, 0, 36.9, -76.3, speed=0.0, course=0.0))
    bd = dissimilarity(tr, node(1, 60, 36.9, -76.3, speed=0.0, course=180.0))
    assert bd.s_jk == pytest.approx(3.0)
    assert bd.s_jk == bd.c_dist + bd.c_ang


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 359), st.floats(0, 359), st.floats(1, 600))
def test_score_decomposition(dlat, dlon, c1, c2, dt):
    tr = TrackState.open(1, node(0, 0, 36.9, -76.3, course=c1))
    bd = dissimilarity(tr, node(1, dt, 36.9 + dlat, -76.3 + dlon, course=c2))
    assert bd.s_jk == bd.c_dist + bd.c_ang


# best match and decision --------------------------------------------------

def test_best_match_single_and_argmin():
    k = node(5, 10, 36.9, -76.3)
    near = TrackState.open(1, node(0, 10, 36.9001, -76.3))
    far = TrackState.open(2, node(1, 10, 36.9005, -76.3))
    z, s, _ = best_match([near], k)
    assert z == 1
    z, s, bd = best_match([far, near], k)
    assert z == 1 and s == bd.s_jk


def test_best_match_tie_goes_to_lower_id():
    k = node(5, 10, 36.9, -76.3)
    t1 = TrackState.open(2, node(0, 10, 36.9001, -76.3))
    t2 = TrackState.open(1, node(1, 10, 36.8999, -76.3))
    assert dissimilarity(t1, k).s_jk == pytest.approx(dissimilarity(t2, k).s_jk, rel=1e-9)
    # force an exact tie by sharing one last node
    t3 = TrackState.open(7, t1.last)
    t4 = TrackState.open(3, t1.last)
    assert best_match([t3, t4], k)[0] == 3


def test_best_match_no_open_tracks():
    tr = TrackState.open(1, node(0, 0, 0, 0))
    tr.closed = True
    with pytest.raises(NoOpenTracks):
        best_match([tr], node(1, 1, 0, 0))
    with pytest.raises(NoOpenTracks):
        best_match([], node(1, 1, 0, 0))


@pytest.mark.parametrize("s_k, c_ang, d, expected", [
    (30, 1, 500, Decision.ASSIGN),
    (600, 0, 500, Decision.OPEN_NEW),
    (200, 0, 10, Decision.OPEN_NEW),
    (200, 0, 100, Decision.ASSIGN),
    (30, 26, 500, Decision.OPEN_NEW),
    (40, 0, 10, Decision.ASSIGN),  # beta_small itself is not in the middle band
    (550, 0, 100, Decision.ASSIGN),  # beta_large is inclusive
    (550, 0, 20, Decision.OPEN_NEW),  # mu is inclusive
])
def test_decide_examples(s_k, c_ang, d, expected):
    assert decide(s_k, c_ang, d, TH) is expected


@given(st.floats(0, 5000), st.floats(0, 100), st.floats(0, 5000), st.floats(41, 3000), st.floats(0, 3000))
def test_large_score_clause_monotone_in_beta_large(s_k, c_ang, d, lo, extra):
    small = Thresholds(beta_large=lo)
    large = Thresholds(beta_large=lo + extra)
    assert (s_k > large.beta_large) <= (s_k > small.beta_large)
    if s_k <= lo and decide(s_k, c_ang, d, small) is Decision.ASSIGN:
        assert decide(s_k, c_ang, d, large) is Decision.ASSIGN


# online pass --------------------------------------------------------------

def test_first_node_opens_track_one():
    state = step(AssociationResult(), node(0, 0, 36.9, -76.3), TH)
    assert state.assignment == {0: 1}
    assert [tr.node_indices for tr in state.tracks] == [[0]]


def test_continuation_joins_track_one():
    a, b = straight_vessel(GeoPoint(36.9, -76.3), 90.0, 6.0, [0, 12])
    state = step(step(AssociationResult(), a, TH), b, TH)
    assert state.assignment == {0: 1, 1: 1}


def test_far_node_opens_track_two():
    a = node(0, 0, 36.9, -76.3)
    far = Node(1, 10.0, destination_point(a.pos, 90.0, 100_000.0), 5.0, 0.0)
    state = step(step(AssociationResult(), a, TH), far, TH)
    assert state.assignment == {0: 1, 1: 2}


def test_single_straight_vessel_is_one_track():
    nodes = straight_vessel(GeoPoint(36.9, -76.3), 30.0, 7.0, list(range(0, 3600, 10)))
    res = run_online(dataset(nodes))
    assert len(res.tracks) == 1


def test_two_distant_vessels():
    a = straight_vessel(GeoPoint(36.9, -76.3), 0.0, 5.0, list(range(0, 1000, 10)))
    b_start = destination_point(GeoPoint(36.9, -76.3), 90.0, 50_000.0)
    b = straight_vessel(b_start, 180.0, 5.0, list(range(5, 1000, 10)), first_index=len(a))
    res = run_online(dataset(a + b))
    assert len(res.tracks) == 2
    assert {res.assignment[n.index] for n in a} == {1}
    assert {res.assignment[n.index] for n in b} == {2}


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        run_online(Dataset((), False))


def test_replay_is_identical():
    a = straight_vessel(GeoPoint(36.9, -76.3), 0.0, 5.0, list(range(0, 600, 10)))
    b = straight_vessel(GeoPoint(36.9, -76.29), 0.0, 5.0, list(range(3, 600, 10)), first_index=len(a))
    ds = dataset(a + b)
    assert run_online(ds).assignment == run_online(ds).assignment


random_nodes = st.lists(
    st.tuples(st.integers(0, 600), st.floats(36.8, 37.0), st.floats(-76.4, -76.2),
              st.floats(0, 10), st.floats(0, 359)),
    min_size=1, max_size=40)


@settings(max_examples=60)
@given(random_nodes)
def test_partition_invariant(raw):
    nodes = [Node(i, float(t), GeoPoint(la, lo), v, c) for i, (t, la, lo, v, c) in enumerate(raw)]
    res = run_online(dataset(nodes))
    members = [idx for tr in res.tracks for idx in tr.node_indices]
    assert sorted(members) == list(range(len(nodes)))
    for tr in res.tracks:
        assert all(res.assignment[idx] == tr.id for idx in tr.node_indices)
        assert tr.first.index == tr.node_indices[0] and tr.last.index == tr.node_indices[-1]
    assert [tr.id for tr in res.tracks] == list(range(1, len(res.tracks) + 1))
    starts = [tr.start_time for tr in res.tracks]
    assert starts == sorted(starts)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.floats(-0.02, 0.02), st.floats(-0.02, 0.02), st.floats(0, 8)),
                min_size=1, max_size=6),
       st.floats(-0.02, 0.02), st.floats(-0.02, 0.02), st.floats(1, 4), st.floats(0, 359))
def test_argmin_is_brute_force_and_scale_stable(tracks_raw, klat, klon, scale, course):
    # common course keeps the angular term at zero, so the score is a pure distance
    def build(k):
        tracks = [TrackState.open(i + 1, Node(i, 0.0, GeoPoint(36.9 + la * k, -76.3 + lo * k), v, course))
                  for i, (la, lo, v) in enumerate(tracks_raw)]
        q = Node(99, 30.0 * k, GeoPoint(36.9 + klat * k, -76.3 + klon * k), 4.0, course)
        return tracks, q

    tracks, q = build(1.0)
    scores = [(dissimilarity(tr, q).s_jk, tr.id) for tr in tracks]
    z, s, _ = best_match(tracks, q)
    assert (s, z) == min(scores)
    tracks_k, q_k = build(scale)
    scores_k = sorted((dissimilarity(tr, q_k).s_jk, tr.id) for tr in tracks_k)
    ordered = sorted(scores)
    if len(ordered) == 1 or ordered[1][0] - ordered[0][0] > 1e-3 * max(1.0, ordered[0][0]):
        assert best_match(tracks_k, q_k)[0] == z == scores_k[0][1]
