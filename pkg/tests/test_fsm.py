"""FSM construction, merging, correlation, collage, and serialization."""

import numpy as np
import pytest

from statescope import fsm
from statescope.errors import (
    IncompleteCollage,
    LengthMismatch,
    SchemaViolation,
    UnannotatedWindow,
    UnknownLabel,
)
from statescope.traces import MultiModalWindow, Session, StateLabel, TransitionEvent


def make_session(annotations, event_kinds, origin="human"):
    """Session with one window per annotation and one event between each pair."""
    windows = tuple(
        MultiModalWindow(
            window_id=i, t_start_ms=i * 100, t_end_ms=(i + 1) * 100,
            power=(1.0,), network=(), spectrum_psd=(), annotation=name,
        )
        for i, name in enumerate(annotations)
    )
    assert len(event_kinds) == len(annotations) - 1
    events = tuple(
        TransitionEvent(event_id=i, kind=kind, t_ms=(i + 1) * 100, from_window=i, to_window=i + 1)
        for i, kind in enumerate(event_kinds)
    )
    labels = tuple(StateLabel(n, origin) for n in sorted({a for a in annotations if a}))
    return Session(session_id="t", windows=windows, events=events, labels=labels)


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def test_build_two_states_one_transition():
    machine = fsm.build_fsm(make_session(["a", "b"], ["e"]))
    assert machine.state_names() == {"a", "b"}
    assert machine.initial.name == "a"
    assert len(machine.transitions) == 1
    assert machine.has_edge("a", "e", "b")


def test_build_deduplicates_repeated_transitions():
    machine = fsm.build_fsm(make_session(["a", "b", "a", "b"], ["e", "back", "e"]))
    assert len(machine.transitions) == 2  # (a,e,b) and (b,back,a)


def test_build_rejects_unannotated_window():
    sess = make_session(["a", "b"], ["e"])
    bad = Session(
        session_id="t",
        windows=(sess.windows[0], MultiModalWindow(1, 100, 200, (1.0,), (), ())),
        events=sess.events,
        labels=sess.labels,
    )
    with pytest.raises(UnannotatedWindow):
        fsm.build_fsm(bad)


def test_every_event_becomes_exactly_one_transition():
    sess = make_session(["a", "b", "c", "a"], ["e1", "e2", "e3"])
    machine = fsm.build_fsm(sess)
    assert len(machine.transitions) == 3


# ---------------------------------------------------------------------------
# merge by transition event
# ---------------------------------------------------------------------------

def test_merge_same_event_targets():
    # s1 -e-> s2 then back then s1 -e-> s3: targets of "e" merge
    sess = make_session(["s1", "s2", "s1", "s3"], ["e", "undo", "e"])
    machine = fsm.build_fsm(sess)
    merged, relabel = fsm.merge_by_transition_event(machine, sess)
    assert relabel["s2"] == relabel["s3"]
    assert relabel["s2"].origin == "merged"
    assert merged.state_names() == {"s1", "s2"}  # representative keeps smallest name
    assert relabel["s1"].name == "s1" and relabel["s1"].origin == "human"


def test_merge_distinct_events_identity():
    sess = make_session(["a", "b", "c"], ["e1", "e2"])
    machine = fsm.build_fsm(sess)
    merged, relabel = fsm.merge_by_transition_event(machine, sess)
    assert merged == machine
    assert all(relabel[n].name == n for n in "abc")


def test_merge_closure_single_step():
    # e leads to s2 and s3 (merged); no other kind shares targets, so the
    # closure stops after one merge
    sess = make_session(["s1", "s2", "s1", "s3", "s4"], ["e", "u", "e", "f"])
    machine = fsm.build_fsm(sess)
    merged, relabel = fsm.merge_by_transition_event(machine, sess)
    assert relabel["s2"] == relabel["s3"]
    assert relabel["s4"].name == "s4"
    assert len(merged.states) == 3  # s1, merged(s2,s3), s4


def test_merge_transitive_closure_chains():
    # kind e targets {x, y}; kind f targets {y, z}: sharing y chains the
    # closure so x, y, z all collapse into one state
    sess = make_session(
        ["a", "x", "a", "y", "b", "y", "c", "z"],
        ["e", "u", "e", "w", "f", "g", "f"],
    )
    machine = fsm.build_fsm(sess)
    merged, relabel = fsm.merge_by_transition_event(machine, sess)
    assert relabel["x"] == relabel["y"] == relabel["z"]
    assert len(merged.states) == len(machine.states) - 2


def test_merge_never_increases_state_count_and_is_surjective():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        annotations = [f"s{i}" for i in range(n)]
        kinds = [f"e{rng.integers(0, 3)}" for _ in range(n - 1)]
        sess = make_session(annotations, kinds)
        machine = fsm.build_fsm(sess)
        merged, relabel = fsm.merge_by_transition_event(machine, sess)
        assert len(merged.states) <= len(machine.states)
        assert set(relabel.values()) == set(merged.states)


def test_merge_rewrites_session_annotations():
    sess = make_session(["s1", "s2", "s1", "s3"], ["e", "undo", "e"])
    machine = fsm.build_fsm(sess)
    merged, relabel = fsm.merge_by_transition_event(machine, sess)
    rewritten = fsm.relabel_session(sess, relabel)
    assert [w.annotation for w in rewritten.windows] == ["s1", "s2", "s1", "s2"]
    assert {lab.name for lab in rewritten.labels} == {"s1", "s2"}


# ---------------------------------------------------------------------------
# correlation matrix
# ---------------------------------------------------------------------------

def test_correlation_direct_counting():
    mat = fsm.correlation_matrix(["a", "a", "b", "b"], [0, 0, 0, 1])
    assert mat.rows == ("a", "b")
    assert mat.cols == (0, 1)
    np.testing.assert_allclose(mat.cells, [[1.0, 0.0], [0.5, 0.5]])


def test_correlation_single_cell():
    mat = fsm.correlation_matrix(["a"], [0])
    np.testing.assert_array_equal(mat.cells, [[1.0]])


def test_correlation_rows_sum_to_one():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        ann = [f"s{rng.integers(0, 4)}" for _ in range(n)]
        clu = rng.integers(-1, 4, size=n).tolist()
        mat = fsm.correlation_matrix(ann, clu)
        np.testing.assert_allclose(mat.cells.sum(axis=1), 1.0, atol=1e-12)


def test_correlation_noise_gets_own_column():
    mat = fsm.correlation_matrix(["a", "a"], [0, -1])
    assert mat.cols == (0, -1)


def test_correlation_length_mismatch():
    with pytest.raises(LengthMismatch):
        fsm.correlation_matrix(["a"], [0, 1])


# ---------------------------------------------------------------------------
# collage
# ---------------------------------------------------------------------------

def test_collage_identity_partition():
    sess = make_session(["a", "b"], ["e"])
    machine = fsm.build_fsm(sess)
    collage = fsm.CollageMap({"a": frozenset({"a"}), "b": frozenset({"b"})})
    out, out_sess = fsm.apply_collage(machine, sess, collage)
    assert out == machine
    assert out_sess == sess


def test_collage_merges_parallel_edges():
    # x -e-> a and x -e-> b collapse onto one edge into the group state
    sess = make_session(["x", "a", "x", "b"], ["e", "undo", "e"])
    machine = fsm.build_fsm(sess)
    collage = fsm.CollageMap({
        "responding": frozenset({"a", "b"}),
        "x": frozenset({"x"}),
    })
    out, out_sess = fsm.apply_collage(machine, sess, collage)
    assert out.state_names() == {"x", "responding"}
    assert sum(1 for tr in out.transitions if tr.event == "e") == 1
    assert out.has_edge("x", "e", "responding")
    merged_label = next(s for s in out.states if s.name == "responding")
    assert merged_label.origin == "collaged"
    assert [w.annotation for w in out_sess.windows] == ["x", "responding", "x", "responding"]


def test_collage_keeps_self_loops():
    sess = make_session(["a", "b"], ["e"])
    machine = fsm.build_fsm(sess)
    collage = fsm.CollageMap({"ab": frozenset({"a", "b"})})
    out, _ = fsm.apply_collage(machine, sess, collage)
    assert out.has_edge("ab", "e", "ab")  # the merge-produced self loop survives


def test_collage_missing_label_rejected():
    sess = make_session(["a", "b"], ["e"])
    machine = fsm.build_fsm(sess)
    with pytest.raises(IncompleteCollage) as err:
        fsm.apply_collage(machine, sess, fsm.CollageMap({"a": frozenset({"a"})}))
    assert err.value.missing == ["b"]


def test_collage_unknown_label_rejected():
    sess = make_session(["a", "b"], ["e"])
    machine = fsm.build_fsm(sess)
    collage = fsm.CollageMap({"a": frozenset({"a"}), "b": frozenset({"b", "ghost"})})
    with pytest.raises(UnknownLabel):
        fsm.apply_collage(machine, sess, collage)


def test_collage_groups_must_be_disjoint():
    with pytest.raises(SchemaViolation):
        fsm.CollageMap({"g1": frozenset({"a", "b"}), "g2": frozenset({"b"})})


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

def test_export_import_round_trip():
    sess = make_session(["a", "b", "c", "a"], ["e1", "e2", "e3"])
    machine = fsm.build_fsm(sess)
    assert fsm.import_fsm(fsm.export_fsm(machine)) == machine


def test_import_unknown_schema():
    text = fsm.export_fsm(fsm.build_fsm(make_session(["a", "b"], ["e"]))).replace(
        '"schema": 1', '"schema": 9'
    )
    with pytest.raises(SchemaViolation):
        fsm.import_fsm(text)


def test_import_empty_states_rejected():
    with pytest.raises(SchemaViolation):
        fsm.import_fsm('{"schema": 1, "states": [], "transitions": [], "initial": null}')
