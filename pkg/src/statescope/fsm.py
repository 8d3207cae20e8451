"""Finite state machine over annotated sessions: build, merge, collage.

States come from window annotations; edges come from interaction events.
Merging unions states reached via the same event kind (the modeling-stage
hint); collaging applies a human-chosen partition of the state set. The
correlation matrix relates annotations to sensing clusters: each row gives
the fraction of an annotation's windows falling into each cluster.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    IncompleteCollage,
    LengthMismatch,
    SchemaViolation,
    UnannotatedWindow,
    UnknownLabel,
)
from .traces import Session, StateLabel

FSM_SCHEMA = 1
NOISE_CLUSTER = -1


@dataclass(frozen=True)
class Transition:
    source: StateLabel
    event: str
    target: StateLabel


@dataclass(frozen=True)
class Fsm:
    states: frozenset[StateLabel]
    transitions: frozenset[Transition]
    initial: StateLabel | None

    def __post_init__(self):
        for tr in self.transitions:
            if tr.source not in self.states or tr.target not in self.states:
                raise SchemaViolation(f"transition {tr} references unknown state")
        if self.initial is not None and self.initial not in self.states:
            raise SchemaViolation(f"initial state {self.initial} not in state set")

    def state_names(self) -> set[str]:
        return {s.name for s in self.states}

    def has_edge(self, source: str, event: str, target: str) -> bool:
        return any(
            tr.source.name == source and tr.event == event and tr.target.name == target
            for tr in self.transitions
        )


@dataclass(frozen=True)
class CollageMap:
    """Named partition of the annotated state set."""

    groups: dict[str, frozenset[str]]

    def __post_init__(self):
        seen: set[str] = set()
        for name, members in self.groups.items():
            if not name:
                raise SchemaViolation("collage group name must be non-empty")
            overlap = seen & set(members)
            if overlap:
                raise SchemaViolation(f"collage groups overlap on {sorted(overlap)}")
            seen |= set(members)

    @staticmethod
    def from_doc(doc: dict) -> "CollageMap":
        try:
            return CollageMap({str(k): frozenset(str(m) for m in v) for k, v in doc.items()})
        except (TypeError, AttributeError) as exc:
            raise SchemaViolation(f"malformed collage document: {exc}") from None

    def to_doc(self) -> dict:
        return {k: sorted(v) for k, v in sorted(self.groups.items())}


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    rows: tuple[str, ...]  # annotation names
    cols: tuple[int, ...]  # cluster ids, noise (-1) included when present
    cells: np.ndarray  # fractions in [0,1]; each row sums to 1

    def to_doc(self) -> dict:
        return {"rows": list(self.rows), "cols": list(self.cols), "cells": self.cells.tolist()}


def build_fsm(session: Session) -> Fsm:
    """One state per distinct annotation, one edge per interaction event."""
    label_map = session.label_map()
    annotations: dict[int, StateLabel] = {}
    for w in session.windows:
        if w.annotation is None:
            raise UnannotatedWindow(w.window_id)
        annotations[w.window_id] = label_map[w.annotation]
    states = frozenset(annotations.values())
    transitions = frozenset(
        Transition(annotations[ev.from_window], ev.kind, annotations[ev.to_window])
        for ev in session.events
    )
    initial = annotations[session.windows[0].window_id] if session.windows else None
    return Fsm(states=states, transitions=transitions, initial=initial)


class _UnionFind:
    def __init__(self, items):
        self.parent = {it: it for it in items}

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative: lexicographically smallest name
            keep, drop = sorted((ra, rb))
            self.parent[drop] = keep


def merge_by_transition_event(fsm: Fsm, session: Session) -> tuple[Fsm, dict[str, StateLabel]]:
    """Union states reached via the same event kind (transitive closure).

    Returns the merged FSM and the relabel map old-name -> new label; apply
    it to the session with :func:`relabel_session`. Merged states get
    origin "merged"; untouched states keep their label.
    """
    uf = _UnionFind([s.name for s in fsm.states])
    by_kind: dict[str, list[str]] = {}
    for tr in fsm.transitions:
        by_kind.setdefault(tr.event, []).append(tr.target.name)
    for targets in by_kind.values():
        for other in targets[1:]:
            uf.union(targets[0], other)

    groups: dict[str, list[str]] = {}
    for s in sorted(fsm.states, key=lambda lab: lab.name):
        groups.setdefault(uf.find(s.name), []).append(s.name)

    old_by_name = {s.name: s for s in fsm.states}
    relabel: dict[str, StateLabel] = {}
    for rep, members in groups.items():
        new = old_by_name[rep] if len(members) == 1 else StateLabel(rep, "merged")
        for name in members:
            relabel[name] = new
    return _rewrite_fsm(fsm, relabel), relabel


def _rewrite_fsm(fsm: Fsm, relabel: dict[str, StateLabel]) -> Fsm:
    states = frozenset(relabel[s.name] for s in fsm.states)
    transitions = frozenset(
        Transition(relabel[tr.source.name], tr.event, relabel[tr.target.name])
        for tr in fsm.transitions
    )
    initial = relabel[fsm.initial.name] if fsm.initial is not None else None
    return Fsm(states=states, transitions=transitions, initial=initial)


def relabel_session(session: Session, relabel: dict[str, StateLabel]) -> Session:
    """Rewrite window annotations and the label set through a relabel map."""
    windows = tuple(
        replace(w, annotation=relabel[w.annotation].name)
        if w.annotation in relabel
        else w
        for w in session.windows
    )
    kept = [lab for lab in session.labels if lab.name not in relabel]
    new_labels = []
    for lab in relabel.values():
        if lab not in new_labels:
            new_labels.append(lab)
    labels = tuple(kept) + tuple(sorted(new_labels, key=lambda lab: lab.name))
    return replace(session, windows=windows, labels=labels)


def correlation_matrix(annotations, cluster_labels) -> CorrelationMatrix:
    """Fraction of each annotation's windows landing in each cluster."""
    ann = list(annotations)
    clu = [int(c) for c in cluster_labels]
    if len(ann) != len(clu):
        raise LengthMismatch(f"{len(ann)} annotations vs {len(clu)} cluster labels")
    rows = tuple(sorted(set(ann)))
    cols = tuple(sorted(set(clu), key=lambda c: (c == NOISE_CLUSTER, c)))
    counts = np.zeros((len(rows), len(cols)))
    r_idx = {r: i for i, r in enumerate(rows)}
    c_idx = {c: i for i, c in enumerate(cols)}
    for a, c in zip(ann, clu):
        counts[r_idx[a], c_idx[c]] += 1
    cells = counts / counts.sum(axis=1, keepdims=True)
    return CorrelationMatrix(rows=rows, cols=cols, cells=cells)


def apply_collage(fsm: Fsm, session: Session, collage: CollageMap) -> tuple[Fsm, Session]:
    """Union states per collage group; self-loops produced by the merge are
    kept (they record that the event did not change the collaged state)."""
    state_names = fsm.state_names()
    mapped = set().union(*collage.groups.values()) if collage.groups else set()
    unknown = mapped - state_names
    if unknown:
        raise UnknownLabel(sorted(unknown))
    missing = state_names - mapped
    if missing:
        raise IncompleteCollage(sorted(missing))

    old_by_name = {s.name: s for s in fsm.states}
    relabel: dict[str, StateLabel] = {}
    for group_name, members in collage.groups.items():
        if len(members) == 1 and group_name in members:
            only = next(iter(members))
            relabel[only] = old_by_name[only]  # identity group
            continue
        new = StateLabel(group_name, "collaged")
        for name in members:
            relabel[name] = new
    return _rewrite_fsm(fsm, relabel), relabel_session(session, relabel)


# --------------------------------------------------------------------------
# FSM JSON (schema 1)
# --------------------------------------------------------------------------

def export_fsm(fsm: Fsm) -> str:
    doc = {
        "schema": FSM_SCHEMA,
        "states": [
            {"name": s.name, "origin": s.origin} for s in sorted(fsm.states, key=lambda s: s.name)
        ],
        "transitions": sorted(
            (
                {"from": tr.source.name, "event": tr.event, "to": tr.target.name}
                for tr in fsm.transitions
            ),
            key=lambda d: (d["from"], d["event"], d["to"]),
        ),
        "initial": fsm.initial.name if fsm.initial else None,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def import_fsm(text: str | bytes) -> Fsm:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"FSM document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != FSM_SCHEMA:
        raise SchemaViolation(f"unsupported FSM schema {doc.get('schema')!r}")
    try:
        states = {s["name"]: StateLabel(s["name"], s["origin"]) for s in doc["states"]}
        if not states:
            raise SchemaViolation("FSM must declare at least one state")
        transitions = frozenset(
            Transition(states[t["from"]], t["event"], states[t["to"]])
            for t in doc.get("transitions", [])
        )
        initial = states[doc["initial"]] if doc.get("initial") else None
    except KeyError as exc:
        raise SchemaViolation(f"malformed FSM document: missing {exc}") from None
    return Fsm(states=frozenset(states.values()), transitions=transitions, initial=initial)
