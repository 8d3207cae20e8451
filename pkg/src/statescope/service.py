"""Shared session operations behind the HTTP API and the batch CLI.

Everything here works in terms of the session store plus plain documents
(dicts ready for JSON), so the two frontends stay thin.
"""

from __future__ import annotations

import json
from typing import Iterator

from . import classify, fsm, pipeline
from .errors import MissingArtifact, SessionNotFound, StaleArtifact, StatescopeError
from .features import feature_matrix
from .pipeline import PipelineConfig
from .store import SessionStore
from .traces import (
    Session,
    annotate_windows,
    events_for_boundaries,
    parse_iq_trace,
    parse_network_trace,
    parse_power_trace,
    parse_timed_spectra,
    window_session,
)

CONFIG_FILE = "pipeline_config.json"


def store_config(store: SessionStore, session_id: str, config: PipelineConfig) -> None:
    if not store.exists(session_id):
        raise SessionNotFound(f"no session {session_id!r}")
    store.save_raw(session_id, CONFIG_FILE, config.canonical_json().encode())


def load_config(store: SessionStore, session_id: str) -> PipelineConfig:
    if store.has_raw(session_id, CONFIG_FILE):
        return PipelineConfig.from_doc(json.loads(store.load_raw(session_id, CONFIG_FILE)))
    return PipelineConfig()


def rebuild_windows(store: SessionStore, session_id: str, window_ms: int) -> Session:
    """(Re)window the session from its raw trace files and staged events."""
    if not store.exists(session_id):
        raise SessionNotFound(f"no session {session_id!r}")
    old = store.load_session(session_id)
    power = (
        parse_power_trace(store.load_raw(session_id, "power.csv"))
        if store.has_raw(session_id, "power.csv")
        else None
    )
    network = (
        parse_network_trace(store.load_raw(session_id, "network.csv"))
        if store.has_raw(session_id, "network.csv")
        else None
    )
    emanation = None
    unit = "db"
    if store.has_raw(session_id, "spectra.json"):
        emanation = parse_timed_spectra(store.load_raw(session_id, "spectra.json"))
        unit = emanation.unit
    elif store.has_raw(session_id, "iq_header.json"):
        emanation = parse_iq_trace(
            store.load_raw(session_id, "iq_header.json"),
            store.load_raw(session_id, "iq_payload.f32"),
        )
        unit = "linear"

    staged = store.staged_events(session_id)
    windows = window_session(power, network, emanation, [e["t_ms"] for e in staged], window_ms)
    events = events_for_boundaries([(e["kind"], e["t_ms"]) for e in staged], windows)
    session = Session(
        session_id=session_id,
        windows=tuple(windows),
        events=events,
        labels=old.labels,
        spectrum_unit=unit,
    )
    store.save_session(session)
    return session


def annotate(store: SessionStore, session_id: str, name: str, window_ids: list[int],
             origin: str = "human") -> Session:
    session = store.load_session(session_id)
    session = annotate_windows(session, name, window_ids, origin=origin)
    store.save_session(session)
    return session


def embedding_view(store: SessionStore, session_id: str) -> dict:
    """Scatter-ready join of embedding coordinates, clusters, annotations."""
    from .embedding import embedding_from_csv

    session = store.load_session(session_id)
    config = load_config(store, session_id)
    hashes = pipeline.stage_hashes(store, session_id, config)
    ids, pts = embedding_from_csv(
        store.load_artifact(session_id, "embedding.csv", hashes["embedding.csv"]).decode()
    )
    clusters = json.loads(store.load_artifact(session_id, "clusters.json"))
    by_id = dict(zip(clusters["window_ids"], clusters["labels"]))
    annotations = {w.window_id: w.annotation for w in session.windows}
    return {
        "points": [
            {
                "window_id": wid,
                "x": float(x),
                "y": float(y),
                "cluster": by_id.get(wid),
                "annotation": annotations.get(wid),
            }
            for wid, (x, y) in zip(ids, pts)
        ]
    }


def correlation_doc(store: SessionStore, session_id: str) -> dict:
    """Correlation matrix; recomputed from fresh clusters when annotations moved.

    The matrix is a cheap projection of (clusters, annotations), so unlike the
    pipeline artifacts it self-refreshes instead of reporting staleness, as
    long as the cluster artifact itself is still valid for the window data.
    """
    config = load_config(store, session_id)
    hashes = pipeline.stage_hashes(store, session_id, config)
    try:
        return json.loads(
            store.load_artifact(session_id, "correlation.json", hashes["correlation.json"])
        )
    except StaleArtifact:
        store.load_artifact(session_id, "clusters.json", hashes["clusters.json"])  # must be fresh
        with store.lock(session_id):
            session = store.load_session(session_id)
            doc = _refresh_correlation(store, session_id, session, config)
        if doc is None:
            raise
        return doc


def fsm_doc(store: SessionStore, session_id: str) -> dict:
    """Current FSM; rebuilt from annotations when missing or stale."""
    config = load_config(store, session_id)
    hashes = pipeline.stage_hashes(store, session_id, config)
    try:
        return json.loads(store.load_artifact(session_id, "fsm.json", hashes["fsm.json"]))
    except (MissingArtifact, StaleArtifact):
        with store.lock(session_id):
            session = store.load_session(session_id)
            machine = fsm.build_fsm(session)
            text = fsm.export_fsm(machine)
            store.save_artifact(session_id, "fsm.json", text, hashes["fsm.json"])
        return json.loads(text)


def apply_collage(store: SessionStore, session_id: str, groups: dict) -> dict:
    """Collage states, rewrite the session, refresh dependent artifacts."""
    collage = fsm.CollageMap.from_doc(groups)
    config = load_config(store, session_id)
    with store.lock(session_id):
        session = store.load_session(session_id)
        try:
            machine = fsm.import_fsm(store.load_artifact(session_id, "fsm.json"))
        except MissingArtifact:
            machine = fsm.build_fsm(session)
        machine, session = fsm.apply_collage(machine, session, collage)
        store.save_session(session)
        hashes = pipeline.stage_hashes(store, session_id, config)
        text = fsm.export_fsm(machine)
        store.save_artifact(session_id, "fsm.json", text, hashes["fsm.json"])
        correlation = _refresh_correlation(store, session_id, session, config)
    out = {"fsm": json.loads(text)}
    if correlation is not None:
        out["correlation"] = correlation
    return out


def _refresh_correlation(store, session_id, session, config) -> dict | None:
    try:
        clusters = json.loads(store.load_artifact(session_id, "clusters.json"))
    except MissingArtifact:
        return None
    by_id = dict(zip(clusters["window_ids"], clusters["labels"]))
    pairs = [
        (w.annotation, by_id[w.window_id])
        for w in session.windows
        if w.annotation is not None and w.window_id in by_id
    ]
    if not pairs:
        return None
    matrix = fsm.correlation_matrix([a for a, _ in pairs], [c for _, c in pairs])
    hashes = pipeline.stage_hashes(store, session_id, config)
    doc = matrix.to_doc()
    store.save_artifact(
        session_id,
        "correlation.json",
        json.dumps(doc, sort_keys=True, indent=1) + "\n",
        hashes["correlation.json"],
    )
    return doc


def train_classifier(store: SessionStore, session_id: str, split_seed: int = 0) -> dict:
    config = load_config(store, session_id)
    with store.lock(session_id):
        session = store.load_session(session_id)
        windows = pipeline.reduced_windows(session, config)
        labeled = [(w, w.annotation) for w in windows if w.annotation is not None]
        if not labeled:
            raise StatescopeError("no annotated windows to train on", stage="classifier")
        _, mat = feature_matrix([w for w, _ in labeled])
        clf, report = classify.train(mat, [a for _, a in labeled], split_seed=split_seed)
        ann_key = pipeline._annotations_key(session)
        clf_hash = f"{ann_key}:{split_seed}"
        store.save_artifact(session_id, "classifier.json", clf.to_json(), clf_hash)
        store.save_artifact(session_id, "holdout_eval.json", report.to_json(), clf_hash)
    return report.to_doc()


def verification_steps(
    store: SessionStore, session_id: str, replay: str | Session | None = None
) -> Iterator[dict]:
    """Step documents for a replay session (defaults to self-replay).

    Artifacts load eagerly so missing-classifier errors surface before any
    output is produced; the steps themselves stream lazily.
    """
    clf = classify.StateClassifier.from_json(store.load_artifact(session_id, "classifier.json"))
    machine = fsm.import_fsm(store.load_artifact(session_id, "fsm.json"))
    if isinstance(replay, Session):
        replay_session = replay
    else:
        replay_session = store.load_session(replay or session_id)
    config = load_config(store, session_id)
    windows = pipeline.reduced_windows(replay_session, config)
    replay_session = Session(
        session_id=replay_session.session_id,
        windows=tuple(windows),
        events=replay_session.events,
        labels=replay_session.labels,
        spectrum_unit=replay_session.spectrum_unit,
    )

    def steps() -> Iterator[dict]:
        for step in classify.stepwise_verify(clf, machine, replay_session):
            yield step.to_doc()

    return steps()
