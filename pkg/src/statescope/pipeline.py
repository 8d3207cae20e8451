"""Pipeline orchestration: features -> standardize -> embed -> cluster ->
correlation (+ state machine when the session is fully annotated).

Artifacts are JSON/CSV files persisted through the session store; each
stage records a hash of its actual inputs, so identical session + config +
seed reruns produce byte-identical files and stale artifacts are detected
by hash mismatch rather than timestamps.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import clustering, dsp, embedding, features, fsm
from .errors import StatescopeError, TooFewPoints
from .store import SessionStore, sha256_hex
from .traces import Session

ALGORITHMS = ("kmeans", "dbscan", "gmm")
EMBED_MODES = ("tsne", "raw")
EMANATION_MODES = ("raw", "peaks")


@dataclass(frozen=True)
class PipelineConfig:
    algorithm: str = "dbscan"
    embed: str = "tsne"
    seed: int = 0
    k: int | None = None  # kmeans/gmm; None = take DBSCAN's discovered count
    min_pts: int = 4
    eps: float | None = None  # None = auto elbow
    perplexity: float = 30.0
    n_iter: int = 1000
    modalities: tuple[str, ...] = features.MODALITIES
    emanation: str = "peaks"  # reduce spectra to PSD at reference peak bins;
    # "raw" summarizes the whole spectrum instead
    merge_by_event: bool = False
    threshold_k: float = 6.0
    min_separation_bins: int = 3

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise StatescopeError(f"unknown algorithm {self.algorithm!r}", stage="config")
        if self.embed not in EMBED_MODES:
            raise StatescopeError(f"unknown embed mode {self.embed!r}", stage="config")
        if self.emanation not in EMANATION_MODES:
            raise StatescopeError(f"unknown emanation mode {self.emanation!r}", stage="config")
        for mod in self.modalities:
            if mod not in features.MODALITIES:
                raise StatescopeError(f"unknown modality {mod!r}", stage="config")

    def to_doc(self) -> dict:
        doc = asdict(self)
        doc["modalities"] = list(self.modalities)
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "PipelineConfig":
        doc = dict(doc)
        if "modalities" in doc:
            doc["modalities"] = tuple(doc["modalities"])
        return PipelineConfig(**doc)

    def canonical_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True)


def _stage(name: str):
    """Re-raise module errors with the pipeline stage attributed."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if isinstance(exc, StatescopeError):
                exc.stage = name
            return False

    return _Ctx()


def _windows_key(session: Session) -> str:
    doc = [
        [w.window_id, w.t_start_ms, w.t_end_ms, list(w.power), list(w.network), list(w.spectrum_psd)]
        for w in session.windows
    ]
    return sha256_hex(json.dumps(doc))


def _annotations_key(session: Session) -> str:
    doc = [[w.window_id, w.annotation] for w in session.windows]
    doc.append([[e.event_id, e.kind, e.from_window, e.to_window] for e in session.events])
    return sha256_hex(json.dumps(doc))


def reduced_windows(session: Session, config: PipelineConfig):
    """Optionally replace each window's spectrum by PSD at reference peaks."""
    windows = session.windows
    if config.emanation != "peaks":
        return windows
    spectra = [w.spectrum_psd for w in windows if len(w.spectrum_psd)]
    if not spectra:
        return windows
    lengths = {len(s) for s in spectra}
    if len(lengths) != 1:
        raise StatescopeError("peak reduction needs equal-length spectra across windows")
    calib = dsp.pooled_calibration_psd(spectra)
    peaks = dsp.detect_peaks(
        calib, min_separation_bins=config.min_separation_bins, threshold_k=config.threshold_k
    )
    if not peaks.peaks:
        return windows
    rows = dsp.emanation_features([np.asarray(w.spectrum_psd, dtype=float) for w in windows], peaks)
    return tuple(
        replace(w, spectrum_psd=tuple(float(v) for v in row)) if len(w.spectrum_psd) else w
        for w, row in zip(windows, rows)
    )


def run_pipeline(store: SessionStore, session_id: str, config: PipelineConfig) -> dict:
    """Execute all stages and persist artifacts; returns the artifact manifest."""
    with store.lock(session_id):
        session = store.load_session(session_id)
        annotated = [w for w in session.windows if w.annotation is not None]
        if len(annotated) < 4:
            raise TooFewPoints(
                f"pipeline needs >= 4 annotated windows, session has {len(annotated)}",
                stage="pipeline",
            )
        cfg_key = sha256_hex(config.canonical_json())
        windows_key = _windows_key(session)
        ann_key = _annotations_key(session)

        # ---- features ----------------------------------------------------
        with _stage("features"):
            feat_hash = sha256_hex(windows_key + cfg_key + "features")
            window_list = reduced_windows(session, config)
            ids, mat = features.feature_matrix(window_list)
            store.save_artifact(
                session_id, "features.csv", features.features_to_csv(ids, mat), feat_hash
            )

        # ---- standardize + embed -----------------------------------------
        cols = features.modality_columns(config.modalities)
        with _stage("standardize"):
            scaler, std = features.fit_standardize(np.ascontiguousarray(mat[:, cols]))
        embed_hash = sha256_hex(feat_hash + cfg_key + "embedding")
        if config.embed == "tsne":
            with _stage("embedding"):
                emb = embedding.tsne(
                    std,
                    embedding.TsneConfig(
                        perplexity=config.perplexity, n_iter=config.n_iter, seed=config.seed
                    ),
                )
                store.save_artifact(
                    session_id,
                    "embedding.csv",
                    embedding.embedding_to_csv(ids, emb),
                    embed_hash,
                    meta={"kl_initial": emb.kl_initial, "kl_final": emb.kl_final},
                )
            cluster_input = emb.points
        else:
            cluster_input = std

        # ---- cluster -------------------------------------------------------
        with _stage("cluster"):
            clusters_hash = sha256_hex(embed_hash + cfg_key + "clusters")
            assignment, params = _cluster(cluster_input, config)
            doc = {
                "algorithm": assignment.algorithm,
                "k": assignment.k,
                "labels": assignment.labels.tolist(),
                "window_ids": ids,
                "quality": None if np.isnan(assignment.quality) else assignment.quality,
                "params": params,
            }
            store.save_artifact(
                session_id,
                "clusters.json",
                json.dumps(doc, sort_keys=True, indent=1) + "\n",
                clusters_hash,
            )

        # ---- state machine (requires a fully annotated session) ------------
        # runs before correlation: merging rewrites annotations and the
        # correlation matrix must reflect the merged labels
        if all(w.annotation is not None for w in session.windows):
            with _stage("fsm"):
                machine = fsm.build_fsm(session)
                if config.merge_by_event:
                    machine, relabel = fsm.merge_by_transition_event(machine, session)
                    session = fsm.relabel_session(session, relabel)
                    store.save_session(session)
                    ann_key = _annotations_key(session)
                fsm_hash = sha256_hex(ann_key + cfg_key + "fsm")
                store.save_artifact(session_id, "fsm.json", fsm.export_fsm(machine), fsm_hash)

        # ---- correlation ---------------------------------------------------
        with _stage("correlation"):
            corr_hash = sha256_hex(clusters_hash + ann_key + "correlation")
            by_id = dict(zip(ids, assignment.labels.tolist()))
            pairs = [(w.annotation, by_id[w.window_id]) for w in session.windows if w.annotation]
            matrix = fsm.correlation_matrix([a for a, _ in pairs], [c for _, c in pairs])
            store.save_artifact(
                session_id,
                "correlation.json",
                json.dumps(matrix.to_doc(), sort_keys=True, indent=1) + "\n",
                corr_hash,
            )

        return store.manifest(session_id)


def _cluster(points: np.ndarray, config: PipelineConfig):
    if config.algorithm == "dbscan":
        eps = config.eps if config.eps is not None else clustering.auto_eps(points, config.min_pts)
        out = clustering.dbscan(points, eps=eps, min_pts=config.min_pts)
        return out, {"eps": eps, "min_pts": config.min_pts}
    if config.k is not None:
        k = config.k
    else:
        eps = config.eps if config.eps is not None else clustering.auto_eps(points, config.min_pts)
        discovered = clustering.dbscan(points, eps=eps, min_pts=config.min_pts).k
        k = max(discovered, 1)
    if config.algorithm == "kmeans":
        return clustering.kmeans(points, k=k, seed=config.seed), {"k": k, "seed": config.seed}
    result = clustering.gmm(points, k=k, seed=config.seed)
    return result.assignment, {"k": k, "seed": config.seed}


# --------------------------------------------------------------------------
# Derived artifacts used by the service layer
# --------------------------------------------------------------------------

def stage_hashes(store: SessionStore, session_id: str, config: PipelineConfig) -> dict[str, str]:
    session = store.load_session(session_id)
    cfg_key = sha256_hex(config.canonical_json())
    windows_key = _windows_key(session)
    ann_key = _annotations_key(session)
    feat = sha256_hex(windows_key + cfg_key + "features")
    emb = sha256_hex(feat + cfg_key + "embedding")
    clu = sha256_hex(emb + cfg_key + "clusters")
    return {
        "features.csv": feat,
        "embedding.csv": emb,
        "clusters.json": clu,
        "correlation.json": sha256_hex(clu + ann_key + "correlation"),
        "fsm.json": sha256_hex(ann_key + cfg_key + "fsm"),
    }
