"""Train a state classifier from annotated windows and verify live sessions.

The classifier is nearest-centroid in the standardized 27-dim feature
space (t-SNE coordinates cannot host unseen points). Predictions farther
than the unknown threshold from every centroid are flagged UNKNOWN, which
is how abnormal states surface during verification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .clustering import EvalReport, evaluate
from .errors import SchemaViolation, TooFewPerState
from .features import Scaler, apply_scaler, fit_standardize, window_features
from .fsm import Fsm
from .traces import MultiModalWindow, Session

UNKNOWN = "UNKNOWN"
CLASSIFIER_SCHEMA = 1


@dataclass(frozen=True, eq=False)
class StateClassifier:
    scaler: Scaler
    centroids: dict[str, np.ndarray]  # label name -> 27-dim standardized centroid
    unknown_threshold: float

    def to_json(self) -> str:
        doc = {
            "schema": CLASSIFIER_SCHEMA,
            "scaler": self.scaler.to_doc(),
            "centroids": {k: v.tolist() for k, v in sorted(self.centroids.items())},
            "unknown_threshold": self.unknown_threshold,
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @staticmethod
    def from_json(text: str | bytes) -> "StateClassifier":
        doc = json.loads(text)
        if doc.get("schema") != CLASSIFIER_SCHEMA:
            raise SchemaViolation(f"unsupported classifier schema {doc.get('schema')!r}")
        return StateClassifier(
            scaler=Scaler.from_doc(doc["scaler"]),
            centroids={k: np.asarray(v, dtype=float) for k, v in doc["centroids"].items()},
            unknown_threshold=float(doc["unknown_threshold"]),
        )


@dataclass(frozen=True)
class VerificationStep:
    window_id: int
    predicted: str  # label name or UNKNOWN
    distance: float
    transition_valid: bool | None  # None when no event preceded this window
    event_kind: str | None = None

    def to_doc(self) -> dict:
        return {
            "window_id": self.window_id,
            "predicted": self.predicted,
            "distance": self.distance,
            "transition_valid": self.transition_valid,
            "event_kind": self.event_kind,
        }


def train(
    feature_vectors, labels, split_seed: int = 0, holdout_fraction: float = 0.2
) -> tuple[StateClassifier, EvalReport]:
    """Stratified 80/20 split, scaler fit on the training side only.

    The unknown threshold is 3x the largest per-state mean distance from a
    training vector to its own centroid (floored to stay positive for
    noiseless data).
    """
    mat = np.asarray(feature_vectors, dtype=float)
    names = [str(lab) for lab in labels]
    if mat.shape[0] != len(names):
        raise SchemaViolation(f"{mat.shape[0]} vectors vs {len(names)} labels")
    by_label: dict[str, list[int]] = {}
    for i, name in enumerate(names):
        by_label.setdefault(name, []).append(i)
    for name, idx in by_label.items():
        if len(idx) < 2:
            raise TooFewPerState(name, len(idx))

    rng = np.random.default_rng(split_seed)
    train_idx, test_idx = [], []
    for name in sorted(by_label):
        # canonical content order first, so the split (and therefore the
        # classifier) does not depend on input row order
        idx = np.array(sorted(by_label[name], key=lambda i: tuple(mat[i])))
        rng.shuffle(idx)
        n_test = max(1, int(round(holdout_fraction * len(idx))))
        test_idx.extend(idx[:n_test].tolist())
        train_idx.extend(idx[n_test:].tolist())
    # reduce in content order so float sums are bit-identical however the
    # caller ordered the rows
    train_idx.sort(key=lambda i: tuple(mat[i]))
    test_idx.sort(key=lambda i: tuple(mat[i]))

    scaler, train_std = fit_standardize(mat[train_idx])
    train_names = [names[i] for i in train_idx]
    centroids: dict[str, np.ndarray] = {}
    spreads = []
    for name in sorted(by_label):
        rows = train_std[[i for i, nm in enumerate(train_names) if nm == name]]
        centroids[name] = rows.mean(axis=0)
        spreads.append(float(np.mean(np.linalg.norm(rows - centroids[name], axis=1))))
    threshold = max(3.0 * max(spreads), 1e-9)
    clf = StateClassifier(scaler=scaler, centroids=centroids, unknown_threshold=threshold)

    preds = [predict_vector(clf, mat[i])[0] for i in test_idx]
    truth = [names[i] for i in test_idx]
    return clf, evaluate(_as_class_ids(preds, clf), truth)


def _as_class_ids(pred_names, clf: StateClassifier):
    """Map predicted names to stable integer ids so evaluate() can align them."""
    order = {name: i for i, name in enumerate(sorted(clf.centroids))}
    order[UNKNOWN] = -1  # treated as noise / always wrong
    return [order[p] for p in pred_names]


def predict_vector(clf: StateClassifier, values) -> tuple[str, float]:
    vec = apply_scaler(clf.scaler, np.asarray(values, dtype=float))
    best_name, best_dist = UNKNOWN, np.inf
    for name in sorted(clf.centroids):  # lexicographic tie-break
        dist = float(np.linalg.norm(vec - clf.centroids[name]))
        if dist < best_dist:
            best_name, best_dist = name, dist
    if best_dist > clf.unknown_threshold:
        return UNKNOWN, best_dist
    return best_name, best_dist


def predict(clf: StateClassifier, window: MultiModalWindow) -> tuple[str, float]:
    return predict_vector(clf, window_features(window).values)


def stepwise_verify(clf: StateClassifier, fsm: Fsm, session: Session) -> Iterator[VerificationStep]:
    """Predict every window in order; where an event separates two windows,
    check that the predicted pair forms a known FSM edge. Yields steps
    incrementally so callers can stream them."""
    event_into = {ev.to_window: ev for ev in session.events}
    preds: dict[int, str] = {}
    for w in session.windows:
        pred, dist = predict(clf, w)
        preds[w.window_id] = pred
        ev = event_into.get(w.window_id)
        valid = None
        kind = None
        if ev is not None and ev.from_window in preds:
            kind = ev.kind
            valid = fsm.has_edge(preds[ev.from_window], ev.kind, pred)
        yield VerificationStep(
            window_id=w.window_id,
            predicted=pred,
            distance=dist,
            transition_valid=valid,
            event_kind=kind,
        )
