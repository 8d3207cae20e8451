"""Nine-statistic feature extraction per modality, concatenation, scaling.

Feature order is fixed and load-bearing (golden files, classifier
centroids): MAV, VAR, RMS, Std, MAD, Skewness, Kurtosis, IQR, Energy,
repeated for the power, network, and emanation blocks. Conventions are
pinned as population (biased) moments, Pearson kurtosis, and type-7
linear-interpolated quantiles.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import AllModalitiesEmpty, EmptyInput, TooFewVectors
from .traces import MultiModalWindow

FEATURE_NAMES = ("mav", "var", "rms", "std", "mad", "skewness", "kurtosis", "iqr", "energy")
MODALITIES = ("power", "network", "emanation")
N_FEATURES = len(FEATURE_NAMES) * len(MODALITIES)

COLUMN_NAMES = tuple(f"{mod}_{feat}" for mod in MODALITIES for feat in FEATURE_NAMES)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    window_id: int
    values: np.ndarray  # length 27, fixed order


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-dimension standardizer; zero-variance dimensions map to 0."""

    means: np.ndarray
    stds: np.ndarray
    zero_std: np.ndarray  # bool mask of degenerate dimensions

    def to_doc(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "zero_std": [bool(z) for z in self.zero_std],
        }

    @staticmethod
    def from_doc(doc: dict) -> "Scaler":
        return Scaler(
            means=np.asarray(doc["means"], dtype=float),
            stds=np.asarray(doc["stds"], dtype=float),
            zero_std=np.asarray(doc["zero_std"], dtype=bool),
        )


def stat_features(series) -> np.ndarray:
    """The nine summary statistics of one series, in FEATURE_NAMES order."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("stat_features of empty series")
    mean = x.mean()
    centered = x - mean
    m2 = float(np.mean(centered**2))
    mav = float(np.mean(np.abs(x)))
    energy = float(np.mean(x**2))
    rms = float(np.sqrt(energy))
    std = float(np.sqrt(m2))
    med = float(np.median(x))
    mad = float(np.median(np.abs(x - med)))
    if std == 0.0:
        skew = 0.0
        kurt = 0.0  # degenerate rule: avoid NaN propagation downstream
    else:
        z = centered / std  # m3/m2^1.5 and m4/m2^2 without underflow
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4))
    q1, q3 = np.quantile(x, [0.25, 0.75])
    return np.array([mav, m2, rms, std, mad, skew, kurt, float(q3 - q1), energy])


def window_features(window: MultiModalWindow) -> FeatureVector:
    """27-dim concatenation over (power, network, emanation).

    An empty modality contributes a zero block: some devices legitimately
    emit nothing on a channel (e.g. no network traffic at all).
    """
    blocks = []
    any_filled = False
    for series in (window.power, window.network, window.spectrum_psd):
        if len(series) == 0:
            blocks.append(np.zeros(len(FEATURE_NAMES)))
        else:
            blocks.append(stat_features(series))
            any_filled = True
    if not any_filled:
        raise AllModalitiesEmpty(f"window {window.window_id} has no data in any modality")
    return FeatureVector(window_id=window.window_id, values=np.concatenate(blocks))


def feature_matrix(windows) -> tuple[list[int], np.ndarray]:
    vecs = [window_features(w) for w in windows]
    return [v.window_id for v in vecs], np.array([v.values for v in vecs])


def fit_standardize(vectors) -> tuple[Scaler, np.ndarray]:
    """Fit a per-dimension standardizer and return the standardized matrix.

    Dimensions whose spread is at rounding-noise level relative to their
    magnitude are flagged degenerate and map to 0; dividing by such a std
    would amplify float cancellation into huge fake distances.
    """
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    if mat.shape[0] < 2:
        raise TooFewVectors(f"standardization needs >= 2 vectors, got {mat.shape[0]}")
    means = mat.mean(axis=0)
    stds = mat.std(axis=0)
    scale = np.maximum(1.0, np.max(np.abs(mat), axis=0))
    zero = stds <= 1e-9 * scale
    scaler = Scaler(means=means, stds=stds, zero_std=zero)
    return scaler, apply_scaler(scaler, mat)


def apply_scaler(scaler: Scaler, matrix) -> np.ndarray:
    mat = np.asarray(matrix, dtype=float)
    single = mat.ndim == 1
    if single:
        mat = mat.reshape(1, -1)
    safe = np.where(scaler.zero_std, 1.0, scaler.stds)
    out = (mat - scaler.means) / safe
    out[:, scaler.zero_std] = 0.0
    return out[0] if single else out


def modality_columns(modalities) -> list[int]:
    """Column indices of the requested modality blocks."""
    cols = []
    for mod in modalities:
        if mod not in MODALITIES:
            raise EmptyInput(f"unknown modality {mod!r}")
        base = MODALITIES.index(mod) * len(FEATURE_NAMES)
        cols.extend(range(base, base + len(FEATURE_NAMES)))
    return cols


# --------------------------------------------------------------------------
# CSV export: one row per window, window_id + 27 named columns
# --------------------------------------------------------------------------

def features_to_csv(window_ids, matrix) -> str:
    mat = np.asarray(matrix, dtype=float)
    buf = io.StringIO()
    buf.write("window_id," + ",".join(COLUMN_NAMES) + "\n")
    for wid, row in zip(window_ids, mat):
        buf.write(str(int(wid)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def features_from_csv(text: str) -> tuple[list[int], np.ndarray]:
    lines = [ln for ln in text.split("\n") if ln]
    ids, rows = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        ids.append(int(parts[0]))
        rows.append([float(v) for v in parts[1:]])
    return ids, np.asarray(rows, dtype=float)
