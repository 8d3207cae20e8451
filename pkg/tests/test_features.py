"""Feature extraction tests against an independent naive implementation."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from statescope import features
from statescope.errors import AllModalitiesEmpty, EmptyInput, TooFewVectors
from statescope.traces import MultiModalWindow


# ---------------------------------------------------------------------------
# Naive oracle: plain-Python loops, no numpy, own median/quantile.
# ---------------------------------------------------------------------------

def _naive_median(xs):
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    return s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2.0


def _naive_quantile(xs, q):
    # type-7 linear interpolation
    s = sorted(xs)
    h = (len(s) - 1) * q
    lo = int(math.floor(h))
    frac = h - lo
    if lo + 1 >= len(s):
        return s[lo]
    return s[lo] + frac * (s[lo + 1] - s[lo])


def naive_features(xs):
    n = len(xs)
    mean = sum(xs) / n
    mav = sum(abs(v) for v in xs) / n
    m2 = sum((v - mean) ** 2 for v in xs) / n
    m3 = sum((v - mean) ** 3 for v in xs) / n
    m4 = sum((v - mean) ** 4 for v in xs) / n
    energy = sum(v * v for v in xs) / n
    rms = math.sqrt(energy)
    std = math.sqrt(m2)
    med = _naive_median(xs)
    mad = _naive_median([abs(v - med) for v in xs])
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    kurt = m4 / m2**2 if m2 > 0 else 0.0
    iqr = _naive_quantile(xs, 0.75) - _naive_quantile(xs, 0.25)
    return [mav, m2, rms, std, mad, skew, kurt, iqr, energy]


series_strategy = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=50,
)


@given(series_strategy)
@settings(max_examples=100)
def test_matches_naive_oracle(xs):
    assume(len(xs) == 1 or np.std(xs) == 0 or np.std(xs) > 1e-6)
    got = features.stat_features(xs)
    want = naive_features(xs)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)


def test_mav_simple():
    assert features.stat_features([1, -2, 3])[0] == pytest.approx(2.0)


def test_constant_series_degenerates_to_zero_spread():
    out = features.stat_features([5.0, 5.0, 5.0])
    names = dict(zip(features.FEATURE_NAMES, out))
    for key in ("var", "std", "mad", "skewness", "kurtosis", "iqr"):
        assert names[key] == 0.0


def test_symmetric_series_skew_and_kurtosis():
    out = dict(zip(features.FEATURE_NAMES, features.stat_features([1, 2, 3])))
    assert out["skewness"] == pytest.approx(0.0, abs=1e-12)
    assert out["kurtosis"] == pytest.approx(1.5)  # (2/3) / (2/3)^2 * (2/3) by hand


def test_rms_and_energy():
    out = dict(zip(features.FEATURE_NAMES, features.stat_features([3, 4])))
    assert out["energy"] == pytest.approx(12.5)
    assert out["rms"] == pytest.approx(math.sqrt(12.5))


def test_iqr_linear_interpolation():
    out = dict(zip(features.FEATURE_NAMES, features.stat_features([1, 2, 3, 4])))
    assert out["iqr"] == pytest.approx(1.5)  # Q1=1.75, Q3=3.25


def test_mad_resists_outlier():
    out = dict(zip(features.FEATURE_NAMES, features.stat_features([1, 2, 3, 4, 100])))
    assert out["mad"] == pytest.approx(1.0)


def test_empty_series_rejected():
    with pytest.raises(EmptyInput):
        features.stat_features([])


@given(
    st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=3, max_size=30),
    st.floats(min_value=0.1, max_value=10).flatmap(lambda c: st.sampled_from([c, -c])),
)
@settings(max_examples=60)
def test_scale_equivariance(xs, c):
    assume(np.std(xs) > 1e-6)  # cancellation noise swamps skew/kurt below this
    base = features.stat_features(xs)
    scaled = features.stat_features([c * v for v in xs])
    names = dict(zip(features.FEATURE_NAMES, range(9)))
    for key in ("mav", "rms", "std", "mad", "iqr"):
        assert scaled[names[key]] == pytest.approx(abs(c) * base[names[key]], rel=1e-8, abs=1e-9)
    for key in ("var", "energy"):
        assert scaled[names[key]] == pytest.approx(c * c * base[names[key]], rel=1e-8, abs=1e-9)
    assert scaled[names["skewness"]] == pytest.approx(
        math.copysign(1, c) * base[names["skewness"]], rel=1e-6, abs=1e-7
    )
    assert scaled[names["kurtosis"]] == pytest.approx(base[names["kurtosis"]], rel=1e-6, abs=1e-7)


# ---------------------------------------------------------------------------
# window_features
# ---------------------------------------------------------------------------

def _window(power=(), network=(), spectrum=(), wid=0):
    return MultiModalWindow(
        window_id=wid, t_start_ms=0, t_end_ms=100,
        power=tuple(power), network=tuple(network), spectrum_psd=tuple(spectrum),
    )


def test_window_features_zero_blocks_for_missing_modalities():
    vec = features.window_features(_window(power=[1.0, 2.0, 3.0]))
    assert vec.values.shape == (27,)
    assert np.all(vec.values[9:] == 0.0)
    assert vec.values[0] == pytest.approx(2.0)  # power MAV


def test_window_features_all_empty_rejected():
    # constructing an all-empty window is itself invalid, so bypass the
    # constructor check via a stand-in object
    class Bare:
        window_id = 7
        power = ()
        network = ()
        spectrum_psd = ()

    with pytest.raises(AllModalitiesEmpty):
        features.window_features(Bare())


def test_window_features_deterministic_order():
    w = _window(power=[1, 2], network=[3, 4], spectrum=[5, 6])
    a = features.window_features(w).values
    b = features.window_features(w).values
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a[:9], features.stat_features([1, 2]))
    np.testing.assert_allclose(a[9:18], features.stat_features([3, 4]))
    np.testing.assert_allclose(a[18:], features.stat_features([5, 6]))


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------

def test_two_vectors_standardize_to_unit():
    scaler, out = features.fit_standardize(np.array([[0.0, 5.0], [2.0, 5.0]]))
    np.testing.assert_allclose(out[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(out[:, 1], [0.0, 0.0])  # zero-variance dim
    assert scaler.zero_std.tolist() == [False, True]


def test_apply_scaler_reproduces_fit_output():
    rng = np.random.default_rng(3)
    mat = rng.normal(size=(10, 4))
    scaler, out = features.fit_standardize(mat)
    np.testing.assert_allclose(features.apply_scaler(scaler, mat), out)


def test_fit_standardize_needs_two_vectors():
    with pytest.raises(TooFewVectors):
        features.fit_standardize(np.ones((1, 27)))


def test_modality_columns():
    assert features.modality_columns(["power"]) == list(range(9))
    assert features.modality_columns(["emanation"]) == list(range(18, 27))


def test_feature_csv_round_trip():
    rng = np.random.default_rng(0)
    mat = rng.normal(size=(5, 27))
    text = features.features_to_csv([3, 1, 4, 1, 5], mat)
    ids, back = features.features_from_csv(text)
    assert ids == [3, 1, 4, 1, 5]
    np.testing.assert_array_equal(back, mat)  # repr round-trips floats exactly
