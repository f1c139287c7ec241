import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from barcode_coords.algebra import eval_generator
from barcode_coords.features import (
    FeatureMatrix,
    Scaling,
    apply_scale,
    digit_barcodes,
    digit_feature_names,
    digit_features,
    digit_image_vector,
    digit_vector,
    fit_scale,
    lesion_barcodes,
    lesion_feature_names,
    lesion_features,
    lesion_vector,
    summarize,
)
from barcode_coords.filtrations import binarize
from barcode_coords.ingest import block_digit, synth_lesions

coord = st.floats(0, 28, allow_nan=False)


@st.composite
def bar(draw):
    a, b = draw(coord), draw(coord)
    return (min(a, b), max(a, b))


barcodes = st.lists(bar(), max_size=12)


def direct_features(bc, ymax):
    """Straight transcription of the four sums, in plain Python."""
    f1 = sum(x * (y - x) for x, y in bc)
    f2 = sum((ymax - y) * (y - x) for x, y in bc)
    f3 = sum(x**2 * (y - x) ** 4 for x, y in bc)
    f4 = sum((ymax - y) ** 2 * (y - x) ** 4 for x, y in bc)
    return [f1, f2, f3, f4]


# --- examples --------------------------------------------------------------------------


def test_digit_feature_examples():
    assert digit_features([(1, 3)], 3) == [2, 0, 16, 0]
    assert digit_features([], 0) == [0, 0, 0, 0]
    assert digit_features([(1, 3), (2, 2)], 3) == [2, 0, 16, 0]
    assert digit_features(np.array([[1.0, 3.0]]), 5) == [2, 4, 16, 64]


def test_lesion_feature_examples():
    assert lesion_features([(1, 3)], 3) == [2, 0, 16, 0]
    assert lesion_features([(1, 3), (1, 3)], 3) == [2, 0, 16, 0]
    assert lesion_features([], 7) == [0, 0, 0, 0]
    assert lesion_features([(2, 2)]) == [0, 0, 0, 0]


def test_summary_uses_positive_bars():
    assert summarize([(0, 4), (9, 9)]) == summarize([(0, 4)])
    assert summarize([(0, 4), (9, 9)]).n == 1
    assert summarize([]).y_max == 0


def test_digit_vector_shapes():
    assert digit_vector([[]] * 8, 28).tolist() == [0.0] * 32
    with pytest.raises(ValueError):
        digit_vector([[]] * 7, 28)
    with pytest.raises(ValueError):
        digit_vector([[]] * 8, [28, 28])
    v = digit_image_vector(block_digit(8))
    assert v.shape == (32,)
    assert len(digit_feature_names()) == 32 == len(set(digit_feature_names()))


def test_digit_vector_order():
    bcs = digit_barcodes(binarize(block_digit(0)))
    v = digit_vector(bcs, 28)
    names = digit_feature_names()
    # left-to-right sweep, degree 1, f1: loop born where the right stroke closes it
    k = names.index("right_b1_f1")
    assert v[k] == digit_features(bcs[1], 28)[0]
    assert names[:4] == ["right_b0_f1", "right_b0_f2", "right_b0_f3", "right_b0_f4"]
    assert names[-1] == "top_b1_f4"


def test_essential_bars_capped_at_extent():
    bcs = digit_barcodes(binarize(block_digit(0)))
    for bc in bcs:
        assert np.all(bc[:, 1] <= 28)
    # capping at the extent zeroes the tail terms of essential bars
    b1 = bcs[1][bcs[1][:, 1] > bcs[1][:, 0]]
    assert b1.shape == (1, 2) and b1[0, 1] == 28
    assert digit_features(b1, 28)[1] == 0


def test_lesion_vector_shape():
    s = synth_lesions(1, 0)[0]
    bcs = lesion_barcodes(s.image, s.mask)
    assert len(bcs) == 56
    v = lesion_vector(bcs)
    assert v.shape == (224,)
    assert np.isfinite(v).all()
    names = lesion_feature_names()
    assert len(names) == 224 == len(set(names))
    assert len(lesion_feature_names(1)) == 32
    for bc in bcs:
        assert np.all(bc <= 1.0) and np.all(bc >= 0.0)


# --- properties -----------------------------------------------------------------------------


@given(barcodes)
def test_matches_direct_transcription(bc):
    ymax = summarize(bc).y_max
    got = digit_features(bc, ymax)
    want = direct_features(bc, ymax)
    for g, w in zip(got, want):
        assert math.isclose(g, w, rel_tol=1e-9, abs_tol=1e-6)


@given(barcodes, coord, st.integers(0, 12))
def test_zero_bar_insensitive_exact(bc, c, pos):
    padded = bc[:pos] + [(c, c)] + bc[pos:]
    assert digit_features(padded) == digit_features(bc)
    assert lesion_features(padded) == lesion_features(bc)
    # a zero bar beyond every right endpoint does not move y_max
    far = bc + [(100.0, 100.0)]
    assert digit_features(far) == digit_features(bc)


@given(barcodes, st.randoms(use_true_random=False))
def test_order_independent_exact(bc, rnd):
    shuffled = list(bc)
    rnd.shuffle(shuffled)
    assert digit_features(shuffled) == digit_features(bc)
    assert lesion_features(shuffled) == lesion_features(bc)


@given(barcodes)
def test_f1_is_a_generator(bc):
    f1 = digit_features(bc)[0]
    assert math.isclose(f1, -eval_generator(bc, (1, 0)), rel_tol=1e-12, abs_tol=1e-9)


@given(barcodes)
def test_duplication(bc):
    doubled = bc + bc
    for a, b in zip(digit_features(doubled), digit_features(bc)):
        assert a == 2 * b
    assert lesion_features(doubled) == pytest.approx(lesion_features(bc), rel=1e-12, abs=1e-12)


# --- scaling ----------------------------------------------------------------------------------


def test_scale_examples():
    X = np.array([[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]])
    sc = fit_scale(X)
    assert apply_scale(sc, X).tolist() == [[0, 0], [0.5, 0], [1, 0]]
    assert apply_scale(sc, np.array([[12.0, 9.0]])).tolist() == [[1, 0]]
    assert apply_scale(sc, np.array([[-3.0, 7.0]])).tolist() == [[0, 0]]
    with pytest.raises(ValueError):
        fit_scale(np.zeros((0, 2)))


@given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3), min_size=1, max_size=20))
def test_scale_idempotent(rows):
    X = np.array(rows)
    Z = apply_scale(fit_scale(X), X)
    assert Z.min() >= 0 and Z.max() <= 1
    again = fit_scale(Z)
    Z2 = apply_scale(again, Z)
    assert np.allclose(Z2, Z, atol=1e-12)


def test_scale_feature_matrix():
    fm = FeatureMatrix(np.array([[1.0, 2.0], [3.0, 2.0]]), ["a", "b"], labels=[0, 1])
    scaled = apply_scale(fit_scale(fm), fm)
    assert isinstance(scaled, FeatureMatrix)
    assert scaled.values.tolist() == [[0, 0], [1, 0]]
    assert isinstance(scaled.scaling, Scaling)


# --- feature matrices --------------------------------------------------------------------------


def test_csv_round_trip():
    fm = FeatureMatrix(np.array([[0.1, 2.0], [1 / 3, -4e-9]]), ["f1", "f2"], ["a", "b"], [3, "cyst"])
    text = fm.to_csv()
    assert text.splitlines()[0] == "id,label,f1,f2"
    back = FeatureMatrix.from_csv(text)
    assert back.names == fm.names and back.ids == fm.ids and back.labels == fm.labels
    assert np.array_equal(back.values, fm.values)


def test_csv_empty_and_errors():
    fm = FeatureMatrix(np.zeros((0, 2)), ["f1", "f2"])
    assert fm.to_csv() == "id,label,f1,f2\n"
    assert len(FeatureMatrix.from_csv(fm.to_csv())) == 0
    with pytest.raises(ValueError):
        FeatureMatrix.from_csv("x,y\n")
    with pytest.raises(ValueError):
        FeatureMatrix.from_csv("id,label,f1\n0,1,2,3\n")
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((2, 1)), ["f"], ids=["a"])


def test_json_round_trip():
    fm = FeatureMatrix(np.array([[1.0, 2.0], [3.0, 5.0]]), ["x", "y"], labels=[1, 2])
    fm.scaling = fit_scale(fm)
    back = FeatureMatrix.from_json(fm.to_json())
    assert np.array_equal(back.values, fm.values)
    assert back.labels == [1, 2] and back.ids == ["0", "1"]
    assert np.array_equal(back.scaling.mins, fm.scaling.mins)
    assert np.array_equal(back.scaling.maxs, fm.scaling.maxs)
