import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otgeodesic import LabeledDataset, PaddedLabelSpace, SimplexWeights, harden, pad_label, split_by_class, validate
from otgeodesic.errors import (
    BadWeightsError,
    EmptyClassError,
    IndexOutOfRangeError,
    NonFiniteValueError,
    NonStochasticLabelError,
    ShapeMismatchError,
    SoftLabelsError,
)


def test_validate_accepts_one_hot():
    validate(LabeledDataset(np.eye(2), [[1, 0], [0, 1]]))


def test_validate_rejects_bad_row_sum():
    with pytest.raises(NonStochasticLabelError):
        validate(LabeledDataset([[0.0]], [[0.5, 0.6]]))


def test_validate_rejects_nan_feature():
    with pytest.raises(NonFiniteValueError):
        validate(LabeledDataset([[np.nan, 0.0]], [[1.0]]))


def test_validate_rejects_row_count_mismatch():
    with pytest.raises(ShapeMismatchError):
        validate(LabeledDataset(np.zeros((3, 2)), np.ones((2, 1))))


def test_validate_rejects_negative_label_mass():
    with pytest.raises(NonStochasticLabelError):
        validate(LabeledDataset([[0.0]], [[1.5, -0.5]]))


def test_validate_tolerance_is_1e_9():
    validate(LabeledDataset([[0.0]], [[0.5, 0.5 + 5e-10]]))
    with pytest.raises(NonStochasticLabelError):
        validate(LabeledDataset([[0.0]], [[0.5, 0.5 + 5e-9]]))


def test_dataset_arrays_are_read_only_copies():
    X = np.zeros((2, 1))
    ds = LabeledDataset(X, [[1.0], [1.0]])
    X[0, 0] = 5.0
    assert ds.features[0, 0] == 0.0
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_hard_label_detection():
    hard = LabeledDataset.from_hard_labels(np.zeros((3, 1)), [0, 2, 1])
    assert hard.is_hard and hard.n_classes == 3
    assert hard.hard_labels.tolist() == [0, 2, 1]
    soft = LabeledDataset(np.zeros((1, 1)), [[0.5, 0.5]])
    assert not soft.is_hard
    with pytest.raises(SoftLabelsError):
        soft.hard_labels


def test_from_hard_labels_out_of_range():
    with pytest.raises(IndexOutOfRangeError):
        LabeledDataset.from_hard_labels(np.zeros((2, 1)), [0, 3], n_classes=2)


def test_split_by_class_moments():
    ds = LabeledDataset.from_hard_labels(np.array([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]]), [0, 0, 1])
    c0, c1 = split_by_class(ds)
    assert np.allclose(c0.mean, [1.0, 0.0])
    assert np.allclose(c0.covariance, [[1.0, 0.0], [0.0, 0.0]])
    assert np.array_equal(c1.covariance, np.zeros((2, 2)))
    assert c1.class_index == 1


def test_split_by_class_empty_class():
    ds = LabeledDataset.from_hard_labels(np.zeros((2, 1)), [0, 0], n_classes=2)
    with pytest.raises(EmptyClassError):
        split_by_class(ds)


def test_split_by_class_requires_hard_labels():
    with pytest.raises(SoftLabelsError):
        split_by_class(LabeledDataset(np.zeros((1, 1)), [[0.5, 0.5]]))


def test_pad_label_examples():
    space = PaddedLabelSpace((2, 3, 4))
    assert space.total_dim == 9 and space.offsets == (0, 2, 5)
    y1 = np.array([0.25, 0.75])
    assert pad_label(y1, 0, space).tolist() == [0.25, 0.75] + [0.0] * 7
    out = pad_label([1.0, 0.0, 0.0, 0.0], 2, space)
    assert out.tolist() == [0.0] * 5 + [1.0, 0.0, 0.0, 0.0]
    out = pad_label([1.0, 0.0, 0.0], 1, space)
    assert np.flatnonzero(out).tolist() == [2]
    with pytest.raises(IndexOutOfRangeError):
        pad_label([1.0], 3, space)


def test_pad_label_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        pad_label([1.0, 0.0], 1, PaddedLabelSpace((2, 3)))


def test_simplex_weights():
    assert SimplexWeights([0.25, 0.75]).vertex_index() is None
    assert SimplexWeights.vertex(3, 1).vertex_index() == 1
    assert len(SimplexWeights.uniform(4)) == 4
    for bad in ([0.5, 0.6], [1.5, -0.5], [], [np.nan, 1.0]):
        with pytest.raises(BadWeightsError):
            SimplexWeights(bad)


def test_harden_takes_argmax():
    ds = LabeledDataset(np.zeros((2, 1)), [[0.2, 0.8], [0.6, 0.4]])
    assert harden(ds).hard_labels.tolist() == [1, 0]


@st.composite
def label_rows(draw):
    counts = draw(st.lists(st.integers(1, 5), min_size=1, max_size=4))
    i = draw(st.integers(0, len(counts) - 1))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=counts[i], max_size=counts[i])))
    return PaddedLabelSpace(tuple(counts)), i, w / w.sum()


@given(label_rows())
def test_pad_label_preserves_mass_and_block(case):
    space, i, y = case
    out = pad_label(y, i, space)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(out[space.block(i)], y)
    out[space.block(i)] = 0.0
    assert not out.any()


@given(label_rows(), label_rows())
def test_pad_label_injective(c1, c2):
    space, i, y = c1
    _, j, z = c2
    if j >= space.m or z.size != space.per_dataset_class_counts[j]:
        return
    if (i, y.tolist()) != (j, z.tolist()):
        assert not np.array_equal(pad_label(y, i, space), pad_label(z, j, space))


@settings(max_examples=50)
@given(st.integers(1, 30), st.integers(1, 4), st.integers(0, 2**31))
def test_split_then_concatenate_reproduces_rows(n, C, seed):
    rng = np.random.default_rng(seed)
    y = np.concatenate([np.arange(C), rng.integers(0, C, n)])
    X = rng.normal(size=(y.size, 2))
    ds = LabeledDataset.from_hard_labels(X, y, C)
    parts = split_by_class(ds)
    joined = np.concatenate([p.samples for p in parts])
    key = lambda A: A[np.lexsort(A.T[::-1])]
    assert np.array_equal(key(joined), key(X))
    for p in parts:
        assert np.allclose(p.covariance, p.covariance.T, atol=1e-12)
        assert np.linalg.eigvalsh(p.covariance).min() >= -1e-9


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_validate_idempotent(seed):
    rng = np.random.default_rng(seed)
    ds = LabeledDataset(rng.normal(size=(5, 2)), rng.dirichlet(np.ones(3), 5))
    before = (ds.features.copy(), ds.labels.copy())
    validate(ds)
    validate(ds)
    assert np.array_equal(ds.features, before[0]) and np.array_equal(ds.labels, before[1])
