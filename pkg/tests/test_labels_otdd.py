import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otgeodesic import (
    LabelConfig,
    LabeledDataset,
    OtddConfig,
    bures_w2_squared,
    exact_ot,
    label_distance_matrix,
    otdd,
    otdd_cost_matrix,
    shifted_copy,
    soft_label_cost,
)
from otgeodesic.errors import DimensionMismatchError, EmptyClassError, NotPSDError, ShapeMismatchError
from otgeodesic.labels import class_w2_squared, label_cost_matrix
from otgeodesic.ot import sqeuclidean_cost

EXACT = OtddConfig(solver="exact")


def line_dataset(points, labels, C=None, id="ds"):
    return LabeledDataset.from_hard_labels(np.asarray(points, dtype=float).reshape(-1, 1), labels, C, id=id)


def random_dataset(rng, n=10, C=2, d=2, id="ds"):
    y = np.concatenate([np.arange(C), rng.integers(0, C, n - C)])
    return LabeledDataset.from_hard_labels(rng.normal(size=(n, d)) + rng.normal(size=d), y, C, id=id)


# ---------------------------------------------------------------------------
# Bures-Wasserstein


def test_bures_identical_is_zero():
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert bures_w2_squared([1.0, 2.0], S, [1.0, 2.0], S) == 0.0


def test_bures_one_dimensional():
    assert bures_w2_squared([0.0], [[1.0]], [2.0], [[4.0]]) == pytest.approx(5.0, abs=1e-12)


def test_bures_diagonal_reduces_to_coordinates():
    m1, m2 = np.array([0.0, 1.0, -2.0]), np.array([1.0, 1.0, 0.5])
    v1, v2 = np.array([1.0, 4.0, 0.25]), np.array([9.0, 1.0, 0.25])
    per_coord = sum((a - b) ** 2 + (np.sqrt(s) - np.sqrt(t)) ** 2 for a, b, s, t in zip(m1, m2, v1, v2))
    assert bures_w2_squared(m1, np.diag(v1), m2, np.diag(v2)) == pytest.approx(per_coord, abs=1e-12)


def test_bures_rejects_indefinite():
    with pytest.raises(NotPSDError):
        bures_w2_squared([0.0, 0.0], [[1.0, 0.0], [0.0, -1e-3]], [0.0, 0.0], np.eye(2))
    bures_w2_squared([0.0, 0.0], [[1.0, 0.0], [0.0, -1e-8]], [0.0, 0.0], np.eye(2))


def test_bures_against_gaussian_sample_oracle(rng):
    # for commuting covariances the map is linear; compare with a brute-force root computation
    A = rng.normal(size=(3, 3))
    S1 = A @ A.T + np.eye(3)
    B = rng.normal(size=(3, 3))
    S2 = B @ B.T + 0.5 * np.eye(3)
    w, V = np.linalg.eigh(S1)
    r1 = V @ np.diag(np.sqrt(w)) @ V.T
    w2, V2 = np.linalg.eigh(r1 @ S2 @ r1)
    ref = np.trace(S1) + np.trace(S2) - 2 * np.sqrt(w2).sum()
    assert bures_w2_squared(np.zeros(3), S1, np.zeros(3), S2) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=40)
@given(st.integers(0, 2**31))
def test_bures_is_symmetric_and_nonnegative(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    m1, m2 = rng.normal(size=2), rng.normal(size=2)
    ab = bures_w2_squared(m1, A @ A.T, m2, B @ B.T)
    ba = bures_w2_squared(m2, B @ B.T, m1, A @ A.T)
    assert ab >= 0 and ab == pytest.approx(ba, rel=1e-8, abs=1e-10)


# ---------------------------------------------------------------------------
# label matrices


def test_label_matrix_self_is_symmetric_zero_diagonal(rng):
    ds = random_dataset(rng, 20, 4)
    for method in ("exact", "gaussian"):
        M = label_distance_matrix(ds, ds, method).m
        assert np.array_equal(M, M.T) and np.all(np.diag(M) == 0.0) and np.all(M >= 0)


def test_label_matrix_coinciding_classes():
    A = line_dataset([0.0, 1.0], [0, 0], id="a")
    B = LabeledDataset.from_hard_labels(A.features, [0, 0], class_names=["other"], id="b")
    assert label_distance_matrix(A, B).m.tolist() == [[0.0]]


def test_label_matrix_line_example():
    A = line_dataset([0.0, 1.0], [0, 0])
    B = line_dataset([2.0, 3.0], [0, 0])
    assert label_distance_matrix(A, B).m[0, 0] == pytest.approx(4.0, abs=1e-12)


def test_label_matrix_transposes_exactly(rng):
    A, B = random_dataset(rng, 15, 3, id="A"), random_dataset(rng, 12, 2, id="B")
    for method in ("exact", "gaussian"):
        assert np.array_equal(label_distance_matrix(A, B, method).m, label_distance_matrix(B, A, method).m.T)


def test_label_matrix_errors(rng):
    A = random_dataset(rng, 6, 2, d=2)
    with pytest.raises(DimensionMismatchError):
        label_distance_matrix(A, random_dataset(rng, 6, 2, d=3))
    empty = LabeledDataset.from_hard_labels(np.zeros((2, 2)), [0, 0], n_classes=2)
    with pytest.raises(EmptyClassError):
        label_distance_matrix(A, empty)


def test_class_cap_subsamples_deterministically(rng):
    a, b = rng.normal(size=(40, 2)), rng.normal(size=(30, 2)) + 1
    cfg = LabelConfig(class_cap=10, seed=3)
    v = class_w2_squared(a, b, cfg)
    assert v == class_w2_squared(a, b, cfg)
    assert v == class_w2_squared(b, a, cfg)
    assert v != class_w2_squared(a, b, LabelConfig(class_cap=10, seed=4))


def test_relabeling_permutes_matrix(rng):
    A, B = random_dataset(rng, 12, 3, id="A"), random_dataset(rng, 14, 4, id="B")
    perm = [3, 1, 0, 2]
    B2 = shifted_copy(B, np.zeros(2), relabel=perm, id="B")
    M, M2 = label_distance_matrix(A, B).m, label_distance_matrix(A, B2).m
    expected = np.empty_like(M)
    expected[:, perm] = M
    assert np.array_equal(M2, expected)


def test_soft_label_cost_examples():
    M = np.array([[0.0, 2.0, 5.0], [3.0, 1.0, 7.0]])
    assert soft_label_cost([1, 0], [0, 0, 1], M) == 5.0
    assert soft_label_cost([0.5, 0.5], [0, 1, 0], M) == pytest.approx(1.5)
    assert soft_label_cost([0.3, 0.7], [0.2, 0.2, 0.6], np.zeros((2, 3))) == 0.0
    with pytest.raises(ShapeMismatchError):
        soft_label_cost([1.0], [1.0, 0.0, 0.0], M)


@settings(max_examples=50)
@given(st.integers(0, 2**31), st.floats(0, 1))
def test_soft_label_cost_bilinear(seed, alpha):
    rng = np.random.default_rng(seed)
    M = rng.uniform(0, 10, size=(3, 4))
    y, y2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    z = rng.dirichlet(np.ones(4))
    lhs = soft_label_cost(alpha * y + (1 - alpha) * y2, z, M)
    rhs = alpha * soft_label_cost(y, z, M) + (1 - alpha) * soft_label_cost(y2, z, M)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert np.allclose(label_cost_matrix(np.stack([y, y2]), z[None], M).ravel(),
                       [soft_label_cost(y, z, M), soft_label_cost(y2, z, M)], atol=1e-12)


# ---------------------------------------------------------------------------
# OTDD


def test_cost_matrix_examples():
    Q = line_dataset([0.0], [0], id="q")
    P = line_dataset([1.0], [0], id="p")
    assert otdd_cost_matrix(Q, P, np.array([[4.0]]))[0, 0] == pytest.approx(5.0)
    assert otdd_cost_matrix(Q, Q, np.array([[0.0]]))[0, 0] == 0.0


def test_cost_matrix_zero_labels_is_feature_cost(rng):
    Q, P = random_dataset(rng, 6, 2), random_dataset(rng, 5, 3)
    assert np.allclose(otdd_cost_matrix(Q, P, np.zeros((2, 3))), sqeuclidean_cost(Q.features, P.features))


def test_cost_matrix_errors(rng):
    Q = random_dataset(rng, 6, 2)
    with pytest.raises(DimensionMismatchError):
        otdd_cost_matrix(Q, random_dataset(rng, 6, 2, d=3), np.zeros((2, 2)))
    with pytest.raises(ShapeMismatchError):
        otdd_cost_matrix(Q, Q, np.zeros((2, 3)))


def test_otdd_self_distance_zero(rng):
    ds = random_dataset(rng, 12, 3)
    assert otdd(ds, ds, EXACT).distance_squared == 0.0


def test_otdd_renamed_single_class_is_zero():
    A = line_dataset([0.0, 1.0, 4.0], [0, 0, 0], id="a")
    B = LabeledDataset.from_hard_labels(A.features, [0, 0, 0], class_names=["renamed"], id="b")
    assert otdd(A, B, EXACT).distance_squared == 0.0


def test_otdd_matches_brute_force_cost(rng):
    A, B = random_dataset(rng, 6, 2, id="a"), random_dataset(rng, 6, 2, id="b")
    res = otdd(A, B, EXACT)
    C = otdd_cost_matrix(A, B, res.label_matrix)
    assert res.distance_squared == pytest.approx(exact_ot(C)[1], rel=1e-12)
    assert res.distance == pytest.approx(np.sqrt(res.distance_squared))


def test_otdd_sinkhorn_is_near_exact_and_symmetric(rng):
    A, B = random_dataset(rng, 15, 2, id="a"), random_dataset(rng, 12, 3, id="b")
    exact = otdd(A, B, EXACT).distance_squared
    ab, ba = otdd(A, B).distance_squared, otdd(B, A).distance_squared
    assert ab == pytest.approx(ba, rel=1e-6)
    assert ab == pytest.approx(exact, rel=0.05)
    assert max(otdd(A, B).coupling.residuals()) <= 1e-9


def test_otdd_relabeling_invariance(rng):
    A, B = random_dataset(rng, 10, 3, id="a"), random_dataset(rng, 10, 2, id="b")
    B2 = shifted_copy(B, np.zeros(2), relabel=[1, 0], id="b")
    d1, d2 = otdd(A, B, EXACT).distance_squared, otdd(A, B2, EXACT).distance_squared
    assert d1 == pytest.approx(d2, abs=1e-12)


def test_otdd_zeroing_label_matrix_never_increases(rng):
    for _ in range(10):
        A, B = random_dataset(rng, 8, 2, id="a"), random_dataset(rng, 8, 2, id="b")
        full = otdd(A, B, EXACT).distance_squared
        zero = otdd(A, B, EXACT, label_matrix=np.zeros((2, 2))).distance_squared
        assert zero <= full + 1e-12


def test_otdd_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        otdd(random_dataset(rng, 5, 2, d=2), random_dataset(rng, 5, 2, d=3))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_otdd_metric_axioms_property(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_dataset(rng, int(rng.integers(2, 12)), 2, id=k) for k in "abc")
    ab, ba = otdd(A, B, EXACT).distance, otdd(B, A, EXACT).distance
    bc, ac = otdd(B, C, EXACT).distance, otdd(A, C, EXACT).distance
    assert ab >= 0 and abs(ab - ba) <= 1e-9
    assert ac <= ab + bc + 1e-7
