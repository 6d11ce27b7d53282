"""Unit tests for the symmetric linear algebra layer.

The eigensolver is checked against numpy.linalg.eigh as an independent
oracle and against algebraic residual properties that do not depend on any
other solver.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from jacobisplit import (
    GeneralOperator,
    SymOperator,
    ky_fan_min,
    orthogonal_projector,
    orthonormal_columns,
    spectrum,
    symmetry_defect,
)


def test_symoperator_symmetrizes_and_records_defect():
    op = SymOperator([[0.0, 2.0], [0.0, 0.0]])
    assert_allclose(np.asarray(op), [[0.0, 1.0], [1.0, 0.0]])
    assert op.presym_defect == pytest.approx(2.0)
    sym = SymOperator([[1.0, 3.0], [3.0, -1.0]])
    assert sym.presym_defect == 0.0
    assert sym.dim == 2


def test_symoperator_entries_read_only():
    op = SymOperator(np.eye(3))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5.0


def test_general_operator_keeps_skewness():
    op = GeneralOperator([[0.0, 1.0], [-1.0, 0.0]])
    assert_allclose(np.asarray(op), [[0.0, 1.0], [-1.0, 0.0]])
    assert op.dim == 2


def test_operator_rejects_bad_input():
    with pytest.raises(ValueError):
        SymOperator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        SymOperator([[np.nan, 0.0], [0.0, 1.0]])


def test_spectrum_identity():
    w, v = spectrum(np.eye(3))
    assert_allclose(w, [1.0, 1.0, 1.0])
    assert_allclose(v @ v.T, np.eye(3), atol=1e-14)


def test_spectrum_diagonal_sorted_ascending():
    w, v = spectrum(np.diag([4.0, 1.0, 1.0]))
    assert_allclose(w, [1.0, 1.0, 4.0])
    # eigenvector for the simple eigenvalue 4 is the first axis
    assert_allclose(np.abs(v[:, 2]), [1.0, 0.0, 0.0], atol=1e-14)


def test_spectrum_exchange_matrix():
    w, v = spectrum([[0.0, 1.0], [1.0, 0.0]])
    assert_allclose(w, [-1.0, 1.0], atol=1e-15)
    assert_allclose(np.abs(v[:, 1]), [np.sqrt(0.5)] * 2, atol=1e-14)


def test_spectrum_matches_eigh_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        d = int(rng.integers(1, 9))
        a = rng.standard_normal((d, d))
        a = (a + a.T) / 2.0
        w, v = spectrum(a)
        w_ref = np.linalg.eigvalsh(a)
        assert_allclose(w, w_ref, atol=1e-12 * max(1.0, np.abs(a).max()))
        # residual and orthonormality, solver-independent
        assert np.max(np.abs(a @ v - v @ np.diag(w))) <= 1e-10 * max(1.0, np.abs(w).max())
        assert np.max(np.abs(v.T @ v - np.eye(d))) <= 1e-12


def test_spectrum_sign_convention_deterministic():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((5, 5))
    a = a + a.T
    _, v = spectrum(a)
    for j in range(5):
        i = int(np.argmax(np.abs(v[:, j])))
        assert v[i, j] >= 0.0
    # and the decomposition is reproducible
    _, v2 = spectrum(a.copy())
    assert_allclose(v, v2)


def test_spectrum_conjugation_invariance():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 4))
    a = (a + a.T) / 2.0
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    w1, _ = spectrum(a)
    w2, _ = spectrum(q @ a @ q.T)
    assert_allclose(w1, w2, atol=1e-12)


def test_symmetry_defect_cases():
    assert symmetry_defect([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(2.0)
    assert symmetry_defect([[0.0, 2.0], [0.0, 0.0]]) == pytest.approx(2.0)
    assert symmetry_defect(np.diag([3.0, -1.0])) == 0.0


def test_symmetry_defect_vanishes_after_symmetrization():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 5))
    assert symmetry_defect((a + a.T) / 2.0) <= 1e-15


def test_symmetry_defect_with_metric():
    # operator symmetric w.r.t. a non-standard metric but not the standard one
    g = np.diag([1.0, 4.0])
    a = np.array([[0.0, 2.0], [0.5, 0.0]])
    assert symmetry_defect(a, metric=g) == pytest.approx(0.0, abs=1e-15)
    assert symmetry_defect(a) > 1.0


def test_symmetry_defect_invalid_metric():
    with pytest.raises(ValueError, match="invalid metric"):
        symmetry_defect(np.eye(2), metric=np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        symmetry_defect(np.eye(2), metric=np.eye(3))


def test_ky_fan_min_values():
    a = np.diag([4.0, 1.0, 1.0])
    assert ky_fan_min(a, 1) == pytest.approx(1.0)
    assert ky_fan_min(a, 2) == pytest.approx(2.0)
    assert ky_fan_min(a, 3) == pytest.approx(6.0)


def test_ky_fan_min_k_range():
    with pytest.raises(ValueError):
        ky_fan_min(np.eye(2), 0)
    with pytest.raises(ValueError):
        ky_fan_min(np.eye(2), 3)


def test_ky_fan_min_is_frame_minimum():
    # random frames can only overshoot the exact minimum
    rng = np.random.default_rng(19)
    for _ in range(10):
        d = int(rng.integers(2, 7))
        a = rng.standard_normal((d, d))
        a = (a + a.T) / 2.0
        for k in range(1, d + 1):
            exact = ky_fan_min(a, k)
            g = rng.standard_normal((200, d, k))
            q, _ = np.linalg.qr(g)
            sampled = float(np.einsum("sik,ij,sjk->s", q, a, q).min())
            assert sampled >= exact - 1e-10


def test_orthonormal_columns_basic():
    q = orthonormal_columns(np.array([[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]))
    assert q.shape == (3, 2)
    assert_allclose(q.T @ q, np.eye(2), atol=1e-14)


def test_orthonormal_columns_drops_dependent():
    a = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    q = orthonormal_columns(a)
    assert q.shape == (3, 2)


def test_orthonormal_columns_reorthogonalizes():
    # nearly dependent input should still come out orthonormal to machine level
    rng = np.random.default_rng(2)
    base = rng.standard_normal((6, 1))
    a = np.hstack([base, base + 1e-9 * rng.standard_normal((6, 1))])
    q = orthonormal_columns(a, drop_tol=1e-12)
    assert_allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-12)


def test_orthonormal_columns_empty():
    q = orthonormal_columns(np.zeros((4, 0)))
    assert q.shape == (4, 0)
    assert orthonormal_columns(np.zeros((4, 2))).shape == (4, 0)


def test_orthogonal_projector_cases():
    p = orthogonal_projector([np.array([1.0, 0.0, 0.0])])
    assert_allclose(np.asarray(p), np.diag([1.0, 0.0, 0.0]))
    p2 = orthogonal_projector([np.array([1.0, 1.0])])
    assert_allclose(np.asarray(p2), [[0.5, 0.5], [0.5, 0.5]])
    z = orthogonal_projector([], dim=3)
    assert_allclose(np.asarray(z), np.zeros((3, 3)))


def test_orthogonal_projector_idempotent_symmetric():
    rng = np.random.default_rng(23)
    vecs = [rng.standard_normal(5) for _ in range(3)]
    p = np.asarray(orthogonal_projector(vecs))
    assert_allclose(p @ p, p, atol=1e-12)
    assert_allclose(p, p.T, atol=1e-15)


def test_orthogonal_projector_handles_dependent_input():
    v = np.array([1.0, 2.0, 0.0])
    p = np.asarray(orthogonal_projector([v, 2 * v]))
    assert np.trace(p) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_projector_errors():
    with pytest.raises(ValueError):
        orthogonal_projector([])
    with pytest.raises(ValueError):
        orthogonal_projector([np.ones(2)], dim=3)
    with pytest.raises(ValueError):
        orthogonal_projector([np.ones(2), np.ones(3)])
