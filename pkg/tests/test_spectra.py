"""
测试数值骨干：稀疏算子、投影秩、低能谱、Gram 矩阵与零空间
"""
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings as hyp_settings, strategies as st

from config import settings
from exceptions import (
    CapExceededError,
    DimensionMismatchError,
    NonConvergenceError,
    NotAProjectorError,
    PreconditionError,
)
from services.spectra import (
    ApplyOperator,
    SparseOperator,
    compose,
    compose_chain,
    gram,
    ground_level,
    low_spectrum,
    null_space_blocks,
    projector_range,
    projector_rank,
    trace,
)


def chain_laplacian(n: int) -> sp.csr_matrix:
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def test_from_matrix_checks_hermiticity():
    with pytest.raises(PreconditionError):
        SparseOperator.from_matrix(np.array([[0, 1], [0, 0]]), hermitian=True)
    op = SparseOperator.from_matrix(np.array([[0, 1j], [-1j, 0]]), hermitian=True)
    assert op.hermitian_residual() == 0.0
    assert op.nnz == 2


def test_from_entries_drops_tiny_values():
    op = SparseOperator.from_entries(3, [0, 1, 1], [0, 1, 1], [1.0, 1e-17, 1e-17])
    assert op.nnz == 1


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        compose(SparseOperator.identity(2), SparseOperator.identity(3))
    with pytest.raises(PreconditionError):
        compose_chain([])


def test_compose_nnz_cap():
    cfg = settings.model_copy(update={"projector_nnz_cap": 3})
    dense = SparseOperator.from_matrix(np.ones((2, 2)))
    with pytest.raises(CapExceededError) as exc:
        compose(dense, dense, cfg)
    assert exc.value.cap == "projector_nnz_cap"


@hyp_settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 31), n=st.integers(min_value=1, max_value=6))
def test_compose_is_associative(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (SparseOperator.from_matrix(sp.random(n, n, density=0.5, random_state=rng)
                                          + 1j * sp.random(n, n, density=0.5, random_state=rng))
               for _ in range(3))
    left = compose(compose(a, b), c).to_dense()
    right = compose(a, compose(b, c)).to_dense()
    assert np.allclose(left, right, atol=1e-12)


def test_projector_rank():
    """测试秩与迹一致"""
    p = SparseOperator.from_matrix(sp.diags([1.0, 1.0, 0.0, 0.0]), hermitian=True)
    assert projector_rank(p) == 2
    half = SparseOperator.from_matrix(np.full((2, 2), 0.5), hermitian=True)
    assert projector_rank(half) == 1
    assert round(trace(half).real) == 1
    assert projector_range(half).shape == (2, 1)


def test_projector_rank_rejects_non_projector():
    with pytest.raises(NotAProjectorError) as exc:
        projector_rank(SparseOperator.from_matrix(2 * np.eye(2), hermitian=True))
    assert exc.value.residual == pytest.approx(2.0)


def test_low_spectrum_dense():
    h = SparseOperator.from_matrix(chain_laplacian(50), hermitian=True)
    values = low_spectrum(h, 3)
    expected = [2 - 2 * np.cos(k * np.pi / 51) for k in (1, 2, 3)]
    assert np.allclose(values, expected, atol=1e-10)


def test_low_spectrum_iterative_matches_analytic():
    """测试迭代求解（维数超过稠密阈值）"""
    n = 2000
    h = SparseOperator.from_matrix(sp.identity(n) * 3 + sp.diags([np.arange(n, dtype=float)], [0]),
                                   hermitian=True)
    values = low_spectrum(h, 4, method="iterative")
    assert np.allclose(values, [3.0, 4.0, 5.0, 6.0], atol=1e-8)


def test_low_spectrum_matrix_free():
    diag = np.arange(10, dtype=float)
    op = ApplyOperator(dim=10, apply=lambda x: diag[:, None] * x if x.ndim == 2 else diag * x, real=True)
    assert np.allclose(low_spectrum(op, 2), [0.0, 1.0])
    assert trace(op) == pytest.approx(45.0)
    with pytest.raises(PreconditionError):
        low_spectrum(op, 11)


def test_non_convergence():
    cfg = settings.model_copy(update={"eigsh_maxiter": 1})
    h = SparseOperator.from_matrix(chain_laplacian(3000), hermitian=True)
    with pytest.raises(NonConvergenceError):
        low_spectrum(h, 6, cfg, method="iterative")


def test_ground_level_counts_degeneracy():
    h = SparseOperator.from_matrix(sp.diags([0.0] * 5 + [1.0] * 20), hermitian=True)
    values, vectors = ground_level(h)
    assert len(values) == 5
    assert vectors.shape == (25, 5)


def test_gram_null_space():
    """测试 Gram 零空间正是 O P = 0 的算子"""
    p = sp.diags([1.0, 0.0]).tocsr()
    ops = [sp.csr_matrix(([1.0], ([a], [b])), shape=(2, 2)) for a in range(2) for b in range(2)]
    g = gram(ops, p)
    assert g.size == 4
    assert np.allclose(g.to_dense(), np.diag([1.0, 0.0, 1.0, 0.0]))
    assert g.min_eigenvalue() >= -1e-12
    nulls, norm = null_space_blocks(g, 1e-8)
    assert norm == pytest.approx(1.0)
    null_indices = sorted(int(i) for indices, vectors in nulls for i in indices[np.abs(vectors).sum(axis=1) > 0.5])
    assert null_indices == [1, 3]


def test_gram_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        gram([sp.identity(3)], sp.identity(2))


def test_gram_quadratic_form():
    rho = sp.identity(2, format="csr")
    ops = [sp.identity(2, format="csr"), sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))]
    g = gram(ops, rho)
    c = np.array([1.0, -1.0]) / np.sqrt(2)
    assert g.quadratic(np.array([0, 1]), c) == pytest.approx(2.0)
