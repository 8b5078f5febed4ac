"""
数值骨干：稀疏复算子、投影代数、秩与迹、低能谱、Gram 矩阵
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from config import Settings, settings
from exceptions import (
    CapExceededError,
    DimensionMismatchError,
    NonConvergenceError,
    NotAProjectorError,
    PreconditionError,
)

logger = logging.getLogger(__name__)


def clean(matrix, drop: float) -> sp.csr_matrix:
    """合并重复坐标并丢弃 |值| < drop 的元素"""
    m = sp.csr_matrix(matrix, dtype=np.complex128, copy=True)
    m.sum_duplicates()
    if m.nnz:
        m.data[np.abs(m.data) < drop] = 0
        m.eliminate_zeros()
    return m


def max_abs(matrix) -> float:
    if sp.issparse(matrix):
        return float(np.max(np.abs(matrix.data))) if matrix.nnz else 0.0
    return float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """厄米（或一般）稀疏复算子；basis 记录行列对应的打包基矢"""

    matrix: sp.csr_matrix
    hermitian: bool = False
    basis: Optional[np.ndarray] = None
    tag: str = ""

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    @classmethod
    def from_matrix(cls, matrix, hermitian: bool = False, basis: Optional[np.ndarray] = None,
                    tag: str = "", cfg: Optional[Settings] = None) -> "SparseOperator":
        cfg = cfg or settings
        m = clean(matrix, cfg.tolerances.drop)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"算子必须是方阵，实际 {m.shape}")
        op = cls(matrix=m, hermitian=hermitian, basis=basis, tag=tag)
        if hermitian:
            residual = op.hermitian_residual()
            if residual > cfg.tolerances.hermitian:
                raise PreconditionError(f"标记为厄米的算子 {tag} 偏差 {residual:.3e}")
        return op

    @classmethod
    def from_entries(cls, dim: int, rows, cols, values, hermitian: bool = False,
                     basis: Optional[np.ndarray] = None, tag: str = "",
                     cfg: Optional[Settings] = None) -> "SparseOperator":
        coo = sp.coo_matrix((np.asarray(values, dtype=np.complex128),
                             (np.asarray(rows), np.asarray(cols))), shape=(dim, dim))
        return cls.from_matrix(coo, hermitian=hermitian, basis=basis, tag=tag, cfg=cfg)

    @classmethod
    def identity(cls, dim: int, tag: str = "identity") -> "SparseOperator":
        return cls(matrix=sp.identity(dim, dtype=np.complex128, format="csr"), hermitian=True, tag=tag)

    def hermitian_residual(self) -> float:
        return max_abs(self.matrix - self.matrix.conj().T)

    def projector_residual(self) -> float:
        return max_abs(self.matrix @ self.matrix - self.matrix)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return self.matrix @ vectors

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class ApplyOperator:
    """只提供作用回调的厄米算子（矩阵自由模式）"""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    real: bool = False
    tag: str = ""

    def as_linear_operator(self) -> LinearOperator:
        dtype = np.float64 if self.real else np.complex128

        def matvec(x):
            y = self.apply(np.asarray(x))
            return np.real(y) if self.real else y

        return LinearOperator((self.dim, self.dim), matvec=matvec, matmat=matvec, dtype=dtype)

    def to_dense(self, chunk: int = 256) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for start in range(0, self.dim, chunk):
            stop = min(self.dim, start + chunk)
            block = np.zeros((self.dim, stop - start), dtype=np.complex128)
            block[np.arange(start, stop), np.arange(stop - start)] = 1.0
            out[:, start:stop] = self.apply(block)
        return out


AnyOperator = Union[SparseOperator, ApplyOperator]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """G_ij = tr(O_i† O_j ρ)，稀疏存储的厄米半正定矩阵"""

    matrix: sp.csr_matrix
    tag: str = ""

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def blocks(self, cap: Optional[int] = None):
        return block_eigh(self.matrix, cap)

    def norm(self) -> float:
        """谱范数（最大本征值的绝对值）"""
        worst = 0.0
        for _, values, _ in self.blocks():
            if len(values):
                worst = max(worst, float(np.max(np.abs(values))))
        return worst

    def min_eigenvalue(self) -> float:
        lowest = np.inf
        for _, values, _ in self.blocks():
            if len(values):
                lowest = min(lowest, float(np.min(values)))
        return float(lowest)

    def quadratic(self, indices: np.ndarray, vector: np.ndarray) -> float:
        """c† G c，c 只在 indices 上非零"""
        sub = self.matrix[indices][:, indices].toarray()
        return float(np.real(np.vdot(vector, sub @ vector)))


# ---------------------------------------------------------------------------
# 基本运算
# ---------------------------------------------------------------------------

def compose(a: SparseOperator, b: SparseOperator, cfg: Optional[Settings] = None) -> SparseOperator:
    """
    算子乘积 a∘b（先作用 b）

    Args:
        a: 左因子
        b: 右因子

    Returns:
        SparseOperator: 丢弃小元素后的乘积
    """
    cfg = cfg or settings
    if a.dim != b.dim:
        raise DimensionMismatchError(f"维数不匹配: {a.dim} vs {b.dim}")
    product = clean(a.matrix @ b.matrix, cfg.tolerances.drop)
    if product.nnz > cfg.projector_nnz_cap:
        raise CapExceededError("projector_nnz_cap", int(product.nnz), cfg.projector_nnz_cap)
    basis = a.basis if a.basis is not None else b.basis
    return SparseOperator(matrix=product, hermitian=False, basis=basis, tag=f"{a.tag}*{b.tag}")


def compose_chain(ops: Sequence[SparseOperator], cfg: Optional[Settings] = None) -> SparseOperator:
    """按列表顺序相乘 ops[0]∘ops[1]∘…；乘法顺序固定"""
    if not ops:
        raise PreconditionError("空算子列表")
    result = ops[0]
    for op in ops[1:]:
        result = compose(result, op, cfg)
    return result


def block_eigh(matrix, cap: Optional[int] = None) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    按稀疏结构的连通分量分块做稠密厄米对角化

    Args:
        matrix: 厄米稀疏矩阵
        cap: 单块维数上限

    Returns:
        [(分量下标, 本征值, 本征向量)]，分量按最小下标排序
    """
    m = sp.csr_matrix(matrix)
    n = m.shape[0]
    pattern = (abs(m) + abs(m.T)).tocsr()
    count, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(count + 1))
    result = []
    for comp in range(count):
        indices = np.sort(order[bounds[comp]:bounds[comp + 1]])
        if cap is not None and len(indices) > cap:
            raise CapExceededError("dense_dim_cap", int(len(indices)), cap)
        sub = m[indices][:, indices].toarray()
        sub = (sub + sub.conj().T) / 2
        values, vectors = scipy.linalg.eigh(sub)
        result.append((indices, values, vectors))
    result.sort(key=lambda item: int(item[0][0]) if len(item[0]) else n)
    return result


def projector_rank(p: SparseOperator, cfg: Optional[Settings] = None) -> int:
    """
    投影算子的秩：本征值大于 0.5 的个数

    Args:
        p: 投影算子（‖p² − p‖ ≤ projector_check）

    Returns:
        int: 秩
    """
    cfg = cfg or settings
    residual = p.projector_residual()
    if residual > cfg.tolerances.projector_check:
        raise NotAProjectorError(residual)
    rank = 0
    for _, values, _ in block_eigh(p.matrix, cfg.dense_dim_cap):
        rank += int(np.sum(values > cfg.tolerances.rank_threshold))
    return rank


def projector_range(p: SparseOperator, cfg: Optional[Settings] = None) -> np.ndarray:
    """投影算子的像空间正交基（列向量，按分块顺序）"""
    cfg = cfg or settings
    columns = []
    for indices, values, vectors in block_eigh(p.matrix, cfg.dense_dim_cap):
        keep = values > cfg.tolerances.rank_threshold
        for vec in vectors[:, keep].T:
            full = np.zeros(p.dim, dtype=np.complex128)
            full[indices] = vec
            columns.append(full)
    if not columns:
        return np.zeros((p.dim, 0), dtype=np.complex128)
    return np.column_stack(columns)


def trace(op: AnyOperator, chunk: int = 256) -> complex:
    """迹；矩阵自由算子逐块作用在标准基上"""
    if isinstance(op, SparseOperator):
        return complex(op.matrix.diagonal().sum())
    total = 0.0j
    for start in range(0, op.dim, chunk):
        stop = min(op.dim, start + chunk)
        block = np.zeros((op.dim, stop - start), dtype=np.complex128)
        block[np.arange(start, stop), np.arange(stop - start)] = 1.0
        image = op.apply(block)
        total += complex(np.sum(image[np.arange(start, stop), np.arange(stop - start)]))
    return total


# ---------------------------------------------------------------------------
# 低能谱
# ---------------------------------------------------------------------------

def low_eigenpairs(h: AnyOperator, k: int, cfg: Optional[Settings] = None,
                   method: str = "auto") -> Tuple[np.ndarray, np.ndarray]:
    """
    最低的 k 个本征对

    Args:
        h: 厄米算子（稀疏或矩阵自由）
        k: 个数
        cfg: 配置（稠密阈值、迭代次数、种子）
        method: auto / dense / iterative

    Returns:
        (升序本征值, 对应本征向量列)
    """
    cfg = cfg or settings
    dim = h.dim
    if k < 1 or k > dim:
        raise PreconditionError(f"k 必须在 1..{dim} 之间，实际 {k}")
    if method == "auto":
        method = "dense" if dim <= cfg.dense_eig_cap else "iterative"
    if method == "iterative" and k >= dim - 1:
        if dim > cfg.dense_dim_cap:
            raise CapExceededError("dense_dim_cap", dim, cfg.dense_dim_cap)
        method = "dense"
    if method == "dense":
        if dim > cfg.dense_dim_cap:
            raise CapExceededError("dense_dim_cap", dim, cfg.dense_dim_cap)
        matrix = h.to_dense()
        values, vectors = scipy.linalg.eigh((matrix + matrix.conj().T) / 2)
        return values[:k], vectors[:, :k]

    if isinstance(h, SparseOperator):
        operator = h.matrix
        real = not np.any(np.abs(h.matrix.imag.data if h.matrix.nnz else []) > 0)
        if real:
            operator = sp.csr_matrix(h.matrix.real)
    else:
        operator = h.as_linear_operator()
        real = h.real
    rng = np.random.default_rng(cfg.seed)
    v0 = rng.standard_normal(dim)
    if not real:
        v0 = v0 + 1j * rng.standard_normal(dim)
    ncv = min(dim, max(2 * k + 1, 24))
    logger.debug(f"eigsh: dim={dim} k={k} ncv={ncv} maxiter={cfg.eigsh_maxiter}")
    try:
        values, vectors = eigsh(operator, k=k, which="SA", v0=v0, ncv=ncv,
                                maxiter=cfg.eigsh_maxiter, tol=cfg.eigsh_tol)
    except ArpackNoConvergence as e:
        raise NonConvergenceError(f"eigsh 未收敛（dim={dim}, k={k}）: {e}")
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order].astype(np.complex128)
    image = h.apply(vectors)
    residual = np.linalg.norm(image - vectors * values[None, :], axis=0)
    worst = float(np.max(residual / np.maximum(1.0, np.abs(values))))
    if worst > cfg.tolerances.tqo:
        raise NonConvergenceError(f"eigsh 残差 {worst:.3e} 超过 {cfg.tolerances.tqo}")
    return values, vectors


def low_spectrum(h: AnyOperator, k: int, cfg: Optional[Settings] = None,
                 method: str = "auto") -> np.ndarray:
    """最低的 k 个本征值（升序）"""
    values, _ = low_eigenpairs(h, k, cfg, method)
    return values


def ground_level(h: AnyOperator, cfg: Optional[Settings] = None, threshold: float = 0.5,
                 method: str = "auto") -> Tuple[np.ndarray, np.ndarray]:
    """
    低于 λ_min + threshold 的全部本征对；迭代模式下逐步加大 k 直到看到能级之上的本征值

    Returns:
        (本征值, 本征向量)
    """
    cfg = cfg or settings
    k = min(h.dim, cfg.gsd_block)
    while True:
        values, vectors = low_eigenpairs(h, k, cfg, method)
        keep = values < values[0] + threshold
        if not keep.all() or k >= h.dim:
            return values[keep], vectors[:, keep]
        k = min(h.dim, 2 * k)
        logger.debug(f"基态能级尚未闭合，扩大 k 至 {k}")


# ---------------------------------------------------------------------------
# Gram 矩阵
# ---------------------------------------------------------------------------

def gram(ops: Sequence, rho, tag: str = "") -> GramMatrix:
    """
    G_ij = tr(O_i† O_j ρ)

    对投影算子 P 有 ‖O P‖_F² = tr(O† O P)，所以 G 的零空间正是 (Σ c_i O_i) P = 0 的系数向量。

    Args:
        ops: 同维稀疏算子列表
        rho: 同维算子（投影算子或其约化）
        tag: 基底来源标记

    Returns:
        GramMatrix: 顺序与输入一致
    """
    rho = sp.csr_matrix(rho, dtype=np.complex128)
    d = rho.shape[0]
    rows_m, cols_m, vals_m = [], [], []
    rows_w, cols_w, vals_w = [], [], []
    for i, op in enumerate(ops):
        m = sp.csr_matrix(op, dtype=np.complex128)
        if m.shape != rho.shape:
            raise DimensionMismatchError(f"算子 {i} 维数 {m.shape} 与 ρ {rho.shape} 不匹配")
        coo = m.tocoo()
        rows_m.append(coo.row.astype(np.int64) * d + coo.col)
        cols_m.append(np.full(coo.nnz, i, dtype=np.int64))
        vals_m.append(coo.data)
        prod = (m @ rho).tocoo()
        rows_w.append(prod.row.astype(np.int64) * d + prod.col)
        cols_w.append(np.full(prod.nnz, i, dtype=np.int64))
        vals_w.append(prod.data)
    n = len(ops)

    def stack(rows, cols, vals):
        if not rows:
            return sp.csc_matrix((d * d, n), dtype=np.complex128)
        return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(d * d, n))

    basis = stack(rows_m, cols_m, vals_m)
    images = stack(rows_w, cols_w, vals_w)
    g = (basis.conj().T @ images).tocsr()
    g = ((g + g.conj().T) / 2).tocsr()
    g.sum_duplicates()
    return GramMatrix(matrix=g, tag=tag)


def null_space_blocks(g: GramMatrix, rel_tol: float,
                      cap: Optional[int] = None) -> Tuple[List[Tuple[np.ndarray, np.ndarray]], float]:
    """
    按块求 Gram 矩阵的零空间

    Args:
        g: Gram 矩阵
        rel_tol: 相对阈值（本征值 ≤ rel_tol·‖G‖ 视为零）

    Returns:
        ([(分量下标, 零向量列)], ‖G‖)
    """
    blocks = g.blocks(cap)
    norm = 0.0
    for _, values, _ in blocks:
        if len(values):
            norm = max(norm, float(np.max(np.abs(values))))
    threshold = rel_tol * norm
    result = []
    for indices, values, vectors in blocks:
        keep = values <= threshold
        if keep.any():
            result.append((indices, vectors[:, keep]))
    return result, norm
