"""
格点模型公共部分：打包基矢、局域算子、约束扇区、基态空间与区域约化
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from config import Settings, settings
from exceptions import CapExceededError, PreconditionError
from models import GsdMethod, ModelFamily, ModelSummary, TermKind
from services.cell_complex import CellComplex, Region
from services.spectra import (
    ApplyOperator,
    SparseOperator,
    compose_chain,
    ground_level,
    max_abs,
    projector_range,
)

logger = logging.getLogger(__name__)

INT64_LIMIT = 2 ** 63 - 1


class EdgeColoringIndex:
    """每条边一个标签的混合进制打包编码，边 0 为最低位"""

    def __init__(self, num_edges: int, radix: int):
        if radix < 1:
            raise PreconditionError(f"标签数必须为正: {radix}")
        if radix > 1 and num_edges * math.log2(radix) >= 63:
            raise CapExceededError("packed_index", radix ** num_edges, INT64_LIMIT)
        self.num_edges = num_edges
        self.radix = radix
        self.strides = radix ** np.arange(num_edges, dtype=np.int64)

    @property
    def dim(self) -> int:
        return int(self.radix ** self.num_edges)

    def encode(self, labels) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[-1:] != (self.num_edges,):
            raise PreconditionError(f"标签向量长度应为 {self.num_edges}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.radix):
            raise PreconditionError(f"标签超出范围 0..{self.radix - 1}")
        return labels @ self.strides

    def decode(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        if states.size and (states.min() < 0 or states.max() >= self.dim):
            raise PreconditionError(f"打包状态超出范围 0..{self.dim - 1}")
        return (states[..., None] // self.strides) % self.radix

    def digits(self, states: np.ndarray, edges: Sequence[int]) -> np.ndarray:
        return (np.asarray(states, dtype=np.int64)[:, None] // self.strides[list(edges)]) % self.radix


DWBasisIndex = EdgeColoringIndex
LWBasisIndex = EdgeColoringIndex


def local_configurations(radix: int, k: int) -> np.ndarray:
    """局域空间全部构型，形状 (radix^k, k)，第 0 位最低"""
    weights = radix ** np.arange(k, dtype=np.int64)
    return (np.arange(radix ** k, dtype=np.int64)[:, None] // weights) % radix


def _gather(matrix: sp.csc_matrix, radix: int, strides: np.ndarray, states: np.ndarray) -> sp.csr_matrix:
    """把局域矩阵作用到一组有序打包状态上，落在状态集之外的像被丢弃"""
    k = len(strides)
    n = len(states)
    if n == 0:
        return sp.csr_matrix((0, 0), dtype=np.complex128)
    weights = radix ** np.arange(k, dtype=np.int64)
    digits = (states[:, None] // strides[None, :]) % radix
    loc = digits @ weights
    offset = local_configurations(radix, k) @ strides
    counts = np.diff(matrix.indptr)[loc]
    total = int(counts.sum())
    src = np.repeat(np.arange(n), counts)
    starts = matrix.indptr[loc]
    pos = np.repeat(starts - (np.cumsum(counts) - counts), counts) + np.arange(total)
    rows_local = matrix.indices[pos]
    targets = states[src] - offset[loc[src]] + offset[rows_local]
    idx = np.minimum(np.searchsorted(states, targets), n - 1)
    valid = states[idx] == targets
    return sp.csr_matrix((matrix.data[pos][valid], (idx[valid], src[valid])), shape=(n, n))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """支撑在若干条边上的算子；局域下标 = Σ x_{edges[i]} · radix^i，其余边上为恒等"""

    edges: Tuple[int, ...]
    radix: int
    matrix: sp.csr_matrix

    @property
    def local_dim(self) -> int:
        return int(self.radix ** len(self.edges))

    @property
    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def restrict(self, index: EdgeColoringIndex, states: np.ndarray) -> sp.csr_matrix:
        return _gather(self.matrix.tocsc(), self.radix, index.strides[list(self.edges)], states)

    def embed(self, edges: Sequence[int]) -> "LocalOperator":
        """扩展到更大的有序边集上（张量补恒等）"""
        edges = tuple(edges)
        missing = set(self.edges) - set(edges)
        if missing:
            raise PreconditionError(f"边 {sorted(missing)} 不在目标支撑内")
        positions = np.array([edges.index(e) for e in self.edges], dtype=np.int64)
        strides = self.radix ** positions
        states = np.arange(self.radix ** len(edges), dtype=np.int64)
        return LocalOperator(edges=edges, radix=self.radix,
                             matrix=_gather(self.matrix.tocsc(), self.radix, strides, states))

    def full_operator(self, index: EdgeColoringIndex, cfg: Optional[Settings] = None) -> SparseOperator:
        cfg = cfg or settings
        if index.dim > cfg.dense_dim_cap:
            raise CapExceededError("dense_dim_cap", index.dim, cfg.dense_dim_cap)
        states = np.arange(index.dim, dtype=np.int64)
        return SparseOperator.from_matrix(self.restrict(index, states), basis=states, cfg=cfg)

    def hermitian_residual(self) -> float:
        return max_abs(self.matrix - self.matrix.conj().T)

    def projector_residual(self) -> float:
        return max_abs(self.matrix @ self.matrix - self.matrix)


@dataclass(frozen=True, eq=False)
class LocalTerm:
    kind: TermKind
    cell: int
    region: Region
    op: LocalOperator

    @property
    def label(self) -> str:
        return f"{self.kind.value}[{self.cell}]"


@dataclass(frozen=True, eq=False)
class Constraint:
    """对角约束：allowed[局域下标] 为真的构型被保留"""

    edges: Tuple[int, ...]
    allowed: np.ndarray


@dataclass(frozen=True, eq=False)
class GroundSpace:
    states: np.ndarray   # 工作空间的有序打包基矢
    vectors: np.ndarray  # 正交归一列向量
    method: GsdMethod

    @property
    def gsd(self) -> int:
        return int(self.vectors.shape[1])


def edge_order(c: CellComplex) -> List[int]:
    """按顶点广度优先次序排列边，使约束尽早闭合"""
    graph = nx.Graph()
    graph.add_nodes_from(range(c.num_vertices))
    graph.add_edges_from(c.edges)
    position: Dict[int, int] = {}
    for start in range(c.num_vertices):
        if start in position:
            continue
        for v in nx.bfs_tree(graph, start):
            position[v] = len(position)
    return sorted(range(c.num_edges), key=lambda e: (max(position[c.edges[e][0]], position[c.edges[e][1]]), e))


def enumerate_sector(c: CellComplex, index: EdgeColoringIndex, constraints: Sequence[Constraint],
                     cfg: Optional[Settings] = None) -> np.ndarray:
    """
    逐边展开并在约束闭合时立即过滤，枚举满足全部对角约束的打包状态

    Args:
        c: 胞腔复形
        index: 打包编码
        constraints: 对角约束

    Returns:
        np.ndarray: 升序的扇区状态
    """
    cfg = cfg or settings
    order = edge_order(c)
    position = {e: i for i, e in enumerate(order)}
    closing = defaultdict(list)
    frontier = np.zeros(1, dtype=np.int64)
    for con in constraints:
        if not con.edges:
            if not con.allowed[0]:
                return np.zeros(0, dtype=np.int64)
            continue
        closing[max(position[e] for e in con.edges)].append(con)
    for step, e in enumerate(order):
        frontier = (frontier[:, None] + np.arange(index.radix, dtype=np.int64) * index.strides[e]).ravel()
        for con in closing[step]:
            weights = index.radix ** np.arange(len(con.edges), dtype=np.int64)
            frontier = frontier[con.allowed[index.digits(frontier, con.edges) @ weights]]
        if len(frontier) > cfg.enumeration_cap:
            raise CapExceededError("enumeration_cap", int(len(frontier)), cfg.enumeration_cap)
    logger.debug(f"扇区枚举完成: {len(frontier)} 个状态")
    return np.sort(frontier)


def matrix_unit_basis(edges: Sequence[int], radix: int, cfg: Optional[Settings] = None) -> List[LocalOperator]:
    """
    区域上的矩阵单位基 E_{ab}，按 (a, b) 字典序

    Args:
        edges: 区域的边（升序）
        radix: 每条边的标签数

    Returns:
        List[LocalOperator]: radix^(2k) 个算子
    """
    cfg = cfg or settings
    edges = tuple(sorted(edges))
    d = radix ** len(edges)
    if d * d > cfg.operator_basis_cap:
        raise CapExceededError("operator_basis_cap", d * d, cfg.operator_basis_cap)
    basis = []
    for a in range(d):
        for b in range(d):
            unit = sp.csr_matrix(([1.0 + 0.0j], ([a], [b])), shape=(d, d))
            basis.append(LocalOperator(edges=edges, radix=radix, matrix=unit))
    return basis


def partial_trace(matrix, edges_b: Sequence[int], edges_a: Sequence[int], radix: int) -> sp.csr_matrix:
    """B 上的算子对 B\\A 求偏迹，得到 A 上的算子"""
    edges_b = list(edges_b)
    keep = [edges_b.index(e) for e in edges_a]
    rest = [i for i in range(len(edges_b)) if i not in keep]
    weights_b = radix ** np.arange(len(edges_b), dtype=np.int64)
    weights_a = radix ** np.arange(len(keep), dtype=np.int64)
    weights_r = radix ** np.arange(len(rest), dtype=np.int64)
    coo = sp.coo_matrix(matrix)
    rows = (coo.row.astype(np.int64)[:, None] // weights_b) % radix
    cols = (coo.col.astype(np.int64)[:, None] // weights_b) % radix
    same = (rows[:, rest] @ weights_r) == (cols[:, rest] @ weights_r)
    d_a = radix ** len(keep)
    return sp.csr_matrix((coo.data[same], ((rows[:, keep] @ weights_a)[same], (cols[:, keep] @ weights_a)[same])),
                         shape=(d_a, d_a))


class RegionReduction:
    """
    基态空间在区域上的约化

    把基态向量 V 按 (区域外构型, 区域构型) 重排为 Ψ_k，T[k,l,a,b] = Σ_r conj(Ψ_k[r,a]) Ψ_l[r,b]，
    于是 V†OV = Σ_ab O[a,b] T[:,:,a,b]，tr_外(P) = Σ_k T[k,k,b,a]。
    """

    def __init__(self, ground: GroundSpace, index: EdgeColoringIndex, edges: Sequence[int],
                 cfg: Optional[Settings] = None):
        cfg = cfg or settings
        self.edges = tuple(sorted(edges))
        self.radix = index.radix
        self.gsd = ground.gsd
        k = len(self.edges)
        self.local_dim = self.radix ** k
        if self.local_dim * self.gsd > cfg.dense_dim_cap:
            raise CapExceededError("dense_dim_cap", self.local_dim * self.gsd, cfg.dense_dim_cap)
        states = ground.states
        digits = index.digits(states, self.edges)
        loc = digits @ (self.radix ** np.arange(k, dtype=np.int64))
        outside = states - digits @ index.strides[list(self.edges)]
        keys, rest_ids = np.unique(outside, return_inverse=True)
        gsd = self.gsd
        rows = np.repeat(rest_ids, gsd)
        cols = (loc[:, None] * gsd + np.arange(gsd)[None, :]).ravel()
        psi = sp.csr_matrix((ground.vectors.ravel(), (rows, cols)),
                            shape=(len(keys), self.local_dim * gsd))
        dense = (psi.conj().T @ psi).toarray()
        self.blocks = dense.reshape(self.local_dim, gsd, self.local_dim, gsd)

    def project(self, local_matrix) -> np.ndarray:
        """V† O V"""
        coo = sp.coo_matrix(local_matrix)
        out = np.zeros((self.gsd, self.gsd), dtype=np.complex128)
        for a, b, value in zip(coo.row, coo.col, coo.data):
            out += value * self.blocks[a, :, b, :]
        return out

    def density(self) -> np.ndarray:
        """tr_外(P)，迹等于 GSD"""
        return np.einsum("bkak->ab", self.blocks)


class LatticeModel:
    """
    对易投影算子模型的公共实现：局域项、对角约束确定的工作扇区、哈密顿量、基态投影与基态空间
    """

    family: ModelFamily = None

    def __init__(self, complex: CellComplex, index: EdgeColoringIndex, terms: List[LocalTerm],
                 constraints: List[Constraint], algebra_name: str, cfg: Optional[Settings] = None,
                 full_space: bool = False, frustrated: bool = False):
        self.complex = complex
        self.index = index
        self.terms = terms
        self.constraints = constraints
        self.algebra_name = algebra_name
        self.cfg = cfg or settings
        self.full_space = full_space
        self.frustrated = frustrated
        self._restricted: Dict[Tuple[int, str], sp.csr_matrix] = {}
        self._ground: Optional[GroundSpace] = None

    @property
    def dim(self) -> int:
        return self.index.dim

    @property
    def radix(self) -> int:
        return self.index.radix

    @property
    def description(self) -> str:
        return f"{self.family.value}/{self.algebra_name}/{self.complex.name}"

    def term_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for term in self.terms:
            counts[term.kind.value] = counts.get(term.kind.value, 0) + 1
        return counts

    def full_states(self) -> np.ndarray:
        if self.dim > self.cfg.matrix_free_dim_cap:
            raise CapExceededError("matrix_free_dim_cap", self.dim, self.cfg.matrix_free_dim_cap)
        return np.arange(self.dim, dtype=np.int64)

    @cached_property
    def sector(self) -> np.ndarray:
        if self.full_space:
            return self.full_states()
        states = enumerate_sector(self.complex, self.index, self.constraints, self.cfg)
        if len(states) > self.cfg.matrix_free_dim_cap:
            raise CapExceededError("matrix_free_dim_cap", int(len(states)), self.cfg.matrix_free_dim_cap)
        return states

    def states(self, space: str = "sector") -> np.ndarray:
        return self.full_states() if space == "full" else self.sector

    def restricted(self, i: int, space: str = "sector") -> sp.csr_matrix:
        key = (i, space)
        if key not in self._restricted:
            self._restricted[key] = self.terms[i].op.restrict(self.index, self.states(space))
        return self._restricted[key]

    def term_operator(self, i: int, space: str = "sector") -> SparseOperator:
        return SparseOperator.from_matrix(self.restricted(i, space), basis=self.states(space),
                                          tag=self.terms[i].label, cfg=self.cfg)

    def hamiltonian(self, space: str = "sector") -> ApplyOperator:
        """H = Σ(1 − h)，只提供作用回调"""
        states = self.states(space)
        matrices = [self.restricted(i, space) for i in range(len(self.terms))]
        count = len(matrices)
        real = all(not m.nnz or not np.any(m.data.imag) for m in matrices)

        def apply(x):
            x = np.asarray(x, dtype=np.complex128)
            out = count * x
            for m in matrices:
                out = out - m @ x
            return out

        return ApplyOperator(dim=len(states), apply=apply, real=real, tag=f"H[{self.description}]")

    def ground_projector(self) -> SparseOperator:
        """扇区上的 P = ∏ 项（列表靠后的项先作用）"""
        states = self.sector
        if len(states) > self.cfg.dense_dim_cap:
            raise CapExceededError("dense_dim_cap", int(len(states)), self.cfg.dense_dim_cap)
        ops = [self.term_operator(i) for i in range(len(self.terms))]
        if not ops:
            return SparseOperator.identity(len(states))
        product = compose_chain(ops, self.cfg)
        return SparseOperator(matrix=product.matrix, hermitian=True, basis=states, tag="P")

    def ground_space(self) -> GroundSpace:
        if self._ground is None:
            self._ground = self._compute_ground_space()
            logger.info(f"{self.description}: 基态简并度 {self._ground.gsd}（{self._ground.method.value}）")
        return self._ground

    def _compute_ground_space(self) -> GroundSpace:
        states = self.sector
        if self.frustrated:
            values, vectors = ground_level(self.hamiltonian(), self.cfg, threshold=self.cfg.tolerances.nontrivial)
            return GroundSpace(states=states, vectors=vectors, method=GsdMethod.SPECTRUM)
        if len(states) <= self.cfg.dense_dim_cap:
            vectors = projector_range(self.ground_projector(), self.cfg)
            return GroundSpace(states=states, vectors=vectors, method=GsdMethod.RANK)
        return self._large_ground_space()

    def _large_ground_space(self) -> GroundSpace:
        logger.warning(f"{self.description}: 扇区 {len(self.sector)} 超过稠密上限，改用低能谱求基态")
        values, vectors = ground_level(self.hamiltonian(), self.cfg)
        if len(values) and abs(values[0]) > self.cfg.tolerances.frustration:
            return GroundSpace(states=self.sector, vectors=vectors[:, :0], method=GsdMethod.SPECTRUM)
        return GroundSpace(states=self.sector, vectors=vectors, method=GsdMethod.SPECTRUM)

    def local_operator_basis(self, region: Region) -> List[LocalOperator]:
        return matrix_unit_basis(region.edges, self.radix, self.cfg)

    def reduction(self, edges: Sequence[int]) -> RegionReduction:
        return RegionReduction(self.ground_space(), self.index, edges, self.cfg)

    def terms_within(self, region: Region) -> List[int]:
        return [i for i, t in enumerate(self.terms) if set(t.op.edges) <= region.edge_set]

    def with_term(self, i: int, term: LocalTerm) -> "LatticeModel":
        """替换一项，得到在全空间上工作的受挫模型"""
        terms = list(self.terms)
        terms[i] = term
        clone = self.__class__.__new__(self.__class__)
        clone.__dict__.update({k: v for k, v in self.__dict__.items() if k not in ("sector",)})
        clone.terms = terms
        clone.full_space = True
        clone.frustrated = True
        clone._restricted = {}
        clone._ground = None
        return clone

    def summary(self, cellulation: str) -> ModelSummary:
        projector = max((t.op.projector_residual() for t in self.terms), default=0.0)
        hermitian = max((t.op.hermitian_residual() for t in self.terms), default=0.0)
        return ModelSummary(family=self.family, algebra=self.algebra_name, cellulation=cellulation,
                            surface=self.complex.surface_tag, dim=self.dim, sector_dim=int(len(self.sector)),
                            term_counts=self.term_counts(), projector_residual=projector,
                            hermitian_residual=hermitian)
