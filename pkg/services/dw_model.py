"""
Dijkgraaf-Witten（有限群规范）格点模型：顶点规范平均 H_v、面平坦性 H_f、规范轨道计数
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from config import Settings, settings
from exceptions import InvalidComplexError
from models import GsdMethod, ModelFamily, TermKind
from services.algebra import FiniteGroup
from services.cell_complex import CellComplex, Region, incident_edges, make_region, validate
from services.lattice_model import (
    Constraint,
    DWBasisIndex,
    GroundSpace,
    LatticeModel,
    LocalOperator,
    LocalTerm,
    enumerate_sector,
    local_configurations,
)
from services.spectra import SparseOperator

logger = logging.getLogger(__name__)


class DWModel(LatticeModel):
    family = ModelFamily.DW

    def __init__(self, complex: CellComplex, group: FiniteGroup, index: DWBasisIndex,
                 terms: List[LocalTerm], constraints: List[Constraint], cfg: Optional[Settings] = None):
        super().__init__(complex, index, terms, constraints, group.name, cfg)
        self.group = group

    def _large_ground_space(self) -> GroundSpace:
        # 平坦联络的规范轨道均匀叠加正是基态
        count, labels = _orbits(self.complex, self.group, self.index, self.sector)
        sizes = np.bincount(labels, minlength=count)
        vectors = np.zeros((len(self.sector), count), dtype=np.complex128)
        vectors[np.arange(len(self.sector)), labels] = 1.0 / np.sqrt(sizes[labels])
        logger.info(f"{self.description}: 扇区 {len(self.sector)} 较大，由 {count} 个规范轨道构造基态")
        return GroundSpace(states=self.sector, vectors=vectors, method=GsdMethod.ORACLE)


def _edge_roles(c: CellComplex, v: int, support: Tuple[int, ...]) -> List[str]:
    roles = []
    for e in support:
        src, dst = c.edges[e]
        if src == v and dst == v:
            roles.append("loop")
        elif src == v:
            roles.append("out")
        else:
            roles.append("in")
    return roles


def _gauge_digits(group: FiniteGroup, digits: np.ndarray, roles: List[str], h: int) -> np.ndarray:
    """顶点处以 h 做规范变换：出边 g→h⁻¹g，入边 g→gh，自环 g→h⁻¹gh"""
    mult, inv = group.mult, group.inv
    out = digits.copy()
    for i, role in enumerate(roles):
        x = digits[:, i]
        if role == "out":
            out[:, i] = mult[inv[h], x]
        elif role == "in":
            out[:, i] = mult[x, h]
        else:
            out[:, i] = mult[mult[inv[h], x], h]
    return out


def _vertex_operator(c: CellComplex, group: FiniteGroup, v: int) -> LocalOperator:
    support = incident_edges(c, v)
    roles = _edge_roles(c, v, support)
    n = group.order
    configs = local_configurations(n, len(support))
    weights = n ** np.arange(len(support), dtype=np.int64)
    cols = np.arange(len(configs), dtype=np.int64)
    rows_all, cols_all = [], []
    for h in range(n):
        rows_all.append(_gauge_digits(group, configs, roles, h) @ weights)
        cols_all.append(cols)
    rows = np.concatenate(rows_all)
    data = np.full(len(rows), 1.0 / n, dtype=np.complex128)
    matrix = sp.csr_matrix((data, (rows, np.concatenate(cols_all))), shape=(len(configs), len(configs)))
    matrix.sum_duplicates()
    return LocalOperator(edges=support, radix=n, matrix=matrix)


def flatness_mask(c: CellComplex, group: FiniteGroup, f: int) -> Tuple[Tuple[int, ...], np.ndarray]:
    """
    面的平坦性掩码

    Returns:
        (支撑边, 掩码)：沿起点出发的有向闭路把 g_e^{±1} 依次相乘，乘积为单位元的局域构型为真
    """
    face = c.faces[f]
    support = tuple(sorted(face.edges))
    n = group.order
    configs = local_configurations(n, len(support))
    product = np.full(len(configs), group.identity, dtype=np.int64)
    for e, sign in face.walk:
        x = configs[:, support.index(e)]
        product = group.mult[product, x if sign > 0 else group.inv[x]]
    return support, product == group.identity


def flat_constraints(c: CellComplex, group: FiniteGroup) -> List[Constraint]:
    return [Constraint(*flatness_mask(c, group, f)) for f in range(c.num_faces)]


def _check_complex(c: CellComplex):
    violations = validate(c)
    if violations:
        raise InvalidComplexError(violations)


def dw_build(c: CellComplex, g: FiniteGroup, cfg: Optional[Settings] = None) -> DWModel:
    """
    构建 DW 模型

    Args:
        c: 闭曲面胞腔复形
        g: 有限群

    Returns:
        DWModel: 顶点项在前、面项在后
    """
    cfg = cfg or settings
    _check_complex(c)
    index = DWBasisIndex(c.num_edges, g.order)
    terms: List[LocalTerm] = []
    for v in range(c.num_vertices):
        op = _vertex_operator(c, g, v)
        terms.append(LocalTerm(TermKind.VERTEX, v, make_region(c, op.edges), op))
    constraints = flat_constraints(c, g)
    for f, con in enumerate(constraints):
        diag = con.allowed.astype(np.complex128)
        matrix = sp.diags(diag, format="csr")
        matrix.eliminate_zeros()
        op = LocalOperator(edges=con.edges, radix=g.order, matrix=matrix)
        terms.append(LocalTerm(TermKind.FACE, f, make_region(c, op.edges), op))
    model = DWModel(c, g, index, terms, constraints, cfg)
    logger.info(f"构建 DW 模型 {model.description}: dim={g.order}^{c.num_edges} 项数={len(terms)}")
    return model


def dw_ground_projector(m: DWModel) -> SparseOperator:
    """平坦扇区上的 P = ∏_v H_v ∏_f H_f"""
    return m.ground_projector()


def _orbits(c: CellComplex, group: FiniteGroup, index: DWBasisIndex, states: np.ndarray) -> Tuple[int, np.ndarray]:
    n = len(states)
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    rows, cols = [], []
    for v in range(c.num_vertices):
        support = incident_edges(c, v)
        if not support:
            continue
        roles = _edge_roles(c, v, support)
        digits = index.digits(states, support)
        base = states - digits @ index.strides[list(support)]
        for h in range(group.order):
            if h == group.identity:
                continue
            moved = base + _gauge_digits(group, digits, roles, h) @ index.strides[list(support)]
            idx = np.minimum(np.searchsorted(states, moved), n - 1)
            hit = states[idx] == moved
            rows.append(np.arange(n)[hit])
            cols.append(idx[hit])
    if rows:
        graph = sp.csr_matrix((np.ones(sum(len(r) for r in rows)), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n, n))
    else:
        graph = sp.csr_matrix((n, n))
    count, labels = connected_components(graph, directed=False)
    logger.debug(f"规范轨道: {n} 个平坦构型 → {count} 个轨道")
    return int(count), labels


def dw_gauge_orbits(c: CellComplex, g: FiniteGroup, cfg: Optional[Settings] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    平坦联络及其规范轨道标号

    Returns:
        (升序打包状态, 轨道标号)
    """
    cfg = cfg or settings
    _check_complex(c)
    index = DWBasisIndex(c.num_edges, g.order)
    states = enumerate_sector(c, index, flat_constraints(c, g), cfg)
    _, labels = _orbits(c, g, index, states)
    return states, labels


def dw_gsd_oracle(c: CellComplex, g: FiniteGroup, cfg: Optional[Settings] = None) -> int:
    """组合计数：平坦联络的规范轨道数，不做线性代数"""
    _, labels = dw_gauge_orbits(c, g, cfg)
    return int(labels.max() + 1) if len(labels) else 0


def random_gauge_transform(c: CellComplex, g: FiniteGroup, labels: np.ndarray,
                           rng: np.random.Generator) -> np.ndarray:
    """
    对一个边着色做随机规范变换

    Args:
        labels: 每条边的群元下标
        rng: 随机数发生器

    Returns:
        np.ndarray: 变换后的着色
    """
    gauge = rng.integers(0, g.order, size=c.num_vertices)
    out = np.asarray(labels, dtype=np.int64).copy()
    for e, (src, dst) in enumerate(c.edges):
        out[e] = g.mult[g.mult[g.inv[gauge[src]], out[e]], gauge[dst]]
    return out


def is_flat(c: CellComplex, g: FiniteGroup, labels: np.ndarray) -> bool:
    for face in c.faces:
        product = g.identity
        for e, sign in face.walk:
            x = int(labels[e])
            product = g.mult[product, x if sign > 0 else g.inv[x]]
        if product != g.identity:
            return False
    return True


def dw_local_operator_basis(m: DWModel, r: Region) -> List[LocalOperator]:
    """区域上的矩阵单位基（|G|^(2|r|) 个）"""
    return m.local_operator_basis(r)
