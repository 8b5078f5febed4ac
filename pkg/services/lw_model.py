"""
Levin-Wen 弦网模型：三价胞腔上的顶点融合投影 Q_v 与面算子 B_p
"""
import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from config import Settings, settings
from exceptions import (
    AlgebraValidationError,
    InvalidComplexError,
    NotTrivalentError,
)
from models import ModelFamily, TermKind
from services.algebra import FusionData, is_trivially_pointed, tetrahedral_residual, validate_group
from services.cell_complex import (
    CellComplex,
    Region,
    Step,
    face_is_simple,
    half_edges,
    incident_edges,
    is_trivalent,
    make_region,
    validate,
)
from services.dw_model import dw_gsd_oracle
from services.lattice_model import (
    Constraint,
    LWBasisIndex,
    LatticeModel,
    LocalOperator,
    LocalTerm,
    local_configurations,
)
from services.spectra import SparseOperator

logger = logging.getLogger(__name__)

HalfEdge = Tuple[int, int]  # (边, 端点)，端点 0 为起点


class LWModel(LatticeModel):
    family = ModelFamily.LW

    def __init__(self, complex: CellComplex, fusion: FusionData, index: LWBasisIndex,
                 terms: List[LocalTerm], constraints: List[Constraint], cfg: Optional[Settings] = None):
        super().__init__(complex, index, terms, constraints, fusion.name, cfg)
        self.fusion = fusion


def _outward(fd: FusionData, x: np.ndarray, end: int) -> np.ndarray:
    """半边标签：从顶点出发的边取 x，指向顶点的边取对偶"""
    return x if end == 0 else fd.dual[x]


def _vertex_constraint(c: CellComplex, fd: FusionData, v: int) -> Constraint:
    support = incident_edges(c, v)
    configs = local_configurations(fd.rank, len(support))
    a, b, d = [_outward(fd, configs[:, support.index(e)], end) for e, end in half_edges(c, v)]
    return Constraint(edges=support, allowed=fd.fusion[a, b, fd.dual[d]] > 0)


def _corner_legs(c: CellComplex, f: int) -> List[HalfEdge]:
    """第 i 个角点（第 i 步的终点）处不在面上的那条半边"""
    walk = c.faces[f].walk
    legs = []
    for i, (e, sign) in enumerate(walk):
        nxt_e, nxt_sign = walk[(i + 1) % len(walk)]
        arrival = (e, 1 if sign > 0 else 0)
        departure = (nxt_e, 0 if nxt_sign > 0 else 1)
        others = [h for h in half_edges(c, c.head((e, sign))) if h not in (arrival, departure)]
        legs.append(others[0])
    return legs


def _accumulate(entries: Dict[Tuple[int, int], complex], row: int, col: int, value: complex):
    entries[(row, col)] = entries.get((row, col), 0.0) + value


def _to_operator(support: Tuple[int, ...], radix: int, entries: Dict[Tuple[int, int], complex],
                 cfg: Settings) -> LocalOperator:
    d = radix ** len(support)
    if entries:
        keys = sorted(entries)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        data = np.array([entries[k] for k in keys], dtype=np.complex128)
        keep = np.abs(data) >= cfg.tolerances.drop
        matrix = sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(d, d))
    else:
        matrix = sp.csr_matrix((d, d), dtype=np.complex128)
    return LocalOperator(edges=support, radix=radix, matrix=matrix)


def _loop_moves(fd: FusionData, arcs: Sequence[int], outer: Sequence[int],
                s: int) -> Iterator[Tuple[Tuple[int, ...], complex]]:
    """
    简单面上 B_p^s 的非零矩阵元

    沿面的有向闭路，第 i 步的标签 A_i（反向走时取对偶），角点 i 处的外腿 L_i 取向外标签。
    B_p^s 把 A_i 换成 A'_i ∈ A_i⊗s，振幅为 ∏_i F^{L_i A_{i+1} s}_{A'_i}[A_i, A'_{i+1}]；
    角点不满足融合规则的构型被湮灭。

    Yields:
        (新的步标签, 振幅)
    """
    n = len(arcs)
    N = fd.fusion
    if not all(N[outer[i], arcs[(i + 1) % n], arcs[i]] for i in range(n)):
        return
    for new in product(*[fd.products(a, s) for a in arcs]):
        if not all(N[outer[i], new[(i + 1) % n], new[i]] for i in range(n)):
            continue
        amp = 1.0 + 0.0j
        for i in range(n):
            amp *= fd.F(outer[i], arcs[(i + 1) % n], s, new[i], arcs[i], new[(i + 1) % n])
        yield new, amp


def _plaquette_simple(c: CellComplex, fd: FusionData, f: int, cfg: Settings) -> LocalOperator:
    """简单面上的 B_p = Σ_s (d_s/D²) B_p^s"""
    walk = c.faces[f].walk
    legs = _corner_legs(c, f)
    support = tuple(sorted({e for e, _ in walk} | {e for e, _ in legs}))
    pos = {e: i for i, e in enumerate(support)}
    r = fd.rank
    configs = local_configurations(r, len(support))
    weights = r ** np.arange(len(support), dtype=np.int64)
    arcs = np.column_stack([configs[:, pos[e]] if sign > 0 else fd.dual[configs[:, pos[e]]]
                            for e, sign in walk])
    outer = np.column_stack([_outward(fd, configs[:, pos[e]], end) for e, end in legs])
    admissible = np.ones(len(configs), dtype=bool)
    for i in range(len(walk)):
        admissible &= fd.fusion[outer[:, i], arcs[:, (i + 1) % len(walk)], arcs[:, i]] > 0
    D2 = fd.total_dim_sq
    entries: Dict[Tuple[int, int], complex] = {}
    for col in np.flatnonzero(admissible):
        a = [int(x) for x in arcs[col]]
        legs_here = [int(x) for x in outer[col]]
        for s in range(r):
            coef = fd.qdim[s] / D2
            for new, amp in _loop_moves(fd, a, legs_here, s):
                digits = configs[col].copy()
                for i, (e, sign) in enumerate(walk):
                    digits[pos[e]] = new[i] if sign > 0 else fd.dual[new[i]]
                _accumulate(entries, int(digits @ weights), int(col), coef * amp)
    return _to_operator(support, r, entries, cfg)


@dataclass(frozen=True)
class TruncatedFace:
    """
    面的截角剖分

    每个边界步在面内侧取两个附着点（入点靠近起点，出点靠近终点），第 i 步的出点与第 i+1 步的入点用弦相连。
    面被切成每个角点一个三角形和中间一个多边形，各块都是简单面；同一条边被两侧经过时，正向步的附着点排在前面，
    两侧的附着区间互不重叠。
    """

    edges: List[Tuple[int, int]]    # 细边 (起点, 终点)
    origin: List[int]               # 细边所属的原边，弦为 -1
    pieces: List[List[Step]]        # 角点三角形在前，中间多边形在最后
    legs: List[List[HalfEdge]]
    support: Tuple[int, ...]

    @property
    def chords(self) -> List[int]:
        return [k for k, e in enumerate(self.origin) if e < 0]


def truncate_face(c: CellComplex, f: int) -> TruncatedFace:
    walk = c.faces[f].walk
    n = len(walk)
    sides: Dict[int, List[int]] = {}
    for i, (e, _) in enumerate(walk):
        sides.setdefault(e, []).append(i)
    corners = {c.head(step) for step in walk}
    support = tuple(sorted({e for v in corners for e in incident_edges(c, v)}))

    next_vertex = c.num_vertices
    point: Dict[Tuple[int, str], int] = {}
    chain: Dict[int, List[int]] = {}
    for e in support:
        src, dst = c.edges[e]
        inner = []
        for i in sorted(sides.get(e, []), key=lambda i: -walk[i][1]):
            for tag in (("in", "out") if walk[i][1] > 0 else ("out", "in")):
                point[(i, tag)] = next_vertex
                inner.append(next_vertex)
                next_vertex += 1
        chain[e] = [src] + inner + [dst]

    edges: List[Tuple[int, int]] = []
    origin: List[int] = []
    segments: Dict[int, List[int]] = {}
    for e in support:
        segments[e] = []
        for a, b in zip(chain[e], chain[e][1:]):
            segments[e].append(len(edges))
            edges.append((a, b))
            origin.append(e)
    chords = []
    for i in range(n):
        chords.append(len(edges))
        edges.append((point[(i, "out")], point[((i + 1) % n, "in")]))
        origin.append(-1)

    def position(i: int, tag: str) -> int:
        e, sign = walk[i]
        if tag == "tail":
            return 0 if sign > 0 else len(chain[e]) - 1
        if tag == "head":
            return len(chain[e]) - 1 if sign > 0 else 0
        return chain[e].index(point[(i, tag)])

    def run(i: int, start: str, stop: str) -> List[Step]:
        e, sign = walk[i]
        a, b = position(i, start), position(i, stop)
        if sign > 0:
            return [(segments[e][t], 1) for t in range(a, b)]
        return [(segments[e][t], -1) for t in range(a - 1, b - 1, -1)]

    pieces = []
    for i in range(n):
        j = (i + 1) % n
        pieces.append(run(i, "out", "head") + run(j, "tail", "in") + [(chords[i], -1)])
    pieces.append([step for i in range(n) for step in run(i, "in", "out") + [(chords[i], 1)]])

    incidence: Dict[int, List[HalfEdge]] = {}
    for k, (a, b) in enumerate(edges):
        incidence.setdefault(a, []).append((k, 0))
        incidence.setdefault(b, []).append((k, 1))
    legs = []
    for piece in pieces:
        piece_legs = []
        for t, (k, sign) in enumerate(piece):
            nk, nsign = piece[(t + 1) % len(piece)]
            arrival = (k, 1 if sign > 0 else 0)
            departure = (nk, 0 if nsign > 0 else 1)
            corner = edges[k][1] if sign > 0 else edges[k][0]
            piece_legs.append([h for h in incidence[corner] if h not in (arrival, departure)][0])
        legs.append(piece_legs)
    return TruncatedFace(edges=edges, origin=origin, pieces=pieces, legs=legs, support=support)


def _apply_loop(fd: FusionData, piece: List[Step], legs: List[HalfEdge], s: int,
                state: Dict[Tuple[int, ...], complex], tol: float) -> Dict[Tuple[int, ...], complex]:
    out: Dict[Tuple[int, ...], complex] = {}
    for labels, amp in state.items():
        arcs = [labels[k] if sign > 0 else int(fd.dual[labels[k]]) for k, sign in piece]
        outer = [labels[k] if end == 0 else int(fd.dual[labels[k]]) for k, end in legs]
        for new, factor in _loop_moves(fd, arcs, outer, s):
            fine = list(labels)
            for (k, sign), x in zip(piece, new):
                fine[k] = x if sign > 0 else int(fd.dual[x])
            key = tuple(fine)
            out[key] = out.get(key, 0.0) + amp * factor
    return {key: amp for key, amp in out.items() if abs(amp) > tol}


def _plaquette_truncated(c: CellComplex, fd: FusionData, f: int, cfg: Settings) -> LocalOperator:
    """
    任意面上的 B_p：在截角剖分上依次作用各块的 B_q^s，再投影到弦全为真空的分量

    n 条弦时 W† ∏_q B_q^s W = d_s^{-n} B_p^s（每条真空弦把两侧的 s 圈接成一个，系数 1/d_s）。
    """
    t = truncate_face(c, f)
    support = t.support
    pos = {e: i for i, e in enumerate(support)}
    owner = [pos[e] if e >= 0 else -1 for e in t.origin]
    first = [t.origin.index(e) for e in support]
    chords = t.chords
    r = fd.rank
    configs = local_configurations(r, len(support))
    weights = [r ** i for i in range(len(support))]
    D2 = fd.total_dim_sq
    entries: Dict[Tuple[int, int], complex] = {}
    for col, labels in enumerate(configs):
        start = tuple(int(labels[o]) if o >= 0 else fd.unit for o in owner)
        for s in range(r):
            state = {start: 1.0 + 0.0j}
            for piece, legs in zip(t.pieces, t.legs):
                state = _apply_loop(fd, piece, legs, s, state, cfg.tolerances.drop)
                if not state:
                    break
            scale = fd.qdim[s] / D2 * fd.qdim[s] ** len(chords)
            for fine, amp in state.items():
                if any(fine[k] != fd.unit for k in chords):
                    continue
                row = sum(fine[first[i]] * weights[i] for i in range(len(support)))
                _accumulate(entries, row, col, scale * amp)
    return _to_operator(support, r, entries, cfg)


def _check_algebra(fd: FusionData, cfg: Settings):
    """无重数；平凡 F 的点状范畴之外要求四面体对称"""
    if np.any(fd.fusion > 1):
        raise AlgebraValidationError("multiplicity", f"{fd.name} 含重数大于 1 的融合规则")
    if is_trivially_pointed(fd, cfg.tolerances.validation):
        return
    residual = tetrahedral_residual(fd)
    if residual > cfg.tolerances.validation:
        raise AlgebraValidationError("tetrahedral", f"{fd.name} 的对称 6j 符号不满足四面体对称", residual)


def lw_build(c: CellComplex, fd: FusionData, cfg: Optional[Settings] = None) -> LWModel:
    """
    构建 Levin-Wen 模型

    Args:
        c: 三价闭曲面胞腔复形
        fd: 无重数、四面体对称的融合数据

    Returns:
        LWModel: 顶点项 Q_v 在前，面项 B_p 在后
    """
    cfg = cfg or settings
    violations = validate(c)
    if violations:
        raise InvalidComplexError(violations)
    if not is_trivalent(c):
        raise NotTrivalentError(f"复形 {c.name} 不是三价的，Levin-Wen 模型只支持三价胞腔")
    _check_algebra(fd, cfg)
    index = LWBasisIndex(c.num_edges, fd.rank)
    constraints = [_vertex_constraint(c, fd, v) for v in range(c.num_vertices)]
    terms: List[LocalTerm] = []
    for v, con in enumerate(constraints):
        matrix = sp.diags(con.allowed.astype(np.complex128), format="csr")
        matrix.eliminate_zeros()
        op = LocalOperator(edges=con.edges, radix=fd.rank, matrix=matrix)
        terms.append(LocalTerm(TermKind.FUSION, v, make_region(c, op.edges), op))
    for f in range(c.num_faces):
        if face_is_simple(c, f):
            op = _plaquette_simple(c, fd, f, cfg)
        else:
            op = _plaquette_truncated(c, fd, f, cfg)
            logger.debug(f"面 {f} 的边界重复经过边或角点，B_p 在截角剖分上组装")
        terms.append(LocalTerm(TermKind.PLAQUETTE, f, make_region(c, op.edges), op))
    model = LWModel(c, fd, index, terms, constraints, cfg)
    logger.info(f"构建 LW 模型 {model.description}: dim={fd.rank}^{c.num_edges} 项数={len(terms)}")
    return model


def lw_ground_projector(m: LWModel) -> SparseOperator:
    """可容许扇区上的 P = ∏ Q_v ∏ B_p"""
    return m.ground_projector()


def lw_local_operator_basis(m: LWModel, r: Region) -> List[LocalOperator]:
    return m.local_operator_basis(r)


def pointed_oracle(c: CellComplex, fd: FusionData, cfg: Optional[Settings] = None) -> Optional[int]:
    """
    平凡 F 的点状范畴 Vec_G 与群 G 的 DW 模型同相，用 DW 轨道计数交叉验证

    Returns:
        Optional[int]: 非点状范畴返回 None
    """
    cfg = cfg or settings
    if not is_trivially_pointed(fd, cfg.tolerances.validation):
        return None
    mult = np.argmax(fd.fusion, axis=2)
    group = validate_group(f"G({fd.name})", mult)
    return dw_gsd_oracle(c, group, cfg)
