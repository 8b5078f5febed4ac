"""
拓扑量子序检查：TQO0（能隙与无挫）、TQO1（纠错条件）、TQO2（基态均匀性）、TQO3（胞腔无关的简并度）、码距搜索
"""
import logging
import math
from dataclasses import replace
from datetime import datetime, timezone
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from config import Settings, settings
from exceptions import CapExceededError, NonAbelianGroupError, PreconditionError, RegionNotDiskError
from models import CheckName, ModelFamily, Scalar, TermKind, VerificationReport
from services.algebra import FiniteGroup, FusionData, algebra_residuals
from services.cell_complex import Region, build_standard, disk_interior
from services.dw_model import DWModel, dw_build, dw_gsd_oracle
from services.lattice_model import LatticeModel, LocalOperator, LocalTerm, partial_trace
from services.lw_model import lw_build, pointed_oracle
from services.spectra import SparseOperator, compose_chain, gram, low_spectrum, max_abs, null_space_blocks

logger = logging.getLogger(__name__)

Algebra = Union[FiniteGroup, FusionData]


def report_timestamp(cfg: Settings) -> str:
    if cfg.report_timestamp == "now":
        return datetime.now(timezone.utc).isoformat(timespec="seconds")
    return cfg.report_timestamp


def _common(model: LatticeModel, cfg: Settings, **parameters) -> Dict:
    params = {"family": model.family.value, "algebra": model.algebra_name,
              "cellulation": model.complex.name, "surface": model.complex.surface_tag}
    params.update({k: str(v) for k, v in parameters.items()})
    return {"parameters": params, "timestamp": report_timestamp(cfg), "seed": cfg.seed}


def _scalar(value: complex, tol: float) -> Scalar:
    """实数按浮点记录，带虚部的复数记为 repr 字符串"""
    value = complex(value)
    if abs(value.imag) <= tol:
        return float(value.real)
    return repr(value)


def _edges_label(edges: Sequence[int]) -> str:
    return ",".join(map(str, edges))


# ---------------------------------------------------------------------------
# TQO0
# ---------------------------------------------------------------------------

def commutator_residual(model: LatticeModel) -> Tuple[float, str]:
    """
    全部项两两对易子的最大元素

    支撑不相交或同为对角的项对被跳过；并集局域空间不超过稠密上限时在局域空间上比较，否则在工作扇区上比较。

    Returns:
        (最大残差, 对应的项对)
    """
    cfg = model.cfg
    diagonal = [t.op.is_diagonal for t in model.terms]
    worst, where = 0.0, ""
    for i, j in combinations(range(len(model.terms)), 2):
        ti, tj = model.terms[i], model.terms[j]
        if diagonal[i] and diagonal[j]:
            continue
        if not set(ti.op.edges) & set(tj.op.edges):
            continue
        union = tuple(sorted(set(ti.op.edges) | set(tj.op.edges)))
        if model.radix ** len(union) <= cfg.dense_dim_cap:
            a, b = ti.op.embed(union).matrix, tj.op.embed(union).matrix
        else:
            a, b = model.restricted(i), model.restricted(j)
        value = max_abs(a @ b - b @ a)
        if value > worst:
            worst, where = value, f"{ti.label}/{tj.label}"
    return worst, where


def _spectral_gap(values: np.ndarray) -> float:
    above = values[values > values[0] + 0.5]
    return float(above[0] - values[0]) if len(above) else math.inf


def check_tqo0(model: LatticeModel) -> VerificationReport:
    """
    TQO0：各项是投影算子且两两对易、基态无挫、H = Σ(1 − h) 的谱为整数且能隙不小于 1

    Returns:
        VerificationReport: 投影或对易检查失败时跳过谱检查
    """
    cfg = model.cfg
    tol = cfg.tolerances
    logger.info(f"开始 TQO0 检查: {model.description}")
    projector = max((t.op.projector_residual() for t in model.terms), default=0.0)
    hermitian = max((t.op.hermitian_residual() for t in model.terms), default=0.0)
    commutator, pair = commutator_residual(model)
    residuals = {"projector": projector, "hermitian": hermitian, "commutator": commutator}
    tolerances = {"projector": tol.projector, "hermitian": tol.projector, "commutator": tol.commutator}
    scalars: Dict[str, Scalar] = {"terms": len(model.terms), "worst_pair": pair}
    if projector > tol.projector or hermitian > tol.projector or commutator > tol.commutator:
        scalars["spectrum_checked"] = False
        report = VerificationReport.judge(CheckName.TQO0, model.description, residuals, tolerances,
                                          scalars=scalars, **_common(model, cfg))
        logger.info(f"TQO0 {report.outcome.value}: 局域项不是对易投影，跳过谱检查")
        return report

    ground = model.ground_space()
    if ground.gsd == 0:
        frustration = 1.0
    else:
        frustration = max(max_abs(model.restricted(i) @ ground.vectors - ground.vectors)
                          for i in range(len(model.terms))) if model.terms else 0.0
    space = "full" if model.dim <= cfg.matrix_free_dim_cap else "sector"
    if space == "sector":
        logger.warning(f"{model.description}: 全空间维数 {model.dim} 超过矩阵自由上限，谱只在扇区上计算")
    h = model.hamiltonian(space)
    k = min(h.dim, max(1, ground.gsd) + cfg.spectrum_extra)
    # 小维数时整数性在全谱上检查，否则只覆盖最低的 k 个
    coverage = "full" if h.dim <= cfg.dense_eig_cap else "lowest"
    checked = low_spectrum(h, h.dim if coverage == "full" else k, cfg)
    values = checked[:k]
    gap = _spectral_gap(values)
    residuals.update({
        "frustration": frustration,
        "ground_energy": abs(float(values[0])),
        "integrality": float(np.max(np.abs(checked - np.round(checked)))),
        "gap_deficit": 0.0 if math.isinf(gap) else max(0.0, 1.0 - gap),
    })
    tolerances.update({"frustration": tol.frustration, "ground_energy": tol.frustration,
                       "integrality": tol.integrality, "gap_deficit": tol.gap})
    scalars.update({
        "spectrum_checked": True,
        "spectrum_space": space,
        "spectrum_dim": h.dim,
        "gsd": ground.gsd,
        "ground_method": ground.method.value,
        "lambda_min": float(values[0]),
        "gap": gap if not math.isinf(gap) else "none",
        "spectrum": " ".join(repr(float(v)) for v in values),
        "spectrum_coverage": coverage,
    })
    report = VerificationReport.judge(CheckName.TQO0, model.description, residuals, tolerances,
                                      scalars=scalars, **_common(model, cfg))
    logger.info(f"TQO0 {report.outcome.value}: gsd={ground.gsd} gap={gap}")
    return report


# ---------------------------------------------------------------------------
# TQO1 / TQO2
# ---------------------------------------------------------------------------

def _require_disk(region: Region, disk: Region):
    if not disk.disk_certified:
        raise RegionNotDiskError("外围区域没有圆盘证书，拒绝检查")
    if not region.issubset(disk):
        raise PreconditionError(f"区域 {region.edges} 不在圆盘 {disk.edges} 之内")


def _require_interior(model: LatticeModel, region: Region, disk: Region):
    _require_disk(region, disk)
    interior = disk_interior(model.complex, disk)
    outside = sorted(region.edge_set - interior)
    if outside:
        raise PreconditionError(f"边 {outside} 不在圆盘内部（内部边: {sorted(interior)}），拒绝检查")


def check_tqo1(model: LatticeModel, region: Region, enclosing_disk: Region) -> VerificationReport:
    """
    TQO1：对区域上的每个基算子 O，V†OV 是否为 λ·I

    Args:
        model: 模型
        region: 算子支撑，必须落在圆盘内部
        enclosing_disk: 已认证的圆盘

    Returns:
        VerificationReport: 残差 ‖V†OV − λI‖_F / max(1, ‖O‖_F)，λ = tr(V†OV)/GSD
    """
    cfg = model.cfg
    _require_interior(model, region, enclosing_disk)
    basis = model.local_operator_basis(region)
    ground = model.ground_space()
    if ground.gsd == 0:
        raise PreconditionError(f"{model.description} 的基态空间为空")
    reduction = model.reduction(region.edges)
    identity = np.eye(ground.gsd)
    worst = 0.0
    scalars: Dict[str, Scalar] = {"basis_size": len(basis), "gsd": ground.gsd}
    for i, op in enumerate(basis):
        block = reduction.project(op.matrix)
        lam = np.trace(block) / ground.gsd
        norm = math.sqrt(float(np.sum(np.abs(op.matrix.data) ** 2)))
        residual = float(np.linalg.norm(block - lam * identity)) / max(1.0, norm)
        worst = max(worst, residual)
        scalars[f"lambda.{i}"] = _scalar(lam, cfg.tolerances.builtin)
        scalars[f"residual.{i}"] = residual
    return VerificationReport.judge(
        CheckName.TQO1, model.description, {"tqo1": worst}, {"tqo1": cfg.tolerances.tqo},
        scalars=scalars,
        **_common(model, cfg, region=_edges_label(region.edges), disk=_edges_label(enclosing_disk.edges)))


def merge_tqo1(model: LatticeModel, reports: List[VerificationReport], disk: Region) -> VerificationReport:
    """把区域扫描的各个 TQO1 报告合并为一个（按区域顺序）"""
    cfg = model.cfg
    worst = 0.0
    scalars: Dict[str, Scalar] = {"regions": len(reports)}
    for report in reports:
        tag = report.parameters["region"]
        worst = max(worst, report.residuals["tqo1"])
        scalars[f"region[{tag}].residual"] = report.residuals["tqo1"]
        for key, value in report.scalars.items():
            if key.startswith("lambda."):
                scalars[f"region[{tag}].{key}"] = value
    return VerificationReport.judge(CheckName.TQO1, model.description, {"tqo1": worst},
                                    {"tqo1": cfg.tolerances.tqo}, scalars=scalars,
                                    **_common(model, cfg, disk=_edges_label(disk.edges)))


def region_projector(model: LatticeModel, region: Region) -> Tuple[SparseOperator, int]:
    """
    P_B：支撑在区域内的全部项之积，作用在区域的局域空间上

    Returns:
        (P_B, 参与的项数)
    """
    cfg = model.cfg
    edges = region.edges
    local_dim = model.radix ** len(edges)
    if local_dim > cfg.matrix_free_dim_cap:
        raise CapExceededError("matrix_free_dim_cap", local_dim, cfg.matrix_free_dim_cap)
    inside = model.terms_within(region)
    if not inside:
        return SparseOperator.identity(local_dim), 0
    ops = [SparseOperator.from_matrix(model.terms[i].op.embed(edges).matrix, cfg=cfg) for i in inside]
    return compose_chain(ops, cfg), len(inside)


def check_tqo2(model: LatticeModel, region_a: Region, region_b: Region) -> VerificationReport:
    """
    TQO2：O_A P = 0 ⟹ O_A P_B = 0，在 A 的算子空间上线性化

    G_P = gram(basis(A), tr_外 P)，G_PB = gram(basis(A), tr_{B\\A} P_B)；
    G_P 零空间中的每个向量 c 都应满足 c† G_PB c ≤ tol·‖G_PB‖。

    Args:
        model: 模型
        region_a: 较小区域
        region_b: 已认证圆盘

    Returns:
        VerificationReport: 检查报告
    """
    cfg = model.cfg
    tol = cfg.tolerances
    _require_disk(region_a, region_b)
    basis = [op.matrix for op in model.local_operator_basis(region_a)]
    rho = model.reduction(region_a.edges).density()
    g_p = gram(basis, rho, tag=f"P|{_edges_label(region_a.edges)}")
    p_b, count = region_projector(model, region_b)
    sigma = partial_trace(p_b.matrix, region_b.edges, region_a.edges, model.radix)
    g_pb = gram(basis, sigma, tag=f"P_B|{_edges_label(region_a.edges)}")
    nulls, norm_p = null_space_blocks(g_p, tol.tqo, cfg.dense_dim_cap)
    norm_pb = g_pb.norm()
    worst = 0.0
    null_dim = 0
    for indices, vectors in nulls:
        for vec in vectors.T:
            null_dim += 1
            if norm_pb > 0:
                worst = max(worst, g_pb.quadratic(indices, vec) / norm_pb)
    min_eig = min(g_p.min_eigenvalue(), g_pb.min_eigenvalue())
    scale = max(1.0, norm_p, norm_pb)
    residuals = {"tqo2": worst, "psd": max(0.0, -min_eig) / scale}
    tolerances = {"tqo2": tol.tqo, "psd": tol.psd}
    scalars: Dict[str, Scalar] = {"basis_size": len(basis), "null_dim": null_dim, "terms_in_b": count,
                                  "norm_gp": norm_p, "norm_gpb": norm_pb}
    report = VerificationReport.judge(
        CheckName.TQO2, model.description, residuals, tolerances, scalars=scalars,
        **_common(model, cfg, region_a=_edges_label(region_a.edges), region_b=_edges_label(region_b.edges)))
    logger.info(f"TQO2 {report.outcome.value}: 零空间维数 {null_dim}，残差 {worst:.3e}")
    return report


# ---------------------------------------------------------------------------
# TQO3
# ---------------------------------------------------------------------------

def build_model(family: ModelFamily, complex, algebra: Algebra, cfg: Optional[Settings] = None) -> LatticeModel:
    if family == ModelFamily.DW:
        return dw_build(complex, algebra, cfg)
    return lw_build(complex, algebra, cfg)


def model_oracle(model: LatticeModel) -> Optional[int]:
    """组合交叉验证：DW 用规范轨道数，平凡 F 的点状 LW 用同群 DW 的轨道数"""
    if model.family == ModelFamily.DW:
        return dw_gsd_oracle(model.complex, model.group, model.cfg)
    return pointed_oracle(model.complex, model.fusion, model.cfg)


def check_tqo3(surface: str, family: ModelFamily, algebra: Algebra, cellulations: Sequence[Tuple[str, int]],
               cfg: Optional[Settings] = None) -> VerificationReport:
    """
    TQO3：同一曲面的不同胞腔上基态简并度相同

    Args:
        surface: 曲面标签
        family: dw / lw
        algebra: 群或融合数据
        cellulations: (族名, 尺寸) 列表，至少两个

    Returns:
        VerificationReport: gsd_spread = max − min，oracle_mismatch 为与组合计数不一致的个数
    """
    cfg = cfg or settings
    if len(cellulations) < 2:
        raise PreconditionError("TQO3 至少需要两个胞腔")
    values: List[int] = []
    mismatches = 0
    scalars: Dict[str, Scalar] = {}
    for family_name, size in cellulations:
        c = build_standard(surface, family_name, size)
        model = build_model(family, c, algebra, cfg)
        ground = model.ground_space()
        oracle = model_oracle(model)
        tag = f"{family_name}:{size}"
        values.append(ground.gsd)
        scalars[f"gsd.{tag}"] = ground.gsd
        scalars[f"method.{tag}"] = ground.method.value
        if oracle is not None:
            scalars[f"oracle.{tag}"] = oracle
            mismatches += int(oracle != ground.gsd)
        logger.info(f"TQO3 {surface} {tag}: gsd={ground.gsd} oracle={oracle}")
    residuals = {"gsd_spread": float(max(values) - min(values)), "oracle_mismatch": float(mismatches)}
    return VerificationReport.judge(
        CheckName.TQO3, f"{family.value}/{algebra.name}/{surface}", residuals,
        {"gsd_spread": 0.0, "oracle_mismatch": 0.0}, scalars=scalars,
        parameters={"family": family.value, "algebra": algebra.name, "surface": surface,
                    "cellulations": " ".join(f"{f}:{s}" for f, s in cellulations)},
        timestamp=report_timestamp(cfg), seed=cfg.seed)


# ---------------------------------------------------------------------------
# 码距
# ---------------------------------------------------------------------------

def group_characters(group: FiniteGroup, seed: int = 0) -> np.ndarray:
    """
    阿贝尔群的全部特征标，行是特征标，平凡特征标在第 0 行

    正则表示矩阵的随机线性组合可同时对角化，本征向量按单位元处的分量归一即为特征标。
    """
    n = group.order
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    combo = np.zeros((n, n), dtype=np.complex128)
    for g in range(n):
        combo[group.mult[g], np.arange(n)] += weights[g]
    _, vectors = np.linalg.eig(combo)
    chars = (vectors / vectors[group.identity][None, :]).T
    chars = chars / np.abs(chars)
    angles = np.round(np.mod(np.angle(chars), 2 * np.pi), 8)
    order = sorted(range(n), key=lambda i: (float(np.sum(angles[i])), tuple(angles[i])))
    return chars[order]


def _generators(group: FiniteGroup, chars: np.ndarray) -> List[Tuple[int, int]]:
    """单边广义 Pauli X_g Z_χ（去掉恒等），按 (g, χ) 顺序"""
    return [(g, k) for g in range(group.order) for k in range(len(chars))
            if not (g == group.identity and k == 0)]


def distance_search(model: DWModel, weight_cap: int) -> Union[int, str]:
    """
    码距搜索：最小权重的广义 Pauli 乘积，保持基态空间（V†OV 幺正）但在其上非平凡

    Args:
        model: 阿贝尔群 DW 模型
        weight_cap: 最大权重

    Returns:
        找到的最小权重，或 "≥ w+1"
    """
    cfg = model.cfg
    tol = cfg.tolerances
    if model.family != ModelFamily.DW:
        raise PreconditionError("码距搜索只适用于 DW 模型")
    group = model.group
    if not group.is_abelian:
        raise NonAbelianGroupError(f"群 {group.name} 不是阿贝尔群，广义 Pauli 基不适用")
    if weight_cap < 0:
        raise PreconditionError(f"权重上限必须非负: {weight_cap}")
    ground = model.ground_space()
    states, vectors = ground.states, ground.vectors
    gsd = ground.gsd
    if gsd == 0:
        raise PreconditionError(f"{model.description} 的基态空间为空")
    chars = group_characters(group, cfg.seed)
    gens = _generators(group, chars)
    digits = model.index.decode(states)
    strides = model.index.strides
    identity = np.eye(gsd)
    examined = 0
    n = len(states)
    for w in range(1, weight_cap + 1):
        for edges in combinations(range(model.complex.num_edges), w):
            for choice in product(gens, repeat=w):
                examined += 1
                if examined > cfg.distance_candidate_cap:
                    raise CapExceededError("distance_candidate_cap", examined, cfg.distance_candidate_cap)
                moved = states.copy()
                phase = np.ones(n, dtype=np.complex128)
                for e, (g, k) in zip(edges, choice):
                    x = digits[:, e]
                    phase *= chars[k][x]
                    moved += (group.mult[x, g] - x) * strides[e]
                idx = np.minimum(np.searchsorted(states, moved), n - 1)
                hit = states[idx] == moved
                block = (vectors[idx[hit]].conj() * phase[hit][:, None]).T @ vectors[hit]
                if max_abs(block.conj().T @ block - identity) > tol.tqo:
                    continue
                lam = np.trace(block) / gsd
                if np.linalg.norm(block - lam * identity) > tol.nontrivial:
                    logger.info(f"码距 {w}: 边 {edges} 上的 {choice} 是逻辑算子")
                    return w
        logger.debug(f"权重 {w} 内没有逻辑算子（已检查 {examined} 个候选）")
    return f"≥ {weight_cap + 1}"


def check_distance(model: DWModel, weight_cap: int) -> VerificationReport:
    """码距报告：权重 1 的逻辑算子存在即失败（单边错误不可检测）"""
    cfg = model.cfg
    result = distance_search(model, weight_cap)
    residual = 1.0 if result == 1 else 0.0
    return VerificationReport.judge(
        CheckName.DISTANCE, model.description, {"weight_one_logical": residual}, {"weight_one_logical": 0.0},
        scalars={"distance": result if isinstance(result, int) else str(result)},
        **_common(model, cfg, weight_cap=weight_cap))


# ---------------------------------------------------------------------------
# 代数数据与故障注入
# ---------------------------------------------------------------------------

def check_algebra(fd: FusionData, cfg: Optional[Settings] = None) -> VerificationReport:
    """融合数据的维数、幺正性、五边形残差"""
    cfg = cfg or settings
    residuals = algebra_residuals(fd)
    tolerances = {name: cfg.tolerances.validation for name in residuals}
    report = VerificationReport.judge(CheckName.ALGEBRA, fd.name, residuals, tolerances,
                                      scalars={"labels": fd.rank, "fsymbols": len(fd.fsymbol)},
                                      parameters={"algebra": fd.name},
                                      timestamp=report_timestamp(cfg), seed=cfg.seed)
    logger.info(f"代数检查 {fd.name}: {report.outcome.value}, 五边形残差 {residuals['pentagon']:.3e}")
    return report


def inject_non_commuting_term(model: LatticeModel, seed: int) -> LatticeModel:
    """把最后一个面项（DW 的 H_f 或 LW 的 B_p）换成同支撑上的随机半秩正交投影"""
    kinds = (TermKind.FACE, TermKind.PLAQUETTE)
    candidates = [i for i, t in enumerate(model.terms) if t.kind in kinds]
    if not candidates:
        raise PreconditionError("模型没有面项，无法注入故障")
    i = candidates[-1]
    term = model.terms[i]
    d = term.op.local_dim
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    half = q[:, :max(1, d // 2)]
    matrix = sp.csr_matrix(half @ half.conj().T)
    op = LocalOperator(edges=term.op.edges, radix=term.op.radix, matrix=matrix)
    logger.warning(f"故障注入: {term.label} 被替换为随机投影")
    return model.with_term(i, LocalTerm(term.kind, term.cell, term.region, op))


def corrupt_fsymbol(fd: FusionData) -> FusionData:
    """翻转 F^{τττ}_τ[τ,τ]（没有该项时翻转最后一个 F），不做校验"""
    key = (1,) * 6 if fd.rank > 1 and (1,) * 6 in fd.fsymbol else sorted(fd.fsymbol)[-1]
    fsymbol = dict(fd.fsymbol)
    fsymbol[key] = -fsymbol[key]
    logger.warning(f"故障注入: 翻转 {fd.name} 的 F{key}")
    return replace(fd, fsymbol=fsymbol)
