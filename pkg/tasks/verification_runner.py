"""
检查编排：在有界线程池上运行检查，按请求顺序收集结果
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Callable, List, Optional, Sequence, Tuple

from config import Settings
from exceptions import PreconditionError, TqoError
from models import CheckName, GsdRow, ModelFamily, VerificationReport
from services.algebra import FusionData, resolve_fusion, resolve_group
from services.cell_complex import (
    CellComplex,
    Region,
    build_standard,
    disk_interior,
    disk_region,
    make_region,
    vertex_star_region,
)
from services.lattice_model import LatticeModel
from services.verifier import (
    build_model,
    check_algebra,
    check_distance,
    check_tqo0,
    check_tqo1,
    check_tqo2,
    check_tqo3,
    merge_tqo1,
    model_oracle,
    report_timestamp,
)
from utils.run_config import RunConfig

logger = logging.getLogger(__name__)

Job = Tuple[CheckName, Callable[[], VerificationReport]]


def guarded(check: CheckName, model: str, job: Callable[[], VerificationReport],
            cfg: Settings) -> VerificationReport:
    """执行一个检查；可预期错误记为 outcome=error 的报告"""
    try:
        return job()
    except TqoError as e:
        logger.warning(f"{check.value} 被拒绝: {type(e).__name__}: {e}")
        return VerificationReport.refused(check, model, e, e.exit_code,
                                          timestamp=report_timestamp(cfg), seed=cfg.seed)


def run_ordered(jobs: Sequence[Callable], workers: int) -> List:
    """并发执行，结果与 jobs 顺序一致"""
    if workers <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(job) for job in jobs]
        return [future.result() for future in futures]


def tqo1_sweep(model: LatticeModel, disk: Region, max_edges: int) -> VerificationReport:
    """圆盘内部所有不超过 max_edges 条边的子区域逐一做 TQO1，再合并"""
    cfg = model.cfg
    c = model.complex
    interior = sorted(disk_interior(c, disk))
    if not interior:
        raise PreconditionError(f"圆盘 {disk.edges} 没有内部边，无法做 TQO1；请换更大的圆盘或 tqo1.vertex")
    regions = [make_region(c, subset)
               for size in range(1, max_edges + 1)
               for subset in combinations(interior, size)]
    logger.info(f"TQO1 扫描: 圆盘 {len(disk)} 条边，内部 {len(interior)} 条，{len(regions)} 个子区域")
    reports = run_ordered([lambda r=r: check_tqo1(model, r, disk) for r in regions], cfg.workers)
    return merge_tqo1(model, reports, disk)


def tqo1_disk(config: RunConfig, c: CellComplex) -> Region:
    """配置了 tqo1.vertex 时取顶点星形，否则按种子面与半径生长"""
    if config.tqo1_vertex is not None:
        return vertex_star_region(c, config.tqo1_vertex, config.tqo1_collar)
    return disk_region(c, config.tqo1_seed_face, config.tqo1_radius, config.tqo1_collar)


def _tqo3_cellulations(config: RunConfig) -> List[Tuple[str, int]]:
    if config.tqo3_cellulations:
        return list(config.tqo3_cellulations)
    return [(config.cellulation, config.size), (config.cellulation, config.size + 1)]


def plan_checks(config: RunConfig, model: LatticeModel, algebra, cfg: Settings) -> List[Job]:
    """把配置中请求的检查展开为无参数的任务"""
    c = model.complex
    jobs: List[Job] = []
    for check in config.checks:
        if check == CheckName.TQO0:
            jobs.append((check, lambda: check_tqo0(model)))
        elif check == CheckName.TQO1:
            def job():
                disk = tqo1_disk(config, c)
                return tqo1_sweep(model, disk, config.tqo1_max_edges)
            jobs.append((check, job))
        elif check == CheckName.TQO2:
            def job():
                region_a = disk_region(c, config.tqo2_seed_face, config.tqo2_radius_a)
                region_b = disk_region(c, config.tqo2_seed_face, config.tqo2_radius_b, config.tqo2_collar)
                return check_tqo2(model, region_a, region_b)
            jobs.append((check, job))
        elif check == CheckName.TQO3:
            jobs.append((check, lambda: check_tqo3(c.surface_tag, model.family, algebra,
                                                   _tqo3_cellulations(config), cfg)))
        elif check == CheckName.DISTANCE:
            jobs.append((check, lambda: check_distance(model, config.distance_weight_cap)))
        elif check == CheckName.ALGEBRA:
            def job():
                if not isinstance(algebra, FusionData):
                    raise PreconditionError("algebra 检查只适用于融合数据")
                return check_algebra(algebra, cfg)
            jobs.append((check, job))
    return jobs


def run_checks(config: RunConfig, model: LatticeModel, algebra, cfg: Settings) -> List[VerificationReport]:
    """
    运行请求的全部检查

    Args:
        config: 运行配置
        model: 已构建（可能已注入故障）的模型
        algebra: 模型使用的群或融合数据
        cfg: 本次运行的配置

    Returns:
        List[VerificationReport]: 与请求顺序一致
    """
    if any(check != CheckName.ALGEBRA for check in config.checks):
        # 预先计算共享的基态空间，避免多个线程重复计算
        try:
            model.ground_space()
        except TqoError as e:
            logger.warning(f"基态空间计算失败，相关检查将分别报告: {e}")
    jobs = plan_checks(config, model, algebra, cfg)
    wrapped = [lambda check=check, job=job: guarded(check, model.description, job, cfg) for check, job in jobs]
    return run_ordered(wrapped, cfg.workers)


def load_algebra(family: ModelFamily, source: str, cfg: Settings, validate: bool = True):
    if family == ModelFamily.DW:
        return resolve_group(source)
    return resolve_fusion(source, cfg, validate=validate)


def gsd_row(family: ModelFamily, algebra_source: str, surface: str, cellulation: Tuple[str, int],
            cfg: Settings) -> GsdRow:
    """一个胞腔上的基态简并度与组合计数；错误记在行内"""
    tag = f"{cellulation[0]}:{cellulation[1]}"
    try:
        algebra = load_algebra(family, algebra_source, cfg)
        c: CellComplex = build_standard(surface, *cellulation)
        model = build_model(family, c, algebra, cfg)
        ground = model.ground_space()
        oracle = model_oracle(model)
        agree: Optional[bool] = None if oracle is None else oracle == ground.gsd
        return GsdRow(family=family, algebra=algebra.name, surface=surface, cellulation=tag,
                      gsd=ground.gsd, method=ground.method, oracle=oracle, agree=agree)
    except TqoError as e:
        logger.warning(f"GSD 行 {family.value} {algebra_source} {tag} 失败: {e}")
        return GsdRow(family=family, algebra=algebra_source, surface=surface, cellulation=tag,
                      error=f"{type(e).__name__}(exit {e.exit_code})")


def run_gsd_rows(config: RunConfig, cfg: Settings) -> List[GsdRow]:
    jobs = [lambda spec=spec, cell=cell: gsd_row(spec.family, spec.algebra, spec.surface, cell, cfg)
            for spec in config.rows for cell in spec.cellulations]
    return run_ordered(jobs, cfg.workers)
