"""
命令实现：build / verify / gsd-table
"""
import logging
import sys
from pathlib import Path
from typing import Dict, List, TextIO, Tuple

from config import Settings
from exceptions import PreconditionError
from models import CheckName, FaultName, Scalar, VerificationReport
from services.algebra import FusionData
from services.cell_complex import CellComplex, build_standard, load_complex, with_surface_tag
from services.lattice_model import LatticeModel
from services.report_writer import format_value, write_gsd_table, write_report
from services.verifier import build_model, corrupt_fsymbol, inject_non_commuting_term
from tasks.verification_runner import load_algebra, run_checks, run_gsd_rows
from utils.run_config import GsdRowSpec, RunConfig

logger = logging.getLogger(__name__)


def load_cellulation(config: RunConfig) -> Tuple[CellComplex, str]:
    """内置族名或 .complex 文件"""
    if config.cellulation.endswith(".complex") or Path(config.cellulation).exists():
        c = load_complex(config.cellulation)
        if config.surface is not None and config.surface != c.surface_tag:
            c = with_surface_tag(c, config.surface)
        return c, config.cellulation
    c = build_standard(config.surface, config.cellulation, config.size)
    return c, f"{config.cellulation}:{config.size}"


def build_from_config(config: RunConfig, cfg: Settings) -> Tuple[LatticeModel, object, str]:
    """
    按配置构建模型并注入故障

    Returns:
        (模型, 群或融合数据, 胞腔描述)
    """
    corrupted = config.fault == FaultName.CORRUPTED_FSYMBOL
    algebra = load_algebra(config.model, config.algebra, cfg, validate=not corrupted)
    if corrupted:
        if not isinstance(algebra, FusionData):
            raise PreconditionError("corrupted-fsymbol 故障只适用于 lw 模型")
        algebra = corrupt_fsymbol(algebra)
    c, cellulation = load_cellulation(config)
    model = build_model(config.model, c, algebra, cfg)
    if config.fault == FaultName.NON_COMMUTING_TERM:
        model = inject_non_commuting_term(model, cfg.seed)
    return model, algebra, cellulation


def cmd_build(config: RunConfig, cfg: Settings, out: TextIO = None) -> int:
    """打印模型摘要：维数、项数、扇区维数与局域项残差"""
    out = out or sys.stdout
    model, _, cellulation = build_from_config(config, cfg)
    summary = model.summary(cellulation)
    print(f"dim={summary.dim} terms={summary.num_terms}", file=out)
    print(f"family={summary.family.value} algebra={summary.algebra} surface={summary.surface} "
          f"cellulation={summary.cellulation}", file=out)
    print(f"sector_dim={summary.sector_dim}", file=out)
    for kind, count in summary.term_counts.items():
        print(f"terms.{kind}={count}", file=out)
    print(f"projector_residual={format_value(summary.projector_residual)}", file=out)
    print(f"hermitian_residual={format_value(summary.hermitian_residual)}", file=out)
    return 0


def exit_code_for(reports: List[VerificationReport]) -> int:
    """第一个错误的退出码；否则有失败为 1；全部通过为 0"""
    for report in reports:
        if report.exit_code not in (0, 1):
            return report.exit_code
    return 1 if any(report.exit_code == 1 for report in reports) else 0


def cmd_verify(config: RunConfig, cfg: Settings, out: TextIO = None) -> int:
    """运行检查并写出报告文件"""
    out = out or sys.stdout
    if config.fault == FaultName.CORRUPTED_FSYMBOL and CheckName.ALGEBRA not in config.checks:
        config = config.model_copy(update={"checks": [CheckName.ALGEBRA, *config.checks]})
    model, algebra, cellulation = build_from_config(config, cfg)
    reports = run_checks(config, model, algebra, cfg)
    code = exit_code_for(reports)
    run_info: Dict[str, Scalar] = {
        "command": "verify",
        "model": config.model.value,
        "algebra": config.algebra,
        "cellulation": cellulation,
        "surface": model.complex.surface_tag,
        "checks": ",".join(check.value for check in config.checks),
        "seed": cfg.seed,
        "fault": config.fault.value,
        "exit_code": code,
    }
    write_report(config.out, run_info, reports)
    for report in reports:
        print(f"{report.check.value}: {report.outcome.value}", file=out)
    print(f"report={config.out} exit={code}", file=out)
    return code


def cmd_gsd_table(config: RunConfig, cfg: Settings, out: TextIO = None) -> int:
    """逐行计算 GSD 并与组合计数比较；只有不一致时退出码为 1"""
    out = out or sys.stdout
    if not config.rows:
        surface = config.surface or build_standard(None, config.cellulation, config.size).surface_tag
        row = GsdRowSpec(family=config.model, algebra=config.algebra, surface=surface,
                         cellulations=[(config.cellulation, config.size)])
        config = config.model_copy(update={"rows": [row]})
    rows = run_gsd_rows(config, cfg)
    write_gsd_table(config.out, rows)
    disagreements = sum(1 for row in rows if row.agree is False)
    print(f"table={config.out} rows={len(rows)} disagreements={disagreements}", file=out)
    return 1 if disagreements else 0


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "gsd-table": cmd_gsd_table,
}
