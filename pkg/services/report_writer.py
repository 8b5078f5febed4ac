"""
报告输出：头部注释 + 每行一个 check.<name>.<field> = <value> 的键值正文；GSD 表格用 pandas 渲染
"""
import logging
from pathlib import Path
from typing import Dict, List, Union

import pandas as pd

from models import GsdRow, Scalar, VerificationReport
from utils.file_utils import format_float, write_lines

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

HEADER = [
    "# topological order verification report",
    "# term names used below, with the alternative naming of the same operators:",
    "#   vertex    = H_v  gauge average at a vertex (dw)",
    "#   face      = H_f  flatness of a face (dw)",
    "#   fusion    = Q_v  vertex fusion projector (lw), elsewhere called H_f",
    "#   plaquette = B_p  plaquette projector (lw), elsewhere called H_v",
]

GSD_COLUMNS = ["family", "algebra", "surface", "cellulation", "gsd", "method", "oracle", "agree", "error"]


def format_value(value: Scalar) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value).replace("\n", " ")


def report_lines(run_info: Dict[str, Scalar], reports: List[VerificationReport]) -> List[str]:
    """
    渲染报告文档

    Args:
        run_info: 运行级别的字段（命令、配置、种子等）
        reports: 按请求顺序排列的检查报告

    Returns:
        List[str]: 文本行
    """
    lines = list(HEADER)
    lines.append(f"format_version = {FORMAT_VERSION}")
    for key, value in run_info.items():
        lines.append(f"run.{key} = {format_value(value)}")
    for report in reports:
        prefix = f"check.{report.check.value}"
        lines.append(f"{prefix}.outcome = {report.outcome.value}")
        lines.append(f"{prefix}.model = {report.model}")
        lines.append(f"{prefix}.timestamp = {report.timestamp}")
        lines.append(f"{prefix}.seed = {report.seed}")
        lines.append(f"{prefix}.exit_code = {report.exit_code}")
        if report.error is not None:
            lines.append(f"{prefix}.error = {format_value(report.error)}")
        for key, value in report.parameters.items():
            lines.append(f"{prefix}.parameter.{key} = {format_value(value)}")
        for key, value in report.residuals.items():
            lines.append(f"{prefix}.residual.{key} = {format_value(float(value))}")
            lines.append(f"{prefix}.tolerance.{key} = {format_value(float(report.tolerances[key]))}")
        for key, value in report.scalars.items():
            lines.append(f"{prefix}.scalar.{key} = {format_value(value)}")
    return lines


def write_report(path: Union[str, Path], run_info: Dict[str, Scalar], reports: List[VerificationReport]):
    write_lines(path, report_lines(run_info, reports))


def gsd_table_frame(rows: List[GsdRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        records.append({
            "family": row.family.value,
            "algebra": row.algebra,
            "surface": row.surface,
            "cellulation": row.cellulation,
            "gsd": "-" if row.gsd is None else str(row.gsd),
            "method": "-" if row.method is None else row.method.value,
            "oracle": "-" if row.oracle is None else str(row.oracle),
            "agree": "-" if row.agree is None else ("yes" if row.agree else "NO"),
            "error": "-" if row.error is None else row.error.replace(" ", "_"),
        })
    return pd.DataFrame.from_records(records, columns=GSD_COLUMNS)


def render_gsd_table(rows: List[GsdRow]) -> List[str]:
    lines = [f"# ground state degeneracy table, format_version = {FORMAT_VERSION}"]
    if not rows:
        return lines + [" ".join(GSD_COLUMNS)]
    return lines + gsd_table_frame(rows).to_string(index=False).splitlines()


def write_gsd_table(path: Union[str, Path], rows: List[GsdRow]):
    write_lines(path, render_gsd_table(rows))
    logger.info(f"GSD 表共 {len(rows)} 行")
