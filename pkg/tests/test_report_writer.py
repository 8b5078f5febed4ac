"""
测试报告与 GSD 表格的文本格式
"""
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models import CheckName, GsdMethod, GsdRow, ModelFamily, VerificationReport
from services.report_writer import (
    FORMAT_VERSION,
    format_value,
    gsd_table_frame,
    render_gsd_table,
    report_lines,
    write_report,
)


def sample_report() -> VerificationReport:
    return VerificationReport.judge(
        CheckName.TQO0, "dw/Z2/square-torus(2)", {"commutator": 0.0, "gap_deficit": 0.0},
        {"commutator": 1e-10, "gap_deficit": 1e-8},
        scalars={"gsd": 4, "gap": 2.0, "spectrum_checked": True},
        parameters={"family": "dw"}, timestamp="1970-01-01T00:00:00+00:00", seed=3)


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(4) == "4"
    assert format_value(0.1) == "0.1"
    assert format_value(1e-12) == "1e-12"
    assert format_value("a\nb") == "a b"


def test_report_lines():
    """测试头部、版本号与 check.<名>.<字段> 键"""
    lines = report_lines({"command": "verify", "seed": 3}, [sample_report()])
    assert all(line.startswith("#") for line in lines[:6])
    assert f"format_version = {FORMAT_VERSION}" in lines
    assert "run.command = verify" in lines
    assert "check.tqo0.outcome = pass" in lines
    assert "check.tqo0.exit_code = 0" in lines
    assert "check.tqo0.parameter.family = dw" in lines
    assert "check.tqo0.residual.commutator = 0.0" in lines
    assert "check.tqo0.tolerance.commutator = 1e-10" in lines
    assert "check.tqo0.scalar.gsd = 4" in lines
    assert "check.tqo0.scalar.spectrum_checked = true" in lines
    assert not any(".error" in line for line in lines)


def test_refused_report_has_error_line():
    report = VerificationReport.refused(CheckName.TQO1, "m", RuntimeError("不是圆盘"), 2,
                                        timestamp="t", seed=0)
    lines = report_lines({}, [report])
    assert "check.tqo1.outcome = error" in lines
    assert "check.tqo1.error = 不是圆盘" in lines
    assert "check.tqo1.exit_code = 2" in lines


def test_report_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.txt", tmp_path / "nested" / "b.txt"
    write_report(first, {"command": "verify"}, [sample_report()])
    write_report(second, {"command": "verify"}, [sample_report()])
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text(encoding="utf-8").endswith("\n")


def test_gsd_table():
    rows = [
        GsdRow(family=ModelFamily.DW, algebra="Z2", surface="torus", cellulation="square-torus:2",
               gsd=4, method=GsdMethod.RANK, oracle=4, agree=True),
        GsdRow(family=ModelFamily.LW, algebra="Fibonacci", surface="torus", cellulation="square-torus:2",
               error="NotTrivalentError(exit 2)"),
    ]
    frame = gsd_table_frame(rows)
    assert list(frame["gsd"]) == ["4", "-"]
    assert list(frame["agree"]) == ["yes", "-"]
    lines = render_gsd_table(rows)
    assert lines[0].startswith("# ground state degeneracy table")
    assert lines[1].split() == ["family", "algebra", "surface", "cellulation", "gsd", "method",
                                "oracle", "agree", "error"]
    assert lines[2].split()[:5] == ["dw", "Z2", "torus", "square-torus:2", "4"]
    assert lines[3].split()[-1] == "NotTrivalentError(exit_2)"


def test_empty_gsd_table():
    assert len(render_gsd_table([])) == 2
