"""
测试拓扑量子序检查：TQO0–TQO3、码距搜索、代数检查与故障注入
"""
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import math

import numpy as np
import pytest

from config import settings
from exceptions import NonAbelianGroupError, PreconditionError, RegionNotDiskError
from models import CheckName, CheckOutcome, ModelFamily
from services.algebra import builtin_fusion, builtin_group
from services.cell_complex import (
    build_standard,
    disk_interior,
    disk_region,
    incident_edges,
    make_region,
    vertex_star_region,
)
from services.dw_model import dw_build
from services.lw_model import lw_build
from services.verifier import (
    check_algebra,
    check_distance,
    check_tqo0,
    check_tqo1,
    check_tqo2,
    check_tqo3,
    commutator_residual,
    corrupt_fsymbol,
    distance_search,
    group_characters,
    inject_non_commuting_term,
    region_projector,
)
from tasks.verification_runner import gsd_row, tqo1_sweep

PHI = (1 + math.sqrt(5)) / 2


def dw(group: str, family: str, size: int):
    return dw_build(build_standard(None, family, size), builtin_group(group))


@pytest.fixture(scope="module")
def toric_sq3():
    return dw("Z2", "square-torus", 3)


# ---------------------------------------------------------------------------
# TQO0
# ---------------------------------------------------------------------------

def test_tqo0_passes_on_toric_code():
    """测试 DW(Z2, square-torus(2))：投影、对易、无挫、整数谱"""
    report = check_tqo0(dw("Z2", "square-torus", 2))
    assert report.outcome == CheckOutcome.PASS
    assert report.exit_code == 0
    assert report.scalars["gsd"] == 4
    assert report.scalars["gap"] == pytest.approx(2.0, abs=1e-8)
    assert report.scalars["spectrum_space"] == "full"
    assert report.residuals["commutator"] <= 1e-10
    assert report.residuals["integrality"] <= 1e-8
    assert set(report.residuals) == set(report.tolerances)
    assert report.scalars["spectrum_coverage"] == "full"


@pytest.mark.parametrize("builder", [
    lambda: dw("S3", "square-torus", 1),
    lambda: dw("Z3", "triangulated-torus", 1),
    lambda: lw_build(build_standard("torus", "honeycomb-torus", 2), builtin_fusion("VecZ2")),
    lambda: lw_build(build_standard("sphere", "cube-sphere"), builtin_fusion("Fibonacci")),
])
def test_tqo0_passes(builder):
    report = check_tqo0(builder())
    assert report.passed, report.residuals
    assert report.residuals["gap_deficit"] == pytest.approx(0.0, abs=1e-10)


def test_tqo0_fails_with_non_commuting_term():
    """测试注入非对易项后 TQO0 失败且不做谱检查"""
    model = inject_non_commuting_term(dw("Z2", "square-torus", 2), seed=7)
    assert model.full_space and model.frustrated
    worst, pair = commutator_residual(model)
    assert worst > 1e-3
    assert "face[3]" in pair
    report = check_tqo0(model)
    assert report.outcome == CheckOutcome.FAIL
    assert report.exit_code == 1
    assert report.scalars["spectrum_checked"] is False


def test_fault_injection_is_seeded():
    base = dw("Z2", "square-torus", 2)
    a = inject_non_commuting_term(base, seed=3).terms[-1].op.matrix.toarray()
    b = inject_non_commuting_term(base, seed=3).terms[-1].op.matrix.toarray()
    assert np.array_equal(a, b)
    assert base.terms[-1].op.is_diagonal


# ---------------------------------------------------------------------------
# TQO1
# ---------------------------------------------------------------------------

def test_tqo1_single_edge(toric_sq3):
    """测试单边矩阵单位：E_00 给出 λ = 1/2，翻转 E_01 给出 λ = 0"""
    c = toric_sq3.complex
    disk = vertex_star_region(c, 0)
    region = make_region(c, [sorted(disk_interior(c, disk))[0]])
    report = check_tqo1(toric_sq3, region, disk)
    assert report.passed
    assert report.scalars["basis_size"] == 4
    assert report.scalars["lambda.0"] == pytest.approx(0.5, abs=1e-10)
    assert report.scalars["lambda.1"] == pytest.approx(0.0, abs=1e-10)
    assert report.scalars["residual.1"] <= 1e-10
    assert report.scalars["lambda.0"] + report.scalars["lambda.3"] == pytest.approx(1.0, abs=1e-10)


def test_vertex_star_interior(toric_sq3):
    """测试 square-torus(3) 顶点星形：2×2 个面，内部恰是该顶点上的四条边"""
    c = toric_sq3.complex
    disk = vertex_star_region(c, 0)
    assert disk.disk_certified
    assert len(disk.faces) == 4
    assert disk_interior(c, disk) == frozenset(incident_edges(c, 0))
    assert disk_interior(c, disk_region(c, 0, 0)) == frozenset()


def test_tqo1_two_edges_inside_disk(toric_sq3):
    c = toric_sq3.complex
    disk = vertex_star_region(c, 0)
    report = check_tqo1(toric_sq3, make_region(c, sorted(disk_interior(c, disk))[:2]), disk)
    assert report.passed
    assert report.residuals["tqo1"] <= 1e-8


def test_tqo1_refuses_boundary_edges(toric_sq3):
    """测试圆盘边界上的边被拒绝：单个面的圆盘没有内部"""
    c = toric_sq3.complex
    disk = disk_region(c, 0, 0)
    with pytest.raises(PreconditionError):
        check_tqo1(toric_sq3, make_region(c, disk.edges[:1]), disk)
    with pytest.raises(PreconditionError):
        tqo1_sweep(toric_sq3, disk, 2)
    star = vertex_star_region(c, 0)
    boundary = sorted(star.edge_set - disk_interior(c, star))[0]
    with pytest.raises(PreconditionError):
        check_tqo1(toric_sq3, make_region(c, [boundary]), star)


def test_vertex_star_wraps_on_small_torus():
    c = build_standard("torus", "square-torus", 2)
    with pytest.raises(RegionNotDiskError):
        vertex_star_region(c, 0)
    with pytest.raises(PreconditionError):
        vertex_star_region(c, c.num_vertices)


def test_tqo1_sweep_catches_non_commuting_term(toric_sq3):
    """测试故障模型上的 TQO1 扫描失败：随机投影破坏了纠错条件"""
    model = inject_non_commuting_term(toric_sq3, seed=7)
    disk = vertex_star_region(model.complex, 0)
    report = tqo1_sweep(model, disk, 1)
    assert report.outcome == CheckOutcome.FAIL
    assert report.exit_code == 1
    assert report.residuals["tqo1"] > 1e-3
    assert report.scalars["regions"] == 4


@pytest.fixture(scope="module")
def fibonacci_hc3():
    return lw_build(build_standard("torus", "honeycomb-torus", 3), builtin_fusion("Fibonacci"))


@pytest.mark.slow
def test_tqo1_on_fibonacci(fibonacci_hc3):
    """测试 LW(Fibonacci, honeycomb-torus(3)) 顶点上三条边的全部基算子"""
    c = fibonacci_hc3.complex
    disk = vertex_star_region(c, 0)
    interior = sorted(disk_interior(c, disk))
    assert interior == sorted(incident_edges(c, 0))
    report = check_tqo1(fibonacci_hc3, make_region(c, interior), disk)
    assert report.passed, report.residuals
    assert report.scalars["basis_size"] == 64


@pytest.mark.slow
def test_tqo1_fibonacci_single_edge(fibonacci_hc3):
    """测试单边上 λ 为标签的概率 d_a²/D²"""
    c = fibonacci_hc3.complex
    disk = vertex_star_region(c, 0)
    report = check_tqo1(fibonacci_hc3, make_region(c, [sorted(disk_interior(c, disk))[0]]), disk)
    assert report.passed
    assert report.scalars["lambda.0"] == pytest.approx(1 / (1 + PHI ** 2), abs=1e-8)
    assert report.scalars["lambda.3"] == pytest.approx(PHI ** 2 / (1 + PHI ** 2), abs=1e-8)
    assert report.scalars["lambda.1"] == pytest.approx(0.0, abs=1e-8)


def test_tqo1_on_sphere_is_automatic():
    model = dw("Z2", "cube-sphere", 1)
    c = model.complex
    disk = vertex_star_region(c, 0)
    report = check_tqo1(model, make_region(c, sorted(disk_interior(c, disk))[:2]), disk)
    assert report.passed
    assert report.scalars["gsd"] == 1


def test_tqo1_refuses_uncertified_region(toric_sq3):
    c = toric_sq3.complex
    with pytest.raises(RegionNotDiskError):
        check_tqo1(toric_sq3, make_region(c, [0]), make_region(c, range(c.num_edges)))
    disk = vertex_star_region(c, 0)
    outside = next(e for e in range(c.num_edges) if e not in disk.edge_set)
    with pytest.raises(PreconditionError):
        check_tqo1(toric_sq3, make_region(c, [outside]), disk)


# ---------------------------------------------------------------------------
# TQO2
# ---------------------------------------------------------------------------

def test_region_projector_counts_terms():
    model = dw("Z2", "square-torus", 4)
    c = model.complex
    p_b, count = region_projector(model, disk_region(c, 0, 1))
    assert count == 5 + 4
    assert p_b.projector_residual() <= 1e-10


def test_tqo2_face_in_ring():
    """测试 A = 一个面，B = 一圈邻面"""
    model = dw("Z2", "square-torus", 4)
    c = model.complex
    report = check_tqo2(model, disk_region(c, 0, 0), disk_region(c, 0, 1))
    assert report.passed, report.residuals
    assert report.scalars["basis_size"] == 256
    assert report.scalars["null_dim"] > 0


def test_tqo2_degenerate_nesting(toric_sq3):
    c = toric_sq3.complex
    disk = disk_region(c, 0, 0)
    report = check_tqo2(toric_sq3, disk, disk)
    assert report.passed


def test_tqo2_string_net_with_collar():
    model = lw_build(build_standard("torus", "honeycomb-torus", 3), builtin_fusion("VecZ2"))
    c = model.complex
    region_a = disk_region(c, 0, 0)
    region_b = disk_region(c, 0, 0, collar=True)
    report = check_tqo2(model, region_a, region_b)
    assert report.passed, report.residuals
    assert report.scalars["terms_in_b"] == 7


@pytest.mark.slow
def test_tqo2_fibonacci_with_collar(fibonacci_hc3):
    """测试 LW(Fibonacci, honeycomb-torus(3))：A = 一个六边形，B = 加领后的同一圆盘"""
    c = fibonacci_hc3.complex
    report = check_tqo2(fibonacci_hc3, disk_region(c, 0, 0), disk_region(c, 0, 0, collar=True))
    assert report.passed, report.residuals
    assert report.scalars["basis_size"] == 4096
    assert report.scalars["null_dim"] > 0
    assert report.residuals["tqo2"] <= 1e-10


# ---------------------------------------------------------------------------
# TQO3
# ---------------------------------------------------------------------------

def test_tqo3_torus():
    """测试同一环面的不同剖分上简并度相同且与组合计数一致"""
    report = check_tqo3("torus", ModelFamily.DW, builtin_group("Z2"),
                        [("square-torus", 2), ("triangulated-torus", 1), ("square-torus", 3)])
    assert report.passed
    assert report.scalars["gsd.square-torus:2"] == 4
    assert report.scalars["oracle.triangulated-torus:1"] == 4
    assert report.residuals == {"gsd_spread": 0.0, "oracle_mismatch": 0.0}


def test_tqo3_string_net_sphere():
    report = check_tqo3("sphere", ModelFamily.LW, builtin_fusion("Fibonacci"),
                        [("cube-sphere", 1), ("hosohedron-sphere", 3)])
    assert report.passed
    assert "oracle.cube-sphere:1" not in report.scalars


def test_tqo3_needs_two_cellulations():
    with pytest.raises(PreconditionError):
        check_tqo3("torus", ModelFamily.DW, builtin_group("Z2"), [("square-torus", 2)])


def test_gsd_row_counts_by_spectrum_above_dense_cap():
    """测试扇区超过稠密上限时按低能谱计数，方法记为 spectrum"""
    cfg = settings.model_copy(update={"dense_dim_cap": 16, "dense_eig_cap": 8})
    row = gsd_row(ModelFamily.LW, "VecZ2", "torus", ("honeycomb-torus", 2), cfg)
    assert row.error is None
    assert row.gsd == 4
    assert row.method.value == "spectrum"
    assert row.oracle == 4
    assert row.agree is True


# ---------------------------------------------------------------------------
# 码距
# ---------------------------------------------------------------------------

def test_distance_square_torus_two():
    assert distance_search(dw("Z2", "square-torus", 2), 2) == 2


def test_distance_square_torus_three_lower_bound(toric_sq3):
    assert distance_search(toric_sq3, 2) == "≥ 3"
    assert distance_search(toric_sq3, 0) == "≥ 1"


@pytest.mark.slow
def test_distance_square_torus_three(toric_sq3):
    assert distance_search(toric_sq3, 3) == 3


def test_distance_preconditions():
    with pytest.raises(NonAbelianGroupError):
        distance_search(dw("S3", "square-torus", 1), 1)
    lw = lw_build(build_standard("torus", "honeycomb-torus", 2), builtin_fusion("VecZ2"))
    with pytest.raises(PreconditionError):
        distance_search(lw, 1)


def test_check_distance_report():
    report = check_distance(dw("Z2", "square-torus", 2), 2)
    assert report.check == CheckName.DISTANCE
    assert report.passed
    assert report.scalars["distance"] == 2


def test_group_characters():
    chars = group_characters(builtin_group("Z3"))
    assert np.allclose(chars[0], 1.0)
    assert np.allclose(chars @ chars.conj().T, 3 * np.eye(3), atol=1e-10)


# ---------------------------------------------------------------------------
# 代数
# ---------------------------------------------------------------------------

def test_check_algebra():
    report = check_algebra(builtin_fusion("Fibonacci"))
    assert report.passed
    assert report.residuals["pentagon"] <= 1e-12


def test_corrupted_fsymbol_is_caught():
    """测试翻转 F^{τττ}_τ[τ,τ] 后五边形残差超过 0.1"""
    corrupted = corrupt_fsymbol(builtin_fusion("Fibonacci"))
    assert corrupted.fsymbol[(1, 1, 1, 1, 1, 1)] == -builtin_fusion("Fibonacci").fsymbol[(1, 1, 1, 1, 1, 1)]
    report = check_algebra(corrupted)
    assert report.outcome == CheckOutcome.FAIL
    assert report.residuals["pentagon"] > 0.1


def test_corrupt_pointed_category():
    fd = builtin_fusion("VecZ2")
    key = sorted(fd.fsymbol)[-1]
    assert corrupt_fsymbol(fd).fsymbol[key] == -1.0
