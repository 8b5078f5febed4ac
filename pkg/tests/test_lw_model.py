"""
测试 Levin-Wen 弦网模型：Q_v / B_p 的构造、投影性、基态简并度与点状范畴的交叉验证
"""
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from config import settings
from exceptions import NotTrivalentError
from models import GsdMethod, TermKind
from services.algebra import builtin_fusion
from services.cell_complex import build_standard, make_region
from services.lw_model import (
    _plaquette_simple,
    _plaquette_truncated,
    lw_build,
    lw_ground_projector,
    lw_local_operator_basis,
    pointed_oracle,
    truncate_face,
)
from services.spectra import projector_rank, trace
from services.verifier import check_tqo0, commutator_residual


@pytest.fixture(scope="module")
def fibonacci_hc2():
    return lw_build(build_standard("torus", "honeycomb-torus", 2), builtin_fusion("Fibonacci"))


def test_term_layout(fibonacci_hc2):
    """测试 Q_v 在前、B_p 在后"""
    m = fibonacci_hc2
    assert m.dim == 2 ** 12
    assert m.term_counts() == {"fusion": 8, "plaquette": 4}
    assert all(t.kind == TermKind.FUSION and t.op.is_diagonal for t in m.terms[:8])
    assert all(t.kind == TermKind.PLAQUETTE for t in m.terms[8:])


def test_plaquette_is_projector(fibonacci_hc2):
    """测试 B_p² = B_p、B_p† = B_p（五边形方程的数值推论）"""
    for term in fibonacci_hc2.terms:
        assert term.op.projector_residual() <= 1e-10
        assert term.op.hermitian_residual() <= 1e-10


def test_terms_commute(fibonacci_hc2):
    worst, _ = commutator_residual(fibonacci_hc2)
    assert worst <= 1e-10


def test_plaquette_annihilates_inadmissible_states(fibonacci_hc2):
    m = fibonacci_hc2
    plaquette = m.terms[8].op
    # 只有一条边取 τ：该边所在的角点不满足融合规则
    local = np.zeros(len(plaquette.edges), dtype=np.int64)
    local[0] = 1
    col = int(local @ (2 ** np.arange(len(plaquette.edges))))
    assert plaquette.matrix[:, col].nnz == 0


def test_fibonacci_sector_size(fibonacci_hc2):
    assert len(fibonacci_hc2.sector) == 175


@pytest.mark.parametrize("name,family,size,expected", [
    ("VecZ2", "honeycomb-torus", 1, 4),
    ("VecZ2", "honeycomb-torus", 2, 4),
    ("VecZ3", "honeycomb-torus", 2, 9),
    ("Fibonacci", "honeycomb-torus", 2, 4),
    ("Fibonacci", "cube-sphere", 1, 1),
    ("Fibonacci", "hosohedron-sphere", 3, 1),
    ("VecZ2", "cube-sphere", 1, 1),
])
def test_ground_state_degeneracy(name, family, size, expected):
    """测试投影算子的秩"""
    c = build_standard(None, family, size)
    p = lw_ground_projector(lw_build(c, builtin_fusion(name)))
    assert p.projector_residual() <= 1e-10
    assert projector_rank(p) == expected
    assert abs(trace(p).real - expected) <= 1e-8


@pytest.mark.slow
def test_fibonacci_hc3_degeneracy():
    m = lw_build(build_standard("torus", "honeycomb-torus", 3), builtin_fusion("Fibonacci"))
    assert m.ground_space().gsd == 4


def test_non_simple_faces_for_pointed_categories():
    """测试 honeycomb-torus(1) 的非简单面：每条边被两侧经过，平移后回到原标签"""
    c = build_standard("torus", "honeycomb-torus", 1)
    m = lw_build(c, builtin_fusion("VecZ2"))
    assert m.dim == 8
    assert len(m.sector) == 4
    assert m.ground_space().gsd == 4
    assert lw_build(c, builtin_fusion("VecZ3")).ground_space().gsd == 9


@pytest.fixture(scope="module")
def fibonacci_hc1():
    return lw_build(build_standard("torus", "honeycomb-torus", 1), builtin_fusion("Fibonacci"))


def test_fibonacci_on_one_cell_honeycomb(fibonacci_hc1):
    """测试单个六边形面（边与角点都重复）上的 Fibonacci B_p"""
    m = fibonacci_hc1
    assert m.dim == 8
    assert len(m.sector) == 5
    plaquette = m.terms[-1].op
    assert plaquette.edges == (0, 1, 2)
    values = np.linalg.eigvalsh(plaquette.matrix.toarray())
    assert np.allclose(values, np.round(values), atol=1e-10)
    assert set(np.round(values).astype(int)) <= {0, 1}
    assert plaquette.projector_residual() <= 1e-10
    assert plaquette.hermitian_residual() <= 1e-10
    assert m.ground_space().gsd == 4
    report = check_tqo0(m)
    assert report.passed
    assert report.scalars["gsd"] == 4


def test_truncated_face_pieces_are_simple():
    c = build_standard("torus", "honeycomb-torus", 1)
    t = truncate_face(c, 0)
    assert len(t.chords) == 6
    assert len(t.pieces) == 7
    assert t.support == (0, 1, 2)
    for piece in t.pieces:
        fine_edges = [k for k, _ in piece]
        assert len(set(fine_edges)) == len(fine_edges)
        corners = [t.edges[k][1] if sign > 0 else t.edges[k][0] for k, sign in piece]
        assert len(set(corners)) == len(corners)
    degree = {}
    for a, b in t.edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    assert set(degree.values()) == {3}


@pytest.mark.parametrize("surface,family,size", [
    ("sphere", "hosohedron-sphere", 3),
    ("sphere", "tetrahedron-sphere", 1),
    ("torus", "honeycomb-torus", 2),
])
def test_truncated_plaquette_matches_simple_faces(surface, family, size):
    """测试简单面上截角剖分组装的 B_p 与直接公式一致"""
    c = build_standard(surface, family, size)
    fd = builtin_fusion("Fibonacci")
    direct = _plaquette_simple(c, fd, 0, settings)
    truncated = _plaquette_truncated(c, fd, 0, settings)
    assert truncated.edges == direct.edges
    assert np.allclose(truncated.matrix.toarray(), direct.matrix.toarray(), atol=1e-10)


def test_sector_sizes_for_group_categories():
    m = lw_build(build_standard("torus", "honeycomb-torus", 2), builtin_fusion("VecZ3"))
    assert len(m.sector) == 243
    assert m.ground_space().method == GsdMethod.RANK


def test_requires_trivalent_complex():
    with pytest.raises(NotTrivalentError):
        lw_build(build_standard("torus", "square-torus", 2), builtin_fusion("VecZ2"))


def test_pointed_oracle():
    """测试 Vec_G 与同群 DW 模型的组合计数一致"""
    hc2 = build_standard("torus", "honeycomb-torus", 2)
    assert pointed_oracle(hc2, builtin_fusion("VecZ2")) == 4
    assert pointed_oracle(hc2, builtin_fusion("VecZ3")) == 9
    assert pointed_oracle(hc2, builtin_fusion("Fibonacci")) is None


def test_local_operator_basis(fibonacci_hc2):
    c = fibonacci_hc2.complex
    vertex_edges = fibonacci_hc2.terms[0].op.edges
    assert len(vertex_edges) == 3
    assert len(lw_local_operator_basis(fibonacci_hc2, make_region(c, vertex_edges))) == 64
