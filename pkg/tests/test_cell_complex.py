"""
测试闭曲面胞腔复形：内置剖分、校验、欧拉态和、圆盘区域、细分与文本格式
"""
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from exceptions import (
    FileFormatError,
    InvalidComplexError,
    PreconditionError,
    RegionNotDiskError,
    UnknownFamilyError,
)
from services.cell_complex import (
    FAMILIES,
    Face,
    build_standard,
    disk_interior,
    disk_region,
    euler_state_sum,
    face_is_simple,
    graded_state_sum,
    incident_edges,
    is_trivalent,
    load_complex,
    make_region,
    parse_cellulation,
    save_complex,
    subdivide_face,
    validate,
    vertex_star_region,
)

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')

BUILTINS = [
    ("square-torus", 1), ("square-torus", 2), ("square-torus", 3),
    ("triangulated-torus", 1), ("triangulated-torus", 2),
    ("honeycomb-torus", 1), ("honeycomb-torus", 2),
    ("tetrahedron-sphere", 1), ("octahedron-sphere", 1), ("cube-sphere", 1),
    ("hosohedron-sphere", 2), ("hosohedron-sphere", 3),
    ("standard-polygon", 1), ("standard-polygon", 2),
]


@pytest.mark.parametrize("family,size,expected", [
    ("tetrahedron-sphere", 1, (4, 6, 4)),
    ("octahedron-sphere", 1, (6, 12, 8)),
    ("cube-sphere", 1, (8, 12, 6)),
    ("square-torus", 2, (4, 8, 4)),
    ("square-torus", 3, (9, 18, 9)),
    ("triangulated-torus", 2, (4, 12, 8)),
    ("honeycomb-torus", 2, (8, 12, 4)),
    ("honeycomb-torus", 3, (18, 27, 9)),
    ("hosohedron-sphere", 3, (2, 3, 3)),
    ("standard-polygon", 2, (1, 4, 1)),
])
def test_cell_counts(family, size, expected):
    """测试内置剖分的 V/E/F"""
    c = build_standard(None, family, size)
    assert (c.num_vertices, c.num_edges, c.num_faces) == expected


@pytest.mark.parametrize("family,size", BUILTINS)
def test_builtins_are_valid(family, size):
    """测试所有内置剖分通过校验且欧拉示性数与曲面一致"""
    c = build_standard(None, family, size)
    assert validate(c) == []
    assert c.euler_characteristic == 2 - 2 * c.genus


def test_trivalence():
    assert is_trivalent(build_standard("sphere", "cube-sphere"))
    assert is_trivalent(build_standard("sphere", "hosohedron-sphere", 3))
    assert is_trivalent(build_standard("torus", "honeycomb-torus", 2))
    assert not is_trivalent(build_standard("torus", "square-torus", 2))


def test_honeycomb_one_has_non_simple_face():
    c = build_standard("torus", "honeycomb-torus", 1)
    assert not face_is_simple(c, 0)
    assert face_is_simple(build_standard("torus", "honeycomb-torus", 2), 0)


def test_build_errors():
    """测试未知族名、尺寸与曲面不符"""
    with pytest.raises(UnknownFamilyError):
        build_standard(None, "klein-bottle", 2)
    with pytest.raises(PreconditionError):
        build_standard("sphere", "square-torus", 2)
    with pytest.raises(PreconditionError):
        build_standard(None, "cube-sphere", 2)
    with pytest.raises(PreconditionError):
        build_standard(None, "hosohedron-sphere", 1)


def test_parse_cellulation():
    assert parse_cellulation("square-torus:3") == ("square-torus", 3)
    assert parse_cellulation("cube-sphere") == ("cube-sphere", 1)
    with pytest.raises(PreconditionError):
        parse_cellulation("square-torus:x")


def test_validate_reports_each_violation():
    """测试校验列出出错的胞腔"""
    c = build_standard("torus", "square-torus", 2)
    broken = replace(c, surface_tag="sphere")
    violations = validate(broken)
    assert any("Euler characteristic" in v for v in violations)

    face = c.faces[0]
    walk = list(face.walk)
    walk[0] = (walk[0][0], -walk[0][1])
    faces = list(c.faces)
    faces[0] = Face(start=face.start, walk=tuple(walk))
    violations = validate(replace(c, faces=tuple(faces)))
    assert any(v.startswith("face 0") for v in violations)
    assert any(v.startswith(f"edge {walk[0][0]}") for v in violations)


@pytest.mark.parametrize("family,size", BUILTINS)
@pytest.mark.parametrize("a", [0.5, 2.0, 7.0])
def test_euler_state_sum(family, size, a):
    """测试态和等于 a^χ"""
    c = build_standard(None, family, size)
    expected = a ** c.euler_characteristic
    assert math.isclose(euler_state_sum(c, a), expected, rel_tol=1e-12)


def test_euler_state_sum_examples():
    assert euler_state_sum(build_standard("sphere", "tetrahedron-sphere"), 2.0) == pytest.approx(4.0, rel=1e-12)
    assert euler_state_sum(build_standard("torus", "square-torus", 3), 7.0) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(PreconditionError):
        euler_state_sum(build_standard("sphere", "tetrahedron-sphere"), 0.0)


def test_graded_state_sum_any_dimension():
    # 交错和 1 − 3 + 3 − 1 = 0
    assert graded_state_sum([1, 3, 3, 1], 5.0) == pytest.approx(1.0, rel=1e-12)


def test_disk_region():
    """测试圆盘区域的边数与证书"""
    sq4 = build_standard("torus", "square-torus", 4)
    region = disk_region(sq4, 0, 0)
    assert len(region) == 4
    assert region.disk_certified
    assert region.faces == frozenset({0})

    ring = disk_region(sq4, 0, 1)
    assert len(ring) == 5 * 4 - 4
    assert region.issubset(ring)

    octa = build_standard("sphere", "octahedron-sphere")
    assert len(disk_region(octa, 0, 0)) == 3


def test_disk_region_wrapping_torus_is_refused():
    sq2 = build_standard("torus", "square-torus", 2)
    with pytest.raises(RegionNotDiskError):
        disk_region(sq2, 0, 1)
    with pytest.raises(PreconditionError):
        disk_region(sq2, 9, 0)


def test_disk_region_with_collar():
    hc3 = build_standard("torus", "honeycomb-torus", 3)
    region = disk_region(hc3, 0, 0, collar=True)
    assert len(region) == 12
    assert dict(region.certificate)["legs"]


def test_vertex_star_on_honeycomb():
    """测试 honeycomb-torus(3) 顶点星形：三个六边形，内部是该顶点上的三条边"""
    hc3 = build_standard("torus", "honeycomb-torus", 3)
    star = vertex_star_region(hc3, 0)
    assert star.disk_certified
    assert len(star.faces) == 3
    assert len(star) == 15
    assert disk_interior(hc3, star) == frozenset(incident_edges(hc3, 0))
    assert disk_interior(hc3, disk_region(hc3, 0, 0, collar=True)) == frozenset()


@pytest.mark.parametrize("family,size", [("square-torus", 2), ("honeycomb-torus", 2)])
def test_vertex_star_wrapping_is_refused(family, size):
    with pytest.raises(RegionNotDiskError):
        vertex_star_region(build_standard("torus", family, size), 0)


def test_make_region_closure():
    c = build_standard("sphere", "tetrahedron-sphere")
    everything = make_region(c, range(c.num_edges))
    assert everything.vertices == frozenset(range(4))
    assert everything.faces == frozenset(range(4))
    with pytest.raises(PreconditionError):
        make_region(c, [99])


@hyp_settings(max_examples=25, deadline=None)
@given(choice=st.sampled_from(BUILTINS), data=st.data())
def test_subdivision_preserves_surface(choice, data):
    """测试细分任意一个面后仍是同一曲面的有效剖分"""
    c = build_standard(None, *choice)
    f = data.draw(st.integers(min_value=0, max_value=c.num_faces - 1))
    sub = subdivide_face(c, f)
    n = len(c.faces[f])
    assert validate(sub) == []
    assert sub.euler_characteristic == c.euler_characteristic
    assert (sub.num_vertices, sub.num_edges, sub.num_faces) == \
        (c.num_vertices + 1, c.num_edges + n, c.num_faces + n - 1)


def test_save_and_load(tmp_path):
    c = build_standard("torus", "honeycomb-torus", 2)
    path = tmp_path / "c.complex"
    save_complex(c, path)
    loaded = load_complex(path)
    assert loaded.edges == c.edges
    assert loaded.faces == c.faces
    assert loaded.surface_tag == c.surface_tag


def test_load_sample_file():
    c = load_complex(os.path.join(DATA_DIR, "square1.complex"))
    assert (c.num_vertices, c.num_edges, c.num_faces) == (1, 2, 1)
    assert c.surface_tag == "torus"


def test_load_errors(tmp_path):
    """测试文本格式错误与无效复形"""
    bad = tmp_path / "bad.complex"
    bad.write_text("surface torus genus 1\nv 1\ne 0 0 0\nq 1\n", encoding="utf-8")
    with pytest.raises(FileFormatError) as exc:
        load_complex(bad)
    assert exc.value.line_no == 4

    wrong = tmp_path / "wrong.complex"
    wrong.write_text("surface sphere genus 0\nv 1\ne 0 0 0\ne 1 0 0\n"
                     "f 0 0 0:+1 1:+1 0:-1 1:-1\n", encoding="utf-8")
    with pytest.raises(InvalidComplexError) as exc:
        load_complex(wrong)
    assert any("Euler" in v for v in exc.value.violations)

    with pytest.raises(FileFormatError):
        load_complex(tmp_path / "missing.complex")


def test_family_table_is_complete():
    assert {"square-torus", "triangulated-torus", "honeycomb-torus", "tetrahedron-sphere",
            "octahedron-sphere", "cube-sphere"} <= set(FAMILIES)
