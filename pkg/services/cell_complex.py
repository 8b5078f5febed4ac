"""
闭曲面胞腔复形：构造、校验、细分、欧拉态和与圆盘区域
"""
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from exceptions import (
    FileFormatError,
    InvalidComplexError,
    PreconditionError,
    RegionNotDiskError,
    UnknownFamilyError,
)
from utils.file_utils import expect_arity, parse_int, parse_pair, read_directives, write_lines

logger = logging.getLogger(__name__)

Step = Tuple[int, int]  # (边编号, 走向 ±1)


@dataclass(frozen=True)
class Face:
    """面：带起点的有向边界闭路"""

    start: int
    walk: Tuple[Step, ...]

    def __len__(self) -> int:
        return len(self.walk)

    @property
    def edges(self) -> Tuple[int, ...]:
        """边界上出现的不同边（按首次出现顺序）"""
        seen = []
        for e, _ in self.walk:
            if e not in seen:
                seen.append(e)
        return tuple(seen)


@dataclass(frozen=True)
class CellComplex:
    num_vertices: int
    edges: Tuple[Tuple[int, int], ...]
    faces: Tuple[Face, ...]
    surface_tag: str
    name: str = "custom"
    metadata: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces

    @property
    def genus(self) -> Optional[int]:
        return parse_surface_tag(self.surface_tag)

    def tail(self, step: Step) -> int:
        e, sign = step
        src, dst = self.edges[e]
        return src if sign > 0 else dst

    def head(self, step: Step) -> int:
        e, sign = step
        src, dst = self.edges[e]
        return dst if sign > 0 else src


@dataclass(frozen=True)
class Region:
    """边集区域及其闭包（全部边都在区域内的顶点与面）"""

    edge_set: FrozenSet[int]
    vertices: FrozenSet[int]
    faces: FrozenSet[int]
    disk_certified: bool = False
    certificate: Tuple[Tuple[str, str], ...] = ()

    @property
    def edges(self) -> Tuple[int, ...]:
        return tuple(sorted(self.edge_set))

    def __len__(self) -> int:
        return len(self.edge_set)

    def issubset(self, other: "Region") -> bool:
        return self.edge_set <= other.edge_set


# ---------------------------------------------------------------------------
# 基本查询
# ---------------------------------------------------------------------------

def parse_surface_tag(tag: str) -> Optional[int]:
    """sphere / torus / genus-g → 亏格；无法识别时返回 None"""
    if tag == "sphere":
        return 0
    if tag == "torus":
        return 1
    if tag.startswith("genus-"):
        try:
            g = int(tag[len("genus-"):])
        except ValueError:
            return None
        return g if g >= 0 else None
    return None


def surface_tag_for_genus(genus: int) -> str:
    if genus == 0:
        return "sphere"
    if genus == 1:
        return "torus"
    return f"genus-{genus}"


def half_edges(c: CellComplex, v: int) -> List[Tuple[int, int]]:
    """
    顶点处的半边列表

    Returns:
        (边, 端点) 列表，端点 0 表示该边从 v 出发，1 表示指向 v；自环贡献两个半边
    """
    result = []
    for e, (src, dst) in enumerate(c.edges):
        if src == v:
            result.append((e, 0))
        if dst == v:
            result.append((e, 1))
    return result


def incident_edges(c: CellComplex, v: int) -> Tuple[int, ...]:
    return tuple(sorted({e for e, _ in half_edges(c, v)}))


def vertex_degrees(c: CellComplex) -> np.ndarray:
    degrees = np.zeros(c.num_vertices, dtype=np.int64)
    for src, dst in c.edges:
        degrees[src] += 1
        degrees[dst] += 1
    return degrees


def is_trivalent(c: CellComplex) -> bool:
    return bool(np.all(vertex_degrees(c) == 3))


def face_is_simple(c: CellComplex, f: int) -> bool:
    """面的边界边两两不同且角点两两不同"""
    face = c.faces[f]
    corners = [c.tail(step) for step in face.walk]
    return len(face.edges) == len(face) and len(set(corners)) == len(corners)


def face_adjacency(c: CellComplex) -> nx.Graph:
    """面邻接图：共享至少一条边的两个面相邻"""
    graph = nx.Graph()
    graph.add_nodes_from(range(c.num_faces))
    owners: Dict[int, List[int]] = {}
    for f, face in enumerate(c.faces):
        for e in face.edges:
            owners.setdefault(e, []).append(f)
    for e in sorted(owners):
        for f1, f2 in combinations(sorted(set(owners[e])), 2):
            graph.add_edge(f1, f2)
    return graph


def canonical_face(edges: Sequence[Tuple[int, int]], walk: Sequence[Step]) -> Face:
    """把闭路旋转到字典序最小的位置，起点取第一步的起点"""
    walk = [(int(e), int(s)) for e, s in walk]
    rotations = [tuple(walk[i:] + walk[:i]) for i in range(len(walk))]
    best = min(rotations)
    e, sign = best[0]
    start = edges[e][0] if sign > 0 else edges[e][1]
    return Face(start=start, walk=best)


def _finish(num_vertices: int, edges, walks, surface_tag: str, name: str) -> CellComplex:
    edges = tuple((int(s), int(d)) for s, d in edges)
    faces = tuple(canonical_face(edges, w) for w in walks)
    metadata = {}
    if any(len(face.edges) < len(face) for face in faces):
        metadata["self_adjacent_faces"] = "true"
    c = CellComplex(num_vertices=num_vertices, edges=edges, faces=faces,
                    surface_tag=surface_tag, name=name, metadata=metadata)
    violations = validate(c)
    if violations:
        raise InvalidComplexError(violations)
    return c


# ---------------------------------------------------------------------------
# 内置胞腔剖分
# ---------------------------------------------------------------------------

def _square_torus(k: int) -> CellComplex:
    def vert(i, j):
        return (i % k) * k + (j % k)

    def h(i, j):
        return vert(i, j)

    def v(i, j):
        return k * k + vert(i, j)

    edges = [None] * (2 * k * k)
    for i in range(k):
        for j in range(k):
            edges[h(i, j)] = (vert(i, j), vert(i, j + 1))
            edges[v(i, j)] = (vert(i, j), vert(i + 1, j))
    walks = []
    for i in range(k):
        for j in range(k):
            walks.append([(h(i, j), 1), (v(i, j + 1), 1), (h(i + 1, j), -1), (v(i, j), -1)])
    return _finish(k * k, edges, walks, "torus", f"square-torus({k})")


def _triangulated_torus(k: int) -> CellComplex:
    def vert(i, j):
        return (i % k) * k + (j % k)

    def h(i, j):
        return vert(i, j)

    def v(i, j):
        return k * k + vert(i, j)

    def d(i, j):
        return 2 * k * k + vert(i, j)

    edges = [None] * (3 * k * k)
    for i in range(k):
        for j in range(k):
            edges[h(i, j)] = (vert(i, j), vert(i, j + 1))
            edges[v(i, j)] = (vert(i, j), vert(i + 1, j))
            edges[d(i, j)] = (vert(i, j), vert(i + 1, j + 1))
    walks = []
    for i in range(k):
        for j in range(k):
            walks.append([(h(i, j), 1), (v(i, j + 1), 1), (d(i, j), -1)])
            walks.append([(d(i, j), 1), (h(i + 1, j), -1), (v(i, j), -1)])
    return _finish(k * k, edges, walks, "torus", f"triangulated-torus({k})")


def _honeycomb_torus(k: int) -> CellComplex:
    # 格矢 a1, a2；R = m·a1 + n·a2。A(R) 的三条边分别指向 B(R)、B(R−a1)、B(R−a2)
    def cell(m, n):
        return (m % k) * k + (n % k)

    def site_a(m, n):
        return cell(m, n)

    def site_b(m, n):
        return k * k + cell(m, n)

    def bond(t, m, n):
        return t * k * k + cell(m, n)

    edges = [None] * (3 * k * k)
    for m in range(k):
        for n in range(k):
            edges[bond(0, m, n)] = (site_a(m, n), site_b(m, n))
            edges[bond(1, m, n)] = (site_a(m, n), site_b(m - 1, n))
            edges[bond(2, m, n)] = (site_a(m, n), site_b(m, n - 1))
    walks = []
    for m in range(k):
        for n in range(k):
            walks.append([
                (bond(1, m, n), 1),
                (bond(2, m - 1, n + 1), -1),
                (bond(0, m - 1, n + 1), 1),
                (bond(1, m, n + 1), -1),
                (bond(2, m, n + 1), 1),
                (bond(0, m, n), -1),
            ])
    return _finish(2 * k * k, edges, walks, "torus", f"honeycomb-torus({k})")


def _polyhedron(name: str, coords, cycles) -> CellComplex:
    """由顶点坐标与面顶点环构造凸多面体；面按外法向逆时针定向"""
    coords = np.asarray(coords, dtype=float)
    oriented = []
    for cyc in cycles:
        pts = coords[list(cyc)]
        normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        if np.dot(normal, pts.mean(axis=0)) < 0:
            cyc = tuple(reversed(cyc))
        oriented.append(tuple(cyc))
    keys = sorted({tuple(sorted((cyc[i], cyc[(i + 1) % len(cyc)])))
                   for cyc in oriented for i in range(len(cyc))})
    index = {key: i for i, key in enumerate(keys)}
    walks = []
    for cyc in oriented:
        walk = []
        for i, a in enumerate(cyc):
            b = cyc[(i + 1) % len(cyc)]
            walk.append((index[(min(a, b), max(a, b))], 1 if a < b else -1))
        walks.append(walk)
    return _finish(len(coords), keys, walks, "sphere", name)


def _tetrahedron() -> CellComplex:
    coords = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    return _polyhedron("tetrahedron-sphere", coords, list(combinations(range(4), 3)))


def _octahedron() -> CellComplex:
    coords = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    cycles = [(x, y, z) for x in (0, 1) for y in (2, 3) for z in (4, 5)]
    return _polyhedron("octahedron-sphere", coords, cycles)


def _cube() -> CellComplex:
    coords = [(2 * (i & 1) - 1, 2 * ((i >> 1) & 1) - 1, 2 * ((i >> 2) & 1) - 1) for i in range(8)]
    cycles = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5)]
    return _polyhedron("cube-sphere", coords, cycles)


def _hosohedron(n: int) -> CellComplex:
    edges = [(0, 1)] * n
    walks = [[(i, 1), ((i + 1) % n, -1)] for i in range(n)]
    return _finish(2, edges, walks, "sphere", f"hosohedron-sphere({n})")


def _standard_polygon(g: int) -> CellComplex:
    edges = [(0, 0)] * (2 * g)
    walk = []
    for j in range(g):
        walk += [(2 * j, 1), (2 * j + 1, 1), (2 * j, -1), (2 * j + 1, -1)]
    return _finish(1, edges, [walk], surface_tag_for_genus(g), f"standard-polygon({g})")


# 族名 → (曲面, 最小尺寸, 是否固定多面体, 构造函数)
FAMILIES = {
    "square-torus": ("torus", 1, False, _square_torus),
    "triangulated-torus": ("torus", 1, False, _triangulated_torus),
    "honeycomb-torus": ("torus", 1, False, _honeycomb_torus),
    "tetrahedron-sphere": ("sphere", 1, True, lambda size: _tetrahedron()),
    "octahedron-sphere": ("sphere", 1, True, lambda size: _octahedron()),
    "cube-sphere": ("sphere", 1, True, lambda size: _cube()),
    "hosohedron-sphere": ("sphere", 2, False, _hosohedron),
    "standard-polygon": (None, 1, False, _standard_polygon),
}


def family_surface(family: str, size: int) -> str:
    if family not in FAMILIES:
        raise UnknownFamilyError(f"未知的胞腔剖分族: {family}")
    surface = FAMILIES[family][0]
    return surface if surface is not None else surface_tag_for_genus(size)


def build_standard(surface: Optional[str], family: str, size: int = 1) -> CellComplex:
    """
    构造内置胞腔剖分

    Args:
        surface: 声明的曲面类型（sphere / torus / genus-g），None 表示按族推断
        family: 剖分族名
        size: 尺寸参数（固定多面体只接受 1）

    Returns:
        CellComplex: 通过校验的复形
    """
    if family not in FAMILIES:
        raise UnknownFamilyError(f"未知的胞腔剖分族: {family}（可选: {', '.join(FAMILIES)}）")
    _, min_size, fixed, builder = FAMILIES[family]
    if size < min_size:
        raise PreconditionError(f"{family} 需要 size ≥ {min_size}，实际 {size}")
    if fixed and size != 1:
        raise PreconditionError(f"{family} 是固定多面体，只接受 size=1")
    expected = family_surface(family, size)
    if surface is not None and surface != expected:
        raise PreconditionError(f"{family}({size}) 是 {expected}，与声明的 {surface} 不符")
    c = builder(size)
    logger.debug(f"构造胞腔剖分 {c.name}: V={c.num_vertices} E={c.num_edges} F={c.num_faces}")
    return c


def parse_cellulation(spec: str) -> Tuple[str, int]:
    """'square-torus:3' → ('square-torus', 3)；省略尺寸时为 1"""
    if ":" in spec:
        family, size = spec.split(":", 1)
        try:
            return family.strip(), int(size)
        except ValueError:
            raise PreconditionError(f"无法解析剖分尺寸: {spec!r}")
    return spec.strip(), 1


# ---------------------------------------------------------------------------
# 校验与欧拉态和
# ---------------------------------------------------------------------------

def validate(c: CellComplex) -> List[str]:
    """
    检查复形的全部不变量

    Args:
        c: 胞腔复形

    Returns:
        List[str]: 违规描述列表，每条都指明出错的胞腔；为空表示复形有效
    """
    violations = []
    num_v, num_e = c.num_vertices, c.num_edges
    if num_v < 1:
        violations.append("complex: no vertices")
    edges_ok = True
    for e, (src, dst) in enumerate(c.edges):
        if not (0 <= src < num_v and 0 <= dst < num_v):
            violations.append(f"edge {e}: endpoint out of range ({src}, {dst})")
            edges_ok = False

    counts = np.zeros((num_e, 2), dtype=np.int64)
    for f, face in enumerate(c.faces):
        if not face.walk:
            violations.append(f"face {f}: empty boundary walk")
            continue
        bad = False
        for e, sign in face.walk:
            if not 0 <= e < num_e or sign not in (1, -1):
                violations.append(f"face {f}: invalid step ({e}, {sign})")
                bad = True
        if bad or not edges_ok:
            continue
        if face.start != c.tail(face.walk[0]):
            violations.append(f"face {f}: start vertex {face.start} is not the tail of the first step")
        n = len(face.walk)
        for k in range(n):
            here = c.head(face.walk[k])
            there = c.tail(face.walk[(k + 1) % n])
            if here != there:
                violations.append(
                    f"face {f}: walk disconnected, step {k} ends at vertex {here} "
                    f"but step {(k + 1) % n} starts at vertex {there}")
        for e, sign in face.walk:
            counts[e, 0 if sign > 0 else 1] += 1

    for e in range(num_e):
        plus, minus = counts[e]
        if plus != 1 or minus != 1:
            violations.append(
                f"edge {e}: traversed +1 {plus} times and -1 {minus} times (expected once each)")

    genus = parse_surface_tag(c.surface_tag)
    if genus is None:
        violations.append(f"complex: unknown surface tag {c.surface_tag!r}")
    elif c.euler_characteristic != 2 - 2 * genus:
        violations.append(
            f"complex: Euler characteristic mismatch, V-E+F = {c.euler_characteristic} "
            f"but surface {c.surface_tag} requires {2 - 2 * genus}")
    return violations


def graded_state_sum(cell_counts: Sequence[int], a: float) -> float:
    """
    逐胞腔累乘的态和：i 维胞腔权重为 a^{(-1)^i}

    Args:
        cell_counts: 各维胞腔数
        a: 正实数权重

    Returns:
        float: 态和 Z
    """
    if a <= 0:
        raise PreconditionError(f"态和权重必须为正: a={a}")
    weight = 1.0
    for dim, count in enumerate(cell_counts):
        for _ in range(count):
            if dim % 2 == 0:
                weight *= a
            else:
                weight /= a
    return weight


def euler_state_sum(c: CellComplex, a: float) -> float:
    return graded_state_sum([c.num_vertices, c.num_edges, c.num_faces], a)


# ---------------------------------------------------------------------------
# 区域
# ---------------------------------------------------------------------------

def make_region(c: CellComplex, edges: Iterable[int], certified: bool = False,
                certificate: Tuple[Tuple[str, str], ...] = ()) -> Region:
    """由边集构造区域并计算闭包"""
    edge_set = frozenset(int(e) for e in edges)
    for e in edge_set:
        if not 0 <= e < c.num_edges:
            raise PreconditionError(f"区域包含不存在的边 {e}")
    vertices = frozenset(v for v in range(c.num_vertices)
                         if incident_edges(c, v) and set(incident_edges(c, v)) <= edge_set)
    faces = frozenset(f for f, face in enumerate(c.faces) if set(face.edges) <= edge_set)
    return Region(edge_set=edge_set, vertices=vertices, faces=faces,
                  disk_certified=certified, certificate=certificate)


def certify_disk(c: CellComplex, faces: Sequence[int]) -> Dict[str, str]:
    """
    验证若干面的并是拓扑圆盘：连通、χ=1、边界为单个圆周

    Returns:
        Dict[str, str]: 证书字段
    """
    faces = sorted(set(faces))
    if not faces:
        raise RegionNotDiskError("空面集不是圆盘")
    adjacency = face_adjacency(c).subgraph(faces)
    if not nx.is_connected(adjacency):
        raise RegionNotDiskError(f"面集 {faces} 不连通")
    traversals = Counter()
    verts = set()
    for f in faces:
        for step in c.faces[f].walk:
            traversals[step[0]] += 1
            verts.add(c.tail(step))
    chi = len(verts) - len(traversals) + len(faces)
    if chi != 1:
        raise RegionNotDiskError(f"面集 {faces} 的欧拉示性数为 {chi}，不是圆盘")
    boundary = sorted(e for e, n in traversals.items() if n == 1)
    if not boundary:
        raise RegionNotDiskError(f"面集 {faces} 没有边界（覆盖了闭曲面）")
    ring = nx.MultiGraph()
    for e in boundary:
        ring.add_edge(*c.edges[e], key=e)
    if not nx.is_connected(ring) or any(deg != 2 for _, deg in ring.degree()):
        raise RegionNotDiskError(f"面集 {faces} 的边界不是单个圆周")
    return {"faces": ",".join(map(str, faces)), "chi": str(chi),
            "boundary_edges": str(len(boundary))}


def _collar_legs(c: CellComplex, core_edges: FrozenSet[int], core_vertices: FrozenSet[int]) -> List[int]:
    """圆盘顶点上伸出的腿；要求每条腿恰有一个端点在圆盘上且外端点互不相同"""
    legs = sorted({e for v in core_vertices for e in incident_edges(c, v)} - core_edges)
    outer = []
    for e in legs:
        src, dst = c.edges[e]
        inside = (src in core_vertices) + (dst in core_vertices)
        if inside != 1:
            raise RegionNotDiskError(f"腿 {e} 的两个端点都在圆盘上，加领后不是圆盘")
        outer.append(dst if src in core_vertices else src)
    if len(set(outer)) != len(outer):
        raise RegionNotDiskError("腿的外端点重合，加领后不是圆盘")
    return legs


def _certified_region(c: CellComplex, faces: Sequence[int], collar: bool) -> Region:
    """面集的并经圆盘认证后构成的区域；闭包不得多出面"""
    core = sorted(set(faces))
    certificate = certify_disk(c, core)
    core_edges = frozenset(e for f in core for e in c.faces[f].edges)
    edges = set(core_edges)
    if collar:
        core_vertices = frozenset(c.tail(step) for f in core for step in c.faces[f].walk)
        legs = _collar_legs(c, core_edges, core_vertices)
        edges |= set(legs)
        certificate["legs"] = ",".join(map(str, legs))
    region = make_region(c, edges, certified=True, certificate=tuple(sorted(certificate.items())))
    if region.faces != frozenset(core):
        extra = sorted(region.faces - frozenset(core))
        raise RegionNotDiskError(f"区域的闭包包含额外的面 {extra}，区域绕过了曲面的环柄")
    return region


def disk_region(c: CellComplex, seed_face: int, radius: int, collar: bool = False) -> Region:
    """
    以种子面为中心按面邻接生长圆盘区域，并机器验证其为圆盘

    Args:
        c: 胞腔复形
        seed_face: 种子面编号
        radius: 面邻接步数
        collar: 是否加上圆盘顶点处的腿

    Returns:
        Region: 带圆盘证书的区域
    """
    if not 0 <= seed_face < c.num_faces:
        raise PreconditionError(f"种子面 {seed_face} 不存在")
    if radius < 0:
        raise PreconditionError(f"半径必须非负: {radius}")
    lengths = nx.single_source_shortest_path_length(face_adjacency(c), seed_face, cutoff=radius)
    region = _certified_region(c, sorted(lengths), collar)
    logger.debug(f"圆盘区域: {c.name} 种子面 {seed_face} 半径 {radius} → {len(region)} 条边")
    return region


def vertex_star_region(c: CellComplex, v: int, collar: bool = False) -> Region:
    """顶点周围全部面组成的圆盘；该顶点上的边都在圆盘内部"""
    if not 0 <= v < c.num_vertices:
        raise PreconditionError(f"顶点 {v} 不存在")
    star = [f for f, face in enumerate(c.faces) if any(c.tail(step) == v for step in face.walk)]
    region = _certified_region(c, star, collar)
    logger.debug(f"顶点星形区域: {c.name} 顶点 {v} → 面 {star}，{len(region)} 条边")
    return region


def disk_interior(c: CellComplex, region: Region) -> FrozenSet[int]:
    """区域闭包中的面两侧都经过的边；加领的腿与圆盘边界都不在内部"""
    traversals = Counter(e for f in region.faces for e, _ in c.faces[f].walk)
    return frozenset(e for e, n in traversals.items() if n == 2 and e in region.edge_set)


# ---------------------------------------------------------------------------
# 细分
# ---------------------------------------------------------------------------

def subdivide_face(c: CellComplex, f: int) -> CellComplex:
    """
    重心细分一个面：加入中心顶点与到各角点的辐边，n 边形变为 n 个三角形

    Args:
        c: 胞腔复形
        f: 被细分的面

    Returns:
        CellComplex: 新复形（欧拉示性数不变）
    """
    if not 0 <= f < c.num_faces:
        raise PreconditionError(f"面 {f} 不存在")
    face = c.faces[f]
    center = c.num_vertices
    n = len(face)
    base = c.num_edges
    corners = [c.tail(step) for step in face.walk]
    new_edges = list(c.edges) + [(center, p) for p in corners]
    triangles = []
    for i, step in enumerate(face.walk):
        triangles.append([step, (base + (i + 1) % n, -1), (base + i, 1)])
    walks = [list(fc.walk) for fc in c.faces]
    walks[f] = triangles[0]
    walks += triangles[1:]
    return _finish(c.num_vertices + 1, new_edges, walks, c.surface_tag, f"{c.name}+sub{f}")


# ---------------------------------------------------------------------------
# 文本格式
# ---------------------------------------------------------------------------

def complex_to_lines(c: CellComplex) -> List[str]:
    genus = c.genus
    lines = [f"surface {c.surface_tag} genus {genus if genus is not None else -1}",
             f"v {c.num_vertices}"]
    for e, (src, dst) in enumerate(c.edges):
        lines.append(f"e {e} {src} {dst}")
    for f, face in enumerate(c.faces):
        steps = " ".join(f"{e}:{'+1' if s > 0 else '-1'}" for e, s in face.walk)
        lines.append(f"f {f} {face.start} {steps}")
    return lines


def save_complex(c: CellComplex, path: Union[str, Path]):
    write_lines(path, complex_to_lines(c))


def load_complex(path: Union[str, Path]) -> CellComplex:
    """
    读取复形文本文件并校验

    Args:
        path: 文件路径

    Returns:
        CellComplex: 通过校验的复形
    """
    source = str(path)
    directives = read_directives(path)
    surface_tag = None
    num_vertices = None
    edges: List[Tuple[int, int]] = []
    faces: List[Face] = []
    for line_no, words in directives:
        key = words[0]
        if key == "surface":
            expect_arity(words, 4, source, line_no)
            if words[2] != "genus":
                raise FileFormatError("surface 行应为 'surface <tag> genus <g>'", source, line_no)
            surface_tag = words[1]
            genus = parse_int(words[3], source, line_no, "genus")
            if parse_surface_tag(surface_tag) != genus:
                raise FileFormatError(f"曲面 {surface_tag} 与 genus {genus} 不一致", source, line_no)
        elif key == "v":
            expect_arity(words, 2, source, line_no)
            num_vertices = parse_int(words[1], source, line_no, "顶点数")
        elif key == "e":
            expect_arity(words, 4, source, line_no)
            idx = parse_int(words[1], source, line_no, "边编号")
            if idx != len(edges):
                raise FileFormatError(f"边编号应连续，期望 {len(edges)}", source, line_no)
            edges.append((parse_int(words[2], source, line_no, "起点"),
                          parse_int(words[3], source, line_no, "终点")))
        elif key == "f":
            if len(words) < 4:
                raise FileFormatError("面至少需要一步边界", source, line_no)
            idx = parse_int(words[1], source, line_no, "面编号")
            if idx != len(faces):
                raise FileFormatError(f"面编号应连续，期望 {len(faces)}", source, line_no)
            start = parse_int(words[2], source, line_no, "起点")
            walk = []
            for token in words[3:]:
                e, sign = parse_pair(token, source, line_no, "边界步")
                sign_value = parse_int(sign, source, line_no, "走向")
                if sign_value not in (1, -1):
                    raise FileFormatError(f"走向必须为 ±1: {token}", source, line_no)
                walk.append((parse_int(e, source, line_no, "边编号"), sign_value))
            faces.append(Face(start=start, walk=tuple(walk)))
        else:
            raise FileFormatError(f"未知指令 {key!r}", source, line_no)
    if surface_tag is None or num_vertices is None:
        raise FileFormatError("缺少 surface 或 v 行", source)
    c = CellComplex(num_vertices=num_vertices, edges=tuple(edges), faces=tuple(faces),
                    surface_tag=surface_tag, name=f"file:{Path(path).stem}")
    violations = validate(c)
    if violations:
        raise InvalidComplexError(violations)
    return c


def with_surface_tag(c: CellComplex, surface_tag: str) -> CellComplex:
    """替换声明的曲面类型（不做校验）"""
    return replace(c, surface_tag=surface_tag)
