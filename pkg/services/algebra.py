"""
代数输入：DW 模型的有限群与 Levin-Wen 模型的融合范畴数据
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import permutations, product
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from config import Settings, settings
from exceptions import (
    AlgebraValidationError,
    FileFormatError,
    MissingFSymbolError,
    UnknownFamilyError,
)
from utils.file_utils import (
    expect_arity,
    format_float,
    parse_float,
    parse_int,
    parse_pair,
    read_directives,
    write_lines,
)

logger = logging.getLogger(__name__)

Sextuple = Tuple[int, int, int, int, int, int]

FUSION_GAUGE_HEADER = [
    "# F-symbol convention: F a b c d e f = F^{abc}_d[e,f], the change of basis",
    "# from ((a b)_e c)_d to (a (b c)_f)_d; stored in the unitary gauge, real for Fibonacci.",
]

GROUP_ASSOCIATIVITY_EXHAUSTIVE = 128


# ---------------------------------------------------------------------------
# 有限群
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteGroup:
    name: str
    mult: np.ndarray
    identity: int
    inv: np.ndarray

    @property
    def order(self) -> int:
        return int(self.mult.shape[0])

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteGroup):
            return NotImplemented
        return (self.name == other.name and self.identity == other.identity
                and np.array_equal(self.mult, other.mult) and np.array_equal(self.inv, other.inv))

    def __hash__(self) -> int:
        return hash((self.name, self.mult.tobytes()))


def validate_group(name: str, mult) -> FiniteGroup:
    """
    校验乘法表并构造群；依次检查形状、单位元、结合律、逆元

    Args:
        name: 群名
        mult: n×n 乘法表

    Returns:
        FiniteGroup: 校验通过的群
    """
    table = np.asarray(mult, dtype=np.int64)
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 1:
        raise AlgebraValidationError("shape", f"乘法表必须是非空方阵，实际形状 {table.shape}")
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        raise AlgebraValidationError("shape", "乘法表元素超出范围")

    elements = np.arange(n)
    identity = None
    for e in range(n):
        if np.array_equal(table[e], elements) and np.array_equal(table[:, e], elements):
            identity = e
            break
    if identity is None:
        raise AlgebraValidationError("identity", "找不到双边单位元")

    if n <= GROUP_ASSOCIATIVITY_EXHAUSTIVE:
        left = table[table]
        right = table[elements[:, None, None], table[None, :, :]]
        bad = np.argwhere(left != right)
    else:
        rng = np.random.default_rng(0)
        triples = rng.integers(0, n, size=(200000, 3))
        a, b, c = triples.T
        bad = triples[table[table[a, b], c] != table[a, table[b, c]]]
    if len(bad):
        a, b, c = (int(x) for x in bad[0])
        raise AlgebraValidationError("associativity", f"结合律不成立: ({a}·{b})·{c} ≠ {a}·({b}·{c})")

    inv = np.full(n, -1, dtype=np.int64)
    for a in range(n):
        candidates = np.flatnonzero((table[a] == identity) & (table[:, a] == identity))
        if len(candidates) == 0:
            raise AlgebraValidationError("inverse", f"元素 {a} 没有双边逆元")
        inv[a] = candidates[0]
    table.setflags(write=False)
    inv.setflags(write=False)
    return FiniteGroup(name=name, mult=table, identity=identity, inv=inv)


def builtin_group(name: str) -> FiniteGroup:
    """
    内置有限群

    Args:
        name: Z1 / Z2 / Z3 / Z4 / S3（以及任意 Zn）

    Returns:
        FiniteGroup: 校验通过的群
    """
    if name == "S3":
        perms = list(permutations(range(3)))
        index = {p: i for i, p in enumerate(perms)}
        table = [[index[tuple(p[q[x]] for x in range(3))] for q in perms] for p in perms]
        return validate_group("S3", table)
    if name.startswith("Z") and name[1:].isdigit() and int(name[1:]) >= 1:
        n = int(name[1:])
        elements = np.arange(n)
        return validate_group(name, (elements[:, None] + elements[None, :]) % n)
    raise UnknownFamilyError(f"未知的内置群: {name}")


def load_group(path: Union[str, Path]) -> FiniteGroup:
    """读取群文件（group / order / mult + n 行）并校验"""
    source = str(path)
    directives = read_directives(path)
    name, order, rows = None, None, []
    reading_rows = False
    for line_no, words in directives:
        if reading_rows and len(rows) < order:
            rows.append([parse_int(w, source, line_no, "乘法表元素") for w in words])
            if len(rows[-1]) != order:
                raise FileFormatError(f"乘法表每行需要 {order} 个元素", source, line_no)
            continue
        key = words[0]
        if key == "group":
            expect_arity(words, 2, source, line_no)
            name = words[1]
        elif key == "order":
            expect_arity(words, 2, source, line_no)
            order = parse_int(words[1], source, line_no, "阶")
            if order < 1:
                raise FileFormatError("阶必须为正", source, line_no)
        elif key == "mult":
            if order is None:
                raise FileFormatError("mult 之前必须给出 order", source, line_no)
            reading_rows = True
        else:
            raise FileFormatError(f"未知指令 {key!r}", source, line_no)
    if name is None or order is None or len(rows) != order:
        raise FileFormatError("群文件不完整（需要 group、order 与 order 行乘法表）", source)
    group = validate_group(name, rows)
    logger.info(f"已加载群 {group.name}，阶 {group.order}")
    return group


def group_to_lines(group: FiniteGroup) -> List[str]:
    lines = [f"group {group.name}", f"order {group.order}", "mult"]
    lines += [" ".join(str(int(x)) for x in row) for row in group.mult]
    return lines


def save_group(group: FiniteGroup, path: Union[str, Path]):
    write_lines(path, group_to_lines(group))


# ---------------------------------------------------------------------------
# 融合范畴
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FusionData:
    name: str
    unit: int
    dual: np.ndarray
    qdim: np.ndarray
    fusion: np.ndarray                 # N[a, b, c] = N_{ab}^c
    fsymbol: Dict[Sextuple, complex]
    labels: Tuple[str, ...] = field(default=())

    @property
    def rank(self) -> int:
        return int(self.qdim.shape[0])

    @property
    def total_dim_sq(self) -> float:
        return float(np.sum(self.qdim ** 2))

    @property
    def is_self_dual(self) -> bool:
        return bool(np.array_equal(self.dual, np.arange(self.rank)))

    def label_name(self, a: int) -> str:
        return self.labels[a] if a < len(self.labels) else str(a)

    def admissible(self, a: int, b: int, c: int, d: int, e: int, f: int) -> bool:
        N = self.fusion
        return bool(N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d])

    def products(self, a: int, b: int) -> List[int]:
        """a⊗b 中出现的标签"""
        return [int(c) for c in np.flatnonzero(self.fusion[a, b])]

    def F(self, a: int, b: int, c: int, d: int, e: int, f: int) -> complex:
        key = (a, b, c, d, e, f)
        if key not in self.fsymbol:
            raise MissingFSymbolError(key)
        return self.fsymbol[key]

    def admissible_sextuples(self) -> List[Sextuple]:
        n = self.rank
        return [s for s in product(range(n), repeat=6) if self.admissible(*s)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FusionData):
            return NotImplemented
        return (self.name == other.name and self.unit == other.unit
                and np.array_equal(self.dual, other.dual)
                and np.array_equal(self.qdim, other.qdim)
                and np.array_equal(self.fusion, other.fusion)
                and self.fsymbol == other.fsymbol)

    def __hash__(self) -> int:
        return hash((self.name, self.fusion.tobytes()))


def _group_category(n: int) -> FusionData:
    labels = tuple(str(a) for a in range(n))
    fusion = np.zeros((n, n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            fusion[a, b, (a + b) % n] = 1
    dual = np.array([(-a) % n for a in range(n)], dtype=np.int64)
    qdim = np.ones(n)
    fd = FusionData(name=f"VecZ{n}", unit=0, dual=dual, qdim=qdim, fusion=fusion,
                    fsymbol={}, labels=labels)
    fsymbol = {s: 1.0 + 0.0j for s in fd.admissible_sextuples()}
    return FusionData(name=fd.name, unit=0, dual=dual, qdim=qdim, fusion=fusion,
                      fsymbol=fsymbol, labels=labels)


def _fibonacci() -> FusionData:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    fusion = np.zeros((2, 2, 2), dtype=np.int64)
    fusion[0, 0, 0] = fusion[0, 1, 1] = fusion[1, 0, 1] = 1
    fusion[1, 1, 0] = fusion[1, 1, 1] = 1
    dual = np.array([0, 1], dtype=np.int64)
    qdim = np.array([1.0, phi])
    base = FusionData(name="Fibonacci", unit=0, dual=dual, qdim=qdim, fusion=fusion,
                      fsymbol={}, labels=("1", "tau"))
    # F^{τττ}_τ，基底顺序 (1, τ)
    block = np.array([[1.0 / phi, 1.0 / math.sqrt(phi)],
                      [1.0 / math.sqrt(phi), -1.0 / phi]])
    fsymbol = {}
    for s in base.admissible_sextuples():
        a, b, c, d, e, f = s
        if (a, b, c, d) == (1, 1, 1, 1):
            fsymbol[s] = complex(block[e, f])
        else:
            fsymbol[s] = 1.0 + 0.0j
    return FusionData(name="Fibonacci", unit=0, dual=dual, qdim=qdim, fusion=fusion,
                      fsymbol=fsymbol, labels=("1", "tau"))


def builtin_fusion(name: str, cfg: Optional[Settings] = None) -> FusionData:
    """
    内置融合范畴

    Args:
        name: VecZ2 / VecZ3 / Fibonacci（以及任意 VecZn）

    Returns:
        FusionData: 在内置容差下通过全部校验的数据
    """
    cfg = cfg or settings
    if name == "Fibonacci":
        fd = _fibonacci()
    elif name.startswith("VecZ") and name[4:].isdigit() and int(name[4:]) >= 1:
        fd = _group_category(int(name[4:]))
    else:
        raise UnknownFamilyError(f"未知的内置融合范畴: {name}")
    validate_fusion(fd, cfg.tolerances.builtin)
    return fd


def fmatrix(fd: FusionData, a: int, b: int, c: int, d: int) -> Tuple[List[int], List[int], np.ndarray]:
    """
    取出固定 (a,b,c,d) 的 F 矩阵

    Returns:
        (行标签 e 列表, 列标签 f 列表, 矩阵)
    """
    n = fd.rank
    N = fd.fusion
    rows = [e for e in range(n) if N[a, b, e] and N[e, c, d]]
    cols = [f for f in range(n) if N[b, c, f] and N[a, f, d]]
    matrix = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, e in enumerate(rows):
        for j, f in enumerate(cols):
            matrix[i, j] = fd.F(a, b, c, d, e, f)
    return rows, cols, matrix


def dimension_residual(fd: FusionData) -> float:
    """max |d_a d_b − Σ_c N_ab^c d_c|"""
    d = fd.qdim
    lhs = np.outer(d, d)
    rhs = np.einsum("abc,c->ab", fd.fusion, d)
    return float(np.max(np.abs(lhs - rhs)))


def unitarity_residual(fd: FusionData) -> float:
    """所有 F 矩阵的 max ‖M M† − I‖_max；非方阵返回 inf"""
    n = fd.rank
    worst = 0.0
    for a, b, c, d in product(range(n), repeat=4):
        rows, cols, matrix = fmatrix(fd, a, b, c, d)
        if not rows and not cols:
            continue
        if len(rows) != len(cols):
            return math.inf
        worst = max(worst, float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(len(rows))))))
    return worst


def pentagon_check(fd: FusionData) -> float:
    """
    五边形方程最大残差

    F^{fcd}_e[g,l] F^{abl}_e[f,k] = Σ_h F^{abc}_g[f,h] F^{ahd}_e[g,k] F^{bcd}_k[h,l]，
    对所有左右两棵融合树都合法的指标求最大 |左 − 右|，遍历顺序固定。

    Args:
        fd: 融合数据（结构完整）

    Returns:
        float: 最大残差
    """
    n = fd.rank
    N = fd.fusion
    worst = 0.0
    for a, b, c, d in product(range(n), repeat=4):
        for f in fd.products(a, b):
            for g in fd.products(f, c):
                for e in fd.products(g, d):
                    for l in fd.products(c, d):
                        for k in fd.products(b, l):
                            if not N[a, k, e]:
                                continue
                            lhs = (fd.F(f, c, d, e, g, l) * fd.F(a, b, l, e, f, k)
                                   if N[f, l, e] else 0.0j)
                            rhs = 0.0j
                            for h in fd.products(b, c):
                                if N[a, h, g] and N[h, d, k]:
                                    rhs += (fd.F(a, b, c, g, f, h) * fd.F(a, h, d, e, g, k)
                                            * fd.F(b, c, d, k, h, l))
                            worst = max(worst, abs(lhs - rhs))
    return float(worst)


# 四面体的四个顶点是 F 的四个融合三元组 (a,b,e) (e,c,d) (b,c,f) (a,f,d)；每个指标位置是连接两个三元组的棱
_TETRA_EDGE_ENDPOINTS = [(0, 3), (0, 2), (1, 2), (1, 3), (0, 1), (2, 3)]
_TETRA_POSITION = {frozenset(p): i for i, p in enumerate(_TETRA_EDGE_ENDPOINTS)}


def symmetric_6j(fd: FusionData, s: Sextuple) -> complex:
    """G = F^{abc}_d[e,f] / √(d_e d_f)"""
    a, b, c, d, e, f = s
    return fd.F(*s) / math.sqrt(fd.qdim[e] * fd.qdim[f])


def is_trivially_pointed(fd: FusionData, tol: float) -> bool:
    """所有量子维数为 1 且所有 F 为 1（平凡上循环的群范畴）"""
    return bool(np.all(np.abs(fd.qdim - 1.0) <= tol)
                and all(abs(v - 1.0) <= tol for v in fd.fsymbol.values()))


def tetrahedral_residual(fd: FusionData) -> float:
    """
    自对偶范畴的对称 6j 符号在四面体对称群下的最大偏差

    Returns:
        float: 残差；非自对偶范畴返回 inf
    """
    if not fd.is_self_dual:
        return math.inf
    worst = 0.0
    for s in fd.admissible_sextuples():
        value = symmetric_6j(fd, s)
        for perm in permutations(range(4)):
            image = tuple(s[_TETRA_POSITION[frozenset((perm[i], perm[j]))]]
                          for i, j in _TETRA_EDGE_ENDPOINTS)
            if not fd.admissible(*image):
                return math.inf
            worst = max(worst, abs(symmetric_6j(fd, image) - value))
    return float(worst)


def _check_structure(fd: FusionData):
    n = fd.rank
    if n < 1:
        raise AlgebraValidationError("structure", "标签集为空")
    if fd.dual.shape != (n,) or fd.fusion.shape != (n, n, n):
        raise AlgebraValidationError("structure", "dual / qdim / N 的形状不一致")
    if not 0 <= fd.unit < n:
        raise AlgebraValidationError("structure", f"单位标签 {fd.unit} 超出范围")
    if np.any(fd.dual < 0) or np.any(fd.dual >= n):
        raise AlgebraValidationError("structure", "对偶标签超出范围")
    if np.any(fd.qdim <= 0):
        raise AlgebraValidationError("structure", "量子维数必须为正")
    if np.any(fd.fusion < 0):
        raise AlgebraValidationError("structure", "融合系数必须非负")
    for key in fd.fsymbol:
        if len(key) != 6 or not all(0 <= x < n for x in key):
            raise AlgebraValidationError("structure", f"F 指标 {key} 超出范围")
        if not fd.admissible(*key):
            raise AlgebraValidationError("structure", f"F 指标 {key} 不可容许")
    for s in fd.admissible_sextuples():
        if s not in fd.fsymbol:
            raise MissingFSymbolError(s)


def _check_unit_dual(fd: FusionData):
    n, u, N = fd.rank, fd.unit, fd.fusion
    for a in range(n):
        for c in range(n):
            expected = 1 if c == a else 0
            if N[u, a, c] != expected or N[a, u, c] != expected:
                raise AlgebraValidationError("unit", f"单位律不成立: N_(1,{a})^{c}")
    if fd.dual[u] != u:
        raise AlgebraValidationError("dual", "单位标签必须自对偶")
    if not np.array_equal(fd.dual[fd.dual], np.arange(n)):
        raise AlgebraValidationError("dual", "dual 不是对合")
    for a in range(n):
        for b in range(n):
            if bool(N[a, b, u]) != (b == fd.dual[a]):
                raise AlgebraValidationError("dual", f"N_({a},{b})^1 与对偶映射不一致")


def validate_fusion(fd: FusionData, tol: float) -> Dict[str, float]:
    """
    按结构→单位/对偶→重数→维数方程→幺正性→五边形的顺序校验融合数据

    Args:
        fd: 融合数据
        tol: 数值容差

    Returns:
        Dict[str, float]: 各项数值残差
    """
    _check_structure(fd)
    _check_unit_dual(fd)
    if np.any(fd.fusion > 1):
        raise AlgebraValidationError("multiplicity", "只支持无重数范畴（所有 N ≤ 1）")
    residuals = {"dimension": dimension_residual(fd)}
    if residuals["dimension"] > tol:
        raise AlgebraValidationError("dimension", "维数方程 d_a d_b = Σ N d_c 不成立",
                                     residuals["dimension"])
    residuals["unitarity"] = unitarity_residual(fd)
    if residuals["unitarity"] > tol:
        raise AlgebraValidationError("unitarity", "F 矩阵不是幺正的", residuals["unitarity"])
    residuals["pentagon"] = pentagon_check(fd)
    if residuals["pentagon"] > tol:
        raise AlgebraValidationError("pentagon", "五边形方程不成立", residuals["pentagon"])
    return residuals


def algebra_residuals(fd: FusionData) -> Dict[str, float]:
    """不抛异常地计算维数、幺正性、五边形残差（用于报告）"""
    return {
        "dimension": dimension_residual(fd),
        "unitarity": unitarity_residual(fd),
        "pentagon": pentagon_check(fd),
    }


def fusion_to_lines(fd: FusionData) -> List[str]:
    n = fd.rank
    lines = list(FUSION_GAUGE_HEADER)
    lines.append(f"fusion {fd.name}")
    lines.append(f"labels {n}")
    lines.append(f"unit {fd.unit}")
    lines.append("dual " + " ".join(f"{a}:{int(fd.dual[a])}" for a in range(n)))
    lines.append("qdim " + " ".join(f"{a}:{format_float(fd.qdim[a])}" for a in range(n)))
    for a, b, c in product(range(n), repeat=3):
        if fd.fusion[a, b, c]:
            lines.append(f"N {a} {b} {c}")
    for key in sorted(fd.fsymbol):
        value = complex(fd.fsymbol[key])
        lines.append("F " + " ".join(map(str, key)) + f" {format_float(value.real)} {format_float(value.imag)}")
    return lines


def save_fusion(fd: FusionData, path: Union[str, Path]):
    write_lines(path, fusion_to_lines(fd))


def load_fusion(path: Union[str, Path], cfg: Optional[Settings] = None,
                validate: bool = True) -> FusionData:
    """
    读取融合数据文件

    Args:
        path: 文件路径
        cfg: 配置（使用 validation 容差）
        validate: 是否校验（故障注入时关闭）

    Returns:
        FusionData: 融合数据
    """
    cfg = cfg or settings
    source = str(path)
    name, n, unit = None, None, None
    dual: Dict[int, int] = {}
    qdim: Dict[int, float] = {}
    triples = []
    fsymbol: Dict[Sextuple, complex] = {}
    for line_no, words in read_directives(path):
        key = words[0]
        if key == "fusion":
            expect_arity(words, 2, source, line_no)
            name = words[1]
        elif key == "labels":
            expect_arity(words, 2, source, line_no)
            n = parse_int(words[1], source, line_no, "标签数")
        elif key == "unit":
            expect_arity(words, 2, source, line_no)
            unit = parse_int(words[1], source, line_no, "单位标签")
        elif key == "dual":
            for token in words[1:]:
                a, b = parse_pair(token, source, line_no, "对偶")
                dual[parse_int(a, source, line_no, "标签")] = parse_int(b, source, line_no, "标签")
        elif key == "qdim":
            for token in words[1:]:
                a, d = parse_pair(token, source, line_no, "量子维数")
                qdim[parse_int(a, source, line_no, "标签")] = parse_float(d, source, line_no, "量子维数")
        elif key == "N":
            expect_arity(words, 4, source, line_no)
            triples.append(tuple(parse_int(w, source, line_no, "标签") for w in words[1:]))
        elif key == "F":
            expect_arity(words, 9, source, line_no)
            index = tuple(parse_int(w, source, line_no, "标签") for w in words[1:7])
            re = parse_float(words[7], source, line_no, "实部")
            im = parse_float(words[8], source, line_no, "虚部")
            fsymbol[index] = complex(re, im)
        else:
            raise FileFormatError(f"未知指令 {key!r}", source, line_no)
    if name is None or n is None or unit is None:
        raise FileFormatError("融合文件缺少 fusion / labels / unit 行", source)
    if n < 1 or sorted(dual) != list(range(n)) or sorted(qdim) != list(range(n)):
        raise FileFormatError("dual 与 qdim 必须覆盖全部标签", source)
    fusion = np.zeros((n, n, n), dtype=np.int64)
    for a, b, c in triples:
        if not all(0 <= x < n for x in (a, b, c)):
            raise FileFormatError(f"N 行标签超出范围: {(a, b, c)}", source)
        fusion[a, b, c] += 1
    fd = FusionData(name=name, unit=unit,
                    dual=np.array([dual[a] for a in range(n)], dtype=np.int64),
                    qdim=np.array([qdim[a] for a in range(n)], dtype=float),
                    fusion=fusion, fsymbol=fsymbol,
                    labels=tuple(str(a) for a in range(n)))
    if validate:
        validate_fusion(fd, cfg.tolerances.validation)
    logger.info(f"已加载融合范畴 {fd.name}，{n} 个标签")
    return fd


BUILTIN_GROUPS = ("Z1", "Z2", "Z3", "Z4", "S3")
BUILTIN_FUSIONS = ("VecZ2", "VecZ3", "Fibonacci")


def resolve_group(source: str) -> FiniteGroup:
    """内置名或 .group 文件路径"""
    if Path(source).suffix == ".group" or Path(source).exists():
        return load_group(source)
    return builtin_group(source)


def resolve_fusion(source: str, cfg: Optional[Settings] = None, validate: bool = True) -> FusionData:
    """内置名或 .fusion 文件路径"""
    if Path(source).suffix == ".fusion" or Path(source).exists():
        return load_fusion(source, cfg, validate=validate)
    return builtin_fusion(source, cfg)
