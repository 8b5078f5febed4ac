import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

from exceptions import FileFormatError

logger = logging.getLogger(__name__)

Directive = Tuple[int, List[str]]


def iter_directives(text: str) -> Iterator[Directive]:
    """
    遍历行式文本中的指令行

    Args:
        text: 文件内容

    Returns:
        (行号, 词列表) 的迭代器；空行和 # 开头的注释被跳过，行内 # 之后的内容也被忽略
    """
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield line_no, line.split()


def read_directives(path: Union[str, Path]) -> List[Directive]:
    """
    读取行式文件

    Args:
        path: 文件路径

    Returns:
        List[Directive]: 指令行列表
    """
    path = Path(path)
    if not path.exists():
        raise FileFormatError("文件不存在", str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise FileFormatError(f"无法读取文件: {e}", str(path))
    logger.debug(f"读取文件: {path}")
    return list(iter_directives(text))


def parse_int(token: str, source: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FileFormatError(f"{what} 不是整数: {token!r}", source, line_no)


def parse_float(token: str, source: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FileFormatError(f"{what} 不是实数: {token!r}", source, line_no)


def parse_pair(token: str, source: str, line_no: int, what: str) -> Tuple[str, str]:
    """拆分 'a:b' 形式的词"""
    if token.count(":") != 1:
        raise FileFormatError(f"{what} 应为 a:b 形式: {token!r}", source, line_no)
    left, right = token.split(":")
    return left, right


def expect_arity(words: List[str], count: int, source: str, line_no: int):
    if len(words) != count:
        raise FileFormatError(f"'{words[0]}' 需要 {count - 1} 个参数，实际 {len(words) - 1}",
                              source, line_no)


def format_float(value: float) -> str:
    """浮点数按 repr 输出，保证文本往返逐位一致"""
    return repr(float(value))


def write_lines(path: Union[str, Path], lines: List[str]):
    """写出行式文件（末尾换行）"""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"已写出文件: {path}")
