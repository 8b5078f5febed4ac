"""
异常层次：每个异常类携带命令行退出码
"""
from typing import Optional


class TqoError(Exception):
    """所有可预期错误的基类"""

    exit_code = 2


class InputError(TqoError):
    """输入或前置条件错误（退出码 2）"""

    exit_code = 2


class InvalidComplexError(InputError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("无效的胞腔复形: " + "; ".join(self.violations))


class UnknownFamilyError(InputError):
    pass


class FileFormatError(InputError):
    def __init__(self, message: str, path: Optional[str] = None, line_no: Optional[int] = None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}"
            if line_no is not None:
                where += f":{line_no}"
            where += ": "
        super().__init__(f"{where}{message}")


class AlgebraValidationError(InputError):
    def __init__(self, kind: str, message: str, residual: Optional[float] = None):
        self.kind = kind
        self.residual = residual
        super().__init__(f"[{kind}] {message}")


class MissingFSymbolError(InputError):
    def __init__(self, index):
        self.index = tuple(index)
        super().__init__(f"缺少F符号: F{self.index}")


class RegionNotDiskError(InputError):
    pass


class PreconditionError(InputError):
    pass


class NotTrivalentError(InputError):
    pass


class NonAbelianGroupError(InputError):
    pass


class NotAProjectorError(InputError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"算子不是投影算子: ‖p² − p‖ = {residual:.3e}")


class DimensionMismatchError(InputError):
    pass


class ConfigError(InputError):
    pass


class CapExceededError(TqoError):
    """资源上限超出（退出码 3）"""

    exit_code = 3

    def __init__(self, cap: str, requested: int, limit: int):
        self.cap = cap
        self.requested = requested
        self.limit = limit
        super().__init__(f"超出上限 {cap}: 需要 {requested}, 上限 {limit}")


class NonConvergenceError(TqoError):
    """迭代求解器未收敛（退出码 4）"""

    exit_code = 4
