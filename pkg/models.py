import math
from enum import Enum
from typing import Dict, Optional, Union

from pydantic import BaseModel, Field


class ModelFamily(str, Enum):
    DW = "dw"  # Dijkgraaf-Witten 规范模型
    LW = "lw"  # Levin-Wen 弦网模型


class TermKind(str, Enum):
    VERTEX = "vertex"        # DW 顶点规范平均 H_v
    FACE = "face"            # DW 面平坦性 H_f
    FUSION = "fusion"        # LW 顶点融合投影 Q_v
    PLAQUETTE = "plaquette"  # LW 面算子 B_p


class CheckName(str, Enum):
    TQO0 = "tqo0"
    TQO1 = "tqo1"
    TQO2 = "tqo2"
    TQO3 = "tqo3"
    DISTANCE = "distance"
    ALGEBRA = "algebra"


class CheckOutcome(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


class GsdMethod(str, Enum):
    RANK = "rank"          # 基态投影算子的秩
    SPECTRUM = "spectrum"  # 低能谱零本征值计数
    ORACLE = "oracle"      # 组合计数（规范轨道）


class FaultName(str, Enum):
    NONE = "none"
    NON_COMMUTING_TERM = "non-commuting-term"
    CORRUPTED_FSYMBOL = "corrupted-fsymbol"


Scalar = Union[bool, int, float, str]


class VerificationReport(BaseModel):
    """单个检查的可机读结果"""

    check: CheckName
    model: str
    parameters: Dict[str, str] = Field(default_factory=dict)
    outcome: CheckOutcome
    residuals: Dict[str, float] = Field(default_factory=dict)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    scalars: Dict[str, Scalar] = Field(default_factory=dict)
    timestamp: str
    seed: int
    error: Optional[str] = None
    exit_code: int = 0

    @classmethod
    def judge(cls, check: CheckName, model: str, residuals: Dict[str, float],
              tolerances: Dict[str, float], **kwargs) -> "VerificationReport":
        """
        按残差与容差判定结果：每个残差都不超过同名容差时为 pass

        Args:
            check: 检查名
            model: 模型描述
            residuals: 残差字典
            tolerances: 与残差同名的容差字典

        Returns:
            VerificationReport: 判定后的报告
        """
        passed = True
        for name, value in residuals.items():
            tol = tolerances[name]
            if math.isnan(value) or value > tol:
                passed = False
        outcome = CheckOutcome.PASS if passed else CheckOutcome.FAIL
        exit_code = 0 if passed else 1
        return cls(check=check, model=model, residuals=residuals, tolerances=tolerances,
                   outcome=outcome, exit_code=exit_code, **kwargs)

    @classmethod
    def refused(cls, check: CheckName, model: str, error: Exception, exit_code: int,
                **kwargs) -> "VerificationReport":
        """前置条件不满足或资源超限时的报告（不是 fail）"""
        return cls(check=check, model=model, outcome=CheckOutcome.ERROR,
                   error=str(error), exit_code=exit_code, **kwargs)

    @property
    def passed(self) -> bool:
        return self.outcome == CheckOutcome.PASS


class ModelSummary(BaseModel):
    """build 命令输出的模型摘要"""

    family: ModelFamily
    algebra: str
    cellulation: str
    surface: str
    dim: int
    sector_dim: int
    term_counts: Dict[str, int]
    projector_residual: float
    hermitian_residual: float

    @property
    def num_terms(self) -> int:
        return sum(self.term_counts.values())


class GsdRow(BaseModel):
    """gsd-table 的一行"""

    family: ModelFamily
    algebra: str
    surface: str
    cellulation: str
    gsd: Optional[int] = None
    method: Optional[GsdMethod] = None
    oracle: Optional[int] = None
    agree: Optional[bool] = None
    error: Optional[str] = None
