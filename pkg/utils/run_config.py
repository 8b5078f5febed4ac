"""
运行配置：行式 key = value 文件 → RunConfig
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config import Settings, Tolerances
from exceptions import ConfigError, FileFormatError, TqoError
from models import CheckName, FaultName, ModelFamily
from services.cell_complex import parse_cellulation

logger = logging.getLogger(__name__)

Cellulation = Tuple[str, int]

REPEATABLE = {"row"}


class GsdRowSpec(BaseModel):
    """gsd-table 的一个输入行：模型族、代数、曲面与若干胞腔"""

    model_config = ConfigDict(extra="forbid")

    family: ModelFamily
    algebra: str
    surface: str
    cellulations: List[Cellulation]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelFamily = ModelFamily.DW
    algebra: str = "Z2"
    cellulation: str = "square-torus"
    size: int = Field(default=2, ge=1)
    surface: Optional[str] = None
    checks: List[CheckName] = Field(default_factory=lambda: [CheckName.TQO0])
    seed: Optional[int] = None
    workers: Optional[int] = Field(default=None, ge=1)
    out: str = "report.txt"
    fault: FaultName = FaultName.NONE

    tqo1_vertex: Optional[int] = Field(default=None, ge=0)
    tqo1_seed_face: int = 0
    tqo1_radius: int = 0
    tqo1_collar: bool = False
    tqo1_max_edges: int = Field(default=2, ge=1)
    tqo2_seed_face: int = 0
    tqo2_radius_a: int = 0
    tqo2_radius_b: int = 1
    tqo2_collar: bool = False
    tqo3_cellulations: List[Cellulation] = Field(default_factory=list)
    distance_weight_cap: int = Field(default=2, ge=0)

    tolerances: Dict[str, float] = Field(default_factory=dict)
    caps: Dict[str, int] = Field(default_factory=dict)
    rows: List[GsdRowSpec] = Field(default_factory=list)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(value) - set(Tolerances.model_fields))
        if unknown:
            raise ValueError(f"未知的容差: {unknown}")
        return value

    @field_validator("caps")
    @classmethod
    def _known_caps(cls, value: Dict[str, int]) -> Dict[str, int]:
        unknown = sorted(name for name in value if f"{name}_cap" not in Settings.model_fields)
        if unknown:
            raise ValueError(f"未知的上限: {unknown}")
        return value

    def with_overrides(self, **overrides) -> "RunConfig":
        """命令行参数覆盖配置文件（None 表示不覆盖）"""
        update = {k: v for k, v in overrides.items() if v is not None}
        try:
            return RunConfig.model_validate({**self.model_dump(), **update})
        except ValidationError as e:
            raise ConfigError(f"命令行参数无效: {e}")

    def settings_for(self, base: Settings) -> Settings:
        """在全局配置的副本上应用种子、并发数、容差与上限覆盖"""
        update: Dict[str, object] = {f"{name}_cap": value for name, value in self.caps.items()}
        if self.seed is not None:
            update["seed"] = self.seed
        if self.workers is not None:
            update["workers"] = self.workers
        if self.tolerances:
            update["tolerances"] = base.tolerances.model_copy(update=self.tolerances)
        return base.model_copy(update=update)


def _split(value: str) -> List[str]:
    return [token for token in value.replace(",", " ").split() if token]


def _cellulations(value: str) -> List[Cellulation]:
    return [parse_cellulation(token) for token in _split(value)]


def _row(value: str, source: str, line_no: int) -> Dict:
    words = value.split()
    if len(words) < 4:
        raise FileFormatError("row 需要 <dw|lw> <代数> <曲面> <族:尺寸> ...", source, line_no)
    return {"family": words[0], "algebra": words[1], "surface": words[2],
            "cellulations": [parse_cellulation(token) for token in words[3:]]}


def _boolean(value: str, source: str, line_no: int) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise FileFormatError(f"不是布尔值: {value!r}", source, line_no)


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    """
    解析 key = value 配置

    Args:
        text: 配置文本（# 之后为注释）
        source: 错误信息中使用的来源名

    Returns:
        RunConfig: 校验后的配置
    """
    data: Dict[str, object] = {"tolerances": {}, "caps": {}, "rows": []}
    seen = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FileFormatError(f"缺少 '=': {line!r}", source, line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen and key not in REPEATABLE:
            raise ConfigError(f"{source}:{line_no}: 重复的键 {key!r}")
        seen.add(key)
        try:
            if key == "row":
                data["rows"].append(_row(value, source, line_no))
            elif key.startswith("tolerance."):
                data["tolerances"][key.split(".", 1)[1]] = float(value)
            elif key.startswith("cap."):
                data["caps"][key.split(".", 1)[1]] = int(value)
            elif key in ("checks",):
                data["checks"] = _split(value)
            elif key == "tqo3.cellulations":
                data["tqo3_cellulations"] = _cellulations(value)
            elif key in ("tqo1.collar", "tqo2.collar"):
                data[key.replace(".", "_")] = _boolean(value, source, line_no)
            else:
                data[key.replace(".", "_")] = value
        except ValueError as e:
            raise FileFormatError(f"{key} 的值无效: {e}", source, line_no)
        except TqoError as e:
            raise FileFormatError(f"{key} 的值无效: {e}", source, line_no)
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: 配置无效: {e}")
    logger.debug(f"已解析运行配置 {source}: {config.model} {config.algebra} {config.cellulation}:{config.size}")
    return config


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileFormatError("配置文件不存在", str(path))
    return parse_run_config(path.read_text(encoding="utf-8"), str(path))
