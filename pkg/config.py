from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings


class Tolerances(BaseModel):
    """数值容差（所有检查共用同一份记录）"""

    drop: float = 1e-15            # 稀疏元素丢弃阈值
    hermitian: float = 1e-12       # ‖A − A†‖_max
    projector: float = 1e-10       # ‖h² − h‖_max
    rank_threshold: float = 0.5    # 投影算子特征值 0/1 的分界
    projector_check: float = 1e-8  # projector_rank 的前置检查
    commutator: float = 1e-10
    frustration: float = 1e-10
    integrality: float = 1e-8
    gap: float = 1e-8
    tqo: float = 1e-8
    nontrivial: float = 1e-6
    validation: float = 1e-10      # 加载文件时的代数数据校验
    builtin: float = 1e-12         # 内置代数数据
    psd: float = 1e-10


class Settings(BaseSettings):
    # 维数上限
    dense_dim_cap: int = Field(default=2 ** 14)
    matrix_free_dim_cap: int = Field(default=2 ** 24)
    dense_eig_cap: int = Field(default=2 ** 10)
    operator_basis_cap: int = Field(default=2 ** 12)
    enumeration_cap: int = Field(default=2 ** 22)
    projector_nnz_cap: int = Field(default=2 ** 24)
    distance_candidate_cap: int = Field(default=2 ** 18)

    # 迭代求解器
    seed: int = Field(default=20240611)
    eigsh_maxiter: int = Field(default=20000)
    eigsh_tol: float = Field(default=1e-12)
    spectrum_extra: int = Field(default=4)
    gsd_block: int = Field(default=8)

    # 运行配置
    workers: int = Field(default=1, ge=1)
    report_timestamp: str = Field(default="1970-01-01T00:00:00+00:00")
    log_level: str = Field(default="INFO")

    tolerances: Tolerances = Field(default_factory=Tolerances)

    class Config:
        env_file = ".env"
        env_prefix = "TQO_"
        env_nested_delimiter = "__"
        case_sensitive = False


settings = Settings()
