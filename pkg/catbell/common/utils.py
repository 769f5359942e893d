import os
import copy
import math
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

try:
    import tomllib
except ImportError:
    import tomli as tomllib

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(os.path.dirname(current_dir))
config_path = os.path.join(project_root, "config.toml")

DEFAULT_CONFIG: dict[str, dict[str, Any]] = {
    "Quadrature": {
        "epsabs": 1e-11,
        "epsrel": 1e-10,
        "limit": 200,
        "composite_points": 65537,
        "envelope_margin": 12.0,
        "momentum_half_width": 8.0,
        "resolution_widths": 6.0,
    },
    "Bell": {
        "envelope_cutoff": 7.0,
        "threshold_tol": 1e-4,
        "threshold_scan_points": 64,
        "threshold_eta_floor": 0.01,
    },
    "Sampler": {
        "grid_points": 16384,
    },
    "Oracle": {
        "max_alpha": 4.0,
        "support_step": 0.01,
        "gauss_nodes": 20,
        "panel_width": 0.5,
    },
    "CLI": {
        "workers": 1,
        "progress": True,
    },
}


def load_config(path: Optional[str] = None) -> dict[str, dict[str, Any]]:
    """读取 config.toml，并按节与默认配置合并"""
    merged = copy.deepcopy(DEFAULT_CONFIG)
    path = path or config_path
    if not os.path.exists(path):
        return merged
    with open(path, "rb") as f:
        loaded = tomllib.load(f)
    for section, values in loaded.items():
        if isinstance(values, dict):
            merged.setdefault(section, {}).update(values)
    return merged


config = load_config()


class CatBellError(ValueError):
    """CatBell 所有错误的基类"""


class DegenerateStateError(CatBellError):
    """α 过小时 Ψ₋ 退化"""


class SingularKernelError(CatBellError):
    """η=1 时 POVM 核退化为 δ 函数"""


class NoViolationError(CatBellError):
    """在 η∈(0,1] 上找不到违背 Bell 不等式的效率"""


class InsufficientShotsError(CatBellError):
    """样本数不足"""


class TruncationError(CatBellError):
    """Fock 截断不足或超出 oracle 的 α 上限"""


class GridCoverageError(CatBellError):
    """网格没有覆盖分布的支撑区间"""


class SettingsFileError(CatBellError):
    """测量设置文件格式错误"""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"第 {line_no} 行: {message}")
        self.line_no = line_no


def check_eta(eta: float, name: str = "eta") -> float:
    """校验探测效率 0 < η ≤ 1"""
    eta = float(eta)
    if not math.isfinite(eta) or not 0.0 < eta <= 1.0:
        raise ValueError(f"{name} 必须在 (0, 1] 内, 实际为 {eta}")
    return eta


def _as_real(value: Any) -> Any:
    if isinstance(value, complex) or np.iscomplexobj(value):
        raise ValueError("只支持实数参数")
    if isinstance(value, np.generic):
        return value.item()
    return value


class CatParams(BaseModel):
    """猫态 |K⟩ 的参数：相干态实振幅 α"""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0, allow_inf_nan=False, description="相干态振幅 α (实数)")

    @field_validator("alpha", mode="before")
    @classmethod
    def _real_alpha(cls, value: Any) -> Any:
        return _as_real(value)


class DetectorModel(BaseModel):
    """探测器模型：两个相位通道的平衡零拍效率与自旋测量保真度 ξ"""
    model_config = ConfigDict(frozen=True)

    eta0: float = Field(1.0, gt=0, le=1, description="θ=0 通道效率")
    eta_pi2: float = Field(1.0, gt=0, le=1, description="θ=π/2 通道效率")
    xi: float = Field(1.0, ge=0, le=1, description="自旋测量保真度")

    @model_validator(mode="before")
    @classmethod
    def _single_eta(cls, data: Any) -> Any:
        # 未给出 eta_pi2 时两通道取同一效率
        if isinstance(data, dict) and data.get("eta_pi2") is None:
            data = {**data, "eta_pi2": data.get("eta0", 1.0)}
        return data

    @field_validator("eta0", "eta_pi2", "xi", mode="before")
    @classmethod
    def _real_fields(cls, value: Any) -> Any:
        return _as_real(value)

    @classmethod
    def single(cls, eta: float = 1.0, xi: float = 1.0) -> "DetectorModel":
        return cls(eta0=eta, eta_pi2=eta, xi=xi)

    def eta_for(self, phase) -> float:
        """返回某一零拍相位所用的效率"""
        return self.eta_pi2 if phase.is_momentum else self.eta0


class SpinDirection(BaseModel):
    """自旋投影方向（单位矢量）"""
    model_config = ConfigDict(frozen=True)

    ax: float
    ay: float
    az: float

    @field_validator("ax", "ay", "az", mode="before")
    @classmethod
    def _real_components(cls, value: Any) -> Any:
        return _as_real(value)

    @model_validator(mode="after")
    def _unit_norm(self) -> "SpinDirection":
        norm2 = self.ax ** 2 + self.ay ** 2 + self.az ** 2
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"自旋方向必须是单位矢量, |a|² = {norm2!r}")
        return self

    @classmethod
    def from_vector(cls, x: float, y: float, z: float) -> "SpinDirection":
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise ValueError("零矢量不能作为自旋方向")
        return cls(ax=x / norm, ay=y / norm, az=z / norm)

    def as_array(self) -> np.ndarray:
        return np.array([self.ax, self.ay, self.az])


class SuperpositionSign(Enum):
    """叠加态 Ψ± 的符号"""
    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, text: str) -> "SuperpositionSign":
        key = text.strip().lower()
        if key in ("plus", "+", "+1"):
            return cls.PLUS
        if key in ("minus", "-", "-1"):
            return cls.MINUS
        raise ValueError(f"未知的叠加符号: {text}")
