"""平衡零拍 POVM、正交分量波函数以及由此得到的各种概率分布"""
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.integrate import quad, simpson, trapezoid
from scipy.optimize import minimize_scalar

from catbell.common.utils import (
    CatParams,
    SingularKernelError,
    SpinDirection,
    SuperpositionSign,
    check_eta,
    config,
)
from catbell.physics.model import (
    detector_resolution,
    fringe_frequency,
    norm_constant,
    visibility,
)

TWO_PI = 2.0 * math.pi
PHASE_ATOL = 1e-12


class HomodynePhase(BaseModel):
    """零拍相位 θ, 取值归到 [0, 2π)"""
    model_config = ConfigDict(frozen=True)

    theta: float

    @field_validator("theta", mode="before")
    @classmethod
    def _wrap(cls, value: Any) -> float:
        if isinstance(value, complex):
            raise ValueError("相位必须是实数")
        value = float(value) % TWO_PI
        # 2π 附近的舍入误差归零
        return 0.0 if TWO_PI - value < PHASE_ATOL else value

    @classmethod
    def position(cls) -> "HomodynePhase":
        return cls(theta=0.0)

    @classmethod
    def momentum(cls) -> "HomodynePhase":
        return cls(theta=math.pi / 2)

    @classmethod
    def parse(cls, text: str) -> "HomodynePhase":
        key = text.strip().lower().replace(" ", "")
        if key in ("pi/2", "π/2", "p", "momentum"):
            return cls.momentum()
        if key in ("x", "position"):
            return cls.position()
        return cls(theta=float(key))

    @property
    def is_position(self) -> bool:
        return abs(self.theta) <= PHASE_ATOL

    @property
    def is_momentum(self) -> bool:
        return abs(self.theta - math.pi / 2) <= PHASE_ATOL

    def rotate(self, alpha_c: complex) -> complex:
        """α_θ = α e^{−iθ}; 两个标准相位精确处理"""
        if self.is_position:
            return complex(alpha_c)
        if self.is_momentum:
            return complex(alpha_c) * -1j
        return complex(alpha_c) * complex(math.cos(self.theta), -math.sin(self.theta))


@dataclass(frozen=True)
class QuadratureGrid:
    """均匀网格上的概率密度"""
    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not self.lo < self.hi:
            raise ValueError(f"网格区间无效: [{self.lo}, {self.hi}]")
        if values.ndim != 1 or values.size < 2:
            raise ValueError("网格至少需要 2 个点")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("密度值必须有限且非负")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def span(cls, lo: float, hi: float, n: int) -> "QuadratureGrid":
        """只确定网格、数值全为零的模板"""
        return cls(lo=lo, hi=hi, values=np.zeros(int(n)))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def integral(self) -> float:
        return float(trapezoid(self.values, self.x))

    def with_values(self, values: np.ndarray) -> "QuadratureGrid":
        return QuadratureGrid(lo=self.lo, hi=self.hi, values=values)


def integration_bounds(p: CatParams, eta: float, phase: HomodynePhase) -> tuple[float, float]:
    """积分区间: θ=0 为 ±(√2α+12), θ=π/2 为 ±(8+6·分辨率)"""
    q_cfg = config["Quadrature"]
    position_half = math.sqrt(2.0) * p.alpha + q_cfg["envelope_margin"]
    momentum_half = q_cfg["momentum_half_width"] + q_cfg["resolution_widths"] * detector_resolution(eta)
    if phase.is_position:
        half = position_half
    elif phase.is_momentum:
        half = momentum_half
    else:
        half = max(position_half, momentum_half)
    return -half, half


def integrate(f: Callable[[float], float], lo: float, hi: float,
              weight: Optional[str] = None, wvar: Optional[float] = None) -> float:
    """自适应积分, 容差来自 config.toml"""
    q_cfg = config["Quadrature"]
    kwargs = {"epsabs": q_cfg["epsabs"], "epsrel": q_cfg["epsrel"], "limit": q_cfg["limit"]}
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
    value, _ = quad(f, lo, hi, **kwargs)
    return float(value)


def composite_integral(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                       n: Optional[int] = None) -> float:
    """均匀网格 Simpson 积分 (自适应积分的后备方案)"""
    n = n or config["Quadrature"]["composite_points"]
    x = np.linspace(lo, hi, n)
    return float(simpson(f(x), x=x))


def tabulate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> QuadratureGrid:
    x = np.linspace(lo, hi, int(n))
    return QuadratureGrid(lo=lo, hi=hi, values=np.maximum(f(x), 0.0))


def coherent_wavefunction(alpha_c: complex, theta: HomodynePhase, x):
    """⟨x_θ|α⟩ = π^{−1/4} exp(−(x−√2 Re α_θ)²/2 + i√2 x Im α_θ − i Re α_θ Im α_θ)"""
    a = theta.rotate(alpha_c)
    x = np.asarray(x, dtype=float)
    exponent = (-(x - math.sqrt(2.0) * a.real) ** 2 / 2.0
                + 1j * (math.sqrt(2.0) * x * a.imag - a.real * a.imag))
    return math.pi ** -0.25 * np.exp(exponent)


def povm_kernel(x, y, eta: float):
    """平衡零拍 POVM 的高斯核 K_η(x, y), 仅对 η<1 有定义"""
    eta = check_eta(eta)
    if eta == 1.0:
        raise SingularKernelError("η=1 时核为 δ 函数, 请使用精确分支")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    spread = 1.0 / eta - 1.0
    return np.exp(-(x / math.sqrt(eta) - y) ** 2 / spread) / math.sqrt(math.pi * (1.0 - eta))


def povm_coherent_element(beta: complex, alpha_c: complex, x, theta: HomodynePhase, eta: float):
    """⟨β|Ĥ(x;θ)|α⟩ 的高斯闭式

    对 y 的高斯积分给出指数 −x² + √η·x·B + (1−η)B²/4 + C, 在 η=1 时
    连续地退化为 conj(⟨x_θ|β⟩)⟨x_θ|α⟩.
    """
    eta = check_eta(eta)
    a = theta.rotate(alpha_c)
    b = theta.rotate(beta)
    x = np.asarray(x, dtype=float)
    root2 = math.sqrt(2.0)
    big_b = complex(root2 * (a.real + b.real), root2 * (a.imag - b.imag))
    big_c = complex(-(a.real ** 2 + b.real ** 2), -(a.real * a.imag - b.real * b.imag))
    exponent = -x ** 2 + math.sqrt(eta) * x * big_b + (1.0 - eta) * big_b ** 2 / 4.0 + big_c
    return np.exp(exponent) / math.sqrt(math.pi)


def coherent_density(alpha_c: complex, theta: HomodynePhase, eta: float, x):
    """单个相干态的测量分布 (POVM 对角元)"""
    return np.maximum(povm_coherent_element(alpha_c, alpha_c, x, theta, eta).real, 0.0)


def dist_superposition(s: SuperpositionSign, x, p: CatParams, eta: float):
    """Ψ± 在 θ=π/2 的干涉图样"""
    eta = check_eta(eta)
    n_s = norm_constant(s, p)
    x = np.asarray(x, dtype=float)
    fringe = visibility(p, eta) * np.cos(fringe_frequency(p, eta) * x)
    density = 2.0 / (math.sqrt(math.pi) * n_s) * np.exp(-x ** 2) * (1.0 + s.value * fringe)
    return np.maximum(density, 0.0)


def superposition_density(s: SuperpositionSign, x, p: CatParams, eta: float, theta: HomodynePhase):
    """任意相位下 Ψ± 的测量分布, θ=π/2 时与 dist_superposition 一致"""
    n_s = norm_constant(s, p)
    alpha = p.alpha
    diagonal = (povm_coherent_element(alpha, alpha, x, theta, eta)
                + povm_coherent_element(-alpha, -alpha, x, theta, eta)).real
    cross = 2.0 * povm_coherent_element(alpha, -alpha, x, theta, eta).real
    return np.maximum((diagonal + s.value * cross) / n_s, 0.0)


def dist_conditional_spin_up(x, a: SpinDirection, p: CatParams, eta: float):
    """以自旋向上为条件的 θ=π/2 分布, 归一化常数数值求得"""
    eta = check_eta(eta)
    v = visibility(p, eta)
    k = fringe_frequency(p, eta)
    lo, hi = integration_bounds(p, eta, HomodynePhase.momentum())

    def envelope(t):
        return math.exp(-t * t)

    norm = integrate(envelope, lo, hi)
    if a.ax != 0.0:
        norm += v * a.ax * integrate(envelope, lo, hi, weight="cos", wvar=k)
    if a.ay != 0.0:
        norm += v * a.ay * integrate(envelope, lo, hi, weight="sin", wvar=k)
    x = np.asarray(x, dtype=float)
    density = np.exp(-x ** 2) * (1.0 + v * (a.ax * np.cos(k * x) + a.ay * np.sin(k * x)))
    return np.maximum(density, 0.0) / norm


def convolve_kernel(y: np.ndarray, values: np.ndarray, eta: float, x, chunk: int = 256):
    """对网格上的函数 (可为复数) 做 POVM 核平滑: ∫ dy values(y) K_η(x, y)"""
    eta = check_eta(eta)
    if eta == 1.0:
        raise SingularKernelError("η=1 不需要平滑, 直接使用理想分布")
    y = np.asarray(y, dtype=float)
    values = np.asarray(values)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=np.result_type(values.dtype, float))
    for start in range(0, x.size, chunk):
        block = x[start:start + chunk]
        kernel = povm_kernel(block[:, None], y[None, :], eta)
        out[start:start + chunk] = trapezoid(kernel * values[None, :], y, axis=1)
    return out


def smeared_density(perfect: QuadratureGrid, eta: float, x):
    """把理想 (η=1) 分布经 POVM 核平滑到效率 η"""
    smeared = convolve_kernel(perfect.x, perfect.values, eta, x)
    return np.maximum(smeared.real, 0.0)


def fringe_visibility(density: Callable[[np.ndarray], np.ndarray], period: float,
                      samples: int = 4001) -> float:
    """在 [−T, T] 内提取中心条纹的可见度 (max−min)/(max+min), 先除去 e^{−x²} 包络"""
    def flat(t):
        return float(np.asarray(density(np.array([t])))[0]) * math.exp(t * t)

    x = np.linspace(-period, period, samples)
    values = np.asarray(density(x)) * np.exp(x ** 2)
    step = x[1] - x[0]
    i_max = int(np.argmax(values))
    i_min = int(np.argmin(values))
    top = minimize_scalar(lambda t: -flat(t), method="bounded",
                          bounds=(x[i_max] - step, x[i_max] + step), options={"xatol": 1e-12})
    bottom = minimize_scalar(flat, method="bounded",
                             bounds=(x[i_min] - step, x[i_min] + step), options={"xatol": 1e-12})
    high = max(-top.fun, values[i_max])
    low = min(bottom.fun, values[i_min])
    return (high - low) / (high + low)
