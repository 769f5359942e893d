"""逐次模拟 Bell 实验: 自旋/正交分量联合分布、可复现抽样与关联估计"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid
from tqdm import tqdm

from catbell.common.utils import (
    CatParams,
    DetectorModel,
    InsufficientShotsError,
    SpinDirection,
    config,
)
from catbell.physics.bell import (
    BinSets,
    c0_diag,
    classify_position,
    correlation,
    cpi2_offdiag,
    optimal_directions,
)
from catbell.physics.model import fringe_period
from catbell.physics.quadrature import HomodynePhase, integration_bounds, povm_coherent_element

# Bell 组合中四个关联函数的符号
BELL_SIGNS = (1, 1, 1, -1)
MIN_SHOTS_PER_SETTING = 100

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class MeasurementSetting(BaseModel):
    """一次测量设置: 自旋方向 a 与零拍相位 θ ∈ {0, π/2}"""
    model_config = ConfigDict(frozen=True)

    spin: SpinDirection
    phase: HomodynePhase

    @model_validator(mode="after")
    def _standard_phase(self) -> "MeasurementSetting":
        if not (self.phase.is_position or self.phase.is_momentum):
            raise ValueError(f"测量相位只能是 0 或 π/2, 实际为 {self.phase.theta}")
        return self


class ShotRecord(BaseModel):
    """单次测量记录"""
    model_config = ConfigDict(frozen=True)

    spin_outcome: Literal[1, -1]
    quadrature_outcome: float
    derived_bin: Literal[1, -1]


class CorrelationEstimate(BaseModel):
    """关联函数的经验估计"""
    model_config = ConfigDict(frozen=True)

    mean: float = Field(..., ge=-1.0, le=1.0)
    stderr: float = Field(..., ge=0.0)
    shots: int = Field(..., gt=0)


class BellExperimentResult(BaseModel):
    """一次完整 Bell 实验的结果"""
    s: float
    stderr: float
    s_analytic: float
    settings: list[MeasurementSetting]
    signs: list[int]
    estimates: list[CorrelationEstimate]
    analytic: list[float]
    shots_per_setting: int
    seed: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.s == self.s_analytic else math.inf
        return (self.s - self.s_analytic) / self.stderr


@dataclass(frozen=True)
class ShotBatch:
    """批量测量记录 (数组形式)"""
    spin: np.ndarray
    quadrature: np.ndarray
    derived: np.ndarray

    def __len__(self) -> int:
        return int(self.spin.size)

    def records(self) -> Iterator[ShotRecord]:
        for s, x, b in zip(self.spin, self.quadrature, self.derived):
            yield ShotRecord(spin_outcome=int(s), quadrature_outcome=float(x), derived_bin=int(b))


def spin_povm_weights(s: int, a: SpinDirection, xi: float) -> np.ndarray:
    """带保真度的自旋 POVM P_s(a) = (1 + s·ξ·a·σ)/2, 以 {|↑⟩, |↓⟩} 为基"""
    if s not in (1, -1):
        raise ValueError(f"自旋结果只能是 ±1, 实际为 {s}")
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi 必须在 [0, 1] 内, 实际为 {xi}")
    a_sigma = sum(component * pauli for component, pauli in zip(a.as_array(), PAULI))
    return 0.5 * (np.eye(2, dtype=complex) + s * xi * a_sigma)


def joint_density(s: int, x, m: MeasurementSetting, p: CatParams, d: DetectorModel):
    """p(s, x) = ⟨K|P_s(a) ⊗ Ĥ(x;θ)|K⟩"""
    weights = spin_povm_weights(s, m.spin, d.xi)
    eta = d.eta_for(m.phase)
    alpha = p.alpha
    h_up = povm_coherent_element(alpha, alpha, x, m.phase, eta)
    h_down = povm_coherent_element(-alpha, -alpha, x, m.phase, eta)
    # ⟨α|Ĥ|−α⟩, 另一交叉项是它的复共轭
    h_cross = povm_coherent_element(alpha, -alpha, x, m.phase, eta)
    density = 0.5 * (weights[0, 0].real * h_up.real
                     + weights[1, 1].real * h_down.real
                     + 2.0 * (weights[0, 1] * h_cross).real)
    return np.maximum(density, 0.0)


def x_marginal(x, m: MeasurementSetting, p: CatParams, d: DetectorModel):
    """对自旋结果求和后的正交分量分布"""
    return joint_density(1, x, m, p, d) + joint_density(-1, x, m, p, d)


def make_rng(seed: int, index: int) -> np.random.Generator:
    """由 (seed, 设置序号) 派生的独立随机流"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class Sampler:
    """按条件逆累积分布抽样的测量模拟器, 构造后不可变"""
    setting: MeasurementSetting
    x: np.ndarray
    p_plus: float
    cdf_plus: np.ndarray
    cdf_minus: np.ndarray
    bins: Optional[BinSets]

    def quantile(self, s: int, u):
        cdf = self.cdf_plus if s == 1 else self.cdf_minus
        return np.interp(u, cdf, self.x)

    def classify(self, x) -> np.ndarray:
        if self.bins is None:
            return np.asarray(classify_position(x))
        return np.asarray(self.bins.classify(x))

    def draw(self, n: int, rng: np.random.Generator) -> ShotBatch:
        spin = np.where(rng.random(n) < self.p_plus, 1, -1).astype(np.int8)
        u = rng.random(n)
        quadrature = np.empty(n)
        up = spin == 1
        quadrature[up] = self.quantile(1, u[up])
        quadrature[~up] = self.quantile(-1, u[~up])
        derived = self.classify(quadrature).astype(np.int8)
        return ShotBatch(spin=spin, quadrature=quadrature, derived=derived)


def _normalized_cdf(density: np.ndarray, x: np.ndarray) -> np.ndarray:
    cdf = cumulative_trapezoid(density, x, initial=0.0)
    if cdf[-1] <= 0.0:
        return np.linspace(0.0, 1.0, x.size)
    return np.maximum.accumulate(cdf / cdf[-1])


def build_sampler(m: MeasurementSetting, p: CatParams, d: DetectorModel,
                  grid_points: Optional[int] = None) -> Sampler:
    """在 2^14 点网格上制表条件逆累积分布"""
    grid_points = grid_points or config["Sampler"]["grid_points"]
    eta = d.eta_for(m.phase)
    lo, hi = integration_bounds(p, eta, m.phase)
    x = np.linspace(lo, hi, int(grid_points))
    dens_plus = joint_density(1, x, m, p, d)
    dens_minus = joint_density(-1, x, m, p, d)
    mass_plus = trapezoid(dens_plus, x)
    mass_minus = trapezoid(dens_minus, x)
    bins = BinSets(fringe_period(p, eta)) if m.phase.is_momentum else None
    return Sampler(
        setting=m,
        x=x,
        p_plus=float(mass_plus / (mass_plus + mass_minus)),
        cdf_plus=_normalized_cdf(dens_plus, x),
        cdf_minus=_normalized_cdf(dens_minus, x),
        bins=bins,
    )


def estimate_correlation(shots: Union[ShotBatch, Sequence[ShotRecord]]) -> CorrelationEstimate:
    """关联函数的经验估计: s·bin 的均值与标准误差"""
    if isinstance(shots, ShotBatch):
        products = shots.spin.astype(float) * shots.derived.astype(float)
    else:
        products = np.array([r.spin_outcome * r.derived_bin for r in shots], dtype=float)
    n = products.size
    if n < 2:
        raise InsufficientShotsError(f"至少需要 2 次测量, 实际为 {n}")
    stderr = float(np.std(products, ddof=1) / math.sqrt(n))
    return CorrelationEstimate(mean=float(np.mean(products)), stderr=stderr, shots=n)


def default_settings(p: CatParams, d: DetectorModel) -> list[MeasurementSetting]:
    """最优方向下的四个设置, 顺序与 BELL_SIGNS 对应"""
    a, a_prime = optimal_directions(c0_diag(p, d.eta0), cpi2_offdiag(p, d.eta_pi2))
    x_phase, p_phase = HomodynePhase.position(), HomodynePhase.momentum()
    return [
        MeasurementSetting(spin=a, phase=x_phase),
        MeasurementSetting(spin=a, phase=p_phase),
        MeasurementSetting(spin=a_prime, phase=x_phase),
        MeasurementSetting(spin=a_prime, phase=p_phase),
    ]


def run_bell_experiment(p: CatParams, d: DetectorModel, shots_per_setting: int, seed: int,
                        settings: Optional[Sequence[MeasurementSetting]] = None,
                        workers: int = 1, progress: bool = False) -> BellExperimentResult:
    """模拟四个设置下的测量并组合成 S, 结果只由 seed 决定"""
    if shots_per_setting < MIN_SHOTS_PER_SETTING:
        raise InsufficientShotsError(
            f"每个设置至少需要 {MIN_SHOTS_PER_SETTING} 次测量, 实际为 {shots_per_setting}")
    settings = list(settings) if settings is not None else default_settings(p, d)
    if len(settings) != len(BELL_SIGNS):
        raise ValueError(f"Bell 组合需要 4 个测量设置, 实际为 {len(settings)}")

    def run_setting(index: int) -> CorrelationEstimate:
        sampler = build_sampler(settings[index], p, d)
        return estimate_correlation(sampler.draw(shots_per_setting, make_rng(seed, index)))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        jobs = executor.map(run_setting, range(len(settings)))
        estimates = list(tqdm(jobs, total=len(settings), desc="[蒙特卡罗] 测量设置",
                              disable=not progress))

    analytic = [correlation(m.spin, m.phase, p, d) for m in settings]
    s = sum(sign * e.mean for sign, e in zip(BELL_SIGNS, estimates))
    stderr = math.sqrt(sum(e.stderr ** 2 for e in estimates))
    s_analytic = sum(sign * e for sign, e in zip(BELL_SIGNS, analytic))
    return BellExperimentResult(
        s=s,
        stderr=stderr,
        s_analytic=s_analytic,
        settings=settings,
        signs=list(BELL_SIGNS),
        estimates=estimates,
        analytic=analytic,
        shots_per_setting=shots_per_setting,
        seed=seed,
    )
