"""二值算符 Ĉ₀、Ĉ_{π/2}, 关联函数, Bell 组合 S 及其最大化"""
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

import numpy as np
from scipy.special import erf

from catbell.common.utils import (
    CatParams,
    DetectorModel,
    NoViolationError,
    SpinDirection,
    check_eta,
    config,
)
from catbell.physics.model import fringe_frequency, fringe_period, overlap, visibility
from catbell.physics.quadrature import (
    HomodynePhase,
    integrate,
    integration_bounds,
    povm_coherent_element,
)

LOCAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
ASYMPTOTIC_S_MAX = 2.0 * math.sqrt(1.0 + 4.0 / math.pi ** 2)

Operator = Literal["c0", "cpi2"]


def _outcome(values: np.ndarray, x) -> int | np.ndarray:
    if np.ndim(x) == 0:
        return int(values)
    return values.astype(int)


@dataclass(frozen=True)
class BinSets:
    """动量测量结果的分箱 Λ+ = ∪[(n−1/4)T, (n+1/4)T), Λ− = ∪[(n+1/4)T, (n+3/4)T)"""
    period: float
    convention: str = "left-closed"

    def __post_init__(self):
        if not self.period > 0.0:
            raise ValueError(f"条纹周期必须为正, 实际为 {self.period}")

    def classify(self, x) -> int | np.ndarray:
        u = np.asarray(x, dtype=float) / self.period + 0.25
        frac = u - np.floor(u)
        return _outcome(np.where(frac < 0.5, 1, -1), x)

    def intervals(self, sign: int, lo: float, hi: float) -> list[tuple[float, float]]:
        """Λ+ (sign=+1) 或 Λ− (sign=−1) 与 [lo, hi] 的交集"""
        offset = -0.25 if sign > 0 else 0.25
        t = self.period
        spans = []
        for n in range(math.floor(lo / t) - 1, math.ceil(hi / t) + 2):
            a = max((n + offset) * t, lo)
            b = min((n + offset + 0.5) * t, hi)
            if a < b:
                spans.append((a, b))
        return spans


@dataclass(frozen=True)
class MatrixElements:
    """Bell 组合所需的矩阵元"""
    c0_diag: float
    cpi2_offdiag: complex
    cpi2_diag: float

    def __post_init__(self):
        for name in ("c0_diag", "cpi2_offdiag", "cpi2_diag"):
            if abs(getattr(self, name)) > 1.0 + 1e-9:
                raise ValueError(f"{name} 超出算符范数 1")


@dataclass(frozen=True)
class BellResult:
    """S_max 及取得最大值的自旋方向"""
    s_max: float
    a_opt: SpinDirection
    a_prime_opt: SpinDirection
    elements: MatrixElements


def classify_position(x) -> int | np.ndarray:
    """Ĉ₀ 的符号分箱, x=0 记为 +1"""
    return _outcome(np.where(np.asarray(x, dtype=float) >= 0.0, 1, -1), x)


def classify_momentum(x, bins: BinSets) -> int | np.ndarray:
    return bins.classify(x)


def c0_diag(p: CatParams, eta0: float) -> float:
    """⟨α|Ĉ₀|α⟩ = erf(√(2η)α)"""
    eta0 = check_eta(eta0, "eta0")
    return float(erf(math.sqrt(2.0 * eta0) * p.alpha))


def cpi2_offdiag(p: CatParams, eta: float) -> complex:
    """⟨α|Ĉ_{π/2}|−α⟩, 实 α 时虚部恒为 0"""
    eta = check_eta(eta)
    t = fringe_period(p, eta)
    k = fringe_frequency(p, eta)
    n_max = int(math.floor(config["Bell"]["envelope_cutoff"] / t))

    def envelope(x):
        return math.exp(-x * x)

    # Λ+ 的各区间关于 x=0 对称
    total = integrate(envelope, -0.25 * t, 0.25 * t, weight="cos", wvar=k)
    for n in range(1, n_max + 1):
        total += 2.0 * integrate(envelope, (n - 0.25) * t, (n + 0.25) * t, weight="cos", wvar=k)
    value = -overlap(p) + 2.0 / math.sqrt(math.pi) * visibility(p, eta) * total
    return complex(value, 0.0)


def operator_element(op: Operator, bra: complex, ket: complex, p: CatParams, eta: float) -> complex:
    """直接数值积分 ⟨bra|Ĉ_op|ket⟩, bra 与 ket 为相干态振幅"""
    eta = check_eta(eta)
    phase = HomodynePhase.position() if op == "c0" else HomodynePhase.momentum()
    lo, hi = integration_bounds(p, eta, phase)
    if op == "c0":
        plus, minus = [(0.0, hi)], [(lo, 0.0)]
    elif op == "cpi2":
        bins = BinSets(fringe_period(p, eta))
        plus, minus = bins.intervals(1, lo, hi), bins.intervals(-1, lo, hi)
    else:
        raise ValueError(f"未知算符: {op}")

    def part(x, take):
        return take(povm_coherent_element(bra, ket, x, phase, eta))

    total = 0j
    for sign, spans in ((1.0, plus), (-1.0, minus)):
        for a, b in spans:
            re = integrate(lambda x: float(part(x, np.real)), a, b)
            im = integrate(lambda x: float(part(x, np.imag)), a, b)
            total += sign * complex(re, im)
    return total


def cpi2_diag(p: CatParams, eta: float) -> float:
    """⟨α|Ĉ_{π/2}|α⟩ (= ⟨−α|Ĉ_{π/2}|−α⟩)"""
    return operator_element("cpi2", p.alpha, p.alpha, p, eta).real


def _core_elements(p: CatParams, d: DetectorModel) -> tuple[float, complex]:
    return c0_diag(p, d.eta0), cpi2_offdiag(p, d.eta_pi2)


def matrix_elements(p: CatParams, d: DetectorModel) -> MatrixElements:
    c0, c = _core_elements(p, d)
    return MatrixElements(c0_diag=c0, cpi2_offdiag=c, cpi2_diag=cpi2_diag(p, d.eta_pi2))


def _correlation_from(a: SpinDirection, theta: HomodynePhase, c0: float, c: complex, xi: float) -> float:
    if theta.is_position:
        return xi * a.az * c0
    if theta.is_momentum:
        return xi * (a.ax * c.real + a.ay * c.imag)
    raise ValueError(f"关联函数只支持 θ=0 或 π/2, 实际为 {theta.theta}")


def correlation(a: SpinDirection, theta: HomodynePhase, p: CatParams, d: DetectorModel) -> float:
    """关联函数 E(a, θ), 已乘以自旋保真度 ξ"""
    if theta.is_position:
        return _correlation_from(a, theta, c0_diag(p, d.eta0), 0j, d.xi)
    if theta.is_momentum:
        return _correlation_from(a, theta, 0.0, cpi2_offdiag(p, d.eta_pi2), d.xi)
    raise ValueError(f"关联函数只支持 θ=0 或 π/2, 实际为 {theta.theta}")


def bell_combination(a: SpinDirection, a_prime: SpinDirection, p: CatParams, d: DetectorModel) -> float:
    """Bell 组合 S = E(a,0) + E(a,π/2) + E(a′,0) − E(a′,π/2)"""
    c0, c = _core_elements(p, d)
    x_phase, p_phase = HomodynePhase.position(), HomodynePhase.momentum()
    return (_correlation_from(a, x_phase, c0, c, d.xi)
            + _correlation_from(a, p_phase, c0, c, d.xi)
            + _correlation_from(a_prime, x_phase, c0, c, d.xi)
            - _correlation_from(a_prime, p_phase, c0, c, d.xi))


def optimal_directions(c0: float, c: complex) -> tuple[SpinDirection, SpinDirection]:
    """使 S 最大的自旋方向: a_x=−a′_x, a_y=−a′_y, a_z=a′_z"""
    norm = math.sqrt(c0 ** 2 + abs(c) ** 2)
    a = SpinDirection(ax=c.real / norm, ay=c.imag / norm, az=c0 / norm)
    a_prime = SpinDirection(ax=-a.ax, ay=-a.ay, az=a.az)
    return a, a_prime


def s_max(p: CatParams, d: DetectorModel) -> BellResult:
    """S_max = 2ξ√(⟨α|Ĉ₀|α⟩² + |⟨α|Ĉ_{π/2}|−α⟩|²)"""
    elements = matrix_elements(p, d)
    c0, c = elements.c0_diag, elements.cpi2_offdiag
    a, a_prime = optimal_directions(c0, c)
    value = 2.0 * d.xi * math.sqrt(c0 ** 2 + abs(c) ** 2)
    return BellResult(s_max=value, a_opt=a, a_prime_opt=a_prime, elements=elements)


def s_max_value(p: CatParams, d: DetectorModel) -> float:
    """只计算 S_max 数值, 供扫描使用"""
    c0, c = _core_elements(p, d)
    return 2.0 * d.xi * math.sqrt(c0 ** 2 + abs(c) ** 2)


def s_max_approx(p: CatParams, d: DetectorModel) -> float:
    """大 α 近似 2ξ√(1 + (2/π)² e^{−4α²(1−η)})"""
    damping = math.exp(-4.0 * p.alpha ** 2 * (1.0 - d.eta_pi2))
    return 2.0 * d.xi * math.sqrt(1.0 + (2.0 / math.pi) ** 2 * damping)


def threshold_eta(p: CatParams, xi: float, tol: Optional[float] = None,
                  scan_points: Optional[int] = None) -> float:
    """S_max(η) > 2 的最小效率: 先均匀扫描 64 点, 再在首个穿越区间内二分"""
    bell_cfg = config["Bell"]
    tol = tol or bell_cfg["threshold_tol"]
    scan_points = scan_points or bell_cfg["threshold_scan_points"]
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi 必须在 [0, 1] 内, 实际为 {xi}")

    def excess(eta: float) -> float:
        return s_max_value(p, DetectorModel.single(eta, xi)) - LOCAL_BOUND

    etas = np.linspace(bell_cfg["threshold_eta_floor"], 1.0, int(scan_points))
    crossing = next((i for i, eta in enumerate(etas) if excess(float(eta)) > 0.0), None)
    if crossing is None:
        raise NoViolationError(f"α={p.alpha}, ξ={xi} 时 η∈(0,1] 上 S_max ≤ 2")
    if crossing == 0:
        return float(etas[0])
    lo, hi = float(etas[crossing - 1]), float(etas[crossing])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def threshold_scan(alphas: Iterable[float], xi: float) -> list[Optional[float]]:
    """对一组 α 计算效率阈值, 不违背时记为 None"""
    thresholds = []
    for alpha in alphas:
        try:
            thresholds.append(threshold_eta(CatParams(alpha=alpha), xi))
        except NoViolationError:
            thresholds.append(None)
    return thresholds
