"""猫态 |K⟩ = (|↑⟩|α⟩ + |↓⟩|−α⟩)/√2 的基本闭式量"""
import math

from catbell.common.utils import CatParams, DegenerateStateError, SuperpositionSign, check_eta

# Ψ₋ 相关量的 α 下限，N₋ 在 α→0 时按 α² 趋于零
ALPHA_FLOOR = 1e-8


def overlap(p: CatParams) -> float:
    """⟨−α|α⟩ = exp(−2α²)"""
    return math.exp(-2.0 * p.alpha ** 2)


def norm_constant(s: SuperpositionSign, p: CatParams) -> float:
    """归一化常数 N± = 2(1 ± e^{−2α²})"""
    if s is SuperpositionSign.PLUS:
        return 2.0 * (1.0 + overlap(p))
    if p.alpha < ALPHA_FLOOR:
        raise DegenerateStateError(f"α = {p.alpha!r} 低于 {ALPHA_FLOOR}, Ψ₋ 退化")
    return -2.0 * math.expm1(-2.0 * p.alpha ** 2)


def fringe_period(p: CatParams, eta: float) -> float:
    """动量分布干涉条纹间距 T = π/(√(2η)α)"""
    eta = check_eta(eta)
    return math.pi / (math.sqrt(2.0 * eta) * p.alpha)


def fringe_frequency(p: CatParams, eta: float) -> float:
    """条纹角频率 √(8η)α, 即 2π/T"""
    eta = check_eta(eta)
    return math.sqrt(8.0 * eta) * p.alpha


def visibility(p: CatParams, eta: float) -> float:
    """条件干涉条纹的可见度 exp[−2α²(1−η)]"""
    eta = check_eta(eta)
    return math.exp(-2.0 * p.alpha ** 2 * (1.0 - eta))


def detector_resolution(eta: float) -> float:
    """非理想零拍探测的分辨率 √((1/η−1)/2)"""
    eta = check_eta(eta)
    return math.sqrt((1.0 / eta - 1.0) / 2.0)
