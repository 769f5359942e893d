"""独立的 Fock 基暴力校验: 截断数态展开、Hermite 函数与数值平滑"""
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from catbell.common.utils import (
    CatParams,
    DetectorModel,
    GridCoverageError,
    SpinDirection,
    SuperpositionSign,
    TruncationError,
    config,
)
from catbell.physics import bell
from catbell.physics.model import fringe_period, norm_constant
from catbell.physics.quadrature import (
    HomodynePhase,
    QuadratureGrid,
    coherent_density,
    convolve_kernel,
    dist_conditional_spin_up,
    dist_superposition,
    integration_bounds,
)

Which = Literal["C0", "Cpi2"]


@dataclass(frozen=True)
class FockVector:
    """截断 Fock 基下的态矢量 c₀ … c_{n_max}"""
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("Fock 系数必须是非空一维数组")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


def default_n_max(alpha: float) -> int:
    """泊松尾部低于 1e−12 的截断: ceil(|α|² + 8|α| + 25)"""
    a = abs(alpha)
    return int(math.ceil(a * a + 8.0 * a + 25.0))


def coherent_fock(alpha_c: complex, n_max: Optional[int] = None) -> FockVector:
    """相干态展开 cₙ = cₙ₋₁·α/√n, c₀ = e^{−|α|²/2}"""
    required = default_n_max(abs(alpha_c))
    n_max = required if n_max is None else int(n_max)
    if n_max < required:
        raise TruncationError(f"|α|={abs(alpha_c)} 至少需要 n_max={required}, 实际为 {n_max}")
    alpha_c = complex(alpha_c)
    coeffs = np.empty(n_max + 1, dtype=complex)
    coeffs[0] = math.exp(-abs(alpha_c) ** 2 / 2.0)
    for n in range(1, n_max + 1):
        coeffs[n] = coeffs[n - 1] * alpha_c / math.sqrt(n)
    return FockVector(coeffs)


def superposition_fock(s: SuperpositionSign, p: CatParams, n_max: Optional[int] = None) -> FockVector:
    """Ψ± = (|α⟩ ± |−α⟩)/√N±, 奇偶性相反的系数严格为零"""
    base = coherent_fock(p.alpha, n_max).coeffs
    parity = np.arange(base.size) % 2
    keep = parity == (0 if s is SuperpositionSign.PLUS else 1)
    coeffs = np.where(keep, 2.0 * base, 0.0) / math.sqrt(norm_constant(s, p))
    return FockVector(coeffs)


def number_wavefunctions(n_max: int, x) -> np.ndarray:
    """ψ₀ … ψ_{n_max} 在 x 上的取值, 形状 (n_max+1, len(x))"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((n_max + 1, x.size))
    table[0] = math.pi ** -0.25 * np.exp(-x ** 2 / 2.0)
    if n_max >= 1:
        table[1] = math.sqrt(2.0) * x * table[0]
    # 归一化递推, 避免 Hₙ 溢出
    for n in range(2, n_max + 1):
        table[n] = math.sqrt(2.0 / n) * x * table[n - 1] - math.sqrt((n - 1) / n) * table[n - 2]
    return table


def number_wavefunction(n: int, x):
    """⟨x|n⟩ = π^{−1/4}(2ⁿn!)^{−1/2}Hₙ(x)e^{−x²/2}"""
    if n < 0:
        raise ValueError(f"数态序号必须非负, 实际为 {n}")
    values = number_wavefunctions(n, x)[n]
    return float(values[0]) if np.ndim(x) == 0 else values


def fock_wavefunction(state: FockVector, theta: HomodynePhase, x) -> np.ndarray:
    """⟨x_θ|ψ⟩ = Σ cₙ e^{−inθ} ψₙ(x)"""
    n = np.arange(state.coeffs.size)
    if theta.is_position:
        rotated = state.coeffs
    elif theta.is_momentum:
        rotated = state.coeffs * np.array([1, -1j, -1, 1j])[n % 4]
    else:
        rotated = state.coeffs * np.exp(-1j * n * theta.theta)
    return rotated @ number_wavefunctions(state.n_max, x)


def _support_grid(*states: FockVector) -> np.ndarray:
    # 经典转折点 √(2n_max+1) 之外再留 6 个单位
    n_max = max(s.n_max for s in states)
    half = math.sqrt(2.0 * n_max + 1.0) + 6.0
    step = config["Oracle"]["support_step"]
    return np.linspace(-half, half, int(math.ceil(2.0 * half / step)) + 1)


def _cross_density(bra: FockVector, ket: FockVector, theta: HomodynePhase, eta: float, x) -> np.ndarray:
    """conj(⟨y|bra⟩)⟨y|ket⟩, η<1 时对 y 做数值核平滑"""
    if eta == 1.0:
        return np.conj(fock_wavefunction(bra, theta, x)) * fock_wavefunction(ket, theta, x)
    y = _support_grid(bra, ket)
    perfect = np.conj(fock_wavefunction(bra, theta, y)) * fock_wavefunction(ket, theta, y)
    return convolve_kernel(y, perfect, eta, x)


def oracle_distribution(state: FockVector, theta: HomodynePhase, eta: float,
                        grid: QuadratureGrid) -> QuadratureGrid:
    """在给定网格上计算 |⟨x_θ|ψ⟩|² 及其 η<1 的平滑"""
    edges = np.array([grid.lo, grid.hi])
    edge_mass = np.abs(fock_wavefunction(state, theta, edges)) ** 2
    if np.max(edge_mass) > 1e-12:
        raise GridCoverageError(f"网格 [{grid.lo}, {grid.hi}] 没有覆盖态的支撑区间, 端点密度 {np.max(edge_mass):.3e}")
    density = _cross_density(state, state, theta, eta, grid.x).real
    return grid.with_values(np.maximum(density, 0.0))


def _signed_spans(which: Which, p: CatParams, eta: float) -> list[tuple[float, float, float]]:
    phase = HomodynePhase.position() if which == "C0" else HomodynePhase.momentum()
    lo, hi = integration_bounds(p, eta, phase)
    if which == "C0":
        spans = [(lo, 0.0, -1.0), (0.0, hi, 1.0)]
    else:
        bins = bell.BinSets(fringe_period(p, eta))
        spans = [(a, b, 1.0) for a, b in bins.intervals(1, lo, hi)]
        spans += [(a, b, -1.0) for a, b in bins.intervals(-1, lo, hi)]
    # 每段再切成宽度不超过 panel_width 的小段
    width = config["Oracle"]["panel_width"]
    panels = []
    for a, b, sign in spans:
        pieces = max(1, int(math.ceil((b - a) / width)))
        edges = np.linspace(a, b, pieces + 1)
        panels.extend((float(l), float(r), sign) for l, r in zip(edges[:-1], edges[1:]))
    return panels


def oracle_matrix_element(which: Which, bra: FockVector, ket: FockVector,
                          p: CatParams, d: DetectorModel) -> complex:
    """在带符号分箱上积分交叉密度, 得到 ⟨bra|Ĉ|ket⟩"""
    if which not in ("C0", "Cpi2"):
        raise ValueError(f"未知算符: {which}")
    phase = HomodynePhase.position() if which == "C0" else HomodynePhase.momentum()
    eta = d.eta_for(phase)
    panels = _signed_spans(which, p, eta)
    nodes, weights = np.polynomial.legendre.leggauss(int(config["Oracle"]["gauss_nodes"]))
    lo = np.array([a for a, _, _ in panels])
    hi = np.array([b for _, b, _ in panels])
    signs = np.array([s for _, _, s in panels])
    half = 0.5 * (hi - lo)
    points = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    values = _cross_density(bra, ket, phase, eta, points.ravel()).reshape(points.shape)
    return complex(np.sum(signs * half * (values @ weights)))


def oracle_s_max(p: CatParams, d: DetectorModel) -> float:
    plus = coherent_fock(p.alpha)
    minus = coherent_fock(-p.alpha, plus.n_max)
    c0 = oracle_matrix_element("C0", plus, plus, p, d).real
    c = oracle_matrix_element("Cpi2", plus, minus, p, d)
    return 2.0 * d.xi * math.sqrt(c0 ** 2 + abs(c) ** 2)


@dataclass
class OracleReport:
    """oracle 与解析结果的逐项比较"""
    tolerance: float
    discrepancies: dict[str, float] = field(default_factory=dict)

    def record(self, name: str, oracle, analytic) -> None:
        diff = np.max(np.abs(np.asarray(oracle) - np.asarray(analytic)))
        self.discrepancies[name] = float(diff)

    @property
    def worst(self) -> tuple[str, float]:
        return max(self.discrepancies.items(), key=lambda item: item[1])

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.discrepancies.values())


def oracle_check(p: CatParams, d: DetectorModel, tolerance: float, points: int = 801) -> OracleReport:
    """运行完整的 oracle 对照: 分布、矩阵元与 S_max"""
    max_alpha = config["Oracle"]["max_alpha"]
    if p.alpha > max_alpha:
        raise TruncationError(f"oracle 只支持 α ≤ {max_alpha}, 实际为 {p.alpha}")
    report = OracleReport(tolerance=tolerance)
    x_phase, p_phase = HomodynePhase.position(), HomodynePhase.momentum()
    plus = coherent_fock(p.alpha)
    minus = coherent_fock(-p.alpha, plus.n_max)

    # 分布
    for s in SuperpositionSign:
        state = superposition_fock(s, p)
        lo, hi = integration_bounds(p, d.eta_pi2, p_phase)
        grid = oracle_distribution(state, p_phase, d.eta_pi2, QuadratureGrid.span(lo, hi, points))
        report.record(f"dist_{s.name.lower()}", grid.values, dist_superposition(s, grid.x, p, d.eta_pi2))
    lo, hi = integration_bounds(p, d.eta0, x_phase)
    grid = oracle_distribution(plus, x_phase, d.eta0, QuadratureGrid.span(lo, hi, points))
    report.record("dist_coherent_position", grid.values, coherent_density(p.alpha, x_phase, d.eta0, grid.x))

    # 自旋沿 x 向上时, 谐振子处于 (|α⟩+|−α⟩)/√2 (未归一化的 Ψ₊)
    lo, hi = integration_bounds(p, d.eta_pi2, p_phase)
    grid = oracle_distribution(superposition_fock(SuperpositionSign.PLUS, p), p_phase, d.eta_pi2,
                               QuadratureGrid.span(lo, hi, points))
    a_x = SpinDirection(ax=1.0, ay=0.0, az=0.0)
    report.record("dist_conditional_up", grid.values,
                  dist_conditional_spin_up(grid.x, a_x, p, d.eta_pi2))

    # 矩阵元
    report.record("c0_diag", oracle_matrix_element("C0", plus, plus, p, d).real,
                  bell.c0_diag(p, d.eta0))
    report.record("c0_offdiag", abs(oracle_matrix_element("C0", plus, minus, p, d)), 0.0)
    report.record("cpi2_offdiag", oracle_matrix_element("Cpi2", plus, minus, p, d),
                  bell.cpi2_offdiag(p, d.eta_pi2))
    report.record("cpi2_diag", oracle_matrix_element("Cpi2", plus, plus, p, d).real,
                  bell.cpi2_diag(p, d.eta_pi2))
    report.record("s_max", oracle_s_max(p, d), bell.s_max_value(p, d))
    return report
