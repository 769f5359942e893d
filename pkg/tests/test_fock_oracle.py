"""
Fock 基暴力校验的测试

覆盖:
- 相干态展开、截断与奇偶结构
- 归一化 Hermite 函数
- oracle 分布与矩阵元对解析结果的复核
"""

import math

import numpy as np
import pytest

from catbell.common.utils import (
    CatParams,
    DetectorModel,
    GridCoverageError,
    SuperpositionSign,
    TruncationError,
)
from catbell.oracle.fock_oracle import (
    FockVector,
    OracleReport,
    coherent_fock,
    default_n_max,
    fock_wavefunction,
    number_wavefunction,
    number_wavefunctions,
    oracle_check,
    oracle_distribution,
    oracle_matrix_element,
    oracle_s_max,
    superposition_fock,
)
from catbell.physics import bell
from catbell.physics.quadrature import (
    HomodynePhase,
    QuadratureGrid,
    coherent_wavefunction,
    dist_superposition,
    integrate,
    integration_bounds,
)

X_PHASE = HomodynePhase.position()
P_PHASE = HomodynePhase.momentum()


# ═══════════════════════════════════════════════════════════════════
# Fock 态
# ═══════════════════════════════════════════════════════════════════


class TestCoherentFock:

    def test_vacuum(self):
        state = coherent_fock(0.0)
        assert state.coeffs[0] == 1.0
        assert np.all(state.coeffs[1:] == 0.0)

    def test_poisson_mode(self):
        probs = np.abs(coherent_fock(2.0).coeffs) ** 2
        # 泊松均值为 4 时 n=3 与 n=4 并列最大
        assert probs[4] == pytest.approx(probs.max(), rel=1e-12)
        assert probs[4] == pytest.approx(probs[3], rel=1e-12)
        assert probs[4] == pytest.approx(math.exp(-4) * 4 ** 4 / 24, rel=1e-12)

    def test_norm(self):
        state = coherent_fock(6.0, n_max=121)
        assert 1 - 1e-10 <= state.norm() <= 1 + 1e-12

    def test_default_n_max(self):
        assert default_n_max(2.0) == 45
        assert default_n_max(6.0) == 109

    def test_insufficient_truncation(self):
        with pytest.raises(TruncationError):
            coherent_fock(3.0, n_max=20)

    def test_complex_amplitude(self):
        state = coherent_fock(1.0 + 1.0j)
        assert state.coeffs[1] == pytest.approx(math.exp(-1.0) * (1.0 + 1.0j), rel=1e-14)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FockVector(np.array([]))


class TestSuperpositionFock:

    def test_parity(self):
        p = CatParams(alpha=2.0)
        plus = superposition_fock(SuperpositionSign.PLUS, p)
        minus = superposition_fock(SuperpositionSign.MINUS, p)
        assert np.all(plus.coeffs[1::2] == 0.0)
        assert np.all(minus.coeffs[0::2] == 0.0)

    @pytest.mark.parametrize("s", list(SuperpositionSign))
    @pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
    def test_normalized(self, s, alpha):
        assert superposition_fock(s, CatParams(alpha=alpha)).norm() == pytest.approx(1.0, abs=1e-10)


# ═══════════════════════════════════════════════════════════════════
# Hermite 函数
# ═══════════════════════════════════════════════════════════════════


class TestNumberWavefunction:

    def test_ground_state(self):
        assert number_wavefunction(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)

    def test_odd_at_origin(self):
        assert number_wavefunction(1, 0.0) == 0.0

    def test_closed_form_low_orders(self):
        x = np.linspace(-3, 3, 61)
        base = math.pi ** -0.25 * np.exp(-x ** 2 / 2)
        np.testing.assert_allclose(number_wavefunction(2, x), base * (4 * x ** 2 - 2) / math.sqrt(8), atol=1e-14)
        np.testing.assert_allclose(number_wavefunction(3, x), base * (8 * x ** 3 - 12 * x) / math.sqrt(48), atol=1e-14)

    def test_orthogonal_pair(self):
        overlap = integrate(lambda x: number_wavefunction(3, x) * number_wavefunction(5, x), -12.0, 12.0)
        assert overlap == pytest.approx(0.0, abs=1e-10)

    def test_orthonormal_table(self):
        x = np.linspace(-20, 20, 8001)
        table = number_wavefunctions(80, x)
        gram = table @ table.T * (x[1] - x[0])
        np.testing.assert_allclose(gram, np.eye(81), atol=1e-9)

    def test_high_order_finite(self):
        assert np.all(np.isfinite(number_wavefunctions(300, np.linspace(-30, 30, 301))))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            number_wavefunction(-1, 0.0)

    @pytest.mark.parametrize("theta", [0.0, math.pi / 2, 0.8])
    def test_coherent_wavefunction(self, theta):
        phase = HomodynePhase(theta=theta)
        x = np.linspace(-6, 6, 121)
        np.testing.assert_allclose(fock_wavefunction(coherent_fock(1.5), phase, x),
                                   coherent_wavefunction(1.5, phase, x), atol=1e-12)


# ═══════════════════════════════════════════════════════════════════
# oracle 分布与矩阵元
# ═══════════════════════════════════════════════════════════════════


class TestOracleDistribution:

    @pytest.mark.parametrize("s", list(SuperpositionSign))
    def test_perfect_detection(self, s):
        p = CatParams(alpha=2.0)
        grid = QuadratureGrid.span(-8.0, 8.0, 801)
        oracle = oracle_distribution(superposition_fock(s, p), P_PHASE, 1.0, grid)
        np.testing.assert_allclose(oracle.values, dist_superposition(s, grid.x, p, 1.0), atol=1e-8)

    @pytest.mark.parametrize("s", list(SuperpositionSign))
    def test_lossy_detection(self, s):
        p = CatParams(alpha=2.0)
        lo, hi = integration_bounds(p, 0.7, P_PHASE)
        grid = QuadratureGrid.span(lo, hi, 801)
        oracle = oracle_distribution(superposition_fock(s, p), P_PHASE, 0.7, grid)
        np.testing.assert_allclose(oracle.values, dist_superposition(s, grid.x, p, 0.7), atol=1e-7)

    def test_grid_too_narrow(self):
        state = superposition_fock(SuperpositionSign.PLUS, CatParams(alpha=2.0))
        with pytest.raises(GridCoverageError):
            oracle_distribution(state, P_PHASE, 1.0, QuadratureGrid.span(-1.0, 1.0, 11))


class TestOracleMatrixElement:

    def test_position_diagonal(self):
        p, d = CatParams(alpha=2.0), DetectorModel.single(0.8)
        plus = coherent_fock(2.0)
        value = oracle_matrix_element("C0", plus, plus, p, d)
        assert value.real == pytest.approx(math.erf(math.sqrt(1.6) * 2.0), abs=1e-7)

    def test_momentum_offdiagonal(self):
        p, d = CatParams(alpha=2.0), DetectorModel.single(0.9)
        plus = coherent_fock(2.0)
        minus = coherent_fock(-2.0, plus.n_max)
        value = oracle_matrix_element("Cpi2", plus, minus, p, d)
        assert abs(value - bell.cpi2_offdiag(p, 0.9)) <= 1e-6

    def test_position_offdiagonal_vanishes(self):
        p, d = CatParams(alpha=2.0), DetectorModel.single(0.9)
        plus = coherent_fock(2.0)
        minus = coherent_fock(-2.0, plus.n_max)
        assert abs(oracle_matrix_element("C0", plus, minus, p, d)) <= 1e-8

    def test_unknown_operator(self):
        state = coherent_fock(1.0)
        with pytest.raises(ValueError):
            oracle_matrix_element("C1", state, state, CatParams(alpha=1.0), DetectorModel())

    def test_s_max(self):
        p, d = CatParams(alpha=1.5), DetectorModel.single(0.9, 0.8)
        assert oracle_s_max(p, d) == pytest.approx(bell.s_max_value(p, d), abs=5e-6)


class TestOracleReport:

    def test_worst_and_passed(self):
        report = OracleReport(tolerance=1e-6)
        report.record("a", 1.0, 1.0 + 1e-8)
        report.record("b", np.array([0.0, 2.0]), np.array([0.0, 2.0 + 1e-5]))
        assert report.worst[0] == "b"
        assert report.worst[1] == pytest.approx(1e-5)
        assert not report.passed

    def test_alpha_cap(self):
        with pytest.raises(TruncationError):
            oracle_check(CatParams(alpha=6.0), DetectorModel(), 1e-6)

    def test_check_passes(self):
        report = oracle_check(CatParams(alpha=2.0), DetectorModel.single(0.9), 1e-6)
        assert report.passed, report.worst
        assert set(report.discrepancies) >= {"dist_plus", "dist_minus", "c0_diag", "cpi2_offdiag", "s_max"}

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("eta", [1.0, 0.9, 0.7])
    def test_lattice(self, alpha, eta):
        report = oracle_check(CatParams(alpha=alpha), DetectorModel.single(eta), 1e-6)
        assert report.passed, report.worst
        for name, diff in report.discrepancies.items():
            if name.startswith("dist_"):
                assert diff <= 1e-7, name
        assert report.discrepancies["s_max"] <= 5e-6
