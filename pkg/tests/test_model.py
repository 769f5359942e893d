"""
猫态参数与基本闭式量的测试

覆盖:
- CatParams / DetectorModel / SpinDirection 的校验
- overlap, norm_constant, fringe_period, visibility, detector_resolution
- 配置文件读取与合并
"""

import math

import pytest
from pydantic import ValidationError

from catbell.common.utils import (
    CatParams,
    DegenerateStateError,
    DetectorModel,
    SettingsFileError,
    SpinDirection,
    SuperpositionSign,
    load_config,
)
from catbell.physics.model import (
    ALPHA_FLOOR,
    detector_resolution,
    fringe_frequency,
    fringe_period,
    norm_constant,
    overlap,
    visibility,
)


# ═══════════════════════════════════════════════════════════════════
# 参数类型
# ═══════════════════════════════════════════════════════════════════


class TestCatParams:

    def test_positive_alpha(self):
        assert CatParams(alpha=2.0).alpha == 2.0

    @pytest.mark.parametrize("alpha", [0.0, -1.0, float("inf"), float("nan")])
    def test_rejects_invalid_alpha(self, alpha):
        with pytest.raises(ValidationError):
            CatParams(alpha=alpha)

    def test_rejects_complex_alpha(self):
        with pytest.raises(ValidationError):
            CatParams(alpha=1 + 1j)

    def test_frozen(self):
        p = CatParams(alpha=1.0)
        with pytest.raises(ValidationError):
            p.alpha = 2.0


class TestDetectorModel:

    def test_default_single_eta(self):
        d = DetectorModel(eta0=0.8)
        assert d.eta_pi2 == 0.8
        assert d.xi == 1.0

    def test_separate_channels(self):
        d = DetectorModel(eta0=0.9, eta_pi2=0.7, xi=0.5)
        assert (d.eta0, d.eta_pi2, d.xi) == (0.9, 0.7, 0.5)

    @pytest.mark.parametrize("kwargs", [
        {"eta0": 0.0},
        {"eta0": 1.1},
        {"eta0": 1.0, "eta_pi2": -0.2},
        {"xi": 1.5},
        {"xi": -0.1},
    ])
    def test_rejects_out_of_domain(self, kwargs):
        with pytest.raises(ValidationError):
            DetectorModel(**kwargs)

    def test_single(self):
        d = DetectorModel.single(0.66, 0.9)
        assert d.eta0 == d.eta_pi2 == 0.66
        assert d.xi == 0.9


class TestSpinDirection:

    def test_unit_vector(self):
        a = SpinDirection(ax=0.0, ay=0.0, az=1.0)
        assert a.as_array().tolist() == [0.0, 0.0, 1.0]

    def test_rejects_non_unit(self):
        with pytest.raises(ValidationError):
            SpinDirection(ax=1.0, ay=1.0, az=0.0)

    def test_from_vector_normalizes(self):
        a = SpinDirection.from_vector(3.0, 0.0, 4.0)
        assert a.ax == pytest.approx(0.6)
        assert a.az == pytest.approx(0.8)

    def test_from_zero_vector(self):
        with pytest.raises(ValueError):
            SpinDirection.from_vector(0.0, 0.0, 0.0)


class TestSuperpositionSign:

    @pytest.mark.parametrize("text,expected", [
        ("plus", SuperpositionSign.PLUS),
        ("+", SuperpositionSign.PLUS),
        ("minus", SuperpositionSign.MINUS),
        (" -1 ", SuperpositionSign.MINUS),
    ])
    def test_parse(self, text, expected):
        assert SuperpositionSign.parse(text) is expected

    def test_parse_unknown(self):
        with pytest.raises(ValueError):
            SuperpositionSign.parse("zero")


# ═══════════════════════════════════════════════════════════════════
# 闭式量
# ═══════════════════════════════════════════════════════════════════


class TestOverlap:

    def test_alpha_one(self):
        assert overlap(CatParams(alpha=1.0)) == pytest.approx(0.1353352832366127, rel=1e-15)

    def test_alpha_six(self):
        assert overlap(CatParams(alpha=6.0)) == pytest.approx(math.exp(-72.0), rel=1e-14)

    def test_small_alpha_limit(self):
        assert overlap(CatParams(alpha=1e-9)) == pytest.approx(1.0, abs=1e-15)


class TestNormConstant:

    def test_values_alpha_one(self):
        p = CatParams(alpha=1.0)
        assert norm_constant(SuperpositionSign.PLUS, p) == pytest.approx(2.2706705664732254, rel=1e-14)
        assert norm_constant(SuperpositionSign.MINUS, p) == pytest.approx(1.7293294335267746, rel=1e-14)

    def test_large_alpha(self):
        p = CatParams(alpha=6.0)
        for s in SuperpositionSign:
            assert norm_constant(s, p) == pytest.approx(2.0, abs=1e-30)

    @pytest.mark.parametrize("alpha", [0.01, 0.5, 1.0, 2.0, 6.0])
    def test_sum_is_four(self, alpha):
        p = CatParams(alpha=alpha)
        total = norm_constant(SuperpositionSign.PLUS, p) + norm_constant(SuperpositionSign.MINUS, p)
        assert total == pytest.approx(4.0, abs=1e-14)

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 3.0])
    def test_ordering(self, alpha):
        p = CatParams(alpha=alpha)
        assert norm_constant(SuperpositionSign.PLUS, p) >= 2.0 >= norm_constant(SuperpositionSign.MINUS, p)

    def test_degenerate_minus(self):
        p = CatParams(alpha=ALPHA_FLOOR / 10)
        with pytest.raises(DegenerateStateError):
            norm_constant(SuperpositionSign.MINUS, p)
        assert norm_constant(SuperpositionSign.PLUS, p) == pytest.approx(4.0)

    def test_minus_small_alpha_is_accurate(self):
        # N₋ ≈ 4α² for small α
        p = CatParams(alpha=1e-6)
        assert norm_constant(SuperpositionSign.MINUS, p) == pytest.approx(4e-12, rel=1e-6)


class TestFringePeriod:

    def test_alpha_six(self):
        assert fringe_period(CatParams(alpha=6.0), 1.0) == pytest.approx(math.pi / (6 * math.sqrt(2)), rel=1e-14)

    def test_alpha_two_half_eta(self):
        assert fringe_period(CatParams(alpha=2.0), 0.5) == pytest.approx(math.pi / 2, rel=1e-14)

    @pytest.mark.parametrize("k", [0.5, 2.0, 3.7])
    def test_homogeneous(self, k):
        base = fringe_period(CatParams(alpha=1.3), 0.8)
        assert fringe_period(CatParams(alpha=1.3 * k), 0.8) == pytest.approx(base / k, rel=1e-12)

    def test_frequency_matches_period(self):
        p = CatParams(alpha=2.5)
        assert fringe_frequency(p, 0.7) * fringe_period(p, 0.7) == pytest.approx(2 * math.pi, rel=1e-14)

    def test_rejects_bad_eta(self):
        with pytest.raises(ValueError):
            fringe_period(CatParams(alpha=1.0), 0.0)


class TestVisibility:

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 6.0])
    def test_lossless(self, alpha):
        assert visibility(CatParams(alpha=alpha), 1.0) == 1.0

    def test_alpha_two(self):
        assert visibility(CatParams(alpha=2.0), 0.9) == pytest.approx(0.44932896411722156, rel=1e-12)

    def test_alpha_six(self):
        assert visibility(CatParams(alpha=6.0), 0.9) == pytest.approx(math.exp(-7.2), rel=1e-12)

    @pytest.mark.parametrize("alpha,eta", [(1.0, 0.9), (2.0, 0.7), (4.0, 0.5)])
    def test_matches_scaled_overlap(self, alpha, eta):
        scaled = overlap(CatParams(alpha=alpha * math.sqrt(1.0 - eta)))
        assert visibility(CatParams(alpha=alpha), eta) == pytest.approx(scaled, rel=1e-13)


class TestDetectorResolution:

    def test_perfect(self):
        assert detector_resolution(1.0) == 0.0

    def test_half(self):
        assert detector_resolution(0.5) == pytest.approx(math.sqrt(0.5), rel=1e-14)

    def test_threshold_region(self):
        assert detector_resolution(0.66) == pytest.approx(math.sqrt((1 / 0.66 - 1) / 2), rel=1e-14)

    def test_monotone(self):
        values = [detector_resolution(eta) for eta in (0.2, 0.4, 0.6, 0.8, 1.0)]
        assert values == sorted(values, reverse=True)


# ═══════════════════════════════════════════════════════════════════
# 配置与错误
# ═══════════════════════════════════════════════════════════════════


class TestConfig:

    def test_missing_file_gives_defaults(self, tmp_path):
        cfg = load_config(str(tmp_path / "missing.toml"))
        assert cfg["Sampler"]["grid_points"] == 16384
        assert cfg["Bell"]["envelope_cutoff"] == 7.0

    def test_partial_override(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text("[Sampler]\ngrid_points = 1024\n", encoding="utf-8")
        cfg = load_config(str(path))
        assert cfg["Sampler"]["grid_points"] == 1024
        assert cfg["Quadrature"]["epsabs"] == 1e-11


class TestSettingsFileError:

    def test_line_number(self):
        err = SettingsFileError(7, "坏字段")
        assert err.line_no == 7
        assert "7" in str(err)
        assert isinstance(err, ValueError)
