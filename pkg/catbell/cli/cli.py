#!/usr/bin/env python3
import os
import sys
import csv
import json
import argparse
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Iterable, Literal, Optional, Sequence

# 将项目根目录添加到路径
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(os.path.dirname(current_dir))
if project_root not in sys.path:
    sys.path.append(project_root)

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from catbell.common.utils import (
    CatBellError,
    CatParams,
    DetectorModel,
    SettingsFileError,
    SpinDirection,
    SuperpositionSign,
    check_eta,
    config,
)
from catbell.experiment.experiment import (
    BELL_SIGNS,
    BellExperimentResult,
    MeasurementSetting,
    run_bell_experiment,
)
from catbell.oracle.fock_oracle import oracle_check
from catbell.physics import bell
from catbell.physics.model import detector_resolution, fringe_period, visibility
from catbell.physics.quadrature import (
    HomodynePhase,
    dist_conditional_spin_up,
    dist_superposition,
    integration_bounds,
    superposition_density,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


@dataclass
class CLIConfig:
    """命令行运行配置"""
    workers: int = 1
    progress: bool = True


class SweepSpec(BaseModel):
    """S_max 扫描: 变量 α 或 η, 其余参数固定"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    variable: Literal["alpha", "eta"]
    start: float = Field(..., alias="from")
    stop: float = Field(..., alias="to")
    steps: int = Field(..., ge=2)
    alpha: Optional[float] = Field(None, gt=0)
    eta: Optional[float] = Field(None, gt=0, le=1)
    xi: float = Field(1.0, ge=0, le=1)

    @model_validator(mode="after")
    def _check_range(self) -> "SweepSpec":
        if not self.start < self.stop:
            raise ValueError(f"扫描区间需要 from < to, 实际为 [{self.start}, {self.stop}]")
        if self.variable == "alpha":
            if self.start <= 0:
                raise ValueError("α 扫描区间必须为正")
            if self.eta is None:
                raise ValueError("α 扫描需要固定 eta")
        else:
            check_eta(self.start, "from")
            check_eta(self.stop, "to")
            if self.alpha is None:
                raise ValueError("η 扫描需要固定 alpha")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    def point(self, value: float) -> tuple[CatParams, DetectorModel]:
        if self.variable == "alpha":
            return CatParams(alpha=value), DetectorModel.single(self.eta, self.xi)
        return CatParams(alpha=self.alpha), DetectorModel.single(value, self.xi)


def log(tag: str, message: str) -> None:
    print(f"[{tag}] {message}", file=sys.stderr)


def fmt(value: float) -> str:
    """17 位有效数字, 保证浮点数可无损读回"""
    return format(float(value), ".17g")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else fmt(v) for v in row])
    return path


def dump_json(report: dict, out: Optional[str]) -> str:
    text = json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", newline="\n", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return text


def ordered_map(func, items: Sequence, cli_config: CLIConfig, desc: str) -> list:
    """并行计算, 结果按输入顺序收集"""
    with ThreadPoolExecutor(max_workers=max(1, cli_config.workers)) as executor:
        return list(tqdm(executor.map(func, items), total=len(items), desc=f"[{desc}]",
                         disable=not cli_config.progress))


def _direction(values: Optional[Sequence[float]]) -> SpinDirection:
    if values is None:
        raise ValueError("cond-up 需要自旋方向 --spin ax ay az")
    return SpinDirection.from_vector(*values)


def cmd_dist(alpha: float, eta: float, theta: HomodynePhase, state: str, out: str,
             spin: Optional[Sequence[float]] = None, lo: Optional[float] = None,
             hi: Optional[float] = None, points: int = 2001) -> str:
    """导出 Ψ± 或自旋条件分布的 CSV (x,p)"""
    p = CatParams(alpha=alpha)
    eta = check_eta(eta)
    if points < 2:
        raise ValueError("网格至少需要 2 个点")
    default_lo, default_hi = integration_bounds(p, eta, theta)
    lo = default_lo if lo is None else lo
    hi = default_hi if hi is None else hi
    if not lo < hi:
        raise ValueError(f"网格区间无效: [{lo}, {hi}]")
    x = np.linspace(lo, hi, points)
    if state == "cond-up":
        if not theta.is_momentum:
            raise ValueError("自旋条件分布只在 θ=π/2 定义")
        values = dist_conditional_spin_up(x, _direction(spin), p, eta)
    else:
        s = SuperpositionSign.parse(state)
        if theta.is_momentum:
            values = dist_superposition(s, x, p, eta)
        else:
            values = superposition_density(s, x, p, eta, theta)
    write_csv(out, ("x", "p"), zip(x, values))
    log("分布", f"{state} θ={theta.theta:.6g} 共 {points} 点 -> {out}")
    return out


def cmd_bell(alpha: float, eta0: float, eta_pi2: Optional[float], xi: float) -> dict:
    """解析计算 Bell 组合的 JSON 报告"""
    p = CatParams(alpha=alpha)
    d = DetectorModel(eta0=eta0, eta_pi2=eta_pi2, xi=xi)
    result = bell.s_max(p, d)
    c = result.elements.cpi2_offdiag
    return {
        "parameters": {"alpha": p.alpha, "eta0": d.eta0, "eta_pi2": d.eta_pi2, "xi": d.xi},
        "c0_diag": result.elements.c0_diag,
        "cpi2_offdiag": {"re": c.real, "im": c.imag},
        "cpi2_diag": result.elements.cpi2_diag,
        "s_max": result.s_max,
        "s_max_approx": bell.s_max_approx(p, d),
        "a_opt": [result.a_opt.ax, result.a_opt.ay, result.a_opt.az],
        "a_prime_opt": [result.a_prime_opt.ax, result.a_prime_opt.ay, result.a_prime_opt.az],
        "violation": result.s_max > bell.LOCAL_BOUND,
        "visibility": visibility(p, d.eta_pi2),
        "fringe_period": fringe_period(p, d.eta_pi2),
        "detector_resolution": {"eta0": detector_resolution(d.eta0),
                                "eta_pi2": detector_resolution(d.eta_pi2)},
        "local_bound": bell.LOCAL_BOUND,
        "asymptotic_s_max": bell.ASYMPTOTIC_S_MAX,
    }


def cmd_sweep(spec: SweepSpec, out: str, cli_config: Optional[CLIConfig] = None) -> str:
    """S_max 随 α 或 η 的扫描"""
    cli_config = cli_config or CLIConfig(progress=False)

    def evaluate(value: float) -> tuple[float, float, float]:
        p, d = spec.point(float(value))
        return float(value), bell.s_max_value(p, d), bell.s_max_approx(p, d)

    rows = ordered_map(evaluate, list(spec.values()), cli_config, "参数扫描")
    write_csv(out, (spec.variable, "s_max", "s_max_approx"), rows)
    log("参数扫描", f"{spec.variable} ∈ [{spec.start}, {spec.stop}] 共 {spec.steps} 点 -> {out}")
    return out


def cmd_threshold(alpha_from: float, alpha_to: float, steps: int, xi: float, out: str,
                  cli_config: Optional[CLIConfig] = None) -> str:
    """效率阈值随 α 的变化, 不违背处留空"""
    cli_config = cli_config or CLIConfig(progress=False)
    if not 0 < alpha_from < alpha_to or steps < 2:
        raise ValueError("需要 0 < alpha_from < alpha_to 且 steps ≥ 2")
    alphas = list(np.linspace(alpha_from, alpha_to, steps))
    thresholds = ordered_map(lambda a: bell.threshold_scan([float(a)], xi)[0], alphas, cli_config, "效率阈值")
    write_csv(out, ("alpha", "eta_threshold"), zip(alphas, thresholds))
    log("效率阈值", f"α ∈ [{alpha_from}, {alpha_to}] 共 {steps} 点 -> {out}")
    return out


def parse_settings_file(path: str) -> list[MeasurementSetting]:
    """读取测量设置文件: 每行 `ax ay az theta`, # 之后为注释"""
    settings = []
    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    for line_no, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        fields = content.split()
        if len(fields) != 4:
            raise SettingsFileError(line_no, f"需要 4 个字段 (ax ay az theta), 实际为 {len(fields)}")
        try:
            ax, ay, az = (float(v) for v in fields[:3])
            setting = MeasurementSetting(spin=SpinDirection.from_vector(ax, ay, az),
                                         phase=HomodynePhase.parse(fields[3]))
        except ValueError as e:
            raise SettingsFileError(line_no, str(e)) from e
        settings.append(setting)
    if len(settings) != len(BELL_SIGNS):
        raise SettingsFileError(len(lines), f"需要 4 个测量设置, 实际为 {len(settings)}")
    return settings


def _mc_report(result: BellExperimentResult, p: CatParams, d: DetectorModel) -> dict:
    rows = []
    for m, sign, estimate, analytic in zip(result.settings, result.signs, result.estimates, result.analytic):
        rows.append({
            "spin": [m.spin.ax, m.spin.ay, m.spin.az],
            "theta": m.phase.theta,
            "sign": sign,
            "mean": estimate.mean,
            "stderr": estimate.stderr,
            "shots": estimate.shots,
            "analytic": analytic,
        })
    return {
        "parameters": {"alpha": p.alpha, "eta0": d.eta0, "eta_pi2": d.eta_pi2, "xi": d.xi,
                       "shots_per_setting": result.shots_per_setting, "seed": result.seed},
        "settings": rows,
        "s": result.s,
        "stderr": result.stderr,
        "s_analytic": result.s_analytic,
        "z_score": result.z_score,
    }


def cmd_mc(alpha: float, eta0: float, eta_pi2: Optional[float], xi: float, shots: int, seed: int,
           settings_file: Optional[str] = None, cli_config: Optional[CLIConfig] = None) -> dict:
    """蒙特卡罗 Bell 实验的 JSON 报告"""
    cli_config = cli_config or CLIConfig(progress=False)
    p = CatParams(alpha=alpha)
    d = DetectorModel(eta0=eta0, eta_pi2=eta_pi2, xi=xi)
    settings = parse_settings_file(settings_file) if settings_file else None
    result = run_bell_experiment(p, d, shots, seed, settings=settings,
                                 workers=cli_config.workers, progress=cli_config.progress)
    log("蒙特卡罗", f"S = {result.s:.6f} ± {result.stderr:.6f} (解析值 {result.s_analytic:.6f})")
    return _mc_report(result, p, d)


def cmd_oracle_check(alpha: float, eta: float, tolerance: float) -> int:
    """Fock oracle 与解析结果对照, 全部通过返回 0"""
    p = CatParams(alpha=alpha)
    d = DetectorModel.single(eta)
    report = oracle_check(p, d, tolerance)
    for name, diff in report.discrepancies.items():
        log("oracle", f"{name}: {diff:.3e}")
    name, diff = report.worst
    if report.passed:
        log("oracle", f"通过, 最大偏差 {name} = {diff:.3e} ≤ {tolerance:.1e}")
        return EXIT_OK
    log("oracle", f"失败, 最大偏差 {name} = {diff:.3e} > {tolerance:.1e}")
    return EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catbell", description="猫态平衡零拍 Bell 不等式模拟")
    parser.add_argument("--workers", type=int, default=config["CLI"]["workers"],
                        help="并行线程数 (默认来自 config.toml)")
    parser.add_argument("--quiet", action="store_true", help="关闭进度条")
    sub = parser.add_subparsers(dest="command", required=True)

    dist = sub.add_parser("dist", help="导出正交分量分布 CSV")
    dist.add_argument("--alpha", type=float, required=True)
    dist.add_argument("--eta", type=float, default=1.0)
    dist.add_argument("--theta", type=str, default="pi/2", help="零拍相位, 如 0 或 pi/2")
    dist.add_argument("--state", choices=("plus", "minus", "cond-up"), required=True)
    dist.add_argument("--spin", type=float, nargs=3, metavar=("AX", "AY", "AZ"))
    dist.add_argument("--lo", type=float)
    dist.add_argument("--hi", type=float)
    dist.add_argument("--points", type=int, default=2001)
    dist.add_argument("--out", required=True)

    bell_cmd = sub.add_parser("bell", help="解析计算 S_max 的 JSON 报告")
    bell_cmd.add_argument("--alpha", type=float, required=True)
    bell_cmd.add_argument("--eta0", type=float, default=1.0)
    bell_cmd.add_argument("--eta-pi2", type=float, default=None, help="默认与 eta0 相同")
    bell_cmd.add_argument("--xi", type=float, default=1.0)
    bell_cmd.add_argument("--out")

    sweep = sub.add_parser("sweep", help="S_max 扫描 CSV")
    sweep.add_argument("--variable", choices=("alpha", "eta"), required=True)
    sweep.add_argument("--from", dest="start", type=float, required=True)
    sweep.add_argument("--to", dest="stop", type=float, required=True)
    sweep.add_argument("--steps", type=int, required=True)
    sweep.add_argument("--alpha", type=float)
    sweep.add_argument("--eta", type=float)
    sweep.add_argument("--xi", type=float, default=1.0)
    sweep.add_argument("--out", required=True)

    threshold = sub.add_parser("threshold", help="效率阈值随 α 变化的 CSV")
    threshold.add_argument("--from", dest="start", type=float, required=True)
    threshold.add_argument("--to", dest="stop", type=float, required=True)
    threshold.add_argument("--steps", type=int, required=True)
    threshold.add_argument("--xi", type=float, default=1.0)
    threshold.add_argument("--out", required=True)

    mc = sub.add_parser("mc", help="蒙特卡罗 Bell 实验 JSON 报告")
    mc.add_argument("--alpha", type=float, required=True)
    mc.add_argument("--eta0", type=float, default=1.0)
    mc.add_argument("--eta-pi2", type=float, default=None)
    mc.add_argument("--xi", type=float, default=1.0)
    mc.add_argument("--shots", type=int, required=True)
    mc.add_argument("--seed", type=int, required=True)
    mc.add_argument("--settings", help="测量设置文件, 每行 `ax ay az theta`")
    mc.add_argument("--out", required=True)

    oracle = sub.add_parser("oracle-check", help="Fock oracle 与解析结果对照")
    oracle.add_argument("--alpha", type=float, required=True)
    oracle.add_argument("--eta", type=float, default=1.0)
    oracle.add_argument("--tolerance", type=float, default=1e-6)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    cli_config = CLIConfig(
        workers=args.workers,
        progress=config["CLI"]["progress"] and not args.quiet,
    )

    try:
        if args.command == "dist":
            cmd_dist(args.alpha, args.eta, HomodynePhase.parse(args.theta), args.state, args.out,
                     spin=args.spin, lo=args.lo, hi=args.hi, points=args.points)
        elif args.command == "bell":
            dump_json(cmd_bell(args.alpha, args.eta0, args.eta_pi2, args.xi), args.out)
        elif args.command == "sweep":
            spec = SweepSpec(variable=args.variable, start=args.start, stop=args.stop, steps=args.steps,
                             alpha=args.alpha, eta=args.eta, xi=args.xi)
            cmd_sweep(spec, args.out, cli_config)
        elif args.command == "threshold":
            cmd_threshold(args.start, args.stop, args.steps, args.xi, args.out, cli_config)
        elif args.command == "mc":
            report = cmd_mc(args.alpha, args.eta0, args.eta_pi2, args.xi, args.shots, args.seed,
                            settings_file=args.settings, cli_config=cli_config)
            dump_json(report, args.out)
        elif args.command == "oracle-check":
            return cmd_oracle_check(args.alpha, args.eta, args.tolerance)
    except SettingsFileError as e:
        log("设置文件错误", str(e))
        return EXIT_USAGE
    except (CatBellError, ValueError) as e:
        log("参数错误", str(e))
        return EXIT_USAGE
    except OSError as e:
        log("文件错误", str(e))
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
