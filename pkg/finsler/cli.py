"""
Command-line front end

    python -m finsler eval     --config data/klein.json --point 0,0,0,3,4,0
    python -m finsler tensor   --config data/klein_convolution.json --point ... --compare-block
    python -m finsler check    --config data/example11.json --seed 7 --samples 500
    python -m finsler classify --config data/minkowski_convolution.json --format machine

Exit codes: 0 success / pass, 1 property violation, 2 invalid input or domain error.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from finsler.config import Tolerances, get_settings, resolve_tolerances
from finsler.core.convolution import ConvolutionMetric, block_tensor
from finsler.core.errors import DomainError, FinslerError, InvalidParameter
from finsler.core.metric import FinslerMetric, Provenance, TangentSample, fundamental_tensor
from finsler.models.schemas import (
    BlockReport, CheckReport, ClassificationReport, EvalReport, RunConfig, TensorReport,
)
from finsler.services.check_service import CheckService
from finsler.services.classification_service import ClassificationService
from finsler.services.metric_builder import build_metric
from finsler.services.sample_runner import SampleRunner
from finsler.services.sampling_service import DomainSampler
from finsler.utils.general import load_config_file, parse_point, set_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2


def format_value(v: float) -> str:
    """15 significant digits, printed the way Python prints floats (4.0, 1.33333333333333)"""
    return repr(float(f"{v:.15g}"))


def _frame(matrix, rows: Sequence[str], cols: Sequence[str]) -> str:
    return pd.DataFrame(np.asarray(matrix, dtype=float), index=list(rows), columns=list(cols)).to_string(
        float_format=lambda v: f"{v:.10g}"
    )


def _labels(prefix: str, n: int, start: int = 1) -> List[str]:
    return [f"{prefix}{i}" for i in range(start, start + n)]


def _point_sample(config: RunConfig, metric: FinslerMetric) -> TangentSample:
    if config.point is None:
        raise InvalidParameter("this command needs --point (or 'point' in the config)")
    if len(config.point) != 2 * metric.dim:
        raise InvalidParameter(f"--point needs {2 * metric.dim} numbers (x then y), got {len(config.point)}")
    s = TangentSample.from_point(config.point, metric.split)
    metric.validate(s)
    return s


# ===== Commands =====

def cmd_eval(config: RunConfig, metric: FinslerMetric, tol: Tolerances) -> Tuple[str, int]:
    """F at the configured point, with dF/dy and dF/dx when asked"""
    s = _point_sample(config, metric)
    report = EvalReport(family=metric.family, x=s.x.tolist(), y=s.y.tolist(), F=metric.value(s))
    if config.gradient:
        res = metric.taylor(s, wrt="xy")
        report.gradient_x = res.gradient[:metric.dim].tolist()
        report.gradient_y = res.gradient[metric.dim:].tolist()
    if config.output_format == "machine":
        return report.model_dump_json(indent=2), EXIT_OK

    lines = [format_value(report.F)]
    if config.gradient:
        lines.append("dF/dy = [" + ", ".join(format_value(v) for v in report.gradient_y) + "]")
        lines.append("dF/dx = [" + ", ".join(format_value(v) for v in report.gradient_x) + "]")
    return "\n".join(lines), EXIT_OK


def cmd_tensor(config: RunConfig, metric: FinslerMetric, tol: Tolerances) -> Tuple[str, int]:
    """Fundamental tensor at the point; block dump and comparison for convolution metrics"""
    s = _point_sample(config, metric)
    t = fundamental_tensor(metric, s)
    report = TensorReport(
        family=metric.family,
        x=s.x.tolist(),
        y=s.y.tolist(),
        provenance=Provenance.AUTODIFF.value,
        g=t.g.entries.tolist(),
        min_eigenvalue=t.min_eigenvalue,
        strongly_convex=t.strongly_convex,
    )
    if config.compare_block:
        if not isinstance(metric, ConvolutionMetric):
            raise InvalidParameter("--compare-block needs a convolution metric")
        block = block_tensor(metric.spec, s)
        sym = block.symmetrized
        deviation = float(np.max(np.abs(sym - t.g.entries)))
        if deviation > tol.bridge:
            logger.warning(f"symmetrized block differs from the autodiff tensor by {deviation:.3e}")
        report.block = BlockReport(
            top_left=block.top_left.tolist(),
            top_right=block.top_right.tolist(),
            bottom_left=block.bottom_left.tolist(),
            bottom_right=block.bottom_right.tolist(),
            symmetrized=sym.tolist(),
            max_symmetrization_deviation=deviation,
        )
    if config.output_format == "machine":
        return report.model_dump_json(indent=2), EXIT_OK

    n = metric.dim
    lines = [
        f"{metric.describe()} at x={s.x.tolist()} y={s.y.tolist()}",
        f"g ({report.provenance}):",
        _frame(report.g, _labels("y", n), _labels("y", n)),
        f"min eigenvalue: {report.min_eigenvalue:.10g} ({'strongly convex' if report.strongly_convex else 'NOT strongly convex'})",
    ]
    if report.block is not None:
        n1 = metric.split
        b = report.block
        lines += [
            f"block ({Provenance.BLOCK.value}) top-left f2^2 g1:", _frame(b.top_left, _labels("y", n1), _labels("y", n1)),
            "top-right 2 f1 f2 df1 df2^T:", _frame(b.top_right, _labels("y", n1), _labels("y", n - n1, n1 + 1)),
            "bottom-left:", _frame(b.bottom_left, _labels("y", n - n1, n1 + 1), _labels("y", n1)),
            "bottom-right f1^2 g2:", _frame(b.bottom_right, _labels("y", n - n1, n1 + 1), _labels("y", n - n1, n1 + 1)),
            f"{Provenance.SYMMETRIZED.value} (B + B^T)/2:", _frame(b.symmetrized, _labels("y", n), _labels("y", n)),
            f"max |sym(B) - g|: {b.max_symmetrization_deviation:.3e}",
        ]
    return "\n".join(lines), EXIT_OK


def _runner() -> SampleRunner:
    settings = get_settings()
    return SampleRunner(max_workers=settings.workers, progress=settings.progress)


def cmd_check(config: RunConfig, metric: FinslerMetric, tol: Tolerances) -> Tuple[str, int]:
    """Property suite; exit 0 iff every property passes"""
    sampler = DomainSampler(config.sampling, metric)
    report: CheckReport = CheckService(tol, _runner()).run(metric, sampler)
    code = EXIT_OK if report.passed else EXIT_VIOLATION
    if config.output_format == "machine":
        return report.model_dump_json(indent=2), code

    rows = [
        {
            "property": p.name,
            "passed": p.passed,
            "tolerance": p.tolerance,
            "max_deviation": p.max_deviation,
            "checked": p.checked,
            "violations": p.violations,
        }
        for p in report.properties
    ]
    lines = [
        f"{metric.describe()}: {report.sample_count} samples (seed {report.seed}), {report.skipped} skipped",
        pd.DataFrame(rows).to_string(index=False),
    ]
    for p in report.properties:
        if not p.passed:
            for w in p.witnesses:
                lines.append(f"  {p.name} witness x={w.x} y={w.y}: {w.detail}")
    lines.append("PASS" if report.passed else "FAIL")
    return "\n".join(lines), code


def cmd_classify(config: RunConfig, metric: FinslerMetric, tol: Tolerances) -> Tuple[str, int]:
    """Classification report; informational, exit 0 when the run completes"""
    sampler = DomainSampler(config.sampling, metric)
    report: ClassificationReport = ClassificationService(tol, _runner()).classify(metric, sampler)
    if config.output_format == "machine":
        return report.model_dump_json(indent=2), EXIT_OK

    rows = [
        {
            "probe": v.name,
            "verdict": v.status.value,
            "deviation": v.deviation,
            "tolerance": v.tolerance,
            "samples": v.samples_used,
            "skipped": v.skipped,
            "reason": v.reason or "",
        }
        for v in report.verdicts.values()
    ]
    lines = [
        f"{metric.describe()}: {report.sample_count} samples (seed {report.seed})",
        pd.DataFrame(rows).to_string(index=False),
        f"classes: {', '.join(report.classes)}",
        f"convention: {report.convention}",
    ]
    if report.convolution is not None:
        c = report.convolution
        lines.append(f"cross term: {c.branch}; constant fields: {c.constant_factors or 'none'}; "
                     f"warped reduction: {'yes' if c.warped_reduction else 'no'}")
        if c.randers_ratio is not None:
            lines.append(f"randers ratio: {c.randers_ratio.status.value} (residual {c.randers_ratio.deviation})")
    return "\n".join(lines), EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "tensor": cmd_tensor,
    "check": cmd_check,
    "classify": cmd_classify,
}


# ===== Entry point =====

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsler", description="Finsler metric and convolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument('--config', required=True, help='run configuration (.json, .yaml)')
        p.add_argument('--point', type=str, help='x then y, comma separated')
        p.add_argument('--seed', type=int, help='sampling seed (PCG64)')
        p.add_argument('--samples', type=int, help='number of samples')
        p.add_argument('--tol', nargs='+', action='extend', default=[], metavar='NAME=VALUE', help='override a tolerance')
        p.add_argument('--format', dest='output_format', choices=['table', 'machine'], help='report format')
        if name == "eval":
            p.add_argument('--gradient', action='store_true', help='also print dF/dy and dF/dx')
        if name == "tensor":
            p.add_argument('--compare-block', action='store_true', help='dump the block matrix and compare')
    return parser


def load_run_config(opt: argparse.Namespace) -> RunConfig:
    """Config file merged with command-line overrides"""
    settings = get_settings()
    data = load_config_file(opt.config)
    sampling = data.get("sampling") or {}
    if not isinstance(sampling, dict):
        raise InvalidParameter(f"sampling must be a mapping, got {type(sampling).__name__}")
    sampling = dict(sampling)
    sampling.setdefault("count", settings.default_samples)
    sampling.setdefault("seed", settings.default_seed)
    if opt.seed is not None:
        sampling["seed"] = opt.seed
    if opt.samples is not None:
        sampling["count"] = opt.samples
    data["sampling"] = sampling
    if opt.point is not None:
        data["point"] = parse_point(opt.point)
    if opt.output_format is not None:
        data["format"] = opt.output_format
    if getattr(opt, "gradient", False):
        data["gradient"] = True
    if getattr(opt, "compare_block", False):
        data["compare_block"] = True
    return RunConfig.model_validate(data)


def _diagnostic(e: Exception) -> str:
    if isinstance(e, ValidationError):
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        return f"invalid config: {where}: {first['msg']}"
    text = str(e).splitlines()[0] if str(e) else type(e).__name__
    if isinstance(e, DomainError) and not text.startswith("domain violation"):
        return f"domain violation: {text}"
    return text


def main(argv: Optional[Sequence[str]] = None) -> int:
    opt = build_parser().parse_args(argv)
    settings = get_settings()
    set_logging(settings.log_level, settings.log_path)
    try:
        config = load_run_config(opt)
        tol = resolve_tolerances(config.tolerances, opt.tol)
        metric = build_metric(config.metric)
        text, code = COMMANDS[opt.command](config, metric, tol)
    except (FinslerError, ValueError, OSError, yaml.YAMLError) as e:
        # ValidationError and JSONDecodeError are ValueErrors
        print(f"error: {_diagnostic(e)}", file=sys.stderr)
        return EXIT_INVALID
    print(text)
    return code


if __name__ == '__main__':
    sys.exit(main())
