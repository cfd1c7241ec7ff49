"""Command-line interface.

Usage:
    margulis decompose --angle SPEC [--epsilon E] [--rmax R] [--format json|csv]
    margulis sample    --angle SPEC [--samples N] [--rmax R]
    margulis verify    --angle SPEC [--depth D]
    margulis distort   --map {h,f,fh} [--angle SPEC] [--samples N] [--seed S]

Exit codes: 0 success, 1 input error, 2 certification or oracle failure,
3 precision budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cf_engine import (DEFAULT_DEPTH, GUARD_MARGIN, closest_returns, denominators,
                        parse_angle, verify_denominator_recursion, verify_growth_bounds,
                        verify_norm_recursion)
from .errors import AngleSpecError, DecompositionInconsistency, PrecisionBudgetError
from .hyperbolic import (SamplerConfig, certify_bilipschitz, certify_composite,
                         certify_quasi_isometry)
from .region import RegionParams, decompose, envelope_values

EXIT_OK, EXIT_INPUT, EXIT_CERTIFICATION, EXIT_PRECISION = 0, 1, 2, 3
ANGLE_HELP = ('coefficients "1,2,3" (repeated), periodic "pre:[];per:[1]", '
              'rational "rat:1/3", or a decimal "0.6180339887498949"')


@dataclass
class RunConfig:
    angle_spec: str | None = None
    epsilon: float = 0.1
    depth: int = DEFAULT_DEPTH
    guard_depth: int | None = None
    r_max: float = 1e6
    samples: int = 1000
    seed: int = 42
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("--epsilon must be positive")
        if self.depth < 2:
            raise ValueError("--depth must be at least 2")
        if self.samples < 1:
            raise ValueError("--samples must be at least 1")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError("--rmax must be positive")
        if self.output_format not in ("json", "csv"):
            raise ValueError("--format must be json or csv")
        if self.guard_depth is None:
            self.guard_depth = self.depth + GUARD_MARGIN

    def angle(self):
        if self.angle_spec is None:
            raise AngleSpecError("--angle is required")
        return parse_angle(self.angle_spec, depth=self.depth, guard_depth=self.guard_depth)

    def params(self) -> RegionParams:
        return RegionParams(self.angle(), self.epsilon)


# -- serialization ----------------------------------------------------------------


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if not any(isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _number(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_number(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(text: str, config: RunConfig) -> None:
    if config.output_path:
        Path(config.output_path).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _header(config: RunConfig, params: RegionParams | None) -> dict:
    doc = {"version": __version__, "epsilon": config.epsilon}
    if params is not None:
        doc["angle"] = params.angle.describe()
        doc["E"] = params.E
    return doc


# -- commands -------------------------------------------------------------------


def cmd_decompose(config: RunConfig) -> int:
    params = config.params()
    d = decompose(params, config.r_max, samples=config.samples)
    if config.output_format == "csv":
        _emit(to_csv(["index", "r_lo", "r_hi"], [[k, lo, hi] for k, lo, hi in d.pieces]), config)
    else:
        doc = _header(config, params) | {
            "command": "decompose", "r_max": d.r_max,
            "pieces": [{"index": k, "r_lo": lo, "r_hi": hi} for k, lo, hi in d.pieces],
            "validation": d.validation}
        _emit(to_json(doc), config)
    return EXIT_OK


def cmd_sample(config: RunConfig) -> int:
    params = config.params()
    radii = np.geomspace(min(1e-3, config.r_max), config.r_max, config.samples)
    b, ks = envelope_values(params, radii)
    ratio = b / np.sqrt(radii)
    rows = [[float(r), float(v), int(k), float(q)] for r, v, k, q in zip(radii, b, ks, ratio)]
    if config.output_format == "csv":
        _emit(to_csv(["r", "b", "k", "ratio"], rows), config)
    else:
        doc = _header(config, params) | {
            "command": "sample", "r_max": config.r_max,
            "ratio_inf": float(ratio.min()), "ratio_sup": float(ratio.max()),
            "rows": [dict(zip(("r", "b", "k", "ratio"), row)) for row in rows]}
        _emit(to_json(doc), config)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    params = config.params()
    angle = params.angle
    if angle.is_rational:
        raise AngleSpecError("verify needs an irrational angle")
    checks = []
    checks.append({"name": "denominator_recursion", "passed": verify_denominator_recursion(angle)})
    checks.append({"name": "growth_bounds", "bound_D": angle.bound_D,
                   "passed": verify_growth_bounds(angle)})
    norms = verify_norm_recursion(angle, angle.depth - 2)
    checks.append({"name": "norm_recursion_and_bounds", "passed": norms.passed,
                   "max_residual": norms.max_residual,
                   "max_relative_residual": norms.max_relative_residual})
    K = min(angle.q(angle.depth), 10**4)
    returns = closest_returns(angle, K)
    expected = sorted({q for q in denominators(angle) if q <= K})
    checks.append({"name": "closest_returns", "K": K, "passed": returns == expected,
                   "returns": returns})
    try:
        d = decompose(params, config.r_max, samples=config.samples)
        checks.append({"name": "region_oracle", "passed": True, **d.validation})
    except DecompositionInconsistency as exc:
        checks.append({"name": "region_oracle", "passed": False, "message": str(exc)})
    passed = all(c["passed"] for c in checks)
    doc = _header(config, params) | {"command": "verify", "bound_D": angle.bound_D,
                                     "passed": passed, "checks": checks}
    _emit(to_json(doc), config)
    return EXIT_OK if passed else EXIT_CERTIFICATION


def cmd_distort(config: RunConfig, map_choice: str) -> int:
    sampler = SamplerConfig(sample_count=config.samples, seed=config.seed, r_max=config.r_max)
    params = None
    if map_choice == "h":
        report = certify_bilipschitz(sampler)
    else:
        params = config.params()
        if params.angle.is_rational:
            raise AngleSpecError(f"map {map_choice} needs an irrational angle")
        if map_choice == "f":
            report = certify_quasi_isometry(params, sampler)
        else:
            report = certify_composite(params, sampler, decompose(params, config.r_max))
    doc = _header(config, params) | {"command": "distort"} | report.to_dict()
    if config.output_format == "csv":
        keys = ["map", "sample_count", "seed", "min_ratio", "max_ratio",
                "max_additive_defect", "constant_C", "passed"]
        row = [doc[k] for k in keys]
        _emit(to_csv(keys, [[str(v).lower() if isinstance(v, bool) else v for v in row]]),
              config)
    else:
        _emit(to_json(doc), config)
    return EXIT_OK if report.passed else EXIT_CERTIFICATION


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--angle", help=ANGLE_HELP)
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    common.add_argument("--guard-depth", type=int, default=None,
                        help="surrogate depth floor (default depth + 10)")
    common.add_argument("--rmax", type=float, default=1e6)
    common.add_argument("--samples", type=int, default=1000)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="margulis", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common], help="piece structure of b(r)")
    sub.add_parser("sample", parents=[common], help="boundary profile on a geometric grid")
    sub.add_parser("verify", parents=[common], help="continued-fraction and oracle checks")
    distort = sub.add_parser("distort", parents=[common], help="sampled distortion certificates")
    distort.add_argument("--map", choices=["h", "f", "fh"], default="h")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        config = RunConfig(args.angle, args.epsilon, args.depth, args.guard_depth, args.rmax,
                           args.samples, args.seed, args.format, args.out)
        if args.command == "decompose":
            return cmd_decompose(config)
        if args.command == "sample":
            return cmd_sample(config)
        if args.command == "verify":
            return cmd_verify(config)
        return cmd_distort(config, args.map)
    except PrecisionBudgetError as exc:
        print(to_json({"error": "precision_budget", "message": str(exc)}), file=sys.stderr)
        return EXIT_PRECISION
    except DecompositionInconsistency as exc:
        print(to_json({"error": "oracle_mismatch", "message": str(exc)}), file=sys.stderr)
        return EXIT_CERTIFICATION
    except (AngleSpecError, ValueError) as exc:
        print(to_json({"error": "input", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
