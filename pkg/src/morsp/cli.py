"""Command-line interface: ``morsp skeletonize | refine | metrics | gradcheck``.

Exit codes
----------
0 success, 1 gradient/oracle check failed, 2 invalid flags, 3 missing
input file, 4 unreadable image, 5 size mismatch, 6 solver diverged,
7 invalid config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import logit

from .imageio import ImageFormatError, read_gray, write_gray
from .metrics import evaluate
from .morph_core import StructuringElement, classic_skeleton, default_levels
from .numcheck import GradCheckReport, run_suite
from .smooth_morph import SmoothParams, smooth_skeleton
from .solver import SolverConfig, SolverDivergence, refine

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_FORMAT = 4
EXIT_SIZE = 5
EXIT_DIVERGED = 6
EXIT_CONFIG = 7

MASK_EPS = 1e-4
SMOOTH_LEVELS = 5

# config-file / manifest key -> SolverConfig field
CONFIG_KEYS = {
    "gamma": "gamma",
    "lambda": "lam",
    "alpha": "alpha",
    "eta": "eta",
    "iota": "iota",
    "kernel_size": "kernel_size",
    "sigma": "sigma",
    "levels": "levels",
    "max_iter": "max_iter",
    "tol": "tol",
    "element": "element",
}
INT_KEYS = {"kernel_size", "levels", "max_iter"}

log = logging.getLogger("morsp")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, message)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunManifest:
    """Audit record of one CLI run, serialized as ``key=value`` lines."""

    command: str
    config: Dict[str, str] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    duration_s: float = 0.0
    iterations: int = 0
    final_residual: float = 0.0

    def to_text(self) -> str:
        lines = [f"command={self.command}"]
        lines += [f"config.{k}={v}" for k, v in self.config.items()]
        lines += [f"input.{k}={v}" for k, v in self.inputs.items()]
        lines += [f"output.{k}={v}" for k, v in self.outputs.items()]
        lines += [
            f"duration_s={self.duration_s!r}",
            f"iterations={self.iterations}",
            f"final_residual={self.final_residual!r}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        m = cls(command="")
        for line in text.splitlines():
            if not line:
                continue
            key, _, value = line.partition("=")
            section, dot, name = key.partition(".")
            if dot and section in ("config", "input", "output"):
                {"config": m.config, "input": m.inputs, "output": m.outputs}[section][name] = value
            elif key == "command":
                m.command = value
            elif key == "duration_s":
                m.duration_s = float(value)
            elif key == "iterations":
                m.iterations = int(value)
            elif key == "final_residual":
                m.final_residual = float(value)
            else:
                raise ValueError(f"unknown manifest key {key!r}")
        return m


def _check_output_path(path: Optional[str]) -> None:
    if path is None:
        return
    if path.endswith(os.sep):
        raise CliError(EXIT_USAGE, f"output path {path!r} names a directory")
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise CliError(EXIT_USAGE, f"output directory {parent!r} does not exist")


def _read(path: str, role: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise CliError(EXIT_MISSING, f"{role} file not found: {path}")
    try:
        return read_gray(path)
    except ImageFormatError as exc:
        raise CliError(EXIT_FORMAT, f"cannot read {role} {path}: {exc}") from None


def _same_size(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise CliError(EXIT_SIZE, f"size mismatch between {what}: {a.shape} vs {b.shape}")


def _element(text: str) -> StructuringElement:
    try:
        return StructuringElement.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _write_manifest(path: Optional[str], manifest: RunManifest) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(manifest.to_text())


# --------------------------------------------------------------------------- skeletonize


def cmd_skeletonize(args) -> int:
    if args.alpha is not None and not args.alpha > 0:
        raise CliError(EXIT_USAGE, "--alpha must be positive")
    _check_output_path(args.output)
    t0 = time.perf_counter()
    u = _read(args.input, "input")
    if args.mode == "classic":
        levels = args.levels if args.levels is not None else default_levels(u, args.element)
        skel = classic_skeleton(u, args.element, levels)
        config = {"mode": "classic", "levels": str(levels), "element": str(args.element)}
    else:
        levels = args.levels if args.levels is not None else SMOOTH_LEVELS
        p = SmoothParams(args.alpha, levels, args.element)
        skel, _ = smooth_skeleton(u, p)
        config = {"mode": "smooth", "alpha": _fmt(p.alpha), "levels": str(levels), "element": str(args.element)}
    write_gray(args.output, skel)
    manifest = RunManifest(
        "skeletonize",
        config=config,
        inputs={"input": args.input},
        outputs={"output": args.output},
        duration_s=0.0 if args.no_timing else time.perf_counter() - t0,
    )
    _write_manifest(args.manifest or args.output + ".manifest", manifest)
    return EXIT_OK


# --------------------------------------------------------------------------- refine


def load_config_file(path: str) -> Dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    if not os.path.isfile(path):
        raise CliError(EXIT_MISSING, f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not value:
                raise CliError(EXIT_CONFIG, f"{path}:{n}: expected key=value")
            if key not in CONFIG_KEYS:
                raise CliError(EXIT_CONFIG, f"{path}:{n}: unknown config key {key!r}")
            out[key] = value
    return out


def _coerce(key: str, value: str):
    if key == "element":
        return StructuringElement.parse(value)
    if key in INT_KEYS:
        return int(value)
    return float(value)


def resolve_config(args) -> SolverConfig:
    """Defaults, then the config file, then explicit command-line flags."""
    raw: Dict[str, object] = {}
    if args.config:
        for key, value in load_config_file(args.config).items():
            try:
                raw[CONFIG_KEYS[key]] = _coerce(key, value)
            except ValueError as exc:
                raise CliError(EXIT_CONFIG, f"{args.config}: bad value for {key}: {exc}") from None
    for key, name in CONFIG_KEYS.items():
        flag = getattr(args, name, None)
        if flag is not None:
            raw[name] = flag
    try:
        return SolverConfig(**raw)
    except ValueError as exc:
        code = EXIT_USAGE if not args.config else EXIT_CONFIG
        raise CliError(code, f"invalid configuration: {exc}") from None


def config_manifest(cfg: SolverConfig) -> Dict[str, str]:
    return {key: _fmt(getattr(cfg, name)) for key, name in CONFIG_KEYS.items()}


def mask_to_feature(m: np.ndarray, mode: str = "logit") -> np.ndarray:
    """Rough mask to feature map: clamped logit (default) or the mask itself."""
    if mode == "raw":
        return np.asarray(m, dtype=np.float64)
    return logit(np.clip(m, MASK_EPS, 1.0 - MASK_EPS))


def write_trace(path: str, energies: List[float], residuals: List[float]) -> None:
    with open(path, "w") as fh:
        fh.write("iter,energy,residual\n")
        for i, (e, r) in enumerate(zip(energies, residuals), 1):
            fh.write(f"{i},{e!r},{r!r}\n")


def cmd_refine(args) -> int:
    cfg = resolve_config(args)
    if not 0.0 <= args.threshold <= 1.0:
        raise CliError(EXIT_USAGE, "--threshold must lie in [0, 1]")
    for path in (args.output, args.binary_output, args.trace, args.manifest):
        _check_output_path(path)

    t0 = time.perf_counter()
    mask = _read(args.input, "rough mask")
    if args.skeleton_prior:
        prior = _read(args.skeleton_prior, "skeleton prior")
    else:
        prior = _read(args.prior_mask, "prior mask")
    _same_size(mask, prior, "rough mask and prior")

    o = mask_to_feature(mask, args.feature)
    try:
        u, state = refine(o, prior, cfg, prior_is_skeleton=bool(args.skeleton_prior))
    except SolverDivergence as exc:
        raise CliError(EXIT_DIVERGED, str(exc)) from None

    outputs = {"output": args.output}
    write_gray(args.output, u)
    if args.binary_output:
        write_gray(args.binary_output, (u > args.threshold).astype(np.float64))
        outputs["binary_output"] = args.binary_output
    if args.trace:
        write_trace(args.trace, state.energy_trace, state.residual_trace)
        outputs["trace"] = args.trace

    inputs = {"input": args.input}
    if args.skeleton_prior:
        inputs["skeleton_prior"] = args.skeleton_prior
    else:
        inputs["prior_mask"] = args.prior_mask
    config = config_manifest(cfg)
    config["feature"] = args.feature
    config["threshold"] = _fmt(args.threshold)
    manifest = RunManifest(
        "refine",
        config=config,
        inputs=inputs,
        outputs=outputs,
        duration_s=0.0 if args.no_timing else time.perf_counter() - t0,
        iterations=state.iter,
        final_residual=state.residual_trace[-1] if state.residual_trace else 0.0,
    )
    _write_manifest(args.manifest or args.output + ".manifest", manifest)
    log.info("refine: %d iterations, final residual %.3e", state.iter, manifest.final_residual)
    return EXIT_OK


# --------------------------------------------------------------------------- metrics


def cmd_metrics(args) -> int:
    if not 0.0 <= args.threshold <= 1.0:
        raise CliError(EXIT_USAGE, "--threshold must lie in [0, 1]")
    _check_output_path(args.manifest)
    t0 = time.perf_counter()
    pred = _read(args.pred, "prediction")
    gt = _read(args.gt, "ground truth")
    _same_size(pred, gt, "prediction and ground truth")
    report = evaluate(pred, gt, args.threshold, args.element, args.levels)
    print(report.format())
    _write_manifest(
        args.manifest,
        RunManifest(
            "metrics",
            config={"threshold": _fmt(args.threshold), "element": str(args.element), "levels": str(args.levels)},
            inputs={"pred": args.pred, "gt": args.gt},
            duration_s=0.0 if args.no_timing else time.perf_counter() - t0,
        ),
    )
    return EXIT_OK


# --------------------------------------------------------------------------- gradcheck


def cmd_gradcheck(args) -> int:
    if not args.alpha > 0:
        raise CliError(EXIT_USAGE, "--alpha must be positive")
    _check_output_path(args.manifest)
    t0 = time.perf_counter()
    ok, reports = run_suite(seed=args.seed, alpha=args.alpha, n_images=args.images, size=args.size, corrupt=args.corrupt)
    for name, value in reports.items():
        if isinstance(value, GradCheckReport):
            print(f"[{name}]")
            print(value.format())
        else:
            print(f"{name}={value:.3e}")
    print(f"status={'pass' if ok else 'fail'}")
    _write_manifest(
        args.manifest,
        RunManifest(
            "gradcheck",
            config={"seed": str(args.seed), "alpha": _fmt(args.alpha), "images": str(args.images), "size": str(args.size)},
            duration_s=0.0 if args.no_timing else time.perf_counter() - t0,
        ),
    )
    if not ok:
        worst = max(
            (v for v in reports.values() if isinstance(v, GradCheckReport)), key=lambda r: r.max_rel_error
        )
        print(
            f"gradcheck failed: worst relative error {worst.max_rel_error:.3e} at pixel "
            f"({worst.worst_pixel[0]}, {worst.worst_pixel[1]})",
            file=sys.stderr,
        )
        return EXIT_CHECK_FAILED
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="morsp", description="Smooth morphological skeletons and skeleton-prior mask refinement.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--manifest", help="where to write the run manifest")
        p.add_argument("--no-timing", action="store_true", help="record duration_s=0.0 for reproducible manifests")

    p = sub.add_parser("skeletonize", help="classic or smooth morphological skeleton")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("classic", "smooth"), default="smooth")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--levels", type=_nonneg_int)
    p.add_argument("--element", type=_element, default=_element("square:1"))
    common(p)
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("refine", help="refine a rough mask toward a skeleton prior")
    p.add_argument("--input", required=True, help="rough mask")
    prior = p.add_mutually_exclusive_group(required=True)
    prior.add_argument("--skeleton-prior", help="ready skeleton image")
    prior.add_argument("--prior-mask", help="prior mask, skeletonized internally")
    p.add_argument("--output", required=True, help="soft segmentation output")
    p.add_argument("--binary-output")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--trace", help="CSV energy/residual trace")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--feature", choices=("logit", "raw"), default="logit", help="rough mask to feature conversion")
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--iota", type=float)
    p.add_argument("--kernel-size", dest="kernel_size", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--levels", type=_nonneg_int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--element", type=_element)
    common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("metrics", help="F1, IoU, precision, recall and cl-Dice")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--levels", type=_nonneg_int, default=5)
    p.add_argument("--element", type=_element, default=_element("square:1"))
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gradcheck", help="finite-difference and oracle checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--images", type=int, default=4)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    common(p)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except CliError as exc:
        print(f"morsp: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
