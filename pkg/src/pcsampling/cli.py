"""Command-line front end: ``pcsampling {sample,reconstruct,evaluate,bench,diagnose}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure (including failed diagnostic assertions). On failure a JSON object
``{"error": ..., "message": ..., "exit_code": ...}`` is printed to stderr and,
when an output directory is known, written to ``error.json`` there.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .block import rabs_sample
from .diag import write_p_rule_csv
from .graph import build_knn_graph
from .metrics import format_db, psnr, psnr_rgb, psnr_y
from .pc_io import PLYError, PointCloud, read_ply, rgb_to_yuv, write_ply, yuv_to_rgb
from .recon import CHANNELS, ConvergenceError, reconstruct_colors
from .sampler import (
    UNIFORM_RATES,
    SamplingBudget,
    load_sampling_set,
    rags_sample,
    random_sample,
    resolve_p,
    save_sampling_set,
    uniform_sample,
)
from .suites import SUITES, run_suite
from .synthetic import SHAPES, synthetic_cloud

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
METHODS = ("rags", "rabs", "uniform", "random")
BENCH_COLUMNS = ["preset", "method", "alpha", "p", "samples", "n", "psnr_y", "psnr_rgb", "prep_s", "select_s"]


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    """Parameters of one run; stored verbatim in every output sidecar."""

    input: str | None = None
    method: str = "rags"
    alpha: float = 0.1
    p_rule: str = "uni"
    k: int = 5
    sigma: str | float = "auto"
    block_size: int = 64
    seed: int = 0
    output: str = "."
    channel: str = "all"

    def validate(self) -> "RunConfig":
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        try:
            self.alpha = float(self.alpha)
        except (TypeError, ValueError):
            raise ConfigError(f"alpha must be a number, got {self.alpha!r}") from None
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.method == "uniform" and not any(math.isclose(self.alpha, r) for r in UNIFORM_RATES):
            raise ConfigError(f"unsupported uniform rate {self.alpha}; choose one of {UNIFORM_RATES}")
        if self.method == "random" and self.alpha >= 1:
            raise ConfigError("random sampling needs alpha < 1")
        try:
            resolve_p(self.p_rule, min(self.alpha, 0.999999))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if int(self.k) < 1:
            raise ConfigError("k must be at least 1")
        self.k = int(self.k)
        if self.sigma != "auto":
            try:
                self.sigma = float(self.sigma)
            except (TypeError, ValueError):
                raise ConfigError(f"sigma must be 'auto' or a positive number, got {self.sigma!r}") from None
            if not self.sigma > 0:
                raise ConfigError("sigma must be positive")
        bs = int(self.block_size)
        if bs < 1 or bs & (bs - 1):
            raise ConfigError(f"block size must be a power of two, got {self.block_size}")
        self.block_size = bs
        self.seed = int(self.seed)
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _config_from(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON config file, then explicitly given flags."""
    values = {}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        names = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(loaded) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values).validate()


def _meta(cfg: RunConfig | None = None, **extra) -> dict:
    meta = {"version": __version__}
    if cfg is not None:
        meta["config"] = cfg.to_dict()
    meta.update(extra)
    return meta


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_cloud(path) -> PointCloud:
    if path is None:
        raise ConfigError("an input point cloud is required")
    try:
        pc = read_ply(path)
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    if pc.colors is None:
        raise DataError("input point cloud has no colors")
    return pc


def _graph(pc, cfg: RunConfig):
    if cfg.k >= pc.n:
        raise DataError(f"k={cfg.k} needs more than {pc.n} points")
    return build_knn_graph(pc, cfg.k, cfg.sigma)


def _sample(pc, g, cfg: RunConfig):
    if cfg.method == "uniform":
        return uniform_sample(pc, cfg.alpha)
    if cfg.method == "random":
        return random_sample(pc.n, cfg.alpha, cfg.seed)
    budget = SamplingBudget(cfg.alpha, cfg.p_rule)
    if cfg.method == "rags":
        return rags_sample(g, budget)
    if cfg.block_size > 1 << pc.depth:
        raise ConfigError(f"block size {cfg.block_size} exceeds the {1 << pc.depth}^3 voxel volume of the input")
    return rabs_sample(pc, g, budget, cfg.block_size)


def cmd_sample(args) -> int:
    cfg = _config_from(args)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    pc = _load_cloud(cfg.input)
    g = _graph(pc, cfg)
    result = _sample(pc, g, cfg)
    path = out / "indices.txt"
    save_sampling_set(result, path, _meta(cfg, n=pc.n))
    print(json.dumps({"indices": str(path), "count": len(result), "p": result.p, "timings": result.timings}))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _config_from(args)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    pc = _load_cloud(cfg.input)
    try:
        idx = load_sampling_set(args.indices)
    except FileNotFoundError:
        raise DataError(f"no such file: {args.indices}") from None
    if idx.size and idx.max() >= pc.n:
        raise DataError(f"index {int(idx.max())} out of range for {pc.n} points")
    g = _graph(pc, cfg)
    try:
        cloud, _, report = reconstruct_colors(pc, g, idx, cfg.channel)
    except np.linalg.LinAlgError as exc:
        raise DataError(str(exc)) from None
    path = out / "reconstructed.ply"
    write_ply(cloud, path)
    _write_json(path.with_name(path.name + ".json"), _meta(
        cfg, indices=str(args.indices), samples=int(len(idx)), solver=report.solver,
        iterations=report.iterations, residual=report.residual,
    ))
    print(json.dumps({"output": str(path), "solver": report.solver, "samples": int(len(idx))}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    a, b = read_ply(args.original), read_ply(args.reconstructed)
    if a.n != b.n:
        raise DataError(f"point count mismatch: {a.n} vs {b.n}")
    if a.colors is None or b.colors is None:
        raise DataError("both clouds need colors")
    report = _meta(n=a.n, psnr_y=format_db(psnr_y(a, b)), psnr_rgb=format_db(psnr_rgb(a, b)))
    if not np.array_equal(a.positions, b.positions):
        warnings.warn("point positions differ; comparing attributes in file order")
    text = json.dumps(report, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def _bench_rows(pc, g, cfg: RunConfig, methods, alphas, preset: str):
    yuv_true = np.column_stack(rgb_to_yuv(pc))
    rows = []
    for alpha in alphas:
        for method in methods:
            run = dataclasses.replace(cfg, method=method, alpha=alpha)
            try:
                run.validate()
            except ConfigError as exc:
                print(f"skipping {method} at alpha={alpha}: {exc}", file=sys.stderr)
                continue
            result = _sample(pc, g, run)
            if preset == "chroma":
                # luma stays complete; only the two chroma channels are subsampled
                yuv = yuv_true.copy()
                for c in "UV":
                    _, rec, _ = reconstruct_colors(pc, g, result.indices, c)
                    yuv[:, "YUV".index(c)] = rec[:, "YUV".index(c)]
                rgb = yuv_to_rgb(yuv[:, 0], yuv[:, 1], yuv[:, 2])
                rgb[result.indices] = pc.colors[result.indices]
                py, prgb = math.inf, psnr_rgb(pc.colors, rgb)
            else:
                cloud, yuv, _ = reconstruct_colors(pc, g, result.indices, "all")
                py, prgb = psnr(yuv_true[:, 0], yuv[:, 0]), psnr_rgb(pc, cloud)
            rows.append({
                "preset": preset,
                "method": method,
                "alpha": alpha,
                "p": "" if result.p is None else result.p,
                "samples": len(result),
                "n": pc.n,
                "psnr_y": format_db(py),
                "psnr_rgb": format_db(prgb),
                "prep_s": round(result.timings["preparation"], 6),
                "select_s": round(result.timings["selection"], 6),
            })
    return rows


def cmd_bench(args) -> int:
    cfg = _config_from(args)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.input:
        pc = _load_cloud(cfg.input)
    else:
        pc = synthetic_cloud(args.shape, args.points, seed=cfg.seed)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    try:
        alphas = [float(a) for a in args.alphas.split(",")]
    except ValueError:
        raise ConfigError(f"bad alpha list {args.alphas!r}") from None
    g = _graph(pc, cfg)
    rows = _bench_rows(pc, g, cfg, methods, alphas, args.preset)
    path = out / "bench.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    _write_json(path.with_name(path.name + ".json"), _meta(
        cfg, methods=methods, alphas=alphas, preset=args.preset,
        source=cfg.input or f"synthetic:{args.shape}:{args.points}",
    ))
    print(path)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose one of {SUITES}")
    report = run_suite(args.suite, seed=args.seed, trials=args.trials)
    report["version"] = __version__
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"diagnose_{args.suite}.json").write_text(text + "\n")
        if args.suite == "prules":
            write_p_rule_csv(out / "prules.csv")
    print(text)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def _add_run_options(p: argparse.ArgumentParser, with_input: bool = True) -> None:
    if with_input:
        p.add_argument("input", nargs="?", default=None, help="colored PLY point cloud")
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--alpha", type=float, default=None, help="sampling rate in (0, 1] (default 0.1)")
    p.add_argument("--p-rule", dest="p_rule", default=None, help="uni, rand or fixed:K (default uni)")
    p.add_argument("-k", "--k", type=int, default=None, help="nearest neighbors per point (default 5)")
    p.add_argument("--sigma", default=None, help="kernel width, or 'auto' (default)")
    p.add_argument("--block-size", dest="block_size", type=int, default=None, help="octree leaf edge (default 64)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="output directory (default .)")
    p.add_argument("--channel", choices=CHANNELS, default=None, help="YUV channel to reconstruct")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcsampling", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="select a sampling set",
                       description="Writes OUTPUT/indices.txt (0-based, one per line) and a JSON sidecar.")
    _add_run_options(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="interpolate colors from a sampling set",
                       description="Writes OUTPUT/reconstructed.ply; sampled points keep their colors.")
    _add_run_options(p)
    p.add_argument("--indices", required=True, help="index file from 'sample'")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="PSNR of a reconstruction")
    p.add_argument("original")
    p.add_argument("reconstructed")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "bench", help="sweep methods and rates",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=(
            "Writes OUTPUT/bench.csv with columns\n  " + ",".join(BENCH_COLUMNS) + "\n"
            "psnr_y is luminance PSNR in dB, psnr_rgb the joint RGB PSNR, prep_s and\n"
            "select_s the preparation and selection seconds. The 'chroma' preset keeps\n"
            "Y complete and samples only U and V. Without an input a synthetic surface\n"
            "is generated."
        ),
    )
    _add_run_options(p)
    p.add_argument("--methods", default="rags,rabs,random,uniform")
    p.add_argument("--alphas", default="0.125,0.25,0.5")
    p.add_argument("--preset", choices=("default", "chroma"), default="default")
    p.add_argument("--shape", choices=SHAPES, default="plane")
    p.add_argument("--points", type=int, default=10_000)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagnose", help="run a numerical check suite")
    p.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_diagnose)
    return parser


def _fail(code: int, exc: BaseException, output) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(err), file=sys.stderr)
    if output:
        try:
            out = Path(output)
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "error.json", err)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    output = getattr(args, "output", None)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, output)
    except (DataError, PLYError, OSError) as exc:
        return _fail(EXIT_DATA, exc, output)
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc, output)
    except ValueError as exc:
        return _fail(EXIT_DATA, exc, output)


if __name__ == "__main__":
    sys.exit(main())
