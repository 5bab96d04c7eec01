"""Command line: ``ruellekit run <config>``, ``suite <meta-config>``, ``describe <experiment>``.

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 error, 64 usage.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

OUT_ENV = "RUELLEKIT_OUT"
DEFAULT_OUT = "ruellekit-out"
EXIT = {"pass": 0, "fail": 1, "inconclusive": 2, "error": 3}
EX_USAGE = 64
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    pass


def _load_toml(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        bundled = resources.files("ruellekit") / "configs" / f"{path}.toml"
        if bundled.is_file():
            return tomllib.loads(bundled.read_text(encoding="utf-8"))
        raise UsageError(f"config not found: {path}")
    try:
        return tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _out_root(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.get("out"):
        return Path(cfg["out"])
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def execute(raw: dict, root: Path, seed: int | None = None) -> tuple[str, Path]:
    """Resolve, run and write one experiment; returns (status, output directory)."""
    from . import experiments, reports
    from .errors import RuelleKitError

    try:
        if seed is not None:
            raw = {**raw, "seed": seed}
        cfg = experiments.resolve(raw)
    except experiments.ConfigError as exc:
        raise UsageError(str(exc)) from exc
    exp = experiments.EXPERIMENTS[cfg["experiment"]]
    outdir = root / cfg.get("label", exp.name)
    chash = reports.config_hash({k: v for k, v in cfg.items() if k != "out"})
    stamp = {"config_hash": chash, "seed": cfg["seed"], "experiment": exp.name, "criterion": exp.criterion}
    try:
        outcome = exp.runner(cfg, cfg["seed"])
    except RuelleKitError as exc:
        reports.write_json(outdir / "report.json", {**stamp, "status": "error", "error": f"{type(exc).__name__}: {exc}"})
        print(f"{exp.name}: error: {exc}", file=sys.stderr)
        return "error", outdir
    status, checks = experiments.judge(outcome.metrics, cfg["criteria"])
    files = []
    for name, (header, rows) in sorted(outcome.tables.items()):
        reports.write_csv(outdir / name, header, rows)
        files.append(name)
    for name, doc in sorted(outcome.documents.items()):
        reports.write_json(outdir / name, {**stamp, **doc})
        files.append(name)
    report = {**stamp, "status": status, "metrics": outcome.metrics, "checks": checks, "artifacts": files, "config": cfg}
    reports.write_json(outdir / "report.json", report)
    return status, outdir


def _print_status(name: str, status: str, outdir: Path):
    print(f"{name}: {status} ({outdir})")


def cmd_run(args) -> int:
    raw = _load_toml(args.config)
    status, outdir = execute(raw, _out_root(args, raw), args.seed)
    _print_status(raw.get("label", raw.get("experiment")), status, outdir)
    return EXIT[status]


def cmd_suite(args) -> int:
    meta = _load_toml(args.meta_config)
    unknown = set(meta) - {"suite", "out", "run"}
    if unknown:
        raise UsageError(f"unknown key(s) in suite: {', '.join(sorted(unknown))}")
    runs = meta.get("run", [])
    if not runs:
        raise UsageError("suite has no [[run]] entries")
    root = _out_root(args, meta) / meta.get("suite", "suite")
    labels = [r.get("label", r.get("experiment")) for r in runs]
    if len(set(labels)) != len(labels):
        raise UsageError("suite runs need distinct labels")
    results = []
    for raw in runs:
        status, outdir = execute(raw, root, args.seed)
        _print_status(raw.get("label", raw.get("experiment")), status, outdir)
        results.append(status)
    for status in ("error", "fail", "inconclusive"):
        if status in results:
            return EXIT[status]
    return 0


def cmd_describe(args) -> int:
    from . import experiments

    exp = experiments.EXPERIMENTS.get(args.experiment)
    if exp is None:
        raise UsageError(f"unknown experiment {args.experiment!r}; choose from {', '.join(experiments.EXPERIMENTS)}")
    print(f"{exp.name} [{exp.criterion}]")
    print(f"  {exp.summary}")
    print("  metrics: " + ", ".join(exp.metrics))
    for name, cols in exp.tables.items():
        print(f"  {name}: " + ", ".join(cols))
    print("  default config:")
    for line in _toml_lines(exp.default_config()):
        print("    " + line)
    return 0


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{k} = {_toml_value(x)}" for k, x in v.items()) + " }"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def _toml_lines(cfg: dict) -> list[str]:
    lines = [f"{k} = {_toml_value(v)}" for k, v in cfg.items() if not isinstance(v, dict)]
    for k, v in cfg.items():
        if isinstance(v, dict) and v:
            lines.append(f"[{k}]")
            lines += [f"{kk} = {_toml_value(vv)}" for kk, vv in v.items()]
    return lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ruellekit", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, help="BLAS thread count")
    common.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run one experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("suite", parents=[common], help="run every [[run]] of a meta-config")
    p.add_argument("meta_config")
    p.set_defaults(func=cmd_suite)
    p = sub.add_parser("describe", help="print an experiment's metrics, outputs and default config")
    p.add_argument("experiment")
    p.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EX_USAGE if exc.code else 0
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EX_USAGE
        # only effective if numpy has not been imported yet
        for var in THREAD_VARS:
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
