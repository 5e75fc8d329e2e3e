"""Command-line front end.

Subcommands::

    cgshrink gamma --p 2..10 --d 1 --a-star 1
    cgshrink fig1 --p-max 50
    cgshrink dominance configs/thm21_p5.toml --workers 4
    cgshrink replay OUTDIR/thm21_p5_manifest.json

Exit codes: 0 success or dominance PASS, 1 dominance FAIL or a gamma
disagreement, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .constants import CompactSetSpec, gamma_p_closed, gamma_p_quadrature, risk_at_zero
from .errors import DomainError
from .experiments import ConfigError, build_cases, load_config, run_cases, theta_to_text
from .reporting import RunManifest, csv_text, risk_chart_svg, sha256_file, write_text

OUTPUT_ENV = "CGSHRINK_OUTPUT_DIR"
DEFAULT_OUTPUT = "cgshrink-output"
GAMMA_TOL = 1e-8

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DOMINANCE_HEADER = (
    "case", "theta_index", "theta_norm", "theta", "delta", "std_error", "bound",
    "baseline_risk", "improved_risk", "sign_ok", "bound_ok", "verdict",
)


def p_range(text: str) -> tuple[int, int]:
    """Parse ``LO..HI`` (or a single integer) into an inclusive range."""
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    if lo < 2 or hi < lo:
        raise argparse.ArgumentTypeError(f"need 2 <= LO <= HI, got {text!r}")
    return lo, hi


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    value = _nonneg_float(text)
    if value == 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _p_max(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {value}")
    return value


def _output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _finish(out_dir: Path, command: str, config: dict, seed: int | None, files: list[Path]) -> Path:
    manifest = RunManifest(command, config, seed, __version__, {f.name: sha256_file(f) for f in files})
    stem = files[0].stem.rsplit("_report", 1)[0] if files else command
    return manifest.write(out_dir / f"{stem}_manifest.json")


# gamma


def gamma_rows(lo: int, hi: int, d: float, a_star: float) -> tuple[list[list[Any]], bool]:
    spec = CompactSetSpec(d=d, a_star=a_star)
    rows, ok = [], True
    for p in range(lo, hi + 1):
        quad = gamma_p_quadrature(p, spec).value
        if d == 0:
            rows.append([p, "NA", quad, "NA"])
            continue
        closed = gamma_p_closed(p, spec).value
        diff = abs(closed - quad)
        ok &= diff <= GAMMA_TOL
        rows.append([p, closed, quad, diff])
    return rows, ok


def cmd_gamma(args: argparse.Namespace) -> int:
    lo, hi = args.p
    rows, ok = gamma_rows(lo, hi, args.d, args.a_star)
    text = csv_text(("p", "gamma_closed", "gamma_quadrature", "abs_diff"), rows)
    if args.output is None:
        sys.stdout.write(text)
    else:
        out_dir = Path(args.output)
        path = write_text(out_dir / "gamma.csv", text)
        config = {"p": [lo, hi], "d": args.d, "a_star": args.a_star}
        _finish(out_dir, "gamma", config, None, [path])
        print(f"wrote {path}", file=sys.stderr)
    if not ok:
        print(f"closed form and quadrature differ by more than {GAMMA_TOL:g}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# fig1


def fig1_files(out_dir: Path, p_max: int) -> list[Path]:
    ps = list(range(2, p_max + 1))
    risks = [risk_at_zero(p) for p in ps]
    csv_path = write_text(out_dir / "fig1.csv", csv_text(("p", "r_p"), zip(ps, risks)))
    svg_path = write_text(out_dir / "fig1.svg", risk_chart_svg(ps, risks))
    return [csv_path, svg_path]


def _fig1_p_max(args: argparse.Namespace) -> int:
    if args.config is None:
        return args.p_max if args.p_max is not None else 50
    raw = load_config(args.config)
    table = raw.get("fig1")
    if not isinstance(table, dict) or set(table) - {"p_max"}:
        raise ConfigError("expected a [fig1] table with the single field p_max")
    value = table.get("p_max", 50)
    if isinstance(value, bool) or not isinstance(value, int) or value < 2:
        raise ConfigError(f"[fig1].p_max: expected an integer >= 2, got {value!r}")
    return value if args.p_max is None else args.p_max


def cmd_fig1(args: argparse.Namespace) -> int:
    try:
        p_max = _fig1_p_max(args)
    except ConfigError as exc:
        print(f"cgshrink fig1: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = _output_dir(args.output)
    files = fig1_files(out_dir, p_max)
    _finish(out_dir, "fig1", {"p_max": p_max}, None, files)
    for f in files:
        print(f"wrote {f}", file=sys.stderr)
    return EXIT_OK


# dominance


def dominance_tables(results) -> tuple[str, str, bool]:
    rows, cases, passed = [], [], True
    for res in results:
        case, report = res.case, res.report
        passed &= report.passed
        for i, row in enumerate(report.rows):
            rows.append([
                case.label, i, row.theta_norm, theta_to_text(row.theta), row.delta, row.std_error,
                row.bound, row.baseline_risk, row.improved_risk, row.sign_ok, row.bound_ok,
                "PASS" if row.passed else "FAIL",
            ])
        cases.append({
            "case": case.label,
            "gamma_p": case.gamma_p,
            "c": case.c,
            "bound": case.bound,
            "baseline": report.baseline_id,
            "improved": report.improved_id,
            "replicates": report.replicates,
            "verdict": report.verdict,
            "max_delta_plus_3se": max(r.delta + 3.0 * r.std_error for r in report.rows),
        })
    payload = {"verdict": "PASS" if passed else "FAIL", "cases": cases}
    return csv_text(DOMINANCE_HEADER, rows), json.dumps(payload, indent=2, sort_keys=True) + "\n", passed


def run_dominance(raw: dict, name: str, out_dir: Path, workers: int | None) -> tuple[bool, list[Path], dict]:
    """Run a parsed config and write ``<name>_report.csv`` and ``.json``."""
    cases, resolved = build_cases(raw, workers)
    csv_body, json_body, passed = dominance_tables(run_cases(cases))
    files = [
        write_text(out_dir / f"{name}_report.csv", csv_body),
        write_text(out_dir / f"{name}_report.json", json_body),
    ]
    return passed, files, resolved


def cmd_dominance(args: argparse.Namespace) -> int:
    out_dir = _output_dir(args.output)
    name = Path(args.config).stem
    try:
        raw = load_config(args.config)
        passed, files, resolved = run_dominance(raw, name, out_dir, args.workers)
    except (ConfigError, DomainError) as exc:
        print(f"cgshrink dominance: config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _finish(out_dir, "dominance", resolved, resolved["experiment"]["master_seed"], files)
    print(f"{name}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


# replay


def cmd_replay(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest = RunManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        print(f"cgshrink replay: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.output) if args.output else manifest_path.parent
    cfg = manifest.config
    try:
        if manifest.command == "dominance":
            name = manifest_path.stem.rsplit("_manifest", 1)[0]
            _, files, _ = run_dominance(cfg, name, out_dir, args.workers)
        elif manifest.command == "fig1":
            files = fig1_files(out_dir, int(cfg["p_max"]))
        elif manifest.command == "gamma":
            lo, hi = cfg["p"]
            rows, _ = gamma_rows(int(lo), int(hi), float(cfg["d"]), float(cfg["a_star"]))
            text = csv_text(("p", "gamma_closed", "gamma_quadrature", "abs_diff"), rows)
            files = [write_text(out_dir / "gamma.csv", text)]
        else:
            print(f"cgshrink replay: unknown command {manifest.command!r}", file=sys.stderr)
            return EXIT_USAGE
    except (ConfigError, DomainError, KeyError, TypeError) as exc:
        print(f"cgshrink replay: invalid manifest config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    mismatched = [f.name for f in files if manifest.outputs.get(f.name) != sha256_file(f)]
    if mismatched:
        print(f"replay differs from manifest: {', '.join(mismatched)}")
        return EXIT_FAIL
    print(f"replay reproduced {len(files)} file(s) bit for bit")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgshrink", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    out_help = f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})"

    g = sub.add_parser("gamma", help="compare the closed form and quadrature of gamma_p")
    g.add_argument("--p", type=p_range, required=True, help="dimension range LO..HI")
    g.add_argument("--d", type=_nonneg_float, required=True, help="radius of the parameter ball")
    g.add_argument("--a-star", type=_positive_float, default=1.0, help="bound on E lambda_max")
    g.add_argument("--output", default=None, help="write gamma.csv and a manifest here instead of stdout")
    g.set_defaults(func=cmd_gamma)

    f = sub.add_parser("fig1", help="risk at the origin against p, as CSV and SVG")
    f.add_argument("--p-max", type=_p_max, default=None, help="largest dimension (default 50)")
    f.add_argument("--config", default=None, help="TOML file with a [fig1] table")
    f.add_argument("--output", default=None, help=out_help)
    f.set_defaults(func=cmd_fig1)

    d = sub.add_parser("dominance", help="Monte Carlo dominance check from a TOML config")
    d.add_argument("config", help="experiment TOML file")
    d.add_argument("--workers", type=_positive_int, default=None, help="threads (does not change results)")
    d.add_argument("--output", default=None, help=out_help)
    d.set_defaults(func=cmd_dominance)

    r = sub.add_parser("replay", help="regenerate outputs from a manifest and compare digests")
    r.add_argument("manifest")
    r.add_argument("--workers", type=_positive_int, default=None)
    r.add_argument("--output", default=None, help="directory for regenerated files (default: beside the manifest)")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
