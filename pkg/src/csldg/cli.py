"""``sldg`` command line: run, convergence, bench and verify.

Exit codes: 0 success, 1 failed verification, 2 bad configuration,
3 numerical failure (crossed characteristics or a non-finite trace).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness, verification
from .errors import NumericalFailure
from .field import dump_field
from .harness import ConfigError, RunConfig

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("csldg")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (defaults apply when omitted)")
    common.add_argument("--threads", type=int, help="worker threads for the sweeps")
    common.add_argument("--splitting", help="strang2, strang4 or a schedule file")
    common.add_argument("--samples", type=int, help="Gauss sample points per cell and axis for error norms")
    common.add_argument("--output", "-o", type=Path, help="CSV output path (default: stdout only)")
    common.add_argument("--no-timing", action="store_true", help="write NA in the wall_s column")
    common.add_argument("--dump-field", type=Path, help="write the final modal coefficients")
    common.add_argument("--plot", type=Path, help="log-log error plot (SVG)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sldg", description="Semi-Lagrangian DG transport solver.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one configuration to its horizon")
    conv = sub.add_parser("convergence", parents=[common], help="error table over doubling meshes")
    conv.add_argument("--meshes", type=int, nargs="+", help="cells per direction, each doubling the last")
    bench = sub.add_parser("bench", parents=[common], help="SVS vs IBS wall time")
    bench.add_argument("--meshes", type=int, nargs="+")
    bench.add_argument("--repeats", type=int)
    ver = sub.add_parser("verify", parents=[common], help="run the verification checks")
    ver.add_argument("--inject-mass-error", type=float, metavar="AMOUNT", help=argparse.SUPPRESS)
    return parser


def load_config(args) -> RunConfig:
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    else:
        data = {}
    for key in ("threads", "splitting", "samples"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "meshes", None):
        data["meshes"] = args.meshes
    if getattr(args, "repeats", None):
        data["bench_repeats"] = args.repeats
    config = RunConfig.from_dict(data)
    outputs = dict(config.outputs)
    unknown = set(outputs) - {"metrics", "field", "plot", "metadata", "bench", "checks", "timing"}
    if unknown:
        raise ConfigError(f"unknown output keys: {sorted(unknown)}")
    for flag, key in (("output", None), ("dump_field", "field"), ("plot", "plot")):
        value = getattr(args, flag)
        if value is not None:
            outputs[key or _csv_key(args.command)] = str(value)
    if args.no_timing:
        outputs["timing"] = False
    return dataclasses.replace(config, outputs=outputs)


def _csv_key(command: str) -> str:
    return {"bench": "bench", "verify": "checks"}.get(command, "metrics")


def _emit(lines: list[str], path) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path:
        Path(path).write_text(text)


def _finish_runs(config: RunConfig, results) -> None:
    out = config.outputs
    timing = out.get("timing", True)
    _emit([harness.METRICS_HEADER] + harness.metrics_rows(results, timing), out.get("metrics"))
    if out.get("field"):
        dump_field(results[-1].field, out["field"])
    if out.get("plot"):
        harness.write_plot(out["plot"], results)
    if out.get("metadata"):
        meta = [r.metadata() for r in results]
        Path(out["metadata"]).write_text(json.dumps(meta if len(meta) > 1 else meta[0], indent=2) + "\n")


def cmd_run(config: RunConfig) -> int:
    result = harness.run(config)
    log.info("dt=%.6g steps=%d wall=%.2fs", result.dt, result.steps, result.wall_s)
    _finish_runs(config, [result])
    return EXIT_OK


def cmd_convergence(config: RunConfig) -> int:
    meshes = config.meshes or [config.nx, 2 * config.nx, 4 * config.nx]
    results = harness.convergence(config, meshes)
    _finish_runs(config, results)
    return EXIT_OK


def cmd_bench(config: RunConfig) -> int:
    rows = harness.bench(config)
    lines = [harness.BENCH_HEADER] + [f"{r.mesh}x{r.mesh},{r.t_svs:.6f},{r.t_ibs:.6f},{r.ratio:.4f}" for r in rows]
    sys.stdout.write("\n".join(lines) + "\n")
    if config.outputs.get("bench"):
        harness.write_bench(config.outputs["bench"], rows, config.threads)
    return EXIT_OK


def cmd_verify(config: RunConfig, inject: float | None = None) -> int:
    hook = verification.corrupt_mass(amount=inject) if inject else None
    checks = verification.run_checks(config, on_step=hook)
    _emit([verification.CHECKS_HEADER] + [c.csv() for c in checks], config.outputs.get("checks"))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "convergence":
            return cmd_convergence(config)
        if args.command == "bench":
            return cmd_bench(config)
        return cmd_verify(config, args.inject_mass_error)
    except ConfigError as exc:
        print(f"sldg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"sldg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
