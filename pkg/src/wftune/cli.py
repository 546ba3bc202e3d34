"""Command-line entry point.

    wftune <verb> --config FILE --out DIR [--set key=value ...] [--jobs N] [--plot]

Exit status: 0 success, 1 configuration error, 2 simulation fault.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import harness as H
from .config import Config, ConfigError, dump_config, load_config

VERBS = ("run", "step-wf", "step-ref", "reversal", "pareto-sweep", "validate-config")

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wftune", description=__doc__.splitlines()[0])
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--config", type=Path, help="scenario YAML file")
    parser.add_argument("--out", type=Path, default=Path("wftune-out"), help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted-key override, repeatable")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers (pareto-sweep only)")
    parser.add_argument("--plot", action="store_true", help="also render PNG figures next to the CSVs")
    return parser


def _write_manifest(out: Path, verb: str, cfg: Config, overrides):
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.yaml").write_text(dump_config(cfg, verb=verb, overrides=list(overrides)))


def _maybe_plot(args, kind: str, *payload):
    if not args.plot:
        return
    from . import plotting
    getattr(plotting, f"plot_{kind}")(*payload, args.out)


def _do_run(args, cfg):
    runlog = H.run(H.Scenario(cfg))
    H.write_run(runlog, args.out)
    _maybe_plot(args, "run", runlog)


def _do_step_wf(args, cfg):
    cfg = H.step_wf_config(cfg)
    runlog = H.run(H.Scenario(cfg))
    summary = H.summarize_step(runlog, cfg.scenario.wf_steps[0][0], cfg.analysis.discard_blocks)
    H.write_run(runlog, args.out)
    H.write_step_summary(summary, args.out / "summary.csv")
    for name, pre, post, *_rest, sign in summary.rows():
        print(f"{name}: {pre:.6g} -> {post:.6g} ({'+' if sign > 0 else '-' if sign < 0 else '='})")
    _maybe_plot(args, "run", runlog)


def _do_step_ref(args, cfg):
    cfg = H.step_ref_config(cfg)
    runlog = H.run(H.Scenario(cfg))
    H.write_run(runlog, args.out)
    _maybe_plot(args, "run", runlog)


def _do_reversal(args, cfg):
    adaptive, fixed = H.reversal_test(cfg)
    H.write_run(adaptive, args.out / "adaptive")
    H.write_run(fixed, args.out / "fixed")
    with open(args.out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mode", "speed_rms"])
        for mode, runlog in (("adaptive", adaptive), ("fixed", fixed)):
            rms = H.speed_rms(runlog)
            w.writerow([mode, format(rms, ".17g")])
            print(f"{mode}: speed RMS error {rms:.6g} rad/s")
    _maybe_plot(args, "reversal", adaptive, fixed)


def _do_pareto(args, cfg):
    rows = H.pareto_sweep(cfg, jobs=max(1, args.jobs))
    args.out.mkdir(parents=True, exist_ok=True)
    H.write_pareto_csv(rows, args.out / "pareto.csv")
    _maybe_plot(args, "pareto", rows)


_HANDLERS = {
    "run": _do_run,
    "step-wf": _do_step_wf,
    "step-ref": _do_step_ref,
    "reversal": _do_reversal,
    "pareto-sweep": _do_pareto,
}


def dispatch(args) -> int:
    try:
        if args.verb != "validate-config" and args.config is None:
            raise ConfigError("--config", f"required for '{args.verb}'")
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.verb == "validate-config":
        print(dump_config(cfg), end="")
        return EXIT_OK

    try:
        _HANDLERS[args.verb](args, cfg)
    except H.SimulationFault as exc:
        if exc.log is not None and len(exc.log):
            H.write_run(exc.log, args.out)
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_manifest(args.out, args.verb, cfg, args.overrides)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
