"""gyroloop command line: config-driven experiments with CSV output.

Exit codes: 0 experiment ran and met its tolerances, 1 tolerance failure,
2 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, load_config, run


def _add_config_args(sub):
    sub.add_argument("--config", required=True, help="experiment config file (INI)")
    sub.add_argument("--out", default=None, help="output CSV path (overrides config)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gyroloop",
        description="Loop-space guiding-center experiments: full orbits, loop "
        "evolution, slow-manifold scans, and consistency checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    flat = [
        ("orbit", "full-orbit run (CSV: t, x, y, z, vx, vy, vz, energy, mu0)"),
        ("loop", "loop evolution (CSV: t, s, energy, action, means, fast_norm)"),
        ("residual-scan", "invariance-residual scan over epsilon"),
        ("compare-drift", "gyro-averaged Boris drift vs order-1 slow drift"),
        ("noether-scan", "loop action of slow loops vs eps*mu0"),
        ("stick", "distance from the truncated slow manifold over time"),
        ("fastslow-check", "round-trip and frozen-operator inverse checks"),
        ("fields-check", "curl/divergence/frame invariants of the field model"),
    ]
    for name, help_text in flat:
        _add_config_args(sub.add_parser(name, help=help_text))

    fastslow = sub.add_parser("fastslow", help="fast-slow transform checks")
    fs_sub = fastslow.add_subparsers(dest="subcommand", required=True)
    _add_config_args(fs_sub.add_parser("check", help="alias of fastslow-check"))

    fields = sub.add_parser("fields", help="field model checks")
    fd_sub = fields.add_subparsers(dest="subcommand", required=True)
    _add_config_args(fd_sub.add_parser("check", help="alias of fields-check"))

    slowman = sub.add_parser("slowmanifold", help="slow-manifold diagnostics")
    sm_sub = slowman.add_subparsers(dest="subcommand", required=True)
    _add_config_args(sm_sub.add_parser("residual-scan", help="alias of residual-scan"))
    _add_config_args(sm_sub.add_parser("check", help="closed-form y1 vs generic recursion"))

    gc = sub.add_parser("gc", help="reduced guiding-center dynamics")
    gc_sub = gc.add_subparsers(dest="subcommand", required=True)
    _add_config_args(gc_sub.add_parser("run", help="integrate the slow generator"))
    _add_config_args(gc_sub.add_parser("compare-drift", help="alias of compare-drift"))

    noether = sub.add_parser("noether", help="Noether-invariant diagnostics")
    no_sub = noether.add_subparsers(dest="subcommand", required=True)
    _add_config_args(no_sub.add_parser("scan", help="alias of noether-scan"))

    return parser


def _resolve_kind(args):
    cmd = args.command
    sub = getattr(args, "subcommand", None)
    if cmd == "fastslow":
        return "fastslow-check"
    if cmd == "fields":
        return "fields-check"
    if cmd == "slowmanifold":
        return "residual-scan" if sub == "residual-scan" else "y1-check"
    if cmd == "gc":
        return "gc-run" if sub == "run" else "compare-drift"
    if cmd == "noether":
        return "noether-scan"
    return cmd


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        kind = _resolve_kind(args)
        if cfg.kind != kind:
            cfg.kind = kind
            cfg.validate()
        passed, summary = run(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failures surfaced with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    out = args.out or cfg.out_path
    for key in sorted(summary):
        print(f"{key} = {summary[key]:.12g}")
    print(f"wrote {out}")
    print("PASS" if passed else "FAIL")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
