"""Command-line front end: simulate, certify, and audit.

Exit code 0 means every checked bound held; any invariant or certification
failure exits nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import audit_trace, corollary_bound
from .errors import PredsmcError
from .harness import bundled_scenario_path, load_scenario, read_trace, run, write_trace

logger = logging.getLogger("predsmc")

MAX_RESIDUAL_RATIO = 1.05


def _resolve_scenario(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    return bundled_scenario_path(arg)


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _audit_payload(audit) -> dict:
    payload = audit.to_dict()
    payload["pass"] = bool(
        audit.max_residual_ratio <= MAX_RESIDUAL_RATIO and audit.lyapunov_violations == 0
    )
    return payload


def _cmd_simulate(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    trace = run(scenario)
    write_trace(trace, args.out)
    logger.info("wrote %d samples to %s", len(trace), args.out)
    if args.report is None:
        return 0
    cert = corollary_bound(
        scenario.model, scenario.cfg.S2, scenario.delay, scenario.cfg.phi,
        scenario.uncertainty.delta_bar,
    )
    audit = audit_trace(trace, scenario.model, scenario.delay, scenario.uncertainty, scenario.cfg)
    audit_payload = _audit_payload(audit)
    _write_json(
        args.report,
        {
            "scenario": scenario.label,
            "certification": cert.to_dict(),
            "audit": audit_payload,
        },
    )
    return 0 if (cert.feasible and audit_payload["pass"]) else 1


def _cmd_certify(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    cert = corollary_bound(
        scenario.model, scenario.cfg.S2, scenario.delay, args.phi,
        scenario.uncertainty.delta_bar,
    )
    _write_json(args.out, {"scenario": scenario.label, "certification": cert.to_dict()})
    return 0 if cert.feasible else 1


def _cmd_audit(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    trace = read_trace(args.trace)
    audit = audit_trace(trace, scenario.model, scenario.delay, scenario.uncertainty, scenario.cfg)
    payload = _audit_payload(audit)
    _write_json(args.out, {"scenario": scenario.label, "audit": payload})
    return 0 if payload["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predsmc",
        description="Simulate and certify predictor/observer-based sliding mode control "
        "under time-varying measurement delay.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and write the trace CSV")
    p_sim.add_argument("--scenario", required=True,
                       help="scenario JSON path or bundled name (nominal, uncertain, ...)")
    p_sim.add_argument("--out", required=True, help="output trace CSV path")
    p_sim.add_argument("--report", help="also certify + audit, writing a JSON report here")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cert = sub.add_parser("certify", help="evaluate the stability feasibility bound")
    p_cert.add_argument("--scenario", required=True)
    p_cert.add_argument("--phi", type=float, default=1.05,
                        help="delay-margin constant > 1 (default 1.05)")
    p_cert.add_argument("--out", help="report JSON path (default: stdout)")
    p_cert.set_defaults(func=_cmd_certify)

    p_audit = sub.add_parser("audit", help="check a recorded trace against every bound")
    p_audit.add_argument("--scenario", required=True)
    p_audit.add_argument("--trace", required=True, help="trace CSV produced by simulate")
    p_audit.add_argument("--out", help="report JSON path (default: stdout)")
    p_audit.set_defaults(func=_cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PredsmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
