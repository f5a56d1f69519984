"""Command-line harness: modal, sweep, double, pullin, report, presets.

Exit codes: 0 all asserted checks passed; 1 a physics check or analysis
failed; 2 configuration/validation error.  The default output root comes
from the MEMSD_OUT environment variable; --out overrides it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .device import device_to_dict, preset, PRESET_NAMES
from .errors import ConfigError, MemsdError
from .protocols import (
    Scenario,
    render_report_table,
    run_double,
    run_modal,
    run_pullin,
    run_report,
    run_sweep,
    scenario_from_json,
    scenario_echo,
    write_report_json,
)

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memsd",
        description="Electrostatic MEMS cantilever resonator / frequency-doubler simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="scenario JSON file")
        p.add_argument("--preset", choices=PRESET_NAMES, help="built-in device preset")
        p.add_argument("--out", type=Path, help="output directory root (overrides MEMSD_OUT)")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="stdout rendering: human summary (csv) or the JSON fragment")
        p.add_argument("--vdc", type=float, help="override drive bias voltage (V)")
        p.add_argument("--vamp", type=float, help="override drive AC amplitude (V)")
        p.add_argument("--fin", type=float, help="override drive frequency (Hz)")

    for name, helptext in (
        ("modal", "analytic + finite-element modal summary"),
        ("sweep", "steady-state resonance sweep with Q extraction"),
        ("double", "half-frequency doubling run with purity checks"),
        ("pullin", "pull-in voltages and drive margin"),
        ("report", "all protocols, consolidated table"),
    ):
        p = sub.add_parser(name, help=helptext)
        add_common(p)

    sub.add_parser("presets", help="dump the built-in device configurations as JSON")
    return parser


def _resolve_out(args) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get("MEMSD_OUT")
    return Path(env) if env else Path("memsd-out")


def _load_scenario(args) -> Scenario:
    if args.config is not None and args.preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        scenario = scenario_from_json(text)
    elif args.preset is not None:
        scenario = Scenario(name=args.preset, device=preset(args.preset), preset_name=args.preset)
    else:
        raise ConfigError("a scenario is required: --config <file> or --preset <name>")

    drive = scenario.drive
    if any(v is not None for v in (args.vdc, args.vamp, args.fin)):
        if drive is None:
            raise ConfigError(
                "--vdc/--vamp/--fin override an explicit drive; add one to the scenario "
                "or rely on the protocol defaults without overrides"
            )
        if args.vdc is not None:
            drive = replace(drive, v_dc=args.vdc)
        if args.vamp is not None:
            drive = replace(drive, v_amp=args.vamp)
        if args.fin is not None:
            drive = replace(drive, f_in=args.fin)
        scenario = replace(scenario, drive=drive)
    return scenario


def _emit(fragment: dict, scenario: Scenario, fmt: str):
    if fmt == "json":
        print(json.dumps({"scenario": scenario_echo(scenario), "result": fragment}, indent=2))
        return
    print(f"scenario: {scenario.name}  (protocol: {fragment['protocol']})")
    for key, value in fragment.items():
        if key in ("checks", "files", "protocol", "purity"):
            continue
        print(f"  {key}: {value}")
    for check in fragment["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"  [{status}] {check['name']}: {check['detail']}")
    for path in fragment["files"]:
        print(f"  wrote {path}")


_PROTOCOLS = {"modal": run_modal, "sweep": run_sweep, "double": run_double, "pullin": run_pullin}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            print(json.dumps({name: device_to_dict(preset(name)) for name in PRESET_NAMES}, indent=2))
            return EXIT_OK

        out_root = _resolve_out(args)
        if args.command == "report":
            scenarios = (
                [_load_scenario(args)]
                if (args.config or args.preset)
                else [
                    Scenario(name=name, device=preset(name), preset_name=name)
                    for name in PRESET_NAMES
                ]
            )
            report = run_report(scenarios, out_root)
            path = write_report_json(report, out_root)
            if args.format == "json":
                print(json.dumps(report, indent=2))
            else:
                print(render_report_table(report))
                print(f"wrote {path}")
            return EXIT_OK if report["all_passed"] else EXIT_PHYSICS

        scenario = _load_scenario(args)
        fragment = _PROTOCOLS[args.command](scenario, out_root)
        _emit(fragment, scenario, args.format)
        return EXIT_OK if all(c["passed"] for c in fragment["checks"]) else EXIT_PHYSICS

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemsdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
