"""Command-line front end.

Subcommands: run (one scenario), sweep (scenario across parameter values),
calc (closed-form calculators), mos (VoIP quality report for a scenario),
validate (check a scenario file). Exit codes: 0 success, 1 invalid
arguments or scenario, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, qoscalc
from .config import ScenarioError, load_scenario, offered_utilization, validate
from .units import fmt6, parse_rate, parse_size, parse_time


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to SystemExit(2)
        raise _ArgumentError(message)


def _scale_rate(bps: float):
    for unit, factor in (("Gbps", 1e9), ("Mbps", 1e6), ("kbps", 1e3)):
        if abs(bps) >= factor:
            return bps / factor, unit
    return bps, "bps"


def _scale_size(nbytes: float):
    for unit, factor in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if abs(nbytes) >= factor:
            return nbytes / factor, unit
    return nbytes, "B"


def _emit(rows, as_json: bool) -> None:
    """Print calculator results; JSON carries the same rounded numbers."""
    if as_json:
        payload = {name: {"value": float(fmt6(value)), "unit": unit}
                   for name, value, unit in rows}
        print(json.dumps(payload, sort_keys=True))
    else:
        for name, value, unit in rows:
            print(f"{name} = {fmt6(value)} {unit}".rstrip())


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise _ArgumentError(f"--set expects key=value, got {pair!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _load(path, overrides, seed):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        raise SystemExit(2) from None
    from .config import parse_scenario_text
    return parse_scenario_text(text, overrides=overrides, seed=seed)


def _values_list(parameter: str, text: str):
    values = []
    if ":" in text and "," not in text:
        start, stop, step = (int(v) for v in text.split(":"))
        values = list(range(start, stop + 1, step))
    else:
        values = [v.strip() for v in text.split(",") if v.strip()]
        if parameter == "buffer_size":
            values = [int(float(v)) for v in values]
    if not values:
        raise _ArgumentError(f"no sweep values in {text!r}")
    return values


def _print_loss_summary(result) -> None:
    from .scenarios import COMBINED
    print(f"config {result.provenance['config_hash'][:12]} seed {result.provenance['seed']} "
          f"reps {result.provenance['repetitions']} "
          f"utilization {fmt6(result.provenance['offered_utilization'])}")
    for fid in result.flow_ids + (COMBINED,):
        s = result.summaries[("loss", fid)]
        if s is None:
            print(f"  {fid:>12}: loss n/a")
        else:
            print(f"  {fid:>12}: loss {fmt6(100 * s.mean)}% "
                  f"± {fmt6(100 * s.half_width)} pp (n={s.n})")


def _cmd_run(args) -> int:
    config = _load(args.scenario, _parse_overrides(args.set), args.seed)
    from .output import write_experiment
    from .scenarios import run_experiment
    result = run_experiment(config, engine=args.engine, jobs=args.jobs)
    try:
        write_experiment(result, args.out)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 2
    _print_loss_summary(result)
    print(f"results written to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args.scenario, _parse_overrides(args.set), args.seed)
    parameter, values = args.param, args.values
    if parameter is None or values is None:
        if config.sweep is None or not config.sweep.values:
            raise _ArgumentError("no --param/--values and no [sweep] section in scenario")
        parameter = parameter or config.sweep.parameter
        values = values or ",".join(str(v) for v in config.sweep.values)
    value_list = _values_list(parameter, values)
    from .output import write_sweep
    from .scenarios import sweep
    entries = sweep(config, parameter, value_list, engine=args.engine, jobs=args.jobs)
    try:
        write_sweep(entries, args.out)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 2
    for entry in entries:
        s = entry.result.summaries[("loss", "combined")]
        mean = "n/a" if s is None else f"{fmt6(100 * s.mean)}%"
        print(f"  {parameter}={entry.value}: combined loss {mean}")
    print(f"results written to {args.out}")
    return 0


def _cmd_mos(args) -> int:
    config = _load(args.scenario, _parse_overrides(args.set), args.seed)
    delays = [float(v) for v in args.delays.split(",") if v.strip()]
    from .output import write_mos
    from .scenarios import mos_report, run_experiment
    result = run_experiment(config, engine=args.engine, jobs=args.jobs)
    try:
        report = mos_report(result, delays)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        write_mos(report, args.out)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 2
    for d in sorted(report):
        entry = report[d]
        print(f"  network delay {fmt6(d)} ms -> total {fmt6(entry.total_delay_ms)} ms, "
              f"mean MOS {fmt6(entry.mean_mos)} over {len(entry.mos_values)} calls")
    print(f"results written to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    config = _load(args.scenario, _parse_overrides(args.set), args.seed)
    errors = validate(config)
    if errors:
        for err in errors:
            print(f"invalid: {err}", file=sys.stderr)
        return 1
    print(f"scenario OK: {len(config.flows)} flows, "
          f"{config.repetitions} repetitions of {fmt6(config.duration)} s")
    print(f"offered utilization {fmt6(offered_utilization(config))}")
    return 0


def _cmd_calc(args) -> int:
    rows = []
    if args.formula == "capacity":
        value = qoscalc.capacity_l3(qoscalc.CapacityParams(
            c_l2=parse_rate(args.c_l2), h_l2=parse_size(args.h_l2),
            l_l3=parse_size(args.l_l3)))
        rows.append(("capacity_l3", *_scale_rate(value)))
    elif args.formula in ("bdp", "stanford"):
        params = qoscalc.SizingParams(c=parse_rate(args.c),
                                      rtt=parse_time(args.rtt),
                                      n_flows=args.n)
        nbytes = (qoscalc.bdp_buffer(params) if args.formula == "bdp"
                  else qoscalc.stanford_buffer(params))
        rows.append(("buffer", *_scale_size(nbytes)))
        rows.append(("buffer_bits", nbytes * 8 / 1e9, "Gbit"))
    elif args.formula == "fill":
        value = qoscalc.fill_rate(parse_rate(args.r_in), parse_rate(args.r_out))
        scaled, unit = _scale_rate(value) if value != 0 else (0.0, "Mbps")
        rows.append(("fill_rate", scaled, unit))
    elif args.formula == "voipbw":
        value = qoscalc.voip_bandwidth(parse_size(args.size),
                                       parse_time(args.interval))
        rows.append(("bandwidth", *_scale_rate(value)))
    elif args.formula == "emodel":
        if not 0 <= args.loss <= 1:
            raise _ArgumentError("--loss must be a fraction in [0, 1]")
        r = qoscalc.r_factor(qoscalc.EModelInput(args.delay, args.loss))
        rows.append(("r_factor", r, ""))
        rows.append(("mos", qoscalc.mos_from_r(r), ""))
    _emit(rows, args.json)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="bufsim",
                     description="Access-link bottleneck buffer simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_opts(p):
        p.add_argument("scenario", help="scenario (.scn) file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a scenario value")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--engine", choices=("fast", "reference"), default="fast")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel repetitions (default: machine parallelism)")

    p_run = sub.add_parser("run", help="run one scenario")
    scenario_opts(p_run)
    p_run.add_argument("-o", "--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    scenario_opts(p_sweep)
    p_sweep.add_argument("-o", "--out", required=True)
    p_sweep.add_argument("--param", choices=("buffer_size", "r_out", "r_in"))
    p_sweep.add_argument("--values",
                         help="comma list or start:stop:step (buffer sizes)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_mos = sub.add_parser("mos", help="VoIP MOS report for a scenario")
    scenario_opts(p_mos)
    p_mos.add_argument("-o", "--out", required=True)
    p_mos.add_argument("--delays", default="20,40,60,100,120,140",
                       help="network one-way delays in ms (comma list)")
    p_mos.set_defaults(func=_cmd_mos)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    scenario_opts(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_calc = sub.add_parser("calc", help="closed-form QoS calculators")
    p_calc.set_defaults(func=_cmd_calc)
    calc_sub = p_calc.add_subparsers(dest="formula", required=True)

    c = calc_sub.add_parser("capacity", help="IP capacity of a layer-2 link")
    c.add_argument("--c-l2", dest="c_l2", required=True, help="layer-2 rate")
    c.add_argument("--h-l2", dest="h_l2", required=True, help="layer-2 header bytes")
    c.add_argument("--l-l3", dest="l_l3", required=True, help="IP packet size bytes")

    for name, help_text in (("bdp", "bandwidth-delay-product buffer"),
                            ("stanford", "BDP / sqrt(N) buffer")):
        c = calc_sub.add_parser(name, help=help_text)
        c.add_argument("--c", required=True, help="link capacity")
        c.add_argument("--rtt", required=True, help="round-trip time")
        c.add_argument("--n", type=int, default=1, help="number of flows")

    c = calc_sub.add_parser("fill", help="queue fill rate r_in - r_out")
    c.add_argument("--r-in", dest="r_in", required=True)
    c.add_argument("--r-out", dest="r_out", required=True)

    c = calc_sub.add_parser("voipbw", help="IP bandwidth of a CBR voice flow")
    c.add_argument("--size", required=True, help="packet size")
    c.add_argument("--interval", required=True, help="packet interval")

    c = calc_sub.add_parser("emodel", help="E-model R-factor and MOS")
    c.add_argument("--delay", type=float, required=True, help="one-way delay, ms")
    c.add_argument("--loss", type=float, default=0.0, help="loss fraction 0..1")

    for sp in calc_sub.choices.values():
        sp.add_argument("--json", action="store_true",
                        help="machine-readable output")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"invalid: {err}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
