"""Command-line interface.

Subcommands: ``run`` (one experiment), ``sweep-power``, ``sweep-antennas``,
``beampattern`` (angle scan of a solved run), and ``validate`` (fast property
battery).  All outputs are CSV files under ``--out``; repeated invocations
with the same seed produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import channel, driver, validate
from .driver import SCHEMES, AoParams
from .errors import (InfeasibleProblemError, RepairExhaustedError, ScenarioError,
                     SolverMaxIterationsError)
from .scenario import load_scenario


def _common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", required=True, help="TOML scenario file")
    p.add_argument("--seed", type=int, default=None, help="override the scenario rng seed")
    p.add_argument("--out", default=".", help="output directory (default: cwd)")


def _parse_schemes(arg: str):
    if arg == "all":
        return list(SCHEMES)
    names = [a.strip() for a in arg.split(",") if a.strip()]
    for n in names:
        if n not in SCHEMES:
            raise ScenarioError(f"unknown scheme '{n}' (choose from {', '.join(SCHEMES)} or all)")
    return names


def _load(args):
    s = load_scenario(args.scenario, seed_override=args.seed)
    with open(args.scenario, "rb") as f:
        params = AoParams.from_config(tomllib.load(f))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return s, params, out


def _floats(arg: str):
    return [float(v) for v in arg.split(",") if v.strip()]


def _run_rng(s):
    return driver._rng_for(s.rng_seed, driver._STREAM_OPTIMIZER, 0, 0, 0)


def cmd_run(args) -> int:
    s, params, out = _load(args)
    h = channel.sample_channel(s, driver._rng_for(s.rng_seed, driver._STREAM_CHANNEL, 0))
    if args.dump_channel:
        driver.write_channel_csv(h, args.dump_channel)
    result = driver._optimize(args.scheme, s, params, _run_rng(s), h,
                              pso_trace_path=args.pso_trace)
    row = {"scheme": result.scheme, "grid_param": s.max_power_w, "seed": s.rng_seed,
           "total_rate_bps_hz": result.objective,
           "beampattern_w": float(np.min(result.target_gain_w)),
           "power_w": float(np.max(result.power_w)),
           "iters": result.iterations, "wall_ms": 0}
    driver.write_sweep_csv([row], out / "summary.csv")
    driver.write_csv([{"ao_iter": i, "objective_bps_hz": v}
                      for i, v in enumerate(result.objective_trace)],
                     ("ao_iter", "objective_bps_hz"), out / "trace.csv")
    driver.write_csv([{"antenna": m, "x_m": float(v)}
                      for m, v in enumerate(result.positions)],
                     ("antenna", "x_m"), out / "positions.csv")
    print(f"{result.scheme}: total rate {result.objective:.6f} bits/s/Hz after "
          f"{result.iterations} outer iterations ({result.wall_ms:.0f} ms)", file=sys.stderr)
    print(f"wrote {out / 'summary.csv'}, trace.csv, positions.csv", file=sys.stderr)
    return 0


def _emit_sweep(rows, out, name):
    driver.write_sweep_csv(rows, out / name)
    wall = sum(r.get("_wall_ms_measured", 0.0) for r in rows)
    print(f"wrote {out / name} ({len(rows)} rows, {wall:.0f} ms optimization time)",
          file=sys.stderr)
    return 0


def cmd_sweep_power(args) -> int:
    s, params, out = _load(args)
    rows = driver.sweep_power(s, _parse_schemes(args.scheme), _floats(args.powers),
                              args.seeds, params, base_seed=s.rng_seed)
    return _emit_sweep(rows, out, "sweep_power.csv")


def cmd_sweep_antennas(args) -> int:
    s, params, out = _load(args)
    counts = [int(v) for v in args.antennas.split(",") if v.strip()]
    rows = driver.sweep_antennas(s, _parse_schemes(args.scheme), counts,
                                 args.seeds, params, base_seed=s.rng_seed)
    return _emit_sweep(rows, out, "sweep_antennas.csv")


def cmd_beampattern(args) -> int:
    s, params, out = _load(args)
    h = channel.sample_channel(s, driver._rng_for(s.rng_seed, driver._STREAM_CHANNEL, 0))
    result = driver._optimize(args.scheme, s, params, _run_rng(s), h)
    angles = np.linspace(0.0, np.pi / 2.0, args.angles)
    rows = driver.beampattern_scan(result, s, angles)
    driver.write_scan_csv(rows, out / "beampattern.csv")
    print(f"wrote {out / 'beampattern.csv'} ({args.angles} angles; "
          f"target gain per slot: {np.array2string(result.target_gain_w, precision=3)})",
          file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    s, _, _ = _load(args)
    return validate.run_battery(s)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ma-isac",
        description="Movable-antenna ISAC sum-rate experiments (CSV output)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single experiment run")
    _common(p)
    p.add_argument("--scheme", default="ma", choices=SCHEMES)
    p.add_argument("--pso-trace", default=None, help="per-iteration swarm fitness CSV")
    p.add_argument("--dump-channel", default=None, help="write |h|^2 per node/slot to CSV")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep-power", help="rate vs transmit power")
    _common(p)
    p.add_argument("--scheme", default="all")
    p.add_argument("--powers", default="0.2,0.4,0.6,0.8,1.0", help="watts, ascending")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(fn=cmd_sweep_power)

    p = sub.add_parser("sweep-antennas", help="rate vs antenna count")
    _common(p)
    p.add_argument("--scheme", default="all")
    p.add_argument("--antennas", default="4,6,8,10")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(fn=cmd_sweep_antennas)

    p = sub.add_parser("beampattern", help="gain vs angle for a solved run")
    _common(p)
    p.add_argument("--scheme", default="ma", choices=SCHEMES)
    p.add_argument("--angles", type=int, default=181)
    p.set_defaults(fn=cmd_beampattern)

    p = sub.add_parser("validate", help="run the fast property battery")
    _common(p)
    p.set_defaults(fn=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, InfeasibleProblemError, RepairExhaustedError,
            SolverMaxIterationsError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
