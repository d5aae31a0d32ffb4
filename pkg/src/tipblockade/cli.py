"""Command-line front end.

Exit codes: 0 ok, 2 configuration error, 3 solver error, 4 no solution.
Parameter precedence: defaults < ``--config`` file < ``--set`` < explicit flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, analytic, config, experiments, liouville
from .errors import ConfigError, NoSolution, SolverError, TipBlockadeError, ZeroPhotonNumber

log = logging.getLogger("tipblockade")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NO_SOLUTION = 0, 2, 3, 4
OUT_ENV = "TIPBLOCKADE_OUT"

# flag -> flat config key
PARAM_FLAGS = {
    "--delta": "delta_over_gamma1",
    "--chi-over-gamma1": "chi_over_gamma1",
    "--chi-over-gamma": "chi_over_gamma",
    "--xi": "xi_over_gamma1",
    "--j0": "j0_over_gamma1",
    "--tip": "tip",
    "--tip-branch": "tip_branch",
    "--r-nm": "r_nm",
    "--phi-um": "phi_um",
    "--a-t": "a_t_over_gamma1",
    "--inv-2beta-t": "inv_2beta_t_nm",
    "--theta-t": "theta_t_rad_per_um",
    "--theta": "theta_rad",
    "--a-gamma": "a_gamma_over_gamma1",
    "--inv-2beta-gamma": "inv_2beta_gamma_nm",
    "--lambda-nm": "lambda_nm",
    "--n0": "n0",
}


class ConfigArgumentError(Exception):
    pass


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--config", type=Path, help="JSON config document (sections: system, physical)")
    g.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a flat parameter key; repeatable")
    g.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or .)")
    g.add_argument("--engine", choices=experiments.ENGINES[:3], default="both", help="master-equation, analytic or both")
    g.add_argument("--n-max", type=int, default=liouville.DEFAULT_N_MAX, help="per-mode photon cutoff (default %(default)s)")
    g.add_argument("--workers", type=int, default=1, help="parallel worker processes for sweeps")
    g.add_argument("--seedless", action="store_true", help="omit wall-clock metadata so every output file is byte-identical across runs")
    g.add_argument("-q", "--quiet", action="store_true")
    g.add_argument("-v", "--verbose", action="store_true")

    p = common.add_argument_group("model parameters (rates in units of gamma1)")
    for flag, key in PARAM_FLAGS.items():
        kind, default, text = config.SYSTEM_KEYS[key]
        extra = {"choices": config.TIP_MODES} if key == "tip" else {}
        p.add_argument(flag, dest=key, type=kind, default=None, help=f"{text} [{key}]", **extra)
    p.add_argument("--ideal", action="store_true", help="ideal cavity: J0 = 0 and no tip")
    p.add_argument("--tip-at-decoupling", action="store_true", help="place the tip where J_tip = -J0 (same as --tip decoupled)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="tipblockade",
        description="Photon blockade against backscattering in a Kerr resonator with a nanotip.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("point", parents=[common], help="evaluate one parameter point")

    fig = sub.add_parser("fig", parents=[common], help="write the data set of a figure")
    fig.add_argument("which", type=int, choices=sorted(experiments.FIGURES))

    solve = sub.add_parser("solve", parents=[common], help="solve a tip-position condition")
    solve.add_argument("target", choices=("blockade-weak", "decouple"))
    solve.add_argument("--l-max", type=int, default=1, help="highest decoupling branch (default %(default)s)")
    solve.add_argument("--phi-min", type=float, default=0.0, help="blockade search window start (um)")
    solve.add_argument("--phi-max", type=float, default=0.5, help="blockade search window end (um)")

    sweep = sub.add_parser("sweep", parents=[common], help="run a sweep described by a JSON SweepSpec")
    sweep.add_argument("spec", type=Path)
    sweep.add_argument("--name", default="sweep", help="output file stem")

    cfg = sub.add_parser("config", help="print the default configuration document")
    cfg.add_argument("--table", action="store_true", help="print the parameter table instead of JSON")
    return parser


def _parse_overrides(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key = key.strip()
        out[key] = config.coerce(key, value.strip())
    return out


def resolve_flat(args) -> tuple[dict, dict]:
    """Merge config file, ``--set`` and flags into ``(system_flat, physical)``."""
    system, physical = {}, {}
    if args.config:
        doc = config.load_document(args.config)
        system.update(doc["system"])
        physical.update(doc["physical"])
    system.update(_parse_overrides(args.overrides))
    for key in PARAM_FLAGS.values():
        value = getattr(args, key, None)
        if value is not None:
            system[key] = value
    if args.ideal:
        system.update(j0_over_gamma1=0.0, tip="none")
        system.pop("r_nm", None)
        system.pop("phi_um", None)
    if args.tip_at_decoupling:
        system["tip"] = "decoupled"
    if system.get("chi_over_gamma") is not None and args.chi_over_gamma1 is None:
        system.pop("chi_over_gamma1", None)
    config.validate_flat(system)
    config.physical_from_dict(physical)
    return system, physical


def _outdir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "."))


def _fmt_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_point(args) -> int:
    system, _ = resolve_flat(args)
    p = config.resolve_params(system)
    record = {"inputs": system, **{k: v for k, v in experiments._derived_columns(p).items()}}
    if args.engine in ("master-equation", "both"):
        rho = liouville.solve_point(p, args.n_max)
        record["n_cw"] = liouville.mean_photons(rho)
        for n in (2, 3, 4):
            try:
                record[f"g{n}_0"] = liouville.gn_zero(rho, n)
            except ZeroPhotonNumber:
                record[f"g{n}_0"] = None
        probs = liouville.photon_probs(rho)
        record["p_mn"] = {f"{m}{n}": probs.get((m, n), 0.0) for m, n in experiments.PROB_STATES}
    if args.engine in ("analytic", "both"):
        if p.xi > 0:
            record.update(experiments._analytic_columns(p))
        else:
            record.update(g2_0_analytic=None, p10_analytic=0.0, p01_analytic=0.0, p20_analytic=0.0)

    if not args.quiet:
        keys = [k for k in record if k not in ("inputs", "p_mn")]
        width = max(len(k) for k in keys)
        for k in keys:
            print(f"{k:<{width}}  {_fmt_value(record[k])}")
        if "p_mn" in record:
            print("P_mn  " + "  ".join(f"P{k}={v:.3e}" for k, v in record["p_mn"].items()))
    out = _outdir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "point.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_fig(args) -> int:
    out = _outdir(args)
    build = experiments.FIGURES[args.which]
    result = build(n_max=args.n_max, workers=args.workers)
    paths = list(result.write(out, f"fig{args.which}", seedless=args.seedless))
    if args.which == 1:
        paths += result_delay(out, args)
    for path in paths:
        log.info("wrote %s", path)
    return EXIT_OK


def result_delay(out, args):
    return list(experiments.fig1_delay_curves(n_max=args.n_max).write(out, "fig1_tau", seedless=args.seedless))


def cmd_solve(args) -> int:
    system, _ = resolve_flat(args)
    if args.target == "decouple":
        flat = {k: v for k, v in system.items() if k not in ("r_nm", "phi_um", "tip")}
        p = config.resolve_params(flat)
        sol = analytic.decoupling_positions(p, l_max=args.l_max)
    else:
        radius = system.get("r_nm")
        flat = {k: v for k, v in system.items() if k not in ("r_nm", "phi_um", "tip")}
        p = config.resolve_params(flat)
        sol = analytic.blockade_positions_weak(p, r=radius, phi_window=(args.phi_min, args.phi_max))
    print(f"{'branch':>6}  {'r_nm':>12}  {'phi_um':>12}  {'r_um':>8}  residual")
    for branch, (r, phi), res in zip(sol.branches, sol.points, sol.residuals):
        print(f"{branch:>6}  {r:12.6f}  {phi:12.8f}  {r * 1e-3:8.4f}  {res:.3e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec_doc = json.loads(args.spec.read_text(encoding="utf-8"))
        spec = experiments.SweepSpec.from_dict(spec_doc)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep spec {args.spec}: {exc}") from exc
    result = experiments.run_sweep(spec, workers=args.workers)
    for path in result.write(_outdir(args), args.name, seedless=args.seedless):
        log.info("wrote %s", path)
    return EXIT_OK


def cmd_config(args) -> int:
    if args.table:
        for key, default, text in config.parameter_table():
            print(f"{key:<22} {default:<22} {text}")
    else:
        print(json.dumps(config.default_document(), indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {"point": cmd_point, "fig": cmd_fig, "solve": cmd_solve, "sweep": cmd_sweep, "config": cmd_config}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if getattr(args, "quiet", False) else logging.DEBUG if getattr(args, "verbose", False) else logging.INFO
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoSolution as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except SolverError as exc:
        print(f"solver error in {exc.operation}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TipBlockadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
