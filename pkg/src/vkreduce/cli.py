"""Command-line driver.

Every run writes ``manifest.json`` to the output directory before any
computation. CSV outputs start with ``#`` comment lines carrying the
manifest hash and the column units; all quantities are nondimensional.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 resonance abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import BeamConfig, ConfigError, load_config
from .dynamics import (
    IntegratorSettings,
    NewtonError,
    integrate_full,
    integrate_rom,
    lift_rom_trajectory,
    quarter_point_series,
    write_trajectory_csv,
)
from .experiments import (
    SSM_EXPERIMENTS,
    TABLE_EPS,
    ResonanceAbort,
    SsmSuiteSettings,
    TableSettings,
    sfd_error_table,
    spectrum_report,
    ssm_experiment,
    ssm_surface,
)
from .fem import AssemblyError, assemble, write_coordinate_matrix
from .sfd import build_rom
from .spectra import SpectrumError, spectrum_rows
from .ssm import DiagonalizationError, SmallDivisorError, coefficient_records

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_RESONANCE = 0, 2, 3, 4
NUMERICAL_ERRORS = (NewtonError, SmallDivisorError, DiagonalizationError, SpectrumError,
                    AssemblyError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError)


# ----------------------------------------------------------------------
# manifest and atomic output


class Run:
    """Output directory plus the manifest hash stamped on every CSV."""

    def __init__(self, out: Path, command: str, config: BeamConfig, params: dict, seed: int = 0):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        body = {
            "tool": "vkreduce",
            "version": __version__,
            "experiment": command,
            "config": _jsonable(config.as_dict()),
            "parameters": _jsonable(params),
            "seed": seed,
        }
        canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
        self.hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        manifest = dict(body, output_dir=str(out), manifest_sha256=self.hash)
        self.write_text("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
        return path

    def write_csv(self, name: str, columns, rows, units: str, notes=()) -> Path:
        lines = [f"# manifest_sha256: {self.hash}", f"# units: {units}"]
        lines += [f"# {n}" for n in notes]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_trajectory(self, name: str, traj, units: str) -> Path:
        path = self.out / name
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.")
        os.close(fd)
        write_trajectory_csv(tmp, traj, [f"manifest_sha256: {self.hash}", f"units: {units}"])
        os.replace(tmp, path)
        return path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ----------------------------------------------------------------------
# argument helpers


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _order_list(text: str) -> list[int]:
    try:
        orders = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated orders, got {text!r}") from None
    if not orders or any(o not in (0, 1, 2) for o in orders):
        raise argparse.ArgumentTypeError("orders must be drawn from 0, 1, 2")
    return orders


def _resolve_config(args) -> BeamConfig:
    config = load_config(args.config) if args.config else BeamConfig()
    eps = getattr(args, "eps", None)
    if isinstance(eps, float):
        config = config.replace(eps=eps)
    return config


# ----------------------------------------------------------------------
# subcommands


def cmd_assemble(args) -> int:
    config = _resolve_config(args)
    run = Run(args.out, "assemble", config, {})
    beam = assemble(config)
    for name in ("M1", "K1", "M2", "K2"):
        write_coordinate_matrix(run.out / f"{name}.mtx", getattr(beam, name))
    rows = [("n_s", beam.n_s), ("n_f", beam.n_f), ("n_elements", beam.n_elements),
            ("zeta", beam.zeta), ("eps", beam.eps), ("omega01", beam.omega)]
    run.write_csv("summary.csv", ["quantity", "value"], rows, "all nondimensional; counts are integers")
    for k, v in rows:
        print(f"{k} = {_fmt(v)}")
    return EXIT_OK


def cmd_sfd_table(args) -> int:
    config = _resolve_config(args)
    eps_list = args.eps if args.eps is not None else list(TABLE_EPS)
    orders = args.order if args.order is not None else [0, 1, 2]
    settings = TableSettings(periods=args.periods, n_samples=args.samples)
    run = Run(args.out, "sfd-table", config,
              {"eps": eps_list, "orders": orders, "periods": args.periods, "samples": args.samples})
    rows = sfd_error_table(config, eps_list, orders, settings, jobs=args.jobs)
    out_rows, failed = [], False
    for r in rows:
        note = "; ".join(r.notes.values())
        failed |= bool(r.notes)
        out_rows.append([r.eps] + [r.errors[o] for o in orders] + [note or "ok"])
        print(f"eps={r.eps:g} " + " ".join(f"E{o}={r.errors[o]:.6g}%" for o in orders) + (f" [{note}]" if note else ""))
    run.write_csv("sfd_table.csv", ["eps"] + [f"E_order{o}" for o in orders] + ["note"], out_rows,
                  "eps dimensionless; E in percent")
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_spectrum(args) -> int:
    config = _resolve_config(args)
    run = Run(args.out, "spectrum", config, {"mode": args.mode})
    rep = spectrum_report(config, args.mode)
    cols = ["k", "omega0", "re_lambda", "im_lambda", "ratio"]
    units = "omega0 and lambda in nondimensional time^-1; ratio dimensionless"
    over = [f"overdamped modes (exact roots real): {int(np.sum(rep.exact.overdamped))}"]
    run.write_csv("spectrum_exact.csv", cols, spectrum_rows(rep.exact), units, over)
    run.write_csv("spectrum_approx.csv", cols, spectrum_rows(rep.approx), units, over)
    summary = [("sigma", rep.sigma), ("first_ratio", float(rep.ratios[0]) if rep.ratios.size else math.nan),
               ("resonance_passed", int(rep.resonance.passed)), ("resonance_margin", rep.resonance.margin)]
    run.write_csv("spectrum_summary.csv", ["quantity", "value"], summary, "dimensionless",
                  [rep.resonance.describe()])
    print(f"sigma = {rep.sigma}")
    print(rep.resonance.describe())
    return EXIT_OK


def cmd_ssm_suite(args) -> int:
    config = _resolve_config(args)
    settings = SsmSuiteSettings(rho0=args.rho0, theta0=args.theta0, tau_end=args.tau_end,
                                normalization=args.normalization)
    run = Run(args.out, "ssm-suite", config,
              {"experiment": args.experiment, "mode": args.mode, "rho0": args.rho0, "theta0": args.theta0,
               "tau_end": args.tau_end, "normalization": args.normalization})
    try:
        res = ssm_experiment(config, args.experiment, args.mode, settings)
    except ResonanceAbort as exc:
        run.write_text("resonance_report.txt", exc.report.describe() + "\n")
        print(exc.report.describe(), file=sys.stderr)
        return EXIT_RESONANCE
    run.write_trajectory("trajectory.csv", res.trajectory, "tau and generalized displacements nondimensional")
    run.write_csv("diagnostics.csv", ["tau", "distance", "amplitude", "residual_bound"],
                  zip(res.trajectory.tau, res.distance, res.amplitude, res.residual_bound),
                  "modal-coordinate norms, nondimensional")
    modal_cols = ["tau"] + [f"{p}_z{i + 1}" for i in range(res.system.dim) for p in ("re", "im")]
    modal_rows = ([t] + [v for z in row for v in (z.real, z.imag)] for t, row in zip(res.trajectory.tau, res.modal))
    run.write_csv("modal_trajectory.csv", modal_cols, modal_rows, "modal coordinates, nondimensional")
    rhos = np.linspace(0.0, max(args.rho0, 1e-12), 11)
    thetas = np.linspace(0.0, 2 * math.pi, 25)
    run.write_csv("ssm_surface.csv", ["rho", "theta", "re_z_master", "im_z_master", "re_z_next", "im_z_next"],
                  ssm_surface(res.system, res.expansion, rhos, thetas), "nondimensional")
    run.write_csv("ssm_coefficients.csv", ["i", "j", "k", "l", "re", "im"],
                  coefficient_records(res.expansion), "nondimensional; unused index positions are 0",
                  [f"beta = {res.expansion.beta.real:.17g} + {res.expansion.beta.imag:.17g}i",
                   f"normalization = {res.expansion.normalization}"])
    p = res.polar
    summary = [("re_lambda", p.re_lambda), ("im_lambda", p.im_lambda), ("re_beta", p.re_beta),
               ("im_beta", p.im_beta), ("bound_violated", int(res.bound_violated))]
    if res.fit is not None:
        summary += [("initial_rate", res.fit.initial_rate), ("final_rate", res.fit.final_rate)]
    run.write_csv("summary.csv", ["quantity", "value"], summary, "rates in nondimensional time^-1",
                  [res.resonance.describe()])
    for k, v in summary:
        print(f"{k} = {_fmt(v)}")
    if res.bound_violated:
        print("note: distance to the SSM exceeded the residual-scaled bound (flagged)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    order = args.order
    model = "full" if args.model == "full" else f"sfd-{order}"
    run = Run(args.out, "simulate", config, {"model": model, "periods": args.periods})
    beam = assemble(config)
    tau_end = args.periods * 2 * math.pi / beam.omega
    settings = IntegratorSettings()
    zx, zy = np.zeros(beam.n_s), np.zeros(beam.n_f)
    if model == "full":
        traj = integrate_full(beam, (zx, zx, zy, zy), settings, tau_end)
    else:
        rom = build_rom(beam, order)
        traj = lift_rom_trajectory(integrate_rom(rom, (zx, zx), settings, tau_end), rom.manifold, order)
    run.write_trajectory("trajectory.csv", traj, "tau and generalized displacements nondimensional")
    w, u = quarter_point_series(beam, traj)
    run.write_csv("quarter_point.csv", ["tau", "w_quarter", "u_quarter"], zip(traj.tau, w, u),
                  "nondimensional displacements at a quarter of the length")
    print(f"{model}: {traj.tau.size} samples, {traj.stats}")
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vkreduce", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_list=False):
        p.add_argument("--config", type=Path, help="key = value config file (SI units); defaults if omitted")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        if eps_list:
            p.add_argument("--eps", type=_float_list, help="comma-separated eps values")
        else:
            p.add_argument("--eps", type=float, help="override eps from the config")
        p.add_argument("--jobs", type=int, default=1, help="concurrent worker processes")

    p = sub.add_parser("assemble", help="write M1, K1, M2, K2 and a DOF summary")
    common(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("sfd-table", help="reduction-error table over eps and model order")
    common(p, eps_list=True)
    p.add_argument("--order", type=_order_list, help="comma-separated orders from 0,1,2 (default all)")
    p.add_argument("--periods", type=int, default=10, help="forcing periods simulated")
    p.add_argument("--samples", type=int, default=1000, help="uniform samples in the error measure")
    p.set_defaults(func=cmd_sfd_table)

    p = sub.add_parser("spectrum", help="damped eigenvalues, spectral quotients, non-resonance report")
    common(p)
    p.add_argument("--mode", type=int, default=1, help="master mode index (1-based)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("ssm-suite", help="SSM trajectory experiment with diagnostics")
    common(p)
    p.add_argument("--mode", type=int, default=1, help="master mode index (1-based)")
    p.add_argument("--experiment", choices=SSM_EXPERIMENTS, default="off-slow-manifold")
    p.add_argument("--rho0", type=float, default=SsmSuiteSettings.rho0)
    p.add_argument("--theta0", type=float, default=SsmSuiteSettings.theta0)
    p.add_argument("--tau-end", type=float, default=SsmSuiteSettings.tau_end)
    p.add_argument("--normalization", choices=("eigenvalue", "unit"), default="eigenvalue")
    p.set_defaults(func=cmd_ssm_suite)

    p = sub.add_parser("simulate", help="forced response of the full or a reduced model from rest")
    common(p)
    p.add_argument("--model", choices=("full", "rom"), default="full")
    p.add_argument("--order", type=int, choices=(0, 1, 2), default=1, help="reduced-model order (with --model rom)")
    p.add_argument("--periods", type=float, default=10.0)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceAbort as exc:
        print(f"resonance abort: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
