"""The three studies: reduction-error table, spectral report, SSM trajectory suite."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import BeamConfig, ForcingSpec
from .dynamics import (
    DecayFit,
    IntegratorSettings,
    Trajectory,
    fit_decay_rates,
    integrate_full,
    integrate_rom,
    lift_rom_trajectory,
    reduction_error,
    sample_set,
)
from .fem import assemble
from .sfd import build_rom
from .spectra import ResonanceReport, beam_spectrum, check_nonresonance, spectral_quotients
from .ssm import (
    compute_ssm,
    diagonalize,
    evaluate_w,
    invariance_residual,
    lift_physical,
    master_coordinates,
    modal_trajectory,
    polar_to_s,
    reduced_dynamics,
    ssm_diagnostics,
)

TABLE_EPS = (1e-4, 1e-3, 1e-2)
SSM_EXPERIMENTS = ("on-ssm", "off-ssm", "off-slow-manifold")


# ----------------------------------------------------------------------
# reduction-error table


@dataclass(frozen=True)
class TableSettings:
    periods: int = 10
    n_samples: int = 1000
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)


@dataclass
class TableRow:
    eps: float
    errors: dict
    notes: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


def sfd_error_row(config: BeamConfig, eps: float, orders=(0, 1, 2),
                  settings: TableSettings = TableSettings()) -> TableRow:
    """Full model vs. lifted reduced models from rest over ``periods`` forcing periods."""
    beam = assemble(config.replace(eps=eps))
    tau_end = settings.periods * 2 * math.pi / beam.omega
    zx, zy = np.zeros(beam.n_s), np.zeros(beam.n_f)
    row = TableRow(eps, {})
    try:
        full = integrate_full(beam, (zx, zx, zy, zy), settings.integrator, tau_end)
    except Exception as exc:  # annotated per cell, never silently dropped
        for order in orders:
            row.errors[order] = math.nan
            row.notes[order] = f"full model failed: {exc}"
        return row
    row.stats["full"] = full.stats
    S = sample_set(tau_end, settings.n_samples)
    for order in orders:
        try:
            rom = build_rom(beam, order)
            traj = integrate_rom(rom, (zx, zx), settings.integrator, tau_end)
            lifted = lift_rom_trajectory(traj, rom.manifold, order)
            row.errors[order] = reduction_error(full, lifted, S)
            row.stats[order] = traj.stats
        except Exception as exc:
            row.errors[order] = math.nan
            row.notes[order] = f"order {order} failed: {exc}"
    return row


def _row_job(args):
    return sfd_error_row(*args)


def sfd_error_table(config: BeamConfig, eps_list=TABLE_EPS, orders=(0, 1, 2),
                    settings: TableSettings = TableSettings(), jobs: int = 1) -> list[TableRow]:
    """One row per ``eps``; rows run concurrently up to ``jobs`` processes."""
    tasks = [(config, float(e), tuple(orders), settings) for e in eps_list]
    if jobs <= 1 or len(tasks) == 1:
        return [_row_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_row_job, tasks))


# ----------------------------------------------------------------------
# spectral report


@dataclass
class SpectrumReport:
    exact: object
    approx: object
    ratios: np.ndarray
    sigma: int
    resonance: ResonanceReport


def spectrum_report(config: BeamConfig, mode: int = 1) -> SpectrumReport:
    beam = assemble(config)
    exact = beam_spectrum(beam, "exact")
    approx = beam_spectrum(beam, "approx")
    ratios, sigma = spectral_quotients(exact, mode)
    return SpectrumReport(exact, approx, ratios, sigma, check_nonresonance(exact, mode, sigma))


# ----------------------------------------------------------------------
# SSM trajectory suite


@dataclass(frozen=True)
class SsmSuiteSettings:
    """Defaults of the three trajectory experiments.

    ``perturbation`` is the modal amplitude added to the first enslaved
    pair (off-ssm and off-slow-manifold); the off-slow-manifold run also
    starts the axial unknowns at rest instead of on the slow manifold.
    """

    rho0: float = 0.3
    theta0: float = 0.0
    tau_end: float = 150.0
    perturbation: float = 0.1
    normalization: str = "eigenvalue"
    initial_window: tuple = (2.0, 12.0)
    final_window: tuple = (60.0, 150.0)
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)


@dataclass
class SsmRun:
    experiment: str
    trajectory: Trajectory
    modal: np.ndarray
    distance: np.ndarray
    amplitude: np.ndarray
    residual_bound: np.ndarray
    bound_violated: bool
    fit: DecayFit | None
    polar: object
    expansion: object
    system: object
    resonance: ResonanceReport


class ResonanceAbort(RuntimeError):
    def __init__(self, report: ResonanceReport):
        super().__init__(report.describe())
        self.report = report


def autonomous_config(config: BeamConfig) -> BeamConfig:
    return config.replace(forcing=ForcingSpec(omega=config.forcing.omega, profile="none"))


def ssm_experiment(config: BeamConfig, experiment: str, mode: int = 1,
                   settings: SsmSuiteSettings = SsmSuiteSettings()) -> SsmRun:
    """Run one of the trajectory experiments around the SSM of ``mode``.

    * ``on-ssm``: start on the computed SSM at ``(rho0, theta0)``, slow model.
    * ``off-ssm``: same start plus a perturbation of the first enslaved pair.
    * ``off-slow-manifold``: the off-ssm start for the full beam with the
      axial unknowns at rest, i.e. away from the slow manifold.
    """
    if experiment not in SSM_EXPERIMENTS:
        raise ValueError(f"experiment must be one of {SSM_EXPERIMENTS}, got {experiment!r}")
    beam = assemble(autonomous_config(config))
    spectrum = beam_spectrum(beam)
    _, sigma = spectral_quotients(spectrum, mode)
    report = check_nonresonance(spectrum, mode, sigma)
    if not report.passed:
        raise ResonanceAbort(report)
    rom = build_rom(beam, order=1, forced=False)
    system = diagonalize(rom)
    expansion = compute_ssm(system, mode, settings.normalization)
    polar = reduced_dynamics(expansion)

    zt = lift_physical(system, expansion, polar_to_s(settings.rho0, settings.theta0))
    if experiment != "on-ssm":
        # first enslaved pair: the next underdamped pair after the master
        z = np.zeros(system.dim, dtype=complex)
        m = expansion.master[1] + 1
        if m + 1 >= system.dim or system.conj_index[m] != m + 1:
            raise ValueError("no enslaved conjugate pair available for the perturbation")
        z[m] = z[m + 1] = settings.perturbation
        zt = zt + (system.P @ z).real
    n = beam.n_s
    x0, v0 = zt[:n], zt[n:]
    if experiment == "off-slow-manifold":
        zy = np.zeros(beam.n_f)
        traj = integrate_full(beam, (x0, v0, zy, zy), settings.integrator, settings.tau_end, forced=False)
    else:
        traj = integrate_rom(rom, (x0, v0), settings.integrator, settings.tau_end)
    Z = modal_trajectory(system, traj.x, traj.xdot)
    dist, amp = ssm_diagnostics(system, expansion, Z)
    bound = np.array([np.linalg.norm(invariance_residual(system, expansion, master_coordinates(expansion, z)))
                      for z in Z]) / abs(polar.re_lambda)
    violated = bool(np.any(dist[1:] > bound[1:]))
    fit = None
    if experiment != "on-ssm":
        fit = fit_decay_rates(traj.tau, dist, settings.initial_window, settings.final_window)
    return SsmRun(experiment, traj, Z, dist, amp, bound, violated, fit, polar, expansion, system, report)


def ssm_surface(system, expansion, rhos, thetas):
    """Grid samples of the SSM: ``(rho, theta, z_master, z_first_enslaved)``."""
    m0 = expansion.master[0]
    m2 = min(expansion.master[1] + 1, system.dim - 1)
    rows = []
    for r in rhos:
        for t in thetas:
            w = evaluate_w(expansion, polar_to_s(r, t))
            rows.append((r, t, w[m0].real, w[m0].imag, w[m2].real, w[m2].imag))
    return rows
