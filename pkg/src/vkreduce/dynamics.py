"""Time integration of the full beam, the reduced models and the polar SSM flow."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .fem import AssembledBeam
from .sfd import SlowManifold


class NewtonError(RuntimeError):
    def __init__(self, tau, residual, iterations):
        super().__init__(f"Newton failed at tau={tau:.6g} after {iterations} iterations "
                         f"(scaled increment {residual:.3e})")
        self.tau = tau
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class IntegratorSettings:
    scheme: str = "newmark"
    dt: float | None = None
    steps_per_period: int = 200
    newton_tol: float = 1e-10
    max_iter: int = 25
    rtol: float = 1e-10
    atol: float = 1e-12
    gamma: float = 0.5
    beta: float = 0.25

    def __post_init__(self):
        if self.scheme not in ("newmark", "explicit-rk"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.newton_tol > 0 and self.rtol > 0 and self.atol > 0 and self.max_iter > 0):
            raise ValueError("tolerances and iteration limits must be positive")

    def step(self, omega: float) -> float:
        if self.dt is not None:
            return self.dt
        return 2 * math.pi / omega / self.steps_per_period


@dataclass
class Trajectory:
    """Time samples of a second-order state ``(q, v)`` or of ``(rho, theta)``."""

    tau: np.ndarray
    q: np.ndarray
    v: np.ndarray
    kind: str
    n_s: int
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        if self.tau.ndim != 1 or (self.tau.size > 1 and np.any(np.diff(self.tau) <= 0)):
            raise ValueError("time grid must be strictly increasing")
        if self.q.shape[0] != self.tau.size or self.v.shape != self.q.shape:
            raise ValueError("state samples inconsistent with time grid")

    @property
    def x(self):
        return self.q[:, : self.n_s]

    @property
    def y(self):
        return self.q[:, self.n_s:]

    @property
    def xdot(self):
        return self.v[:, : self.n_s]

    @property
    def ydot(self):
        return self.v[:, self.n_s:]

    def resample(self, tau_new):
        """Cubic-spline resampling of displacements and velocities."""
        tau_new = np.asarray(tau_new, dtype=float)
        if self.tau.size < 2:
            raise ValueError("cannot resample a single-sample trajectory")
        q = CubicSpline(self.tau, self.q, axis=0)(tau_new)
        v = CubicSpline(self.tau, self.v, axis=0)(tau_new)
        return Trajectory(tau_new, q, v, self.kind, self.n_s, dict(self.stats))

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(self.tau, factor * self.q, factor * self.v, self.kind, self.n_s, dict(self.stats))


class FullBeamSystem:
    """The full (x, y) discretized beam in the second-order system contract."""

    def __init__(self, beam: AssembledBeam, forced: bool = True):
        self.beam = beam
        self.forced = forced
        self.n_s, self.n_f = beam.n_s, beam.n_f
        self.ndof = beam.n_s + beam.n_f
        self.mass = la.block_diag(beam.M1, beam.M2)

    def _split(self, q):
        return q[: self.n_s], q[self.n_s:]

    def external_force(self, tau):
        if not self.forced:
            return np.zeros(self.ndof)
        fq, fp = self.beam.load_vectors(tau)
        return np.concatenate([fq, fp])

    def internal_force(self, q, v, tau=0.0):
        b = self.beam
        x, y = self._split(q)
        xd, yd = self._split(v)
        ex, ey = b.elastic_force(x, y)
        dx, dy = b.damping_force(x, xd, yd)
        return np.concatenate([ex + dx, ey + dy])

    def tangent(self, q, v, tau=0.0):
        b, eps, z = self.beam, self.beam.eps, self.beam.zeta
        x, y = self._split(q)
        xd, yd = self._split(v)
        Dx, Dxd = b.D(x), b.D(xd)
        Kxx = b.K1 + b.S(y) / eps + b.dG(x) + z * eps * b.C_rate(x, xd) + z * b.S(yd)
        Kxy = Dx / eps
        Kyx = Dx.T / eps + z * Dxd.T
        Kyy = b.K2 / eps**2
        Cxx = z * eps * (b.K1 + b.C(x))
        Cxy = z * Dx
        Cyx = z * Dx.T
        Cyy = (z / eps) * b.K2
        return np.block([[Kxx, Kxy], [Kyx, Kyy]]), np.block([[Cxx, Cxy], [Cyx, Cyy]])

    def energy(self, q, v):
        x, y = self._split(q)
        xd, yd = self._split(v)
        return self.beam.total_energy(x, y, xd, yd)


def newmark(system, q0, v0, tau_end: float, dt: float, settings: IntegratorSettings = IntegratorSettings(),
            kind: str = "", n_s: int | None = None) -> Trajectory:
    """Implicit Newmark with full Newton iterations on the nonlinear residual.

    Convergence is declared when the displacement increment of a Newton
    iteration is below ``newton_tol`` times the current displacement scale.
    """
    g, bt = settings.gamma, settings.beta
    M = system.mass
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    n_steps = int(round(tau_end / dt)) if tau_end > 0 else 0
    if n_steps and abs(n_steps * dt - tau_end) > 1e-9 * tau_end:
        n_steps = int(math.ceil(tau_end / dt))
    if n_steps:
        dt = tau_end / n_steps
    taus = np.arange(n_steps + 1) * dt if n_steps else np.array([0.0])
    Q = np.empty((n_steps + 1, q.size))
    V = np.empty_like(Q)
    Q[0], V[0] = q, v
    a = la.solve(M, system.external_force(0.0) - system.internal_force(q, v, 0.0), assume_a="pos")
    newton_total = 0
    for n in range(1, n_steps + 1):
        t = taus[n]
        q_pred = q + dt * v + dt**2 * (0.5 - bt) * a
        v_pred = v + dt * (1 - g) * a
        fext = system.external_force(t)
        a_new = a.copy()
        for it in range(1, settings.max_iter + 1):
            q_new = q_pred + bt * dt**2 * a_new
            v_new = v_pred + g * dt * a_new
            r = M @ a_new + system.internal_force(q_new, v_new, t) - fext
            K, C = system.tangent(q_new, v_new, t)
            J = M + g * dt * C + bt * dt**2 * K
            da = -la.solve(J, r)
            a_new += da
            inc = bt * dt**2 * np.max(np.abs(da))
            scale = max(np.max(np.abs(q_new)), dt * np.max(np.abs(v_new)), 1e-300)
            if inc <= settings.newton_tol * scale or not np.any(da):
                break
        else:
            raise NewtonError(t, inc / scale, settings.max_iter)
        newton_total += it
        a = a_new
        q = q_pred + bt * dt**2 * a
        v = v_pred + g * dt * a
        Q[n], V[n] = q, v
    stats = {"steps": n_steps, "newton_iterations": newton_total, "dt": dt}
    return Trajectory(taus, Q, V, kind, n_s if n_s is not None else q.size, stats)


def explicit_rk(system, q0, v0, tau_end: float, dt_out: float, settings: IntegratorSettings,
                kind: str = "", n_s: int | None = None) -> Trajectory:
    """Adaptive explicit Runge-Kutta (DOP853) on the first-order form."""
    n = len(q0)
    M_factor = la.cho_factor(system.mass)

    def rhs(t, s):
        q, v = s[:n], s[n:]
        acc = la.cho_solve(M_factor, system.external_force(t) - system.internal_force(q, v, t))
        return np.concatenate([v, acc])

    n_out = max(int(round(tau_end / dt_out)), 0)
    t_eval = np.linspace(0.0, tau_end, n_out + 1) if n_out else np.array([0.0])
    s0 = np.concatenate([q0, v0]).astype(float)
    if tau_end <= 0:
        return Trajectory(t_eval, s0[None, :n], s0[None, n:], kind, n_s or n, {"steps": 0})
    sol = solve_ivp(rhs, (0.0, tau_end), s0, method="DOP853", t_eval=t_eval,
                    rtol=settings.rtol, atol=settings.atol)
    if not sol.success:
        raise RuntimeError(f"explicit integration failed: {sol.message}")
    Y = sol.y.T
    return Trajectory(sol.t, Y[:, :n], Y[:, n:], kind, n_s or n, {"steps": int(sol.nfev)})


def _integrate(system, q0, v0, tau_end, settings, omega, kind, n_s):
    if tau_end < 0:
        raise ValueError("tau_end must be non-negative")
    dt = settings.step(omega)
    if settings.scheme == "newmark":
        return newmark(system, q0, v0, tau_end, dt, settings, kind=kind, n_s=n_s)
    return explicit_rk(system, q0, v0, tau_end, dt, settings, kind=kind, n_s=n_s)


def integrate_full(beam: AssembledBeam, ic, settings: IntegratorSettings = IntegratorSettings(),
                   tau_end: float = 0.0, forced: bool = True) -> Trajectory:
    """Integrate the full beam from ``ic = (x0, xdot0, y0, ydot0)``."""
    x0, xd0, y0, yd0 = (np.asarray(a, dtype=float) for a in ic)
    system = FullBeamSystem(beam, forced=forced)
    q0 = np.concatenate([x0, y0])
    v0 = np.concatenate([xd0, yd0])
    return _integrate(system, q0, v0, tau_end, settings, beam.omega, "full", beam.n_s)


def integrate_rom(rom, ic, settings: IntegratorSettings = IntegratorSettings(),
                  tau_end: float = 0.0) -> Trajectory:
    """Integrate a reduced model from ``ic = (x0, xdot0)``."""
    x0, xd0 = (np.asarray(a, dtype=float) for a in ic)
    return _integrate(rom, x0, xd0, tau_end, settings, rom.beam.omega, f"sfd-{rom.order}", rom.beam.n_s)


def lift_rom_trajectory(traj: Trajectory, manifold: SlowManifold, order: int) -> Trajectory:
    """Append the reconstructed fast variables to a reduced trajectory."""
    ys, yds = [], []
    for t, x, xd in zip(traj.tau, traj.x, traj.xdot):
        y, yd = manifold.reconstruct_fast(x, xd, t, order=order)
        ys.append(y)
        yds.append(yd)
    q = np.hstack([traj.x, np.array(ys)])
    v = np.hstack([traj.xdot, np.array(yds)])
    return Trajectory(traj.tau, q, v, traj.kind, traj.n_s, dict(traj.stats))


def sample_set(tau_end: float, n_samples: int = 1000) -> np.ndarray:
    return np.linspace(tau_end / n_samples, tau_end, n_samples)


def reduction_error(full: Trajectory, reduced: Trajectory, samples=None) -> float:
    """Relative error in percent between generalized displacement histories.

    Both trajectories must carry the same number of DOFs; they are resampled
    onto ``samples`` by cubic splines when their grids differ.
    """
    if full.q.shape[1] != reduced.q.shape[1]:
        raise ValueError("reduced trajectory must be lifted to the full DOF count")
    if samples is None:
        samples = full.tau
    samples = np.asarray(samples, dtype=float)
    u = full.q if np.array_equal(full.tau, samples) else full.resample(samples).q
    ur = reduced.q if np.array_equal(reduced.tau, samples) else reduced.resample(samples).q
    den = math.sqrt(float(np.sum(u * u)))
    if den == 0:
        raise ValueError("reference trajectory is identically zero")
    return 100.0 * math.sqrt(float(np.sum((u - ur) ** 2))) / den


@dataclass(frozen=True)
class DecayFit:
    initial_rate: float
    final_rate: float
    initial_residual: float
    final_residual: float
    initial_window: tuple
    final_window: tuple


def _fit_rate(tau, series, window):
    lo, hi = window
    m = (tau >= lo) & (tau <= hi)
    if m.sum() < 2:
        raise ValueError(f"fewer than two samples in window {window}")
    s = series[m]
    if np.any(s <= 0):
        raise ValueError(f"non-positive samples in window {window}")
    coef, res, *_ = np.polyfit(tau[m], np.log(s), 1, full=True)
    resid = float(math.sqrt(res[0] / m.sum())) if len(res) else 0.0
    return -float(coef[0]), resid


def fit_decay_rates(tau, series, initial_window=None, final_window=None) -> DecayFit:
    """Least-squares exponential fits on log(series) over an early and a late window.

    Windows default to the first and last fifth of the time span.
    """
    tau = np.asarray(tau, dtype=float)
    series = np.asarray(series, dtype=float)
    span = tau[-1] - tau[0]
    if initial_window is None:
        initial_window = (tau[0], tau[0] + 0.2 * span)
    if final_window is None:
        final_window = (tau[-1] - 0.2 * span, tau[-1])
    a, ra = _fit_rate(tau, series, initial_window)
    b, rb = _fit_rate(tau, series, final_window)
    return DecayFit(a, b, ra, rb, tuple(initial_window), tuple(final_window))


def integrate_polar(pd, rho0: float, theta0: float, tau_end: float, n_samples: int = 1001) -> Trajectory:
    """Integrate ``rho' = rho (a + b rho^2)`` and ``theta' = c + d rho^2``.

    The amplitude equation is solved first; the phase follows by quadrature
    of ``rho^2`` carried along as an extra state.
    """
    if rho0 < 0:
        raise ValueError("rho0 must be non-negative")
    a, b = pd.re_lambda, pd.re_beta
    c, d = pd.im_lambda, pd.im_beta
    t_eval = np.linspace(0.0, tau_end, n_samples) if tau_end > 0 else np.array([0.0])
    if tau_end <= 0:
        q = np.array([[rho0, theta0]])
        return Trajectory(t_eval, q, np.zeros_like(q), "ssm", 2)

    def rhs(t, s):
        rho = s[0]
        return [rho * (a + b * rho * rho), rho * rho]

    sol = solve_ivp(rhs, (0.0, tau_end), [rho0, 0.0], method="DOP853", t_eval=t_eval,
                    rtol=1e-11, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"polar integration failed: {sol.message}")
    rho = np.maximum(sol.y[0], 0.0)
    theta = theta0 + c * sol.t + d * sol.y[1]
    q = np.column_stack([rho, theta])
    v = np.column_stack([rho * (a + b * rho**2), c + d * rho**2])
    return Trajectory(sol.t, q, v, "ssm", 2)


def quarter_point_series(beam: AssembledBeam, traj: Trajectory, s: float = 0.25):
    """Transverse deflection and axial displacement at coordinate ``s`` for every sample."""
    if traj.q.shape[1] != beam.n_s + beam.n_f:
        raise ValueError("trajectory must carry both transverse and axial unknowns")
    w = np.empty(traj.tau.size)
    u = np.empty(traj.tau.size)
    for k, (x, y) in enumerate(zip(traj.x, traj.y)):
        w[k], u[k] = beam.field_at(s, x, y)
    return w, u


def write_trajectory_csv(path, traj: Trajectory, comments=()) -> None:
    """``tau,dof_0,...`` rows of generalized displacements, 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(["tau"] + [f"dof_{i}" for i in range(traj.q.shape[1])]) + "\n")
        for t, row in zip(traj.tau, traj.q):
            fh.write(",".join(f"{v:.17g}" for v in (t, *row)) + "\n")


def read_trajectory_csv(path):
    """Return ``(header, data)`` of a file written by :func:`write_trajectory_csv`."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                header = line.strip().split(",")
                break
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data
