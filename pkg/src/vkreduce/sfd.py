"""Slow-fast decomposition of the beam: slow manifold and reduced models.

The axial unknowns ``y`` are enslaved to the transverse ones through

    y  = eps G0(x) + eps^2 G1(tau) + eps^3 G2(x, x', tau)
    y' = eps H0(x, x') + eps^2 H1(tau)

and the reduced models at orders 0, 1, 2 only carry ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .fem import AssembledBeam, _solve_spd


@dataclass
class AssumptionReport:
    a1_nonsingular_limit: bool
    a2_critical_manifold: bool
    a3_stable: bool
    k2_condition: float
    min_eig_M2: float
    min_eig_K2: float
    zeta: float
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.a1_nonsingular_limit and self.a2_critical_manifold and self.a3_stable


def verify_assumptions(beam: AssembledBeam, K2=None, cond_limit: float = 1e12) -> AssumptionReport:
    """Check the conditions under which the slow manifold exists and attracts.

    The nonsingular-limit condition holds structurally: the rescaled fast
    equation is polynomial in eps. ``K2`` may be overridden to probe the
    solvability check.
    """
    K2 = beam.K2 if K2 is None else np.asarray(K2)
    notes = []
    ev_K2 = la.eigvalsh(K2)
    ev_M2 = la.eigvalsh(beam.M2)
    cond = float(np.inf) if ev_K2[0] == 0 else float(abs(ev_K2[-1] / ev_K2[0]))
    a2 = bool(np.isfinite(cond) and cond < cond_limit and abs(ev_K2[0]) > 0)
    if not a2:
        notes.append(f"K2 singular or ill-conditioned (cond={cond:.3g}); critical manifold not a graph")
    a3 = bool(ev_M2[0] > 0 and ev_K2[0] > 0 and beam.zeta > 0)
    if beam.zeta <= 0:
        notes.append("zeta = 0: fast linear system only marginally stable")
    return AssumptionReport(
        a1_nonsingular_limit=True,
        a2_critical_manifold=a2,
        a3_stable=a3,
        k2_condition=cond,
        min_eig_M2=float(ev_M2[0]),
        min_eig_K2=float(ev_K2[0]),
        zeta=beam.zeta,
        notes=notes,
    )


@dataclass(frozen=True)
class OrderTerms:
    G0: np.ndarray
    H0: np.ndarray
    G1: np.ndarray
    H1: np.ndarray
    G2: np.ndarray


class SlowManifold:
    """Evaluators for the expansion terms of the slow manifold."""

    def __init__(self, beam: AssembledBeam, forced: bool = True):
        self.beam = beam
        self.forced = forced
        # K2 M2^-1 K2 is state independent; factor once.
        K2 = beam.K2
        self._A_factor = la.cho_factor(K2 @ la.cho_solve(beam.M2_factor, K2))

    def solve_A(self, b):
        """Apply ``(K2 M2^-1 K2)^-1``."""
        return _solve_spd(self._A_factor, b)

    def G0(self, x):
        return -self.beam.solve_K2(self.beam.H(x))

    def H0(self, x, xdot):
        return -self.beam.solve_K2(self.beam.E(x) @ xdot)

    def G1(self, tau):
        if not self.forced:
            return np.zeros(self.beam.n_f)
        return self.beam.solve_K2(self.beam.load_vectors(tau)[1])

    def H1(self, tau):
        if not self.forced:
            return np.zeros(self.beam.n_f)
        return self.beam.solve_K2(self.beam.load_rates(tau)[1])

    def G1_unsimplified(self, x, xdot, tau):
        """``-zeta (H0 + K2^-1 E(x) x') + beta K2^-1 p``; equals :meth:`G1`."""
        b = self.beam
        return -b.zeta * (self.H0(x, xdot) + b.solve_K2(b.E(x) @ xdot)) + self.G1(tau)

    def leading_acceleration(self, x, tau):
        """Mass-normalized acceleration on the critical manifold at eps = 0."""
        b = self.beam
        f = b.K1 @ x + b.F(x, self.G0(x)) + b.G(x)
        if self.forced:
            f = f - b.load_vectors(tau)[0]
        return -b.solve_M1(f)

    def G2(self, x, xdot, tau, p1=None):
        b = self.beam
        if p1 is None:
            p1 = self.leading_acceleration(x, tau)
        return self.solve_A(2.0 * b.H(xdot) + b.E(x) @ p1) - b.zeta * self.H1(tau)

    def order_terms(self, x, xdot, tau) -> OrderTerms:
        return OrderTerms(
            G0=self.G0(x),
            H0=self.H0(x, xdot),
            G1=self.G1(tau),
            H1=self.H1(tau),
            G2=self.G2(x, xdot, tau),
        )

    def reconstruct_fast(self, x, xdot, tau, order: int = 1):
        """Fast variables ``(y, y')`` on the slow manifold at the given order."""
        eps = self.beam.eps
        y = eps * self.G0(x)
        ydot = eps * self.H0(x, xdot)
        if order >= 1:
            y = y + eps**2 * self.G1(tau)
            ydot = ydot + eps**2 * self.H1(tau)
        if order >= 2:
            y = y + eps**3 * self.G2(x, xdot, tau)
        return y, ydot


def critical_manifold(beam: AssembledBeam, x):
    """``eta = -K2^-1 H(x)``."""
    return -beam.solve_K2(beam.H(x))


class SfdRom:
    """Reduced second-order model ``M1 x'' + f(x, x', tau) = alpha q(tau)``.

    Implements the second-order system contract used by the integrators:
    ``mass``, ``internal_force``, ``tangent`` and ``external_force``.
    With ``forced=False`` the autonomous model is produced.
    """

    def __init__(self, beam: AssembledBeam, order: int = 1, forced: bool = True):
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        self.beam = beam
        self.order = order
        self.forced = forced
        self.manifold = SlowManifold(beam, forced=forced)
        self.mass = beam.M1
        self.ndof = beam.n_s
        self._K2inv = la.cho_solve(beam.K2_factor, np.eye(beam.n_f))
        self._Ainv = la.cho_solve(self.manifold._A_factor, np.eye(beam.n_f))

    def _p(self, tau):
        return self.manifold.G1(tau)

    def _pdot(self, tau):
        return self.manifold.H1(tau)

    def external_force(self, tau):
        if not self.forced:
            return np.zeros(self.ndof)
        return self.beam.load_vectors(tau)[0]

    def conservative_force(self, x):
        """Order-0 internal force ``K1 x + F(x, G0(x)) + G(x)``."""
        b = self.beam
        return b.K1 @ x + b.F(x, critical_manifold(b, x)) + b.G(x)

    def conservative_tangent(self, x):
        b = self.beam
        Dx = b.D(x)
        return b.K1 + b.S(critical_manifold(b, x)) - Dx @ self._K2inv @ Dx.T + b.dG(x)

    def internal_force(self, x, v, tau):
        b, eps, z = self.beam, self.beam.eps, self.beam.zeta
        f = self.conservative_force(x)
        if self.order >= 1:
            Dx = b.D(x)
            g1 = self._p(tau)
            h0 = -self._K2inv @ (Dx.T @ v)
            f = f + eps * (b.S(g1) @ x + z * (Dx @ h0 + b.K1 @ v + b.C(x) @ v))
        if self.order >= 2:
            f = f + eps**2 * self._order2_force(x, v, tau)
        return f

    def _order2_parts(self, x, v, tau):
        b = self.beam
        q = self.external_force(tau)
        p1 = -b.solve_M1(self.conservative_force(x) - q)
        h1 = self._pdot(tau)
        g2 = self._Ainv @ (2.0 * b.H(v) + b.E(x) @ p1) - b.zeta * h1
        return p1, h1, g2

    def _order2_force(self, x, v, tau):
        b = self.beam
        _, h1, g2 = self._order2_parts(x, v, tau)
        Dx = b.D(x)
        return Dx @ g2 + b.zeta * (Dx @ h1)

    def tangent(self, x, v, tau):
        """Return ``(df/dx, df/dv)``."""
        b, eps, z = self.beam, self.beam.eps, self.beam.zeta
        K0 = self.conservative_tangent(x)
        Kt = K0
        Ct = np.zeros_like(Kt)
        if self.order >= 1:
            Dx = b.D(x)
            Dv = b.D(v)
            g1 = self._p(tau)
            h0 = -self._K2inv @ (Dx.T @ v)
            Kt = Kt + eps * (b.S(g1) + z * (b.S(h0) - Dx @ self._K2inv @ Dv.T + b.C_rate(x, v)))
            Ct = eps * z * (b.K1 + b.C(x) - Dx @ self._K2inv @ Dx.T)
        if self.order >= 2:
            Dx = b.D(x)
            p1, h1, g2 = self._order2_parts(x, v, tau)
            dp1 = -b.solve_M1(K0)
            Kt = Kt + eps**2 * (b.S(g2) + Dx @ self._Ainv @ (b.D(p1).T + Dx.T @ dp1) + z * b.S(h1))
            Ct = Ct + eps**2 * (2.0 * Dx @ self._Ainv @ b.D(v).T)
        return Kt, Ct

    def acceleration(self, x, v, tau):
        """State in, acceleration out."""
        return self.beam.solve_M1(self.external_force(tau) - self.internal_force(x, v, tau))

    def energy(self, x, v):
        """Order-0 energy ``1/2 v^T M1 v + V(x, eps G0(x))``; conserved when unforced at order 0."""
        b = self.beam
        return 0.5 * v @ b.M1 @ v + b.potential_energy(x, b.eps * critical_manifold(b, x))

    def nonlinear_force(self, x, v):
        """Autonomous nonlinear part of the order-1 internal force (strictly cubic).

        Accepts complex arguments.
        """
        b, eps, z = self.beam, self.beam.eps, self.beam.zeta
        if self.order > 1:
            raise ValueError("the order-2 model is not a cubic polynomial system")
        g0 = -b.solve_K2(b.H(x))
        f = b.F(x, g0) + b.G(x)
        if self.order == 1:
            Dx = b.D(x)
            h0 = -b.solve_K2(Dx.T @ v)
            f = f + eps * z * (Dx @ h0 + b.C(x) @ v)
        return f

    def linear_damping(self):
        return self.beam.eps * self.beam.zeta * self.beam.K1 if self.order >= 1 else np.zeros_like(self.beam.K1)


def build_rom(beam: AssembledBeam, order: int = 1, forced: bool = True) -> SfdRom:
    return SfdRom(beam, order=order, forced=forced)
