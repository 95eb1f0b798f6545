"""Eigenanalysis of the linearized reduced model.

The linear part of the slow model is ``M1 x'' + zeta eps K1 x' + K1 x = 0``:
damping is stiffness-proportional, so every undamped mode ``(w0k, phi_k)``
carries its own pair of roots of ``lam^2 + zeta eps w0k^2 lam + w0k^2 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

RESONANCE_TOL = 1e-6


class SpectrumError(ValueError):
    pass


def undamped_modes(K1, M1):
    """Mass-normalized undamped modes ``(w0, Phi0)``, ascending frequencies."""
    try:
        w2, Phi = la.eigh(K1, M1)
    except la.LinAlgError as exc:
        raise SpectrumError(f"stiffness/mass pair is not symmetric positive definite: {exc}") from None
    if w2[0] <= 0:
        raise SpectrumError("stiffness matrix is not positive definite")
    return np.sqrt(w2), Phi


def beam_modes(beam):
    return undamped_modes(beam.K1, beam.M1)


@dataclass(frozen=True)
class DampedSpectrum:
    """Per-mode root pairs, ``eigenvalues[2k], eigenvalues[2k+1]`` for mode ``k+1``.

    Underdamped pairs are stored ``+Im`` first; overdamped (real) pairs store
    the slower root first and are flagged in ``overdamped``.
    """

    omega0: np.ndarray
    eigenvalues: np.ndarray
    overdamped: np.ndarray
    damping: float
    method: str

    @property
    def n_modes(self) -> int:
        return len(self.omega0)

    def pair(self, mode: int):
        return self.eigenvalues[2 * (mode - 1)], self.eigenvalues[2 * (mode - 1) + 1]

    def mode_real_parts(self) -> np.ndarray:
        """One real part per mode: the slower (less negative) root of the pair."""
        ev = self.eigenvalues.reshape(-1, 2)
        return np.max(ev.real, axis=1)


def mode_roots(omega0, c):
    """Roots of ``lam^2 + c w^2 lam + w^2`` per mode; returns (pairs, overdamped)."""
    omega0 = np.asarray(omega0, dtype=float)
    half = 0.5 * c * omega0**2
    disc = half**2 - omega0**2
    over = disc >= 0
    pairs = np.empty((omega0.size, 2), dtype=complex)
    root = np.sqrt(np.abs(disc))
    pairs[:, 0] = np.where(over, -half + root, -half + 1j * root)
    pairs[:, 1] = np.where(over, -half - root, -half - 1j * root)
    return pairs, over


def damped_eigenvalues(omega0, damping: float, method: str = "exact") -> DampedSpectrum:
    """Complex eigenvalues of the stiffness-proportionally damped linear model.

    ``damping`` is the product ``zeta * eps``. ``exact`` returns the roots of the
    per-mode quadratic; ``approx`` returns ``-(damping/2) w0k^2 +- i w0k``.
    Modes with non-negative discriminant are flagged as overdamped in both
    methods.
    """
    omega0 = np.asarray(omega0, dtype=float)
    if method not in ("exact", "approx"):
        raise ValueError(f"method must be 'exact' or 'approx', got {method!r}")
    if damping < 0:
        raise ValueError("damping must be non-negative")
    pairs, over = mode_roots(omega0, damping)
    if method == "approx":
        re = -0.5 * damping * omega0**2
        pairs = np.stack([re + 1j * omega0, re - 1j * omega0], axis=1)
    return DampedSpectrum(omega0, pairs.reshape(-1), over, float(damping), method)


def beam_spectrum(beam, method: str = "exact") -> DampedSpectrum:
    omega0, _ = beam_modes(beam)
    return damped_eigenvalues(omega0, beam.zeta * beam.eps, method)


def spectral_quotients(spectrum: DampedSpectrum, mode: int = 1):
    """Successive per-mode real-part ratios and the relative spectral quotient.

    Returns ``(ratios, sigma)`` with ``ratios[k] = Re lam_{k+2} / Re lam_{k+1}``
    over modes sorted by decreasing real part and
    ``sigma = Int[min_j Re lam_j / Re lam_mode]`` over all roots outside the
    master pair.
    """
    if not 1 <= mode <= spectrum.n_modes:
        raise ValueError(f"mode must be in [1, {spectrum.n_modes}], got {mode}")
    re_modes = np.sort(spectrum.mode_real_parts())[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = re_modes[1:] / re_modes[:-1]
    ev = spectrum.eigenvalues
    master = {2 * (mode - 1), 2 * (mode - 1) + 1}
    others = np.array([ev[i].real for i in range(ev.size) if i not in master])
    re_master = ev[2 * (mode - 1)].real
    if re_master >= 0:
        raise SpectrumError("master mode is not asymptotically stable")
    sigma = int(math.floor(np.min(others) / re_master)) if others.size else 0
    return ratios, sigma


@dataclass
class ResonanceReport:
    passed: bool
    sigma: int
    tol: float
    margin: float
    worst: tuple | None = None
    resonances: list = field(default_factory=list)

    def describe(self) -> str:
        if self.worst is None:
            return f"non-resonance: vacuous pass (sigma={self.sigma})"
        j, a, b = self.worst
        status = "pass" if self.passed else "FAIL"
        return (f"non-resonance {status}: sigma={self.sigma}, nearest {a}*lam + {b}*conj(lam) vs "
                f"lam[{j}] with relative margin {self.margin:.3e} (tol {self.tol:g})")


def check_nonresonance(eigenvalues, mode: int, sigma: int, tol: float = RESONANCE_TOL,
                       scale: str = "master") -> ResonanceReport:
    """Check ``|a lam + b conj(lam) - lam_j| > tol * s`` for ``2 <= a+b <= sigma``.

    ``eigenvalues`` is the per-mode pair list (a :class:`DampedSpectrum` or an
    array); the master pair occupies positions ``2(mode-1), 2(mode-1)+1``.
    The reference magnitude ``s`` is ``|lam|`` of the master mode
    (``scale="master"``) or ``|lam_j|`` (``scale="target"``). With real,
    strongly overdamped ``lam_j`` the lattice ``a lam + b conj(lam)`` comes
    within ``|Re lam|`` of every ``lam_j``, so the target-relative test fails
    generically once ``|lam_j| > |Re lam| / tol``; the master scale measures
    distances in the lattice's own unit. ``margin`` is reported in the chosen
    scale. For each order the best ``a`` is chosen in closed form and only a
    window of orders around ``Re lam_j / Re lam`` is scanned, so the cost per
    eigenvalue is O(|lam| / |Re lam|) independently of ``sigma``.
    """
    if scale not in ("master", "target"):
        raise ValueError(f"scale must be 'master' or 'target', got {scale!r}")
    ev = np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), dtype=complex)
    m0 = 2 * (mode - 1)
    if not 0 <= m0 < ev.size - 1:
        raise ValueError(f"mode {mode} out of range")
    lam = ev[m0]
    if sigma < 2:
        return ResonanceReport(True, sigma, tol, math.inf)
    alpha, omega = lam.real, lam.imag
    # |a lam + b conj(lam) - lam_j| >= |n alpha - Re lam_j|, and some order
    # within a window of half-width ~ (|alpha| + |omega|)/|alpha| around the
    # best real-part match attains at most |alpha| + |omega|; orders outside
    # that window cannot be nearer, so only the window is scanned.
    half = int(math.ceil((abs(alpha) + abs(omega)) / abs(alpha))) + 2 if alpha != 0 else sigma
    best = (math.inf, None)
    failures = []
    for j, lj in enumerate(ev):
        if j in (m0, m0 + 1):
            continue
        center = int(round(lj.real / alpha)) if alpha != 0 else 2
        lo = min(max(center - half, 2), max(sigma - 2 * half, 2))
        hi = max(min(center + half, sigma), min(2 + 2 * half, sigma))
        orders = np.arange(lo, hi + 1, dtype=float)
        # a lam + b conj(lam) = n alpha + i (a - b) omega with a + b = n
        if omega != 0:
            a = np.clip(np.round((lj.imag / omega + orders) / 2.0), 0, orders)
        else:
            a = np.zeros_like(orders)
        val = orders * alpha + 1j * (2 * a - orders) * omega - lj
        ref = abs(lam) if scale == "master" else abs(lj)
        rel = np.abs(val) / max(ref, 1e-300)
        k = int(np.argmin(rel))
        if rel[k] < best[0]:
            n = int(orders[k])
            best = (float(rel[k]), (j, int(a[k]), n - int(a[k])))
        for k in np.flatnonzero(rel <= tol)[:10]:
            n = int(orders[k])
            failures.append((j, int(a[k]), n - int(a[k]), float(rel[k])))
    return ResonanceReport(not failures, sigma, tol, best[0], best[1], failures)


def spectrum_rows(spectrum: DampedSpectrum):
    """Rows ``(k, w0k, Re lam_k, Im lam_k, ratio)``, one per mode, ratio to the previous mode."""
    rows = []
    prev = None
    for k in range(spectrum.n_modes):
        lam = spectrum.eigenvalues[2 * k]
        re = spectrum.mode_real_parts()[k]
        ratio = re / prev if prev not in (None, 0.0) else float("nan")
        rows.append((k + 1, float(spectrum.omega0[k]), float(re), float(abs(lam.imag)), float(ratio)))
        prev = re
    return rows
