"""Single-mode spectral submanifold of the diagonalized slow model.

The first-order system ``z~' = A z~ + t(z~)`` is brought to modal form
``z' = Lambda z + T(z)`` with ``z~ = P z``. The SSM of master mode ``l`` is
parametrized as ``z = W(s)``, ``s = (s1, s2)`` with ``s2 = conj(s1)``, and
carries the reduced dynamics

    s1' = lam s1 + beta s1^2 s2,    s2' = conj(lam) s2 + conj(beta) s1 s2^2.

Linear coefficients ``W1`` place ``c1, c2`` at the master rows; the
default normalization uses ``c1 = lam``, ``c2 = conj(lam)``, the alternative
uses ones. All modal tensor entries are evaluated on the columns of ``W1``
by polarization, so the coefficient formulas hold for either normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
import scipy.linalg as la

from .fem import cubic_trilinear, symmetric_bilinear
from .spectra import mode_roots, undamped_modes

SMALL_DIVISOR_TOL = 1e-6
NORMALIZATIONS = ("eigenvalue", "unit")


class SmallDivisorError(ArithmeticError):
    def __init__(self, row: int, triple: tuple, denominator: complex, reference: float):
        super().__init__(f"small divisor at row {row}, master index triple {triple}: "
                         f"|{denominator:.3e}| < tol * {reference:.3e}")
        self.row = row
        self.triple = triple
        self.denominator = denominator


class DiagonalizationError(ValueError):
    pass


@dataclass
class DiagonalizedSystem:
    """Modal form of ``z~' = A z~ + q(z~) + c(z~)`` with ``q`` quadratic, ``c`` cubic.

    ``conj_index[i]`` is the position of the complex-conjugate partner of
    eigenvalue ``i`` (itself for real eigenvalues).
    """

    eigenvalues: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    conj_index: np.ndarray
    A: np.ndarray
    quadratic: Callable | None = None
    cubic: Callable | None = None

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def has_quadratic(self) -> bool:
        return self.quadratic is not None

    @property
    def has_cubic(self) -> bool:
        return self.cubic is not None

    def to_modal(self, zt):
        return self.Pinv @ zt

    def to_physical(self, z):
        return self.P @ z

    def physical_nonlinearity(self, zt):
        out = np.zeros(self.dim, dtype=np.result_type(zt, complex))
        if self.quadratic is not None:
            out = out + self.quadratic(zt)
        if self.cubic is not None:
            out = out + self.cubic(zt)
        return out

    def modal_nonlinearity(self, z):
        """``T(z) = P^-1 t(P z)``."""
        return self.Pinv @ self.physical_nonlinearity(self.P @ z)

    def modal_bilinear(self, u, w):
        """Symmetric bilinear form of the modal quadratic part."""
        if self.quadratic is None:
            return np.zeros(self.dim, dtype=complex)
        return self.Pinv @ symmetric_bilinear(self.quadratic, self.P @ u, self.P @ w)

    def modal_trilinear(self, a, b, c):
        """Symmetric trilinear form of the modal cubic part."""
        if self.cubic is None:
            return np.zeros(self.dim, dtype=complex)
        return self.Pinv @ cubic_trilinear(self.cubic, self.P @ a, self.P @ b, self.P @ c, check=False)

    def master(self, mode: int) -> tuple[int, int]:
        m0 = 2 * (mode - 1)
        if not 0 <= m0 < self.dim - 1:
            raise ValueError(f"mode {mode} out of range for a {self.dim}-dimensional system")
        if self.conj_index[m0] != m0 + 1 or self.eigenvalues[m0].imag <= 0:
            raise DiagonalizationError(f"mode {mode} is not an underdamped conjugate pair")
        return m0, m0 + 1

    def diagonalization_residual(self) -> float:
        r = self.A @ self.P - self.P * self.eigenvalues[None, :]
        return float(np.linalg.norm(r) / (np.linalg.norm(self.A) * np.linalg.norm(self.P)))


def diagonalize(rom) -> DiagonalizedSystem:
    """Modal form of an autonomous slow model (order 0 or 1).

    The linear part is ``x'' = -M1^-1 K1 (x + c x')`` with ``c = zeta eps`` at
    order 1, so eigenpairs follow mode by mode from the undamped modes:
    eigenvector ``(phi_k, lam phi_k)`` for each root ``lam`` of the mode's
    quadratic. Underdamped pairs are stored ``+Im`` first; overdamped modes
    contribute two real eigenvalues. Critically damped (defective) modes are
    rejected.
    """
    if rom.order > 1:
        raise ValueError("only order-0 and order-1 models are polynomial")
    if rom.forced:
        raise ValueError("the SSM is computed for the autonomous model (forced=False)")
    beam = rom.beam
    n = beam.n_s
    M1, K1 = beam.M1, beam.K1
    c = beam.zeta * beam.eps if rom.order >= 1 else 0.0
    omega0, Phi = undamped_modes(K1, M1)
    pairs, over = mode_roots(omega0, c)
    gap = np.abs(pairs[:, 0] - pairs[:, 1])
    if np.any(gap <= 1e-8 * np.abs(pairs[:, 0])):
        k = int(np.argmin(gap / np.abs(pairs[:, 0])))
        raise DiagonalizationError(f"mode {k + 1} is critically damped; linear part is defective")
    lam = pairs.reshape(-1)
    P = np.zeros((2 * n, 2 * n), dtype=complex)
    Pinv = np.zeros((2 * n, 2 * n), dtype=complex)
    PhiTM = Phi.T @ M1
    conj_index = np.empty(2 * n, dtype=int)
    for k in range(n):
        la_, lb = pairs[k]
        ia, ib = 2 * k, 2 * k + 1
        P[:n, ia], P[n:, ia] = Phi[:, k], la_ * Phi[:, k]
        P[:n, ib], P[n:, ib] = Phi[:, k], lb * Phi[:, k]
        d = lb - la_
        Pinv[ia, :n], Pinv[ia, n:] = lb * PhiTM[k] / d, -PhiTM[k] / d
        Pinv[ib, :n], Pinv[ib, n:] = -la_ * PhiTM[k] / d, PhiTM[k] / d
        conj_index[ia], conj_index[ib] = (ia, ib) if over[k] else (ib, ia)
    Minv_K = la.cho_solve(beam.M1_factor, K1)
    A = np.block([[np.zeros((n, n)), np.eye(n)], [-Minv_K, -c * Minv_K]])

    def cubic(zt):
        x, v = zt[:n], zt[n:]
        acc = -beam.solve_M1(rom.nonlinear_force(x, v))
        return np.concatenate([np.zeros(n, dtype=acc.dtype), acc])

    return DiagonalizedSystem(lam, P, Pinv, conj_index, A, quadratic=None, cubic=cubic)


def diagonalize_first_order(A, quadratic: Callable | None = None, cubic: Callable | None = None,
                            ) -> DiagonalizedSystem:
    """Modal form of a general first-order polynomial system with real ``A``.

    Eigenvalues are grouped in conjugate pairs (``+Im`` first) ordered by
    decreasing real part; real eigenvalues follow one by one in the same order.
    """
    A = np.asarray(A, dtype=float)
    w, V = la.eig(A)
    order = np.lexsort((-w.imag, -w.real))
    w, V = w[order], V[:, order]
    used = np.zeros(w.size, dtype=bool)
    lam, cols, conj = [], [], []
    scale = max(np.max(np.abs(w)), 1.0)
    for i in range(w.size):
        if used[i]:
            continue
        used[i] = True
        if abs(w[i].imag) <= 1e-12 * scale:
            conj.append(len(lam))
            lam.append(complex(w[i].real))
            cols.append(V[:, i].real.astype(complex))
            continue
        cand = [j for j in range(w.size) if not used[j] and abs(w[j] - np.conj(w[i])) <= 1e-8 * scale]
        if not cand:
            raise DiagonalizationError("eigenvalues are not closed under conjugation")
        used[cand[0]] = True
        top = w[i] if w[i].imag > 0 else np.conj(w[i])
        vec = V[:, i] if w[i].imag > 0 else np.conj(V[:, i])
        base = len(lam)
        lam += [top, np.conj(top)]
        cols += [vec, np.conj(vec)]
        conj += [base + 1, base]
    P = np.column_stack(cols)
    if np.linalg.cond(P) > 1e12:
        raise DiagonalizationError("eigenvector matrix is numerically singular (defective linear part)")
    return DiagonalizedSystem(np.array(lam), P, la.inv(P), np.array(conj), A, quadratic, cubic)


# ----------------------------------------------------------------------
# coefficients


@dataclass
class SsmExpansion:
    mode: int
    master: tuple[int, int]
    eigenvalues: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    beta: complex
    beta_conj: complex
    normalization: str = "eigenvalue"
    variant: str = "cubic"
    notes: list = field(default_factory=list)

    @property
    def lam(self) -> complex:
        return self.eigenvalues[self.master[0]]

    @property
    def lam_conj(self) -> complex:
        return self.eigenvalues[self.master[1]]

    @property
    def scale(self) -> tuple[complex, complex]:
        m0, m1 = self.master
        return self.W1[m0, 0], self.W1[m1, 1]

    def R(self, s):
        s1, s2 = s
        return np.array([self.lam * s1 + self.beta * s1 * s1 * s2,
                         self.lam_conj * s2 + self.beta_conj * s1 * s2 * s2])


def _linear_part(sys: DiagonalizedSystem, mode: int, normalization: str):
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    m0, m1 = sys.master(mode)
    lam = sys.eigenvalues
    c = (lam[m0], lam[m1]) if normalization == "eigenvalue" else (1.0 + 0j, 1.0 + 0j)
    W1 = np.zeros((sys.dim, 2), dtype=complex)
    W1[m0, 0], W1[m1, 1] = c
    return (m0, m1), W1, (W1[:, 0].copy(), W1[:, 1].copy())


def _check_divisor(den, lam, rows, triple, tol):
    small = np.abs(den) < tol * np.abs(lam)
    small &= rows
    if np.any(small):
        i = int(np.flatnonzero(small)[0])
        raise SmallDivisorError(i, triple, complex(den[i]), float(abs(lam[i])))


def modal_cubic_slices(sys: DiagonalizedSystem, mode: int, normalization: str = "eigenvalue",
                       allow_quadratic: bool = False):
    """``T[j, k, l, :] = T(v_j, v_k, v_l)`` for the 8 master triples.

    ``v_0, v_1`` are the columns of ``W1``; with unit normalization these are
    the master unit vectors and the slices are the modal tensor entries
    ``T_{i, jkl}``. Only the four distinct symmetric slices are evaluated.
    """
    if sys.has_quadratic and not allow_quadratic:
        raise ValueError("system has quadratic terms; use compute_ssm_general")
    _, _, v = _linear_part(sys, mode, normalization)
    T = np.zeros((2, 2, 2, sys.dim), dtype=complex)
    cache = {}
    for j, k, l in product((0, 1), repeat=3):
        key = tuple(sorted((j, k, l)))
        if key not in cache:
            cache[key] = sys.modal_trilinear(v[key[0]], v[key[1]], v[key[2]])
        T[j, k, l] = cache[key]
    return T


def _cubic_coefficients(sys, master, W1, numer, tol):
    """Solve the cubic homological equations for per-permutation numerators.

    ``numer[j,k,l]`` is the part of the order-3 forcing attributed to the
    ordered triple ``(j,k,l)``; resonant entries (master row with matching
    monomial) are removed and collected into ``beta``.
    """
    m0, m1 = master
    lam = sys.eigenvalues
    l1, l2 = lam[m0], lam[m1]
    n = sys.dim
    W3 = np.zeros((n, 2, 2, 2), dtype=complex)
    rows = np.ones(n, dtype=bool)
    for j, k, l in product((0, 1), repeat=3):
        cnt = j + k + l
        den = (3 - cnt) * l1 + cnt * l2 - lam
        keep = rows.copy()
        if cnt == 1:
            keep[m0] = False
        elif cnt == 2:
            keep[m1] = False
        triple = tuple(master[t] + 1 for t in (j, k, l))
        _check_divisor(den, lam, keep, triple, tol)
        W3[keep, j, k, l] = numer[j, k, l][keep] / den[keep]
    mixed1 = [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    mixed2 = [(1, 1, 0), (1, 0, 1), (0, 1, 1)]
    beta = sum(numer[t][m0] for t in mixed1) / W1[m0, 0]
    beta_conj = sum(numer[t][m1] for t in mixed2) / W1[m1, 1]
    return W3, complex(beta), complex(beta_conj)


def compute_ssm(sys: DiagonalizedSystem, mode: int = 1, normalization: str = "eigenvalue",
                tol: float = SMALL_DIVISOR_TOL) -> SsmExpansion:
    """Cubic-order SSM of a strictly cubic modal system."""
    master, W1, _ = _linear_part(sys, mode, normalization)
    T = modal_cubic_slices(sys, mode, normalization)
    W2 = np.zeros((sys.dim, 2, 2), dtype=complex)
    W3, beta, beta_c = _cubic_coefficients(sys, master, W1, T, tol)
    return SsmExpansion(mode, master, sys.eigenvalues.copy(), W1, W2, W3, beta, beta_c,
                        normalization, "cubic")


def compute_ssm_general(sys: DiagonalizedSystem, mode: int = 1, normalization: str = "eigenvalue",
                        tol: float = SMALL_DIVISOR_TOL, variant: str = "corrected") -> SsmExpansion:
    """Cubic-order SSM of a quadratic-plus-cubic modal system.

    Quadratic coefficients ``W2[:, a, b] = B(v_a, v_b) / (lam_a + lam_b - Lambda)``.
    At cubic order the quadratic terms feed the monomials ``s1^3``,
    ``s1^2 s2``, ``s1 s2^2``, ``s2^3`` with

        C = 2 B(v0, W2_00)
        V = 2 B(v0, W2_01 + W2_10) + 2 B(v1, W2_00)
        U = 2 B(v1, W2_01 + W2_10) + 2 B(v0, W2_11)
        D = 2 B(v1, W2_11)

    and each ordered mixed triple receives one third of ``V`` (or ``U``),
    matching the three permutations over which the cubic tensor entries are
    summed. ``beta = (V_l + sum of mixed T slices at row l) / c1``.

    ``variant="naive"`` instead doubles the master-index term in every
    quadratic sum and adds the full ``V`` / ``U`` to each permutation; it is
    kept to document that this bookkeeping does not satisfy the invariance
    equation.
    """
    if variant not in ("corrected", "naive"):
        raise ValueError(f"variant must be 'corrected' or 'naive', got {variant!r}")
    master, W1, v = _linear_part(sys, mode, normalization)
    m0, m1 = master
    lam = sys.eigenvalues
    lm = (lam[m0], lam[m1])
    n = sys.dim
    W2 = np.zeros((n, 2, 2), dtype=complex)
    all_rows = np.ones(n, dtype=bool)
    for a, b in product((0, 1), repeat=2):
        den = lm[a] + lm[b] - lam
        _check_divisor(den, lam, all_rows, (master[a] + 1, master[b] + 1), tol)
        W2[:, a, b] = sys.modal_bilinear(v[a], v[b]) / den

    def two_b(a, w):
        out = 2.0 * sys.modal_bilinear(v[a], w)
        if variant == "naive":
            # doubled master-index contribution
            m = master[a]
            out = out + 2.0 * sys.modal_bilinear(v[a], v[a]) * (w[m] / W1[m, a])
        return out

    if sys.has_quadratic:
        w_mix = W2[:, 0, 1] + W2[:, 1, 0]
        C = two_b(0, W2[:, 0, 0])
        V = two_b(0, w_mix) + two_b(1, W2[:, 0, 0])
        U = two_b(1, w_mix) + two_b(0, W2[:, 1, 1])
        D = two_b(1, W2[:, 1, 1])
    else:
        C = V = U = D = np.zeros(n, dtype=complex)
    T = modal_cubic_slices(sys, mode, normalization, allow_quadratic=True)
    share = 1.0 if variant == "naive" else 1.0 / 3.0
    numer = np.empty_like(T)
    for j, k, l in product((0, 1), repeat=3):
        cnt = j + k + l
        extra = {0: C, 1: share * V, 2: share * U, 3: D}[cnt]
        numer[j, k, l] = T[j, k, l] + extra if sys.has_quadratic else T[j, k, l]
    W3, beta, beta_c = _cubic_coefficients(sys, master, W1, numer, tol)
    if variant == "naive" and sys.has_quadratic:
        # naive beta adds V_l once on top of the slice sum
        beta = complex((V[m0] + sum(T[t][m0] for t in [(0, 0, 1), (0, 1, 0), (1, 0, 0)])) / W1[m0, 0])
        beta_c = complex((U[m1] + sum(T[t][m1] for t in [(1, 1, 0), (1, 0, 1), (0, 1, 1)])) / W1[m1, 1])
    return SsmExpansion(mode, master, lam.copy(), W1, W2, W3, beta, beta_c, normalization, variant)


# ----------------------------------------------------------------------
# evaluation


def _as_pair(s, check: bool):
    s = np.asarray(s, dtype=complex)
    if s.shape != (2,):
        raise ValueError(f"parametrization must have shape (2,), got {s.shape}")
    if check and abs(s[1] - np.conj(s[0])) > 1e-12 * max(abs(s[0]), 1.0):
        raise ValueError("parametrization must be a conjugate pair (s1, conj(s1))")
    return s


def polar_to_s(rho: float, theta: float) -> np.ndarray:
    return np.array([rho * np.exp(1j * theta), rho * np.exp(-1j * theta)])


def evaluate_w(exp: SsmExpansion, s, check: bool = True) -> np.ndarray:
    """``W(s) = W1 s + W2(s, s) + W3(s, s, s)``; ``s`` must be a conjugate pair."""
    s = _as_pair(s, check)
    return (exp.W1 @ s + np.einsum("iab,a,b->i", exp.W2, s, s)
            + np.einsum("iabc,a,b,c->i", exp.W3, s, s, s))


def jacobian_w(exp: SsmExpansion, s) -> np.ndarray:
    s = _as_pair(s, check=False)
    J = exp.W1.astype(complex).copy()
    J += np.einsum("imb,b->im", exp.W2 + exp.W2.transpose(0, 2, 1), s)
    W3 = exp.W3
    sym = W3 + W3.transpose(0, 2, 1, 3) + W3.transpose(0, 2, 3, 1)
    J += np.einsum("imbc,b,c->im", sym, s, s)
    return J


def invariance_residual(sys: DiagonalizedSystem, exp: SsmExpansion, s) -> np.ndarray:
    """``DW(s) R(s) - Lambda W(s) - T(W(s))``."""
    s = _as_pair(s, check=False)
    W = evaluate_w(exp, s, check=False)
    return jacobian_w(exp, s) @ exp.R(s) - sys.eigenvalues * W - sys.modal_nonlinearity(W)


def residual_sweep(sys, exp, rhos, theta: float = 0.3):
    """Residual norms along ``s = (rho e^{i theta}, rho e^{-i theta})``."""
    return np.array([np.linalg.norm(invariance_residual(sys, exp, polar_to_s(r, theta))) for r in rhos])


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def lift_physical(sys: DiagonalizedSystem, exp: SsmExpansion, s) -> np.ndarray:
    """Real physical state ``P W(s)``; raises if the imaginary part is not negligible."""
    zt = sys.P @ evaluate_w(exp, s)
    scale = max(np.max(np.abs(zt)), 1e-300)
    if np.max(np.abs(zt.imag)) > 1e-8 * scale:
        raise ValueError("lifted state is not real; expansion lacks conjugate symmetry")
    return zt.real


@dataclass(frozen=True)
class PolarDynamics:
    re_lambda: float
    im_lambda: float
    re_beta: float
    im_beta: float

    def backbone(self, rho):
        """Amplitude-dependent frequency ``Im lam + Im beta rho^2``."""
        return self.im_lambda + self.im_beta * np.asarray(rho) ** 2

    def rho_rate(self, rho):
        rho = np.asarray(rho)
        return rho * (self.re_lambda + self.re_beta * rho**2)

    def stationary_amplitude(self) -> float | None:
        if self.re_beta == 0 or self.re_lambda * self.re_beta >= 0:
            return None
        return math.sqrt(-self.re_lambda / self.re_beta)

    def rho_closed_form(self, rho0: float, tau):
        """Exact amplitude ``rho(tau)`` from the Bernoulli equation (while it exists)."""
        a, b = self.re_lambda, self.re_beta
        tau = np.asarray(tau, dtype=float)
        if rho0 == 0:
            return np.zeros_like(tau)
        e = np.exp(2 * a * tau)
        if a == 0:
            return rho0 / np.sqrt(1 - 2 * b * rho0**2 * tau)
        return rho0 * np.sqrt(e) / np.sqrt(1 + (b / a) * rho0**2 * (1 - e))


def reduced_dynamics(exp: SsmExpansion) -> PolarDynamics:
    lam, beta = exp.lam, exp.beta
    return PolarDynamics(float(lam.real), float(lam.imag), float(beta.real), float(beta.imag))


def modal_trajectory(sys: DiagonalizedSystem, x, xdot) -> np.ndarray:
    """Modal coordinates ``P^-1 (x, x')`` for every sample (rows)."""
    zt = np.hstack([np.atleast_2d(x), np.atleast_2d(xdot)])
    return zt @ sys.Pinv.T


def master_coordinates(exp: SsmExpansion, z, iterations: int = 30, tol: float = 1e-13):
    """Parametrization ``s`` whose SSM point has the master components of ``z``.

    Solves ``W(s)[master] = z[master]`` by Newton's method from the linear
    guess ``z[master] / c``. Far from the origin the cubic truncation need not
    be invertible; the iterate with the smallest mismatch is returned.
    """
    m0, m1 = exp.master
    c = np.array(exp.scale)
    target = np.array([z[m0], z[m1]], dtype=complex)
    s = target / c
    best, best_res = s, np.inf
    ref = max(np.max(np.abs(target)), 1e-300)
    for _ in range(iterations):
        r = target - evaluate_w(exp, s, check=False)[[m0, m1]]
        res = np.max(np.abs(r)) / ref
        if not np.isfinite(res):
            break
        if res < best_res:
            best, best_res = s, res
        if res <= tol:
            break
        J = jacobian_w(exp, s)[[m0, m1]]
        try:
            s = s + np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
    return best


def ssm_diagnostics(sys: DiagonalizedSystem, exp: SsmExpansion, z):
    """Transverse distance ``|Q2(z) - Q2(W(s))|`` and master amplitude ``|Q1(z)|``.

    ``z`` holds modal states as rows; ``s`` is obtained from the master
    components with :func:`master_coordinates`.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    if z.shape[1] != sys.dim or exp.eigenvalues.size != sys.dim:
        raise ValueError("trajectory dimension does not match the expansion")
    m0, m1 = exp.master
    mask = np.ones(sys.dim, dtype=bool)
    mask[[m0, m1]] = False
    dist = np.empty(z.shape[0])
    amp = np.empty(z.shape[0])
    for r, zr in enumerate(z):
        W = evaluate_w(exp, master_coordinates(exp, zr), check=False)
        dist[r] = np.linalg.norm(zr[mask] - W[mask])
        amp[r] = np.linalg.norm(zr[[m0, m1]])
    return dist, amp


def coefficient_records(exp: SsmExpansion):
    """Records ``(i, j, k, l, Re, Im)`` of the nonzero coefficients.

    Indices are 1-based modal rows ``i`` and master-column indices
    ``j, k, l`` in {1, 2}; unused index positions are 0 (so ``W1`` entries
    have ``k = l = 0`` and ``W2`` entries have ``l = 0``).
    """
    rows = []
    for i, j in zip(*np.nonzero(exp.W1)):
        rows.append((i + 1, j + 1, 0, 0, exp.W1[i, j].real, exp.W1[i, j].imag))
    for i, j, k in zip(*np.nonzero(exp.W2)):
        rows.append((i + 1, j + 1, k + 1, 0, exp.W2[i, j, k].real, exp.W2[i, j, k].imag))
    for i, j, k, l in zip(*np.nonzero(exp.W3)):
        c = exp.W3[i, j, k, l]
        rows.append((i + 1, j + 1, k + 1, l + 1, c.real, c.imag))
    return rows
