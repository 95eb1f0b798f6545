"""Nondimensional finite-element von Karman beam with Kelvin-Voigt damping.

Transverse deflection uses cubic Hermite elements (deflection and slope per
node), axial displacement uses linear elements. The discrete equations are

    M1 x'' + zeta*eps*(K1 + C(x)) x' + zeta*D(x) y' + K1 x + F(x, y)/eps + G(x) = alpha q(tau)
    M2 y'' + (zeta/eps)*K2 y' + zeta*E(x) x' + K2 y/eps**2 + H(x)/eps = beta p(tau)

with all nonlinear terms following from the membrane strain
``m = u' + (eps/2) w'**2``:

    F(x, y)_i = int u' w' N_i'          G(x)_i = 1/2 int w'^3 N_i'
    H(x)_a    = 1/2 int w'^2 L_a'       C(x)_ij = int w'^2 N_i' N_j'
    D(x)_ia   = int w' N_i' L_a'        E(x) = D(x)^T

Nonlinear terms are evaluated element by element; nothing O(n^3) or larger
is ever stored except through :meth:`AssembledBeam.dense_tensors`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .config import BeamConfig

# Gauss-Legendre points on [0, 1]; 7 points integrate degree 13 exactly.
N_GAUSS = 7
_gp, _gw = np.polynomial.legendre.leggauss(N_GAUSS)
GAUSS_XI = 0.5 * (_gp + 1.0)
GAUSS_W = 0.5 * _gw

DENSE_TENSOR_LIMIT = 12


class AssemblyError(ValueError):
    pass


def hermite_shapes(xi: np.ndarray, h: float):
    """Hermite cubic values and x-derivatives at local coordinates ``xi``.

    Returns arrays of shape ``(len(xi), 4)`` for N, N', N'' ordered as
    (w_a, theta_a, w_b, theta_b).
    """
    xi = np.asarray(xi, dtype=float)
    N = np.stack([1 - 3 * xi**2 + 2 * xi**3,
                  h * (xi - 2 * xi**2 + xi**3),
                  3 * xi**2 - 2 * xi**3,
                  h * (-xi**2 + xi**3)], axis=-1)
    dN = np.stack([(-6 * xi + 6 * xi**2) / h,
                   1 - 4 * xi + 3 * xi**2,
                   (6 * xi - 6 * xi**2) / h,
                   -2 * xi + 3 * xi**2], axis=-1)
    ddN = np.stack([(-6 + 12 * xi) / h**2,
                    (-4 + 6 * xi) / h,
                    (6 - 12 * xi) / h**2,
                    (-2 + 6 * xi) / h], axis=-1)
    return N, dN, ddN


def linear_shapes(xi: np.ndarray, h: float):
    xi = np.asarray(xi, dtype=float)
    L = np.stack([1 - xi, xi], axis=-1)
    dL = np.stack([np.full_like(xi, -1.0 / h), np.full_like(xi, 1.0 / h)], axis=-1)
    return L, dL


def _solve_spd(factor, b):
    """Cholesky solve that also accepts complex right-hand sides."""
    b = np.asarray(b)
    if np.iscomplexobj(b):
        return la.cho_solve(factor, b.real) + 1j * la.cho_solve(factor, b.imag)
    return la.cho_solve(factor, b)


@dataclass(frozen=True)
class DofMap:
    """Free-DOF bookkeeping. Full transverse DOF ``2*node + {0: w, 1: slope}``,
    full axial DOF ``node``."""

    free_w: np.ndarray
    free_u: np.ndarray
    n_nodes: int

    @property
    def n_s(self) -> int:
        return len(self.free_w)

    @property
    def n_f(self) -> int:
        return len(self.free_u)

    def transverse_index(self, node: int, kind: str = "w") -> int | None:
        full = 2 * node + (0 if kind == "w" else 1)
        hit = np.flatnonzero(self.free_w == full)
        return int(hit[0]) if hit.size else None

    def axial_index(self, node: int) -> int | None:
        hit = np.flatnonzero(self.free_u == node)
        return int(hit[0]) if hit.size else None


class AssembledBeam:
    """Assembled matrices plus element-level evaluators of the nonlinear terms.

    Vectors passed to the evaluators are in reduced (free-DOF) numbering and
    may be complex; all evaluators are polynomial in their arguments.
    Instances are not mutated after construction.
    """

    def __init__(self, config: BeamConfig):
        self.config = config
        self.eps = float(config.eps)
        self.zeta = config.zeta_value
        self.alpha = float(config.alpha)
        self.beta = float(config.beta)

        ne = int(config.n_elements)
        self.n_elements = ne
        self.h = 1.0 / ne
        n_nodes = ne + 1
        self.nodes = np.linspace(0.0, 1.0, n_nodes)

        self._ew = np.array([[2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3] for e in range(ne)])
        self._eu = np.array([[e, e + 1] for e in range(ne)])
        self._nw_full = 2 * n_nodes
        self._nu_full = n_nodes

        if config.bc == "pinned-pinned":
            fixed_w = [0, 2 * ne]
        else:
            fixed_w = [0, 1, 2 * ne, 2 * ne + 1]
        fixed_u = [0, ne]
        self.dofs = DofMap(
            free_w=np.setdiff1d(np.arange(self._nw_full), fixed_w),
            free_u=np.setdiff1d(np.arange(self._nu_full), fixed_u),
            n_nodes=n_nodes,
        )
        self.n_s = self.dofs.n_s
        self.n_f = self.dofs.n_f

        self._N, self._dN, self._ddN = hermite_shapes(GAUSS_XI, self.h)
        self._L, self._dL = linear_shapes(GAUSS_XI, self.h)
        self._wq = self.h * GAUSS_W

        self.M1 = self._restrict_w(self._assemble_ww(np.einsum("g,gk,gl->kl", self._wq, self._N, self._N)))
        self.K1 = self._restrict_w(self._assemble_ww(
            np.einsum("g,gk,gl->kl", self._wq, self._ddN, self._ddN) / 12.0))
        self.M2 = self._restrict_u(self._assemble_uu(np.einsum("g,gk,gl->kl", self._wq, self._L, self._L)))
        self.K2 = self._restrict_u(self._assemble_uu(np.einsum("g,gk,gl->kl", self._wq, self._dL, self._dL)))

        try:
            self.M1_factor = la.cho_factor(self.M1)
            self.K1_factor = la.cho_factor(self.K1)
            self.M2_factor = la.cho_factor(self.M2)
            self.K2_factor = la.cho_factor(self.K2)
        except la.LinAlgError as exc:
            raise AssemblyError(f"matrix not positive definite after boundary conditions: {exc}") from None
        if np.linalg.cond(self.K2) > 1e14:
            raise AssemblyError("K2 is numerically singular; boundary conditions insufficient")

        q_e = self._wq @ self._N
        p_e = self._wq @ self._L
        if config.forcing.profile == "none":
            q_e, p_e = 0 * q_e, 0 * p_e
        self.q_full = self._scatter_w(np.tile(q_e, (ne, 1)))
        self.p_full = self._scatter_u(np.tile(p_e, (ne, 1)))
        self.q_vec = self.q_full[self.dofs.free_w]
        self.p_vec = self.p_full[self.dofs.free_u]

        if config.forcing.omega is None:
            self.omega = float(math.sqrt(la.eigh(self.K1, self.M1, eigvals_only=True, subset_by_index=[0, 0])[0]))
        else:
            self.omega = float(config.forcing.omega)

    # ------------------------------------------------------------------
    # scatter / gather helpers

    def _assemble_ww(self, ke):
        out = np.zeros((self._nw_full, self._nw_full), dtype=ke.dtype)
        ke = np.broadcast_to(ke, (self.n_elements, 4, 4))
        np.add.at(out, (self._ew[:, :, None], self._ew[:, None, :]), ke)
        return out

    def _assemble_uu(self, ke):
        out = np.zeros((self._nu_full, self._nu_full), dtype=ke.dtype)
        ke = np.broadcast_to(ke, (self.n_elements, 2, 2))
        np.add.at(out, (self._eu[:, :, None], self._eu[:, None, :]), ke)
        return out

    def _assemble_wu(self, ke):
        out = np.zeros((self._nw_full, self._nu_full), dtype=ke.dtype)
        np.add.at(out, (self._ew[:, :, None], self._eu[:, None, :]), ke)
        return out

    def _scatter_w(self, ve):
        out = np.zeros(self._nw_full, dtype=ve.dtype)
        np.add.at(out, self._ew, ve)
        return out

    def _scatter_u(self, ve):
        out = np.zeros(self._nu_full, dtype=ve.dtype)
        np.add.at(out, self._eu, ve)
        return out

    def _restrict_w(self, a):
        f = self.dofs.free_w
        return a[np.ix_(f, f)] if a.ndim == 2 else a[f]

    def _restrict_u(self, a):
        f = self.dofs.free_u
        return a[np.ix_(f, f)] if a.ndim == 2 else a[f]

    def _check(self, x=None, y=None):
        if x is not None and np.shape(x) != (self.n_s,):
            raise ValueError(f"transverse vector must have shape ({self.n_s},), got {np.shape(x)}")
        if y is not None and np.shape(y) != (self.n_f,):
            raise ValueError(f"axial vector must have shape ({self.n_f},), got {np.shape(y)}")

    def _wp(self, x):
        """w' at the Gauss points of every element, shape (ne, ng)."""
        x = np.asarray(x)
        xf = np.zeros(self._nw_full, dtype=x.dtype)
        xf[self.dofs.free_w] = x
        return xf[self._ew] @ self._dN.T

    def _up(self, y):
        y = np.asarray(y)
        yf = np.zeros(self._nu_full, dtype=y.dtype)
        yf[self.dofs.free_u] = y
        return yf[self._eu] @ self._dL.T

    def _vec_w(self, coeff):
        """Assemble int coeff * N_i' over the mesh, restricted to free DOFs."""
        return self._restrict_w(self._scatter_w((coeff * self._wq) @ self._dN))

    def _vec_u(self, coeff):
        return self._restrict_u(self._scatter_u((coeff * self._wq) @ self._dL))

    def _mat_ww(self, coeff):
        ke = np.einsum("eg,gk,gl->ekl", coeff * self._wq, self._dN, self._dN)
        return self._restrict_w(self._assemble_ww(ke))

    # ------------------------------------------------------------------
    # nonlinear terms

    def F(self, x, y):
        """Bilinear coupling force ``F(x, y)``."""
        self._check(x, y)
        return self._vec_w(self._up(y) * self._wp(x))

    def G(self, x):
        """Cubic transverse force ``G(x)``."""
        self._check(x)
        return self._vec_w(0.5 * self._wp(x) ** 3)

    def H(self, x):
        """Quadratic axial force ``H(x)``."""
        self._check(x)
        return self._vec_u(0.5 * self._wp(x) ** 2)

    def C(self, x):
        """Nonlinear transverse damping matrix ``C(x)`` (quadratic in x)."""
        self._check(x)
        return self._mat_ww(self._wp(x) ** 2)

    def D(self, x):
        """Coupling damping matrix ``D(x)`` (n_s x n_f, linear in x).

        Also the y-Jacobian of ``F``: ``F(x, y) = D(x) @ y``.
        """
        self._check(x)
        ke = np.einsum("eg,gk,gl->ekl", self._wp(x) * self._wq, self._dN, self._dL)
        return self._assemble_wu(ke)[np.ix_(self.dofs.free_w, self.dofs.free_u)]

    def E(self, x):
        """Axial damping coupling ``E(x) = D(x)^T``, the Jacobian of ``H``."""
        return self.D(x).T

    def S(self, y):
        """Geometric stiffness of an axial field: ``F(x, y) = S(y) @ x``."""
        self._check(y=y)
        return self._mat_ww(self._up(y))

    def C_rate(self, x, v):
        """x-Jacobian of ``C(x) @ v``: ``2 int w'(x) w'(v) N_i' N_j'``."""
        self._check(x)
        self._check(v)
        return self._mat_ww(2.0 * self._wp(x) * self._wp(v))

    def dG(self, x):
        """Jacobian of ``G``: ``1.5 * C(x)``."""
        return 1.5 * self.C(x)

    # ------------------------------------------------------------------
    # forces and energies

    def elastic_force(self, x, y):
        """Return ``(K1 x + F(x,y)/eps + G(x), K2 y/eps^2 + H(x)/eps)``."""
        self._check(x, y)
        eps = self.eps
        f_x = self.K1 @ x + self.F(x, y) / eps + self.G(x)
        f_y = self.K2 @ y / eps**2 + self.H(x) / eps
        return f_x, f_y

    def damping_force(self, x, xdot, ydot):
        """Return the Kelvin-Voigt damping forces ``(d_x, d_y)``."""
        self._check(x, ydot)
        self._check(xdot)
        z, eps = self.zeta, self.eps
        Dx = self.D(x)
        d_x = z * eps * (self.K1 @ xdot + self.C(x) @ xdot) + z * (Dx @ ydot)
        d_y = (z / eps) * (self.K2 @ ydot) + z * (Dx.T @ xdot)
        return d_x, d_y

    def load_vectors(self, tau):
        """Nodal loads ``(alpha q(tau), beta p(tau))`` with time factor ``sin(omega tau)``."""
        s = math.sin(self.omega * tau)
        return self.alpha * s * self.q_vec, self.beta * s * self.p_vec

    def load_rates(self, tau):
        """Time derivatives of :meth:`load_vectors`."""
        c = self.omega * math.cos(self.omega * tau)
        return self.alpha * c * self.q_vec, self.beta * c * self.p_vec

    def potential_energy(self, x, y):
        """``1/2 x^T K1 x + 1/(2 eps^2) int (u' + eps/2 w'^2)^2``."""
        m = self._up(y) + 0.5 * self.eps * self._wp(x) ** 2
        return 0.5 * x @ self.K1 @ x + 0.5 / self.eps**2 * float(np.sum(m**2 * self._wq))

    def total_energy(self, x, y, xdot, ydot):
        kin = 0.5 * xdot @ self.M1 @ xdot + 0.5 * ydot @ self.M2 @ ydot
        return kin + self.potential_energy(x, y)

    # linear solves
    def solve_K2(self, b):
        return _solve_spd(self.K2_factor, b)

    def solve_M1(self, b):
        return _solve_spd(self.M1_factor, b)

    def solve_M2(self, b):
        return _solve_spd(self.M2_factor, b)

    # ------------------------------------------------------------------
    # post-processing

    def field_at(self, s: float, x, y=None):
        """Transverse deflection and axial displacement at coordinate ``s`` in [0, 1]."""
        e = min(int(s / self.h), self.n_elements - 1)
        xi = np.array([(s - e * self.h) / self.h])
        N, _, _ = hermite_shapes(xi, self.h)
        xf = np.zeros(self._nw_full, dtype=np.asarray(x).dtype)
        xf[self.dofs.free_w] = x
        w = float(N[0] @ xf[self._ew[e]])
        if y is None:
            return w
        L, _ = linear_shapes(xi, self.h)
        yf = np.zeros(self._nu_full)
        yf[self.dofs.free_u] = y
        return w, float(L[0] @ yf[self._eu[e]])

    def dense_tensors(self) -> dict[str, np.ndarray]:
        """Materialize F, G, H, C, D, E as dense index arrays (test oracle).

        Conventions: ``F(x,y)_i = F_ijk x_j y_k``, ``G(x)_i = G_ijkl x_j x_k x_l``,
        ``H(x)_a = H_ajk x_j x_k``, ``C(x)_ij = C_ijkl x_k x_l``,
        ``D(x)_ia = D_iak x_k``, ``E(x)_aj = E_ajk x_k``. Only for n_s <= 12.
        """
        if self.n_s > DENSE_TENSOR_LIMIT:
            raise ValueError(f"dense tensors only for n_s <= {DENSE_TENSOR_LIMIT}, have {self.n_s}")
        nw, nu = self._nw_full, self._nu_full
        dN, dL, wq = self._dN, self._dL, self._wq
        Fd = np.zeros((nw, nw, nu))
        Gd = np.zeros((nw, nw, nw, nw))
        Hd = np.zeros((nu, nw, nw))
        for e in range(self.n_elements):
            iw, iu = self._ew[e], self._eu[e]
            Fd[np.ix_(iw, iw, iu)] += np.einsum("g,gi,gj,gk->ijk", wq, dN, dN, dL)
            Gd[np.ix_(iw, iw, iw, iw)] += 0.5 * np.einsum("g,gi,gj,gk,gl->ijkl", wq, dN, dN, dN, dN)
            Hd[np.ix_(iu, iw, iw)] += 0.5 * np.einsum("g,ga,gj,gk->ajk", wq, dL, dN, dN)
        fw, fu = self.dofs.free_w, self.dofs.free_u
        Fd = Fd[np.ix_(fw, fw, fu)]
        Gd = Gd[np.ix_(fw, fw, fw, fw)]
        Hd = Hd[np.ix_(fu, fw, fw)]
        Cd = 2.0 * Gd
        Dd = np.transpose(Fd, (0, 2, 1))
        Ed = 2.0 * Hd
        return {"F": Fd, "G": Gd, "H": Hd, "C": Cd, "D": Dd, "E": Ed}


def assemble(config: BeamConfig) -> AssembledBeam:
    """Assemble the beam described by ``config``."""
    return AssembledBeam(config)


def cubic_trilinear(g, a, b, c, check: bool = True):
    """Symmetric trilinear form of a homogeneous cubic map via polarization.

    ``T(a,b,c) = [g(a+b+c) - g(a+b) - g(a+c) - g(b+c) + g(a) + g(b) + g(c)] / 6``.
    With ``check`` the degree is verified first by comparing ``g(2a)`` with
    ``8 g(a)``.
    """
    if check:
        ga = np.asarray(g(a))
        g2a = np.asarray(g(2 * np.asarray(a)))
        scale = max(np.max(np.abs(g2a)), 1e-300)
        if np.max(np.abs(g2a - 8 * ga)) > 1e-9 * scale:
            raise ValueError("map is not homogeneous cubic")
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    return (np.asarray(g(a + b + c)) - g(a + b) - g(a + c) - g(b + c) + g(a) + g(b) + g(c)) / 6.0


def symmetric_bilinear(q, a, b):
    """Symmetric bilinear form of a homogeneous quadratic map via polarization."""
    a, b = np.asarray(a), np.asarray(b)
    return (np.asarray(q(a + b)) - q(a - b)) / 4.0


def write_coordinate_matrix(path, matrix: np.ndarray) -> None:
    """Write ``rows cols nnz`` then 0-based ``row col value`` triplets."""
    matrix = np.asarray(matrix)
    rows, cols = np.nonzero(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]} {len(rows)}\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r} {c} {matrix[r, c]:.17g}\n")


def read_coordinate_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        nr, nc, nnz = (int(t) for t in fh.readline().split())
        out = np.zeros((nr, nc))
        for _ in range(nnz):
            r, c, v = fh.readline().split()
            out[int(r), int(c)] = float(v)
    return out
