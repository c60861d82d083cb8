"""Cross sections, constitutive law, loads and discrete virtual work.

The :class:`Rod` evaluates internal, external and gyroscopic generalized
forces and the constant mass matrix of the Petrov-Galerkin formulation.
All element loops are vectorized over elements; assembly adds element
contributions in fixed element order so results are reproducible.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .discretization import (
    InterpolationKind,
    Mesh,
    StrainState,
    centerline_tangent,
    frames,
    lagrange_local,
    strain_measures,
)
from .liegroup import cross, exp_so3, transform
from .quadrature import QuadratureRule, quadrature_counts


@dataclass
class CrossSectionInertia:
    """Mass per unit reference length and body-frame rotary inertia density."""

    A_rho0: float
    I_rho0: np.ndarray

    def __post_init__(self):
        self.I_rho0 = np.asarray(self.I_rho0, dtype=float)
        if self.A_rho0 <= 0:
            raise ValueError("A_rho0 must be positive")
        if not np.allclose(self.I_rho0, self.I_rho0.T):
            raise ValueError("I_rho0 must be symmetric")


@dataclass
class ElasticLaw:
    """Diagonal quadratic law, ``C_gamma = diag(k_e, k_s, k_s)`` and
    ``C_kappa = diag(k_t, k_by, k_bz)``."""

    C_gamma: np.ndarray
    C_kappa: np.ndarray

    def __post_init__(self):
        self.C_gamma = np.asarray(self.C_gamma, dtype=float)
        self.C_kappa = np.asarray(self.C_kappa, dtype=float)
        if np.any(self.C_gamma <= 0) or np.any(self.C_kappa <= 0):
            raise ValueError("stiffness coefficients must be positive")

    @classmethod
    def from_stiffnesses(cls, k_e, k_s, k_t, k_by, k_bz=None):
        return cls([k_e, k_s, k_s], [k_t, k_by, k_by if k_bz is None else k_bz])

    def scaled(self, factor):
        return ElasticLaw(factor * self.C_gamma, factor * self.C_kappa)


def constitutive(eps, law, eps0):
    """Contact forces ``n`` and couples ``m`` in body components."""
    n = law.C_gamma * (np.asarray(eps.gamma) - eps0.gamma)
    m = law.C_kappa * (np.asarray(eps.kappa) - eps0.kappa)
    return n, m


def strain_energy_density(eps, law, eps0):
    dg = np.asarray(eps.gamma) - eps0.gamma
    dk = np.asarray(eps.kappa) - eps0.kappa
    return 0.5 * (dg @ (law.C_gamma * dg) + dk @ (law.C_kappa * dk))


def section_circular(radius, rho0, E, G):
    """Solid circular section: ``A = pi r^2``, ``I = pi r^4 / 4``."""
    A = np.pi * radius**2
    I = np.pi * radius**4 / 4.0
    inertia = CrossSectionInertia(rho0 * A, rho0 * np.diag([2.0 * I, I, I]))
    law = ElasticLaw.from_stiffnesses(E * A, G * A, 2.0 * G * I, E * I)
    return inertia, law


def section_rectangular(width, height, rho0, E, G):
    """Rectangle with ``width`` along the body y-axis and ``height`` along z.

    Torsion uses the polar moment ``I_y + I_z``, which reduces to ``2 G I``
    for a square.
    """
    A = width * height
    I_y = width * height**3 / 12.0  # about the y-axis
    I_z = height * width**3 / 12.0
    inertia = CrossSectionInertia(rho0 * A, rho0 * np.diag([I_y + I_z, I_y, I_z]))
    law = ElasticLaw.from_stiffnesses(E * A, G * A, G * (I_y + I_z), E * I_y, E * I_z)
    return inertia, law


def _load_value(value, *args):
    if value is None:
        return None
    if callable(value):
        return np.asarray(value(*args), dtype=float)
    return np.asarray(value, dtype=float)


@dataclass
class LoadCase:
    """External loads.

    Line loads are densities per reference arc length: ``line_force`` in
    inertial and ``line_moment`` in body components, each either a constant
    triple or a callable ``(xi, t)``. Boundary loads at ``xi = 0`` and
    ``xi = 1`` are constants or callables of ``t``; moments are body
    components, forces inertial unless the matching ``follower_*`` flag is
    set, in which case the force is given in body components of the
    boundary cross-section and rotated with it.
    """

    line_force: object = None
    line_moment: object = None
    force_0: object = None
    moment_0: object = None
    force_1: object = None
    moment_1: object = None
    follower_0: bool = False
    follower_1: bool = False

    @property
    def is_empty(self):
        return all(
            v is None
            for v in (self.line_force, self.line_moment, self.force_0, self.moment_0, self.force_1, self.moment_1)
        )


def straight_configuration(n_el, length, p=1, origin=(0.0, 0.0, 0.0), psi=(0.0, 0.0, 0.0)):
    """Nodal coordinates of a straight rod whose body x-axis is the tangent."""
    mesh = Mesh(n_el, p)
    A = exp_so3(np.asarray(psi, dtype=float))
    q = np.zeros((mesh.n_nodes, 6))
    q[:, :3] = np.asarray(origin, dtype=float) + np.outer(mesh.node_parameters * length, A[:, 0])
    q[:, 3:] = psi
    return q.ravel()


class Rod:
    """Discretized Cosserat rod.

    Parameters
    ----------
    kind : InterpolationKind or str
        ``r12``, ``r3so3`` or ``se3``; the latter two need ``p = 1``.
    n_el : int
        Number of elements.
    q0 : array of shape (6 N,)
        Reference nodal coordinates; reference strains and ``J`` are computed
        from them with the same interpolation kind.
    integration : {"reduced", "full"}
        Quadrature of the internal virtual work; everything else is always
        integrated with the full rule.
    """

    def __init__(self, kind, n_el, q0, inertia, law, p=1, integration="reduced", loads=None):
        self.kind = InterpolationKind.parse(kind)
        if self.kind is not InterpolationKind.R12 and p != 1:
            raise ValueError(f"{self.kind.value} interpolation supports p=1 only")
        if integration not in ("full", "reduced"):
            raise ValueError(f"integration must be 'full' or 'reduced', got {integration!r}")
        self.mesh = Mesh(n_el, p)
        self.p = p
        self.integration = integration
        self.inertia = inertia
        self.law = law
        self.loads = loads if loads is not None else LoadCase()
        self.q0 = np.asarray(q0, dtype=float).copy()
        if self.q0.shape != (self.mesh.n_dof,):
            raise ValueError(f"q0 must have length {self.mesh.n_dof}, got {self.q0.shape}")

        m_full, m_red = quadrature_counts(p)
        self.dxi = self.mesh.element_length
        self.rule_full = QuadratureRule(m_full, self.dxi)
        self.rule_int = QuadratureRule(m_red if integration == "reduced" else m_full, self.dxi)
        self._N_int, dN = lagrange_local(p, self.rule_int.points)
        self._dN_int = dN / self.dxi
        self._N_full, _ = lagrange_local(p, self.rule_full.points)

        qe0 = self.mesh.element_coordinates(self.q0)
        self.J_int = self._tangent_length(qe0, self.rule_int.points)
        self.J_full = self._tangent_length(qe0, self.rule_full.points)
        if np.any(self.J_int <= 0) or np.any(self.J_full <= 0):
            raise ValueError("reference configuration has a degenerate tangent (J <= 0)")
        gb0, kb0, _ = strain_measures(self.kind, qe0, self.rule_int.points, self.dxi)
        self.gamma0 = gb0 / self.J_int[..., None]
        self.kappa0 = kb0 / self.J_int[..., None]
        self.xi_full = self.mesh.breakpoints[:-1, None] + self.dxi * self.rule_full.points[None, :]

    def _tangent_length(self, qe, s):
        return np.linalg.norm(centerline_tangent(self.kind, qe, s, self.dxi), axis=-1)

    @property
    def n_dof(self):
        return self.mesh.n_dof

    @property
    def n_nodes(self):
        return self.mesh.n_nodes

    def _assemble(self, fe):
        """Add element vectors ``(n_el, p + 1, 6)`` into a global vector."""
        f = np.zeros((self.n_nodes, 6))
        nodes = self.mesh.element_nodes
        for i in range(self.p + 1):
            f[nodes[:, i]] += fe[:, i]
        return f.ravel()

    # ------------------------------------------------------------------
    # internal virtual work
    # ------------------------------------------------------------------
    def _internal(self, qe, J, gamma0, kappa0):
        gb, kb, A = strain_measures(self.kind, qe, self.rule_int.points, self.dxi)
        n = self.law.C_gamma * (gb / J[..., None] - gamma0)
        m = self.law.C_kappa * (kb / J[..., None] - kappa0)
        An = np.einsum("...gij,...gj->...gi", A, n)
        moment = cross(gb, n) + cross(kb, m)
        w = self.rule_int.weights
        fe = np.empty(qe.shape)
        fe[..., :3] = -np.einsum("g,gi,...gk->...ik", w, self._dN_int, An)
        fe[..., 3:] = -np.einsum("g,gi,...gk->...ik", w, self._dN_int, m) + np.einsum(
            "g,gi,...gk->...ik", w, self._N_int, moment
        )
        return fe, gb, kb, n, m

    def f_int(self, q):
        qe = self.mesh.element_coordinates(q)
        fe = self._internal(qe, self.J_int, self.gamma0, self.kappa0)[0]
        return self._assemble(fe)

    def f_int_element(self, qe, e):
        """Internal generalized force of element ``e`` (length ``6 (p + 1)``)."""
        qe = np.asarray(qe, dtype=float).reshape(self.p + 1, 6)
        fe = self._internal(qe, self.J_int[e], self.gamma0[e], self.kappa0[e])[0]
        return fe.ravel()

    def strain_energy(self, q):
        qe = self.mesh.element_coordinates(q)
        gb, kb, _ = strain_measures(self.kind, qe, self.rule_int.points, self.dxi)
        dg = gb / self.J_int[..., None] - self.gamma0
        dk = kb / self.J_int[..., None] - self.kappa0
        W = 0.5 * (np.sum(self.law.C_gamma * dg * dg, axis=-1) + np.sum(self.law.C_kappa * dk * dk, axis=-1))
        return float(np.sum(W * self.J_int * self.rule_int.weights))

    def internal_loads(self, q, xi):
        """Contact forces and couples ``(n, m)`` at parameter ``xi``."""
        eps = self.strains(q, xi)
        # reference strains are only stored at quadrature points; recompute here
        eps0 = self.strains(self.q0, xi)
        return constitutive(eps, self.law, eps0)

    # ------------------------------------------------------------------
    # external virtual work
    # ------------------------------------------------------------------
    def _line_load_elements(self, t):
        """Element vectors ``(n_el, p + 1, 6)`` of the distributed loads."""
        w = self.rule_full.weights * self.J_full  # (n_el, m)
        fe = np.zeros((self.mesh.n_el, self.p + 1, 6))
        for value, sl in ((self.loads.line_force, slice(0, 3)), (self.loads.line_moment, slice(3, 6))):
            if value is None:
                continue
            density = _load_value(value, self.xi_full, t)
            density = np.broadcast_to(density, self.xi_full.shape + (3,))
            fe[..., sl] = np.einsum("eg,gi,egk->eik", w, self._N_full, density)
        return fe

    def f_ext(self, q, t=0.0):
        f = self.f_ext_boundary(q, t)
        if self.loads.line_force is not None or self.loads.line_moment is not None:
            f += self._assemble(self._line_load_elements(t))
        return f

    def f_ext_element(self, e, t=0.0):
        """Distributed external force of element ``e`` (length ``6 (p + 1)``)."""
        return self._line_load_elements(t)[e].ravel()

    def f_ext_boundary(self, q, t=0.0):
        loads = self.loads
        f = np.zeros((self.n_nodes, 6))
        q = np.asarray(q, dtype=float).reshape(self.n_nodes, 6)
        for node, force, moment, follower in (
            (0, loads.force_0, loads.moment_0, loads.follower_0),
            (-1, loads.force_1, loads.moment_1, loads.follower_1),
        ):
            force = _load_value(force, t)
            if force is not None:
                f[node, :3] += exp_so3(q[node, 3:]) @ force if follower else force
            moment = _load_value(moment, t)
            if moment is not None:
                f[node, 3:] += moment
        return f.ravel()

    def gravity_potential(self, q, t=0.0):
        """Potential of the line force along the nodal Lagrange centerline."""
        if self.loads.line_force is None:
            return 0.0
        qe = self.mesh.element_coordinates(q)
        r = np.einsum("gi,eik->egk", self._N_full, qe[..., :3])
        b = np.broadcast_to(_load_value(self.loads.line_force, self.xi_full, t), r.shape)
        return -float(np.sum(np.sum(b * r, axis=-1) * self.J_full * self.rule_full.weights))

    # ------------------------------------------------------------------
    # inertia
    # ------------------------------------------------------------------
    @cached_property
    def mass_matrix(self):
        """Constant symmetric mass matrix as ``scipy.sparse.csc_matrix``."""
        w = self.rule_full.weights * self.J_full  # (n_el, m)
        NN = np.einsum("eg,gi,gk->eik", w, self._N_full, self._N_full)
        block = np.zeros((6, 6))
        block[:3, :3] = self.inertia.A_rho0 * np.eye(3)
        block[3:, 3:] = self.inertia.I_rho0
        Me = np.einsum("eik,ab->eiakb", NN, block)  # (n_el, p+1, 6, p+1, 6)
        dofs = (6 * self.mesh.element_nodes[:, :, None] + np.arange(6)).reshape(self.mesh.n_el, -1)
        size = 6 * (self.p + 1)
        rows = np.repeat(dofs, size, axis=1).ravel()
        cols = np.tile(dofs, (1, size)).ravel()
        M = sp.coo_matrix((Me.reshape(self.mesh.n_el, -1).ravel(), (rows, cols)), shape=(self.n_dof, self.n_dof))
        M = M.tocsc()
        M.sum_duplicates()
        return M

    def angular_velocity(self, u):
        """Interpolated body angular velocities at full quadrature points."""
        ue = self.mesh.element_coordinates(u)
        return np.einsum("gi,eik->egk", self._N_full, ue[..., 3:])

    def f_gyr(self, u):
        """Gyroscopic forces ``int N_i omega x (I omega) J dxi`` in rotation slots."""
        omega = self.angular_velocity(u)
        vec = cross(omega, omega @ self.inertia.I_rho0.T)
        w = self.rule_full.weights * self.J_full
        fe = np.zeros((self.mesh.n_el, self.p + 1, 6))
        fe[..., 3:] = np.einsum("eg,gi,egk->eik", w, self._N_full, vec)
        return self._assemble(fe)

    def kinetic_energy(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * float(u @ (self.mass_matrix @ u))

    # ------------------------------------------------------------------
    # field evaluation
    # ------------------------------------------------------------------
    def _element_point(self, q, xi):
        e = self.mesh.locate(xi)
        qe = self.mesh.element_coordinates(q)[e]
        return qe, np.array([self.mesh.local_coordinate(e, xi)])

    def _J_at(self, xi):
        qe, s = self._element_point(self.q0, xi)
        return float(self._tangent_length(qe, s)[0])

    def frame(self, q, xi):
        """Interpolated Euclidean transformation ``H(xi)`` (4x4)."""
        qe, s = self._element_point(q, xi)
        r, A = frames(self.kind, qe, s, self.dxi)
        return transform(A[0], r[0])

    def frames(self, q, xis):
        return np.stack([self.frame(q, xi) for xi in np.atleast_1d(xis)])

    def strains(self, q, xi, J=None):
        qe, s = self._element_point(q, xi)
        gb, kb, _ = strain_measures(self.kind, qe, s, self.dxi)
        if J is None:
            J = self._J_at(xi)
        return StrainState(gb[0] / J, kb[0] / J)

    def centerline(self, q, xis):
        return np.stack([self.frame(q, xi)[:3, 3] for xi in np.atleast_1d(xis)])
