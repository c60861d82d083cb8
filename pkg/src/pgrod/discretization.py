"""Mesh, Lagrange bases and the three objective interpolation strategies.

Element-level kernels work on stacks of elements: nodal element data
``qe`` has shape ``(n_el, p + 1, 6)`` with rows ``(r, psi)`` and query
points are given in local element coordinates ``s in [0, 1]``. Derivatives
are taken with respect to the global centerline parameter ``xi``.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np

from .liegroup import exp_se3, exp_so3, inverse_transform, log_se3, log_so3, transform, vee, skw


class InterpolationKind(str, Enum):
    R12 = "r12"
    R3xSO3 = "r3so3"
    SE3 = "se3"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown interpolation kind {value!r}, expected one of {names}") from None


def lagrange_local(p, s):
    """Lagrange basis of order ``p`` on equidistant nodes of ``[0, 1]``.

    Returns values and derivatives with respect to ``s``, each with shape
    ``s.shape + (p + 1,)``.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim == 1 and len(s) <= 8:
        # quadrature tables are requested over and over with the same points
        N, dN = _lagrange_cached(p, tuple(s.tolist()))
        return N.copy(), dN.copy()
    return _lagrange(p, s)


@lru_cache(maxsize=256)
def _lagrange_cached(p, s):
    return _lagrange(p, np.array(s))


def _lagrange(p, s):
    nodes = np.linspace(0.0, 1.0, p + 1)
    N = np.ones(s.shape + (p + 1,))
    dN = np.zeros(s.shape + (p + 1,))
    for i in range(p + 1):
        others = [j for j in range(p + 1) if j != i]
        for j in others:
            N[..., i] *= (s - nodes[j]) / (nodes[i] - nodes[j])
        # product rule; avoids the 1/(s - s_k) form which is singular at nodes
        for k in others:
            term = np.full(s.shape, 1.0 / (nodes[i] - nodes[k]))
            for j in others:
                if j != k:
                    term = term * (s - nodes[j]) / (nodes[i] - nodes[j])
            dN[..., i] += term
    return N, dN


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of ``[0, 1]`` with ``n_el`` elements of order ``p``."""

    n_el: int
    p: int = 1
    breakpoints: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_el < 1:
            raise ValueError("n_el must be positive")
        if self.p not in (1, 2):
            raise ValueError(f"unsupported polynomial order p={self.p}")
        object.__setattr__(self, "breakpoints", np.linspace(0.0, 1.0, self.n_el + 1))

    @property
    def n_nodes(self):
        return self.p * self.n_el + 1

    @property
    def n_dof(self):
        return 6 * self.n_nodes

    @property
    def element_length(self):
        return 1.0 / self.n_el

    @cached_property
    def element_nodes(self):
        """Global node indices per element, shape ``(n_el, p + 1)``."""
        return self.p * np.arange(self.n_el)[:, None] + np.arange(self.p + 1)[None, :]

    @property
    def node_parameters(self):
        return np.linspace(0.0, 1.0, self.n_nodes)

    def element_interval(self, e):
        return self.breakpoints[e], self.breakpoints[e + 1]

    def locate(self, xi):
        """Element index containing ``xi``; ``xi = 1`` belongs to the last element."""
        xi = float(xi)
        if not 0.0 <= xi <= 1.0:
            raise ValueError(f"xi={xi} outside [0, 1]")
        return min(int(xi * self.n_el), self.n_el - 1)

    def local_coordinate(self, e, xi):
        a, b = self.element_interval(e)
        return (xi - a) / (b - a)

    def lagrange_basis(self, e, xi):
        """Basis values and ``xi``-derivatives of element ``e`` at ``xi``."""
        a, b = self.element_interval(e)
        tol = 1e-12
        if not (a - tol <= xi <= b + tol):
            raise ValueError(f"xi={xi} outside element {e} interval [{a}, {b}]")
        N, dN = lagrange_local(self.p, (xi - a) / (b - a))
        return N, dN / (b - a)

    def element_coordinates(self, q):
        """Slice global coordinates into ``(n_el, p + 1, 6)`` element arrays."""
        q = np.asarray(q, dtype=float)
        return q.reshape(self.n_nodes, 6)[self.element_nodes]


# --------------------------------------------------------------------------
# batched interpolation kernels
# --------------------------------------------------------------------------
# qe: (..., p + 1, 6); s: (m,) local coordinates; dxi: element length


def _r12(qe, s, dxi):
    p = qe.shape[-2] - 1
    N, dN = lagrange_local(p, s)
    dN = dN / dxi
    r_nodes = qe[..., :3]
    A_nodes = exp_so3(qe[..., 3:])
    r = np.einsum("gi,...ik->...gk", N, r_nodes)
    r_xi = np.einsum("gi,...ik->...gk", dN, r_nodes)
    A = np.einsum("gi,...ijk->...gjk", N, A_nodes)
    A_xi = np.einsum("gi,...ijk->...gjk", dN, A_nodes)
    return r, r_xi, A, A_xi


def _relative_rotation(qe):
    A0 = exp_so3(qe[..., 0, 3:])
    A1 = exp_so3(qe[..., 1, 3:])
    return A0, A1, log_so3(np.swapaxes(A0, -1, -2) @ A1)


def _r3so3(qe, s, dxi):
    if qe.shape[-2] != 2:
        raise ValueError("R3xSO3 interpolation requires two-node elements")
    A0, _, psi01 = _relative_rotation(qe)
    s = np.asarray(s, dtype=float)
    r0, r1 = qe[..., 0, :3], qe[..., 1, :3]
    r = (1.0 - s)[:, None] * r0[..., None, :] + s[:, None] * r1[..., None, :]
    r_xi = np.broadcast_to(((r1 - r0) / dxi)[..., None, :], r.shape)
    A = A0[..., None, :, :] @ exp_so3(s[:, None] * psi01[..., None, :])
    return r, r_xi, A, psi01


def _se3_twist(qe):
    if qe.shape[-2] != 2:
        raise ValueError("SE3 interpolation requires two-node elements")
    H0 = transform(exp_so3(qe[..., 0, 3:]), qe[..., 0, :3])
    H1 = transform(exp_so3(qe[..., 1, 3:]), qe[..., 1, :3])
    return H0, log_se3(inverse_transform(H0) @ H1)


def _se3(qe, s):
    H0, theta01 = _se3_twist(qe)
    s = np.asarray(s, dtype=float)
    H = H0[..., None, :, :] @ exp_se3(s[:, None] * theta01[..., None, :])
    return H, theta01


def strain_measures(kind, qe, s, dxi):
    """Scaled strains ``(gamma_bar, kappa_bar)`` and orientation at ``s``.

    Shapes: ``qe (..., p+1, 6)``, ``s (m,)`` -> ``(..., m, 3)`` twice and
    ``(..., m, 3, 3)``. Dividing the scaled strains by ``J`` gives the
    objective strain measures.
    """
    kind = InterpolationKind.parse(kind)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if kind is InterpolationKind.R12:
        _, r_xi, A, A_xi = _r12(qe, s, dxi)
        At = np.swapaxes(A, -1, -2)
        gamma_bar = np.einsum("...ij,...j->...i", At, r_xi)
        kappa_bar = vee(skw(At @ A_xi))
        return gamma_bar, kappa_bar, A
    if kind is InterpolationKind.R3xSO3:
        _, r_xi, A, psi01 = _r3so3(qe, s, dxi)
        gamma_bar = np.einsum("...ji,...j->...i", A, r_xi)
        kappa_bar = np.broadcast_to((psi01 / dxi)[..., None, :], gamma_bar.shape)
        return gamma_bar, kappa_bar, A
    H, theta01 = _se3(qe, s)
    eps = np.broadcast_to((theta01 / dxi)[..., None, :], H.shape[:-2] + (6,))
    return eps[..., :3], eps[..., 3:], H[..., :3, :3]


def centerline_tangent(kind, qe, s, dxi):
    """Inertial centerline derivative ``r_xi`` at ``s`` (shape ``(..., m, 3)``)."""
    kind = InterpolationKind.parse(kind)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if kind is InterpolationKind.R12:
        return _r12(qe, s, dxi)[1]
    if kind is InterpolationKind.R3xSO3:
        return np.array(_r3so3(qe, s, dxi)[1])
    gamma_bar, _, A = strain_measures(kind, qe, s, dxi)
    return np.einsum("...ij,...j->...i", A, gamma_bar)


def frames(kind, qe, s, dxi):
    """Centerline points ``(..., m, 3)`` and orientations ``(..., m, 3, 3)``."""
    kind = InterpolationKind.parse(kind)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if kind is InterpolationKind.R12:
        r, _, A, _ = _r12(qe, s, dxi)
        return r, A
    if kind is InterpolationKind.R3xSO3:
        r, _, A, _ = _r3so3(qe, s, dxi)
        return r, A
    H, _ = _se3(qe, s)
    return H[..., :3, 3], H[..., :3, :3]


# --------------------------------------------------------------------------
# single-element, single-point API
# --------------------------------------------------------------------------


def _element_args(qe, interval, xi):
    qe = np.asarray(qe, dtype=float).reshape(-1, 6)
    a, b = interval
    return qe, (xi - a) / (b - a), b - a


def eval_r12(qe, xi, interval=(0.0, 1.0)):
    """``(r, r_xi, A, A_xi)`` of the R12 interpolation at ``xi``."""
    qe, s, dxi = _element_args(qe, interval, xi)
    r, r_xi, A, A_xi = _r12(qe, np.array([s]), dxi)
    return r[0], r_xi[0], A[0], A_xi[0]


def eval_r3so3(qe, xi, interval=(0.0, 1.0)):
    """``(r, r_xi, A)`` of the R3xSO(3) interpolation at ``xi``."""
    qe, s, dxi = _element_args(qe, interval, xi)
    r, r_xi, A, _ = _r3so3(qe, np.array([s]), dxi)
    return r[0], np.array(r_xi[0]), A[0]


def eval_se3(qe, xi, interval=(0.0, 1.0)):
    """Interpolated Euclidean transformation ``H(xi)`` (4x4)."""
    qe, s, _ = _element_args(qe, interval, xi)
    H, _ = _se3(qe, np.array([s]))
    return H[0]


def _strain(kind, qe, xi, J, interval):
    qe, s, dxi = _element_args(qe, interval, xi)
    gamma_bar, kappa_bar, _ = strain_measures(kind, qe, np.array([s]), dxi)
    return StrainState(gamma_bar[0] / J, kappa_bar[0] / J)


def strain_r12(qe, xi, J, interval=(0.0, 1.0)):
    return _strain(InterpolationKind.R12, qe, xi, J, interval)


def strain_r3so3(qe, xi, J, interval=(0.0, 1.0)):
    return _strain(InterpolationKind.R3xSO3, qe, xi, J, interval)


def strain_se3(qe, J, interval=(0.0, 1.0)):
    # constant over the element; evaluate at the midpoint
    return _strain(InterpolationKind.SE3, qe, 0.5 * (interval[0] + interval[1]), J, interval)


@dataclass(frozen=True)
class StrainState:
    gamma: np.ndarray
    kappa: np.ndarray

    def as_array(self):
        return np.concatenate((self.gamma, self.kappa))
