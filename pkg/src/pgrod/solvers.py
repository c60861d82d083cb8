"""Static Newton-Raphson and explicit dynamic integration of rod models."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from .errors import NoConvergence, StepSizeUnderflow
from .liegroup import complement_rotation, tangent_so3_inv

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# boundary conditions
# ----------------------------------------------------------------------------


class BoundaryConditions:
    """Prescribed global coordinates, eliminated from the unknowns.

    The same indices are fixed in ``q`` and ``u`` (velocities of fixed
    coordinates are zero).
    """

    def __init__(self, n_dof, fixed=(), values=None):
        fixed = np.asarray(fixed, dtype=int).ravel()
        if len(np.unique(fixed)) != len(fixed):
            raise ValueError("fixed indices must be unique")
        if np.any((fixed < 0) | (fixed >= n_dof)):
            raise ValueError("fixed index out of range")
        order = np.argsort(fixed)
        self.n_dof = n_dof
        self.fixed = fixed[order]
        self.values = np.zeros(len(fixed)) if values is None else np.asarray(values, dtype=float).ravel()[order]
        mask = np.ones(n_dof, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)

    @classmethod
    def for_nodes(cls, q_ref, clamped=(), pinned=()):
        """Clamp (all 6 coordinates) or pin (positions only) nodes at ``q_ref``."""
        q_ref = np.asarray(q_ref, dtype=float)
        n_nodes = len(q_ref) // 6
        idx = []
        for node in clamped:
            idx.extend(6 * (node % n_nodes) + np.arange(6))
        for node in pinned:
            idx.extend(6 * (node % n_nodes) + np.arange(3))
        idx = np.asarray(idx, dtype=int)
        return cls(len(q_ref), idx, q_ref[idx])

    def expand(self, x_free, fixed_values=None):
        x = np.empty(self.n_dof)
        x[self.free] = x_free
        x[self.fixed] = self.values if fixed_values is None else fixed_values
        return x


# ----------------------------------------------------------------------------
# kinematics
# ----------------------------------------------------------------------------


def kinematic_map(q):
    """Block-diagonal ``B(q)`` with ``q_dot = B(q) u`` (sparse)."""
    q = np.asarray(q, dtype=float).reshape(-1, 6)
    blocks = np.zeros((len(q), 6, 6))
    blocks[:, :3, :3] = np.eye(3)
    blocks[:, 3:, 3:] = tangent_so3_inv(q[:, 3:])
    return sp.block_diag(list(blocks), format="csr")


def q_dot(q, u):
    q = np.asarray(q, dtype=float).reshape(-1, 6)
    u = np.asarray(u, dtype=float).reshape(-1, 6)
    out = np.empty_like(u)
    out[:, :3] = u[:, :3]
    out[:, 3:] = np.einsum("nij,nj->ni", tangent_so3_inv(q[:, 3:]), u[:, 3:])
    return out.ravel()


def complement_update(q):
    """Nodal complement update of all rotation vectors in ``q``."""
    q = np.array(q, dtype=float).reshape(-1, 6)
    q[:, 3:] = complement_rotation(q[:, 3:])
    return q.ravel()


# ----------------------------------------------------------------------------
# finite-difference Jacobian
# ----------------------------------------------------------------------------


def jacobian_fd(fun, x, f0=None, groups=None, rows_of=None, scheme="forward"):
    """Finite-difference Jacobian of ``fun`` at ``x``.

    ``scheme="forward"`` uses steps ``h_j = sqrt(eps) * max(1, |x_j|)``;
    ``scheme="central"`` uses ``h_j = eps**(1/3) * max(1, |x_j|)`` and costs
    twice as many evaluations. The result is in general not symmetric.

    If ``groups`` (lists of structurally orthogonal columns) and ``rows_of``
    (column -> affected rows) are given, columns of a group are perturbed
    together and a sparse matrix is returned.
    """
    if scheme not in ("forward", "central"):
        raise ValueError(f"unknown difference scheme {scheme!r}")
    x = np.asarray(x, dtype=float)
    central = scheme == "central"
    if f0 is None and not central:
        f0 = fun(x)
    eps = np.finfo(float).eps
    h = (eps ** (1 / 3) if central else np.sqrt(eps)) * np.maximum(1.0, np.abs(x))

    def difference(cols):
        xp = x.copy()
        xp[cols] += h[cols]
        if central:
            xm = x.copy()
            xm[cols] -= h[cols]
            # use the actually represented steps
            return fun(xp) - fun(xm), xp - xm
        return fun(xp) - f0, xp - x

    if groups is None:
        columns = []
        for j in range(len(x)):
            df, dx = difference([j])
            columns.append(df / dx[j])
        return np.column_stack(columns) if columns else np.empty((0, 0))
    rows, cols, vals = [], [], []
    n_rows = 0
    for group in groups:
        df, dx = difference(group)
        n_rows = len(df)
        for j in group:
            r = rows_of[j]
            rows.append(r)
            cols.append(np.full(len(r), j))
            vals.append(df[r] / dx[j])
    rows, cols, vals = (np.concatenate(a) for a in (rows, cols, vals))
    return sp.csc_matrix((vals, (rows, cols)), shape=(n_rows, len(x)))


def _rod_coloring(rod, bc):
    """Column groups and row sets for the banded structure of rod residuals."""
    p = rod.p
    n_colors = 2 * p + 1
    free = bc.free
    position = -np.ones(rod.n_dof, dtype=int)
    position[free] = np.arange(len(free))
    node_of = free // 6
    groups = {}
    for j, (node, dof) in enumerate(zip(node_of, free % 6)):
        groups.setdefault((node % n_colors, dof), []).append(j)
    rows_of = []
    for node in node_of:
        lo, hi = max(node - p, 0), min(node + p, rod.n_nodes - 1)
        r = position[6 * lo : 6 * (hi + 1)]
        rows_of.append(r[r >= 0])
    return [np.array(g) for g in groups.values()], rows_of


# ----------------------------------------------------------------------------
# statics
# ----------------------------------------------------------------------------


@dataclass
class StaticSettings:
    n_load_steps: int = 50
    atol: float = 1e-8
    max_iter: int = 30
    # forward differences stall for slender rods with large coordinates
    jacobian: str = "central"

    def __post_init__(self):
        if self.n_load_steps < 1 or self.max_iter < 1 or self.atol <= 0:
            raise ValueError("invalid static solver settings")


@dataclass
class StaticResult:
    q: np.ndarray
    iterations: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    # residual history of every load step, kept for convergence diagnostics
    histories: list = field(default_factory=list)


def residual_static(q, load_factor, rod, bc):
    """Reduced equilibrium residual ``f_int + load_factor * f_ext`` on free rows."""
    q = np.array(q, dtype=float)
    q[bc.fixed] = bc.values
    R = rod.f_int(q) + load_factor * rod.f_ext(q)
    return R[bc.free]


def solve_static(rod, bc, settings=None, q_start=None):
    """Load-stepped Newton-Raphson with a colored finite-difference Jacobian."""
    settings = settings or StaticSettings()
    q = np.array(rod.q0 if q_start is None else q_start, dtype=float)
    q[bc.fixed] = bc.values
    groups, rows_of = _rod_coloring(rod, bc)
    result = StaticResult(q)
    for step in range(1, settings.n_load_steps + 1):
        lam = step / settings.n_load_steps

        def fun(x):
            return residual_static(bc.expand(x), lam, rod, bc)

        x = q[bc.free]
        R = fun(x)
        norm = np.max(np.abs(R), initial=0.0)
        history = [norm]
        it = 0
        while norm > settings.atol:
            if it == settings.max_iter:
                raise NoConvergence(step, it, norm)
            K = jacobian_fd(fun, x, R, groups, rows_of, scheme=settings.jacobian)
            x = x - spsolve(K, R)
            R = fun(x)
            norm = np.max(np.abs(R), initial=0.0)
            history.append(norm)
            it += 1
        q = bc.expand(x)
        logger.debug("load step %d: %d iterations, residual %.3e", step, it, norm)
        result.iterations.append(it)
        result.residual_norms.append(norm)
        result.histories.append(history)
    result.q = q
    return result


# ----------------------------------------------------------------------------
# dynamics
# ----------------------------------------------------------------------------


@dataclass
class DynamicSettings:
    t_end: float
    first_step: float = None
    atol: float = 1e-8
    rtol: float = 1e-8
    complement: bool = True
    fixed_step: float = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.t_end <= 0 or self.atol <= 0 or self.rtol <= 0:
            raise ValueError("t_end and tolerances must be positive")


@dataclass
class SystemState:
    q: np.ndarray
    u: np.ndarray
    t: float = 0.0


class RodDynamics:
    """First-order system ``q_dot = B(q) u``, ``M u_dot = f_int + f_ext - f_gyr``.

    The free block of the constant mass matrix is factorized once on
    construction; ``n_factorizations`` and ``n_rhs`` count work done.
    """

    def __init__(self, rod, bc=None):
        self.rod = rod
        self.bc = bc or BoundaryConditions(rod.n_dof)
        M = rod.mass_matrix.tocsc()
        free = self.bc.free
        self._lu = splu(M[free][:, free].tocsc())
        self.n_factorizations = 1
        self.n_rhs = 0

    def rhs(self, t, q, u):
        self.n_rhs += 1
        rod, bc = self.rod, self.bc
        qd = q_dot(q, u)
        F = rod.f_int(q) + rod.f_ext(q, t) - rod.f_gyr(u)
        ud = np.zeros_like(u)
        ud[bc.free] = self._lu.solve(F[bc.free])
        qd[bc.fixed] = 0.0
        return qd, ud

    def energies(self, q, u, t=0.0):
        e_kin = self.rod.kinetic_energy(u)
        e_pot = self.rod.strain_energy(q) + self.rod.gravity_potential(q, t)
        return e_kin, e_pot, e_kin + e_pot


def rhs_dynamic(state, rod, bc=None, dynamics=None):
    dynamics = dynamics or RodDynamics(rod, bc)
    return dynamics.rhs(state.t, state.q, state.u)


def energies(state, rod):
    """``(E_kin, E_pot, E_tot)``; the potential includes the line-force potential."""
    e_kin = rod.kinetic_energy(state.u)
    e_pot = rod.strain_energy(state.q) + rod.gravity_potential(state.q, state.t)
    return e_kin, e_pot, e_kin + e_pot


# Dormand-Prince 5(4) tableau with its continuous extension
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    u: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_complement_updates: int = 0


def _dopri_step(f, t, y, k1, h):
    K = np.empty((7, len(y)))
    K[0] = k1
    for s in range(1, 7):
        dy = h * (np.asarray(_A[s]) @ K[:s])
        K[s] = f(t + _C[s] * h, y + dy)
    y_new = y + h * (_B @ K)
    err = h * (_E @ K)
    return y_new, err, K


def _initial_step(f, t, y, f0, atol, rtol):
    # Hairer, Norsett & Wanner, algorithm for the starting step size
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(t + h0, y + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate_dynamic(dynamics, state0, settings, t_eval=None, step_callback=None):
    """Integrate from ``state0`` to ``settings.t_end``.

    Adaptive Dormand-Prince 4(5) with mixed absolute/relative error control,
    or classical RK4 with ``settings.fixed_step``. After every accepted step
    the nodal rotation vectors are replaced by their complements when longer
    than pi. ``step_callback(t, q_before, q_after)`` is called after each
    accepted step with the coordinates before and after that update.
    """
    n = len(state0.q)
    t0 = state0.t
    t_end = settings.t_end
    t_eval = np.array([t0, t_end]) if t_eval is None else np.asarray(t_eval, dtype=float)

    def f(t, y):
        qd, ud = dynamics.rhs(t, y[:n], y[n:])
        return np.concatenate((qd, ud))

    def update(t, y):
        if not settings.complement:
            return y, False
        q = complement_update(y[:n])
        changed = not np.array_equal(q, y[:n])
        if step_callback is not None:
            step_callback(t, y[:n].copy(), q.copy())
        return np.concatenate((q, y[n:])), changed

    out = np.empty((len(t_eval), 2 * n))
    traj = Trajectory(t_eval, None, None)
    i_out = 0
    y = np.concatenate((state0.q, state0.u))
    t = t0
    while i_out < len(t_eval) and t_eval[i_out] <= t:
        out[i_out] = y
        i_out += 1

    if settings.fixed_step is not None:
        dt = settings.fixed_step
        while t < t_end - 1e-14 * max(1.0, abs(t_end)):
            target = t_eval[i_out] if i_out < len(t_eval) else t_end
            h = min(dt, target - t, t_end - t)
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = target if h == target - t else t + h
            y, changed = update(t, y)
            traj.n_accepted += 1
            traj.n_complement_updates += changed
            while i_out < len(t_eval) and t_eval[i_out] <= t + 1e-14 * max(1.0, abs(t)):
                out[i_out] = y
                i_out += 1
    else:
        k1 = f(t, y)
        h = settings.first_step or _initial_step(lambda s, z: f(s, z), t, y, k1, settings.atol, settings.rtol)
        for _ in range(settings.max_steps):
            if t >= t_end:
                break
            h = min(h, t_end - t)
            if h < 1e-14 * max(1.0, abs(t)):
                raise StepSizeUnderflow(f"step size {h:.3e} too small at t={t:.6e}")
            y_new, err, K = _dopri_step(f, t, y, k1, h)
            scale = settings.atol + settings.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = np.sqrt(np.mean((err / scale) ** 2))
            if err_norm > 1.0:
                traj.n_rejected += 1
                h *= max(0.2, 0.9 * err_norm ** (-1 / 5))
                continue
            t_new = t + h if h < t_end - t else t_end
            while i_out < len(t_eval) and t_eval[i_out] <= t_new:
                x = (t_eval[i_out] - t) / h
                Q = _P @ np.array([x, x * x, x**3, x**4])
                z = y + h * (Q @ K)
                z[:n] = complement_update(z[:n]) if settings.complement else z[:n]
                out[i_out] = z
                i_out += 1
            t = t_new
            y, changed = update(t, y_new)
            traj.n_accepted += 1
            traj.n_complement_updates += changed
            # FSAL: last stage is f(t_new, y_new) unless the update changed y
            k1 = f(t, y) if changed else K[6]
            factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** (-1 / 5)))
            h *= factor
        else:
            raise StepSizeUnderflow(f"maximum number of steps {settings.max_steps} reached at t={t:.6e}")
    traj.q = out[:, :n]
    traj.u = out[:, n:]
    return traj
