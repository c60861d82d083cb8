"""Benchmark experiments: quarter circle, cantilever study and heavy top.

Every ``run_*`` function takes a plain configuration mapping (the parsed
JSON document, see :mod:`pgrod.config`) and writes CSV time series or
field samples plus a JSON report into ``config["out"]`` when given.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .discretization import InterpolationKind, Mesh, strain_measures
from .liegroup import cross, exp_so3, inverse_transform, log_se3, tangent_so3_inv
from .model import LoadCase, Rod, section_circular, section_rectangular, straight_configuration
from .solvers import (
    BoundaryConditions,
    DynamicSettings,
    RodDynamics,
    StaticSettings,
    SystemState,
    integrate_dynamic,
    solve_static,
)

SCHEMA_VERSION = 1

# absolute Newton tolerance per slenderness ratio
CANTILEVER_ATOL = {1e1: 1e-8, 1e2: 1e-10, 1e3: 1e-12, 1e4: 1e-14}
CANTILEVER_LENGTH = 1.0e3
DEFAULT_SWEEP = (4, 8, 16, 32, 64)


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------


def write_csv(path, columns, units, data):
    """Write ``data`` (rows x columns) with schema and unit header lines.

    Values are written with 17 significant digits so that the file is a
    faithful, reproducible image of the binary data.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] != len(columns) or len(units) != len(columns):
        raise ValueError("column, unit and data widths differ")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# pgrod schema_version={SCHEMA_VERSION}",
        "# units: " + ", ".join(f"{c} [{u}]" for c, u in zip(columns, units)),
        ",".join(columns),
    ]
    lines += [",".join(f"{v:.17g}" for v in row) for row in data]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Columns and data of a file written by :func:`write_csv`."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return columns, data.reshape(-1, len(columns))


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


_STRAIN_COLUMNS = ["xi", "gamma_x", "gamma_y", "gamma_z", "kappa_x", "kappa_y", "kappa_z"]
_STRAIN_UNITS = ["1", "1", "1", "1", "1/m", "1/m", "1/m"]


# ----------------------------------------------------------------------------
# error norm
# ----------------------------------------------------------------------------


def error_twist(sampler, reference_sampler, k=100):
    """Root-mean-square relative twist between two rod fields.

    ``sampler(xi)`` and ``reference_sampler(xi)`` return 4x4 Euclidean
    transformations. The twists ``log_se3(H^-1 H*)`` are sampled at
    ``xi_i = i / (k - 1)`` and combined as ``sqrt(sum |dtheta|^2) / k``.
    """
    if k < 2:
        raise ValueError("need at least two samples")
    xis = np.linspace(0.0, 1.0, k)
    H = np.stack([sampler(xi) for xi in xis])
    H_ref = np.stack([reference_sampler(xi) for xi in xis])
    dtheta = log_se3(inverse_transform(H) @ H_ref)
    return float(np.sqrt(np.sum(dtheta * dtheta)) / k)


def rod_sampler(rod, q):
    return lambda xi: rod.frame(q, xi)


# ----------------------------------------------------------------------------
# quarter circle
# ----------------------------------------------------------------------------


def quarter_circle_nodes(n_nodes):
    """Nodal coordinates of a quarter circle of unit length in the x-z plane."""
    psi = 0.5 * np.pi * np.arange(n_nodes) / (n_nodes - 1)
    q = np.zeros((n_nodes, 6))
    q[:, 0] = (1.0 - np.cos(psi)) * 2.0 / np.pi
    q[:, 2] = np.sin(psi) * 2.0 / np.pi
    q[:, 4] = psi
    return q.ravel()


def quarter_circle_strains(kind, p=1, n_nodes=2, samples=101):
    """Strain samples ``(xi, gamma, kappa)`` of the quarter-circle data.

    The data describe a rod of unit arc length, so ``J = 1`` and the scaled
    strains are the objective ones.
    """
    kind = InterpolationKind.parse(kind)
    if (n_nodes - 1) % p:
        raise ValueError(f"{n_nodes} nodes do not form elements of order {p}")
    mesh = Mesh((n_nodes - 1) // p, p)
    qe = mesh.element_coordinates(quarter_circle_nodes(n_nodes))
    xis = np.linspace(0.0, 1.0, samples)
    rows = np.empty((samples, 7))
    for i, xi in enumerate(xis):
        e = mesh.locate(xi)
        s = np.array([mesh.local_coordinate(e, xi)])
        gb, kb, _ = strain_measures(kind, qe[e], s, mesh.element_length)
        rows[i] = np.concatenate(([xi], gb[0], kb[0]))
    return rows


def run_quarter_circle(config):
    """Strain fields of all requested interpolation kinds.

    Two-node kinds (R3xSO3, SE3) always use ``p = 1`` with the configured
    number of nodes. Returns ``{kind: rows}``.
    """
    p = config.get("order", 1)
    n_nodes = config.get("n_nodes", p + 1)
    samples = config.get("samples", 101)
    kinds = config.get("kinds", [k.value for k in InterpolationKind])
    out = config.get("out")
    results = {}
    for name in kinds:
        kind = InterpolationKind.parse(name)
        order = p if kind is InterpolationKind.R12 else 1
        rows = quarter_circle_strains(kind, order, n_nodes, samples)
        results[kind.value] = rows
        if out:
            write_csv(Path(out) / f"quarter_circle_{kind.value}_p{order}.csv", _STRAIN_COLUMNS, _STRAIN_UNITS, rows)
    return results


# ----------------------------------------------------------------------------
# cantilever
# ----------------------------------------------------------------------------


def cantilever_atol(rho):
    for key, atol in CANTILEVER_ATOL.items():
        if math.isclose(rho, key, rel_tol=1e-12):
            return atol
    raise ValueError(f"no tolerance tabulated for slenderness {rho}; pass atol explicitly")


def cantilever_model(kind, p, n_el, rho, integration="reduced", length=CANTILEVER_LENGTH):
    """Clamped straight rod with the follower tip force and tip moment.

    The square cross section has width ``length / rho``; ``E = 1``,
    ``G = 0.5`` and unit density.
    """
    width = length / rho
    inertia, law = section_rectangular(width, width, 1.0, 1.0, 0.5)
    k_b = law.C_kappa[1]
    loads = LoadCase(
        force_1=np.array([0.0, 0.0, 0.5 * np.pi * k_b / length**2]),
        moment_1=np.array([0.0, 0.0, 0.5 * np.pi * k_b / length]),
        follower_1=True,
    )
    q0 = straight_configuration(n_el, length, p)
    rod = Rod(kind, n_el, q0, inertia, law, p=p, integration=integration, loads=loads)
    bc = BoundaryConditions.for_nodes(q0, clamped=[0])
    return rod, bc


def solve_cantilever(kind, p, n_el, rho, integration="reduced", n_load_steps=50, atol=None, max_iter=30):
    """Static equilibrium of the cantilever; returns ``(rod, StaticResult)``."""
    rod, bc = cantilever_model(kind, p, n_el, rho, integration)
    settings = StaticSettings(
        n_load_steps=n_load_steps, atol=atol if atol is not None else cantilever_atol(rho), max_iter=max_iter
    )
    return rod, solve_static(rod, bc, settings)


@dataclass
class ReferenceSpec:
    kind: str = "se3"
    order: int = 1
    n_el: int = 128
    integration: str = "reduced"

    @property
    def nominal_rate(self):
        return 3 if (InterpolationKind.parse(self.kind) is InterpolationKind.R12 and self.order == 2) else 2

    def tag(self, rho):
        return f"ref_{self.kind}_p{self.order}_n{self.n_el}_{self.integration}_rho{rho:g}"


def default_reference(integration, paper_size=False):
    """SE3 reference for the full-integration study, quadratic R12 for the reduced one."""
    if integration == "full":
        return ReferenceSpec("se3", 1, 512 if paper_size else 128, "full")
    return ReferenceSpec("r12", 2, 256 if paper_size else 128, "reduced")


def reference_solution(spec, rho, cache_dir=None, n_load_steps=50):
    """Solve (or load from ``cache_dir``) a reference cantilever solution."""
    rod, bc = cantilever_model(spec.kind, spec.order, spec.n_el, rho, spec.integration)
    path = Path(cache_dir) / f"{spec.tag(rho)}.npz" if cache_dir else None
    if path is not None and path.exists():
        with np.load(path) as data:
            return rod, data["q"].copy()
    _, res = solve_cantilever(spec.kind, spec.order, spec.n_el, rho, spec.integration, n_load_steps)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, q=res.q, schema_version=SCHEMA_VERSION)
    return rod, res.q


def fit_slope(n_el, errors):
    """Least-squares convergence rate ``-d log(e) / d log(n_el)``."""
    x = np.log(np.asarray(n_el, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if len(x) < 2:
        return float("nan")
    return float(-np.polyfit(x, y, 1)[0])


@dataclass
class ConvergenceRow:
    n_el: int
    n_nodes: int
    n_dof: int
    e_theta: float
    runtime: float
    newton_iterations: int


@dataclass
class ConvergenceReport:
    kind: str
    order: int
    integration: str
    rho: float
    reference: dict
    rows: list = field(default_factory=list)
    reference_self_error: float = None
    plateau_factor: float = 1e2

    @property
    def slope_all(self):
        """Slope over every row."""
        return fit_slope([r.n_el for r in self.rows], [r.e_theta for r in self.rows])

    @property
    def fitted_rows(self):
        """Rows above the plateau guard; all rows if fewer than two survive."""
        if self.reference_self_error is None:
            return list(self.rows)
        keep = [r for r in self.rows if r.e_theta >= self.plateau_factor * self.reference_self_error]
        return keep if len(keep) >= 2 else list(self.rows)

    @property
    def slope(self):
        rows = self.fitted_rows
        return fit_slope([r.n_el for r in rows], [r.e_theta for r in rows])

    def as_dict(self):
        d = asdict(self)
        d.update(slope=self.slope, slope_all=self.slope_all, fitted_n_el=[r.n_el for r in self.fitted_rows])
        return d


def _cantilever_row(args):
    kind, p, n_el, rho, integration, n_load_steps, atol, max_iter = args
    t0 = time.perf_counter()
    rod, res = solve_cantilever(kind, p, n_el, rho, integration, n_load_steps, atol, max_iter)
    return rod, res, time.perf_counter() - t0


def _state_rows(rod, q):
    nodes = q.reshape(-1, 6)
    return np.column_stack((rod.mesh.node_parameters, nodes))


_STATE_COLUMNS = ["xi", "r_x", "r_y", "r_z", "psi_x", "psi_y", "psi_z"]
_STATE_UNITS = ["1", "m", "m", "m", "rad", "rad", "rad"]


def run_cantilever(config):
    """Convergence sweep of the cantilever against a cached reference.

    Returns ``(states, report)`` where ``states`` maps ``n_el`` to the
    converged nodal coordinates.
    """
    kind = InterpolationKind.parse(config.get("kind", "se3")).value
    p = config.get("order", 1)
    integration = config.get("integration", "reduced")
    rho = float(config.get("rho", 1e2))
    n_load_steps = config.get("n_load_steps", 50)
    max_iter = config.get("max_iter", 30)
    atol = config.get("atol")
    n_els = config.get("n_el", list(DEFAULT_SWEEP))
    n_els = sorted([n_els] if isinstance(n_els, int) else n_els)
    k = config.get("samples", 100)
    out = config.get("out")

    ref_cfg = config.get("reference", {})
    ref = default_reference(integration, ref_cfg.get("paper_size", False))
    ref = ReferenceSpec(
        ref_cfg.get("kind", ref.kind),
        ref_cfg.get("order", ref.order),
        ref_cfg.get("n_el", ref.n_el),
        ref_cfg.get("integration", ref.integration),
    )
    cache = ref_cfg.get("cache_dir")
    ref_rod, ref_q = reference_solution(ref, rho, cache, n_load_steps)
    ref_sampler = rod_sampler(ref_rod, ref_q)

    self_error = None
    if config.get("plateau_guard", True) and ref.n_el % 2 == 0:
        half = ReferenceSpec(ref.kind, ref.order, ref.n_el // 2, ref.integration)
        half_rod, half_q = reference_solution(half, rho, cache, n_load_steps)
        # Richardson estimate of the reference's own error from its nominal rate
        e_half = error_twist(rod_sampler(half_rod, half_q), ref_sampler, k)
        self_error = e_half / (2**ref.nominal_rate - 1)

    report = ConvergenceReport(kind, p, integration, rho, asdict(ref), reference_self_error=self_error)
    tasks = [(kind, p, n, rho, integration, n_load_steps, atol, max_iter) for n in n_els]
    jobs = config.get("jobs", 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cantilever_row, tasks))
    else:
        results = [_cantilever_row(t) for t in tasks]

    states = {}
    for n, (rod, res, runtime) in zip(n_els, results):
        e = error_twist(rod_sampler(rod, res.q), ref_sampler, k)
        report.rows.append(
            ConvergenceRow(n, rod.n_nodes, rod.n_dof, e, runtime, int(sum(res.iterations)))
        )
        states[n] = res.q
        if out:
            write_csv(
                Path(out) / f"cantilever_{kind}_p{p}_{integration}_n{n}.csv",
                _STATE_COLUMNS,
                _STATE_UNITS,
                _state_rows(rod, res.q),
            )
    if out:
        table = [(r.n_el, r.n_nodes, r.n_dof, r.e_theta) for r in report.rows]
        write_csv(
            Path(out) / f"convergence_{kind}_p{p}_{integration}.csv",
            ["n_el", "n_nodes", "n_dof", "e_theta"],
            ["1", "1", "1", "1"],
            table,
        )
        write_json(Path(out) / f"convergence_{kind}_p{p}_{integration}.json", report.as_dict())
    return states, report


# ----------------------------------------------------------------------------
# heavy top
# ----------------------------------------------------------------------------


@dataclass
class HeavyTopParameters:
    radius: float = 0.1
    length: float = 0.5
    rho0: float = 8000.0
    E: float = 2.1e8
    nu: float = 1.0 / 3.0
    g: float = 9.81
    spin: float = 50.0 * np.pi

    @property
    def area(self):
        return np.pi * self.radius**2

    @property
    def precession(self):
        return self.g * self.length / (self.radius**2 * self.spin)

    @property
    def period(self):
        return 2.0 * np.pi / self.precession

    @property
    def omega0(self):
        return np.array([self.spin, 0.0, self.precession])


def heavy_top_model(params=None, stiffness_factor=1.0):
    """Pinned single quadratic R12 element with the precession initial state."""
    params = params or HeavyTopParameters()
    G = params.E / (2.0 * (1.0 + params.nu))
    inertia, law = section_circular(params.radius, params.rho0, params.E, G)
    law = law.scaled(stiffness_factor)
    loads = LoadCase(line_force=np.array([0.0, 0.0, -params.rho0 * params.area * params.g]))
    q0 = straight_configuration(1, params.length, p=2)
    rod = Rod("r12", 1, q0, inertia, law, p=2, integration="reduced", loads=loads)
    bc = BoundaryConditions.for_nodes(q0, pinned=[0])
    omega = params.omega0
    nodes = q0.reshape(-1, 6)
    u0 = np.zeros_like(nodes)
    u0[:, :3] = cross(omega, nodes[:, :3])
    u0[:, 3:] = omega
    return rod, bc, SystemState(q0, u0.ravel(), 0.0)


class RigidTop:
    """Euler equations of the rigid cylinder pinned at one end.

    The state mirrors a single rod node ``(r, psi)`` with ``r = 0`` so the
    rod integrator, including the complement update, can be reused.
    """

    def __init__(self, params):
        self.params = params
        m = params.rho0 * params.area
        I = 0.25 * params.rho0 * np.pi * params.radius**4
        L = params.length
        self.Theta = np.diag([2.0 * I * L, I * L + m * L**3 / 3.0, I * L + m * L**3 / 3.0])
        self.weight = np.array([0.0, 0.0, -m * L * params.g])
        self.center = np.array([0.5 * L, 0.0, 0.0])

    def rhs(self, t, q, u):
        psi, omega = q[3:], u[3:]
        A = exp_so3(psi)
        torque = cross(self.center, A.T @ self.weight)
        qd = np.zeros(6)
        ud = np.zeros(6)
        qd[3:] = tangent_so3_inv(psi) @ omega
        ud[3:] = np.linalg.solve(self.Theta, torque - cross(omega, self.Theta @ omega))
        return qd, ud

    def tip(self, q):
        return exp_so3(q[..., 3:]) @ np.array([self.params.length, 0.0, 0.0])


def rigid_top_trajectory(params, t_eval, tol=1e-10):
    top = RigidTop(params)
    state = SystemState(np.zeros(6), np.concatenate((np.zeros(3), params.omega0)))
    traj = integrate_dynamic(top, state, DynamicSettings(t_eval[-1], atol=tol, rtol=tol), t_eval=t_eval)
    return top.tip(traj.q), traj


@dataclass
class HeavyTopResult:
    t: np.ndarray
    tip: np.ndarray
    tip_rigid: np.ndarray
    energies: np.ndarray
    max_deviation: float
    energy_drift: float
    n_accepted: int
    n_rejected: int
    runtime: float


def run_heavy_top(config):
    """One precession period of the heavy top and its rigid-body oracle."""
    params = HeavyTopParameters()
    factor = config.get("stiffness_factor", 1.0)
    n_samples = config.get("n_samples", 201)
    rod, bc, state0 = heavy_top_model(params, factor)
    t_end = config.get("t_end", params.period)
    t_eval = np.linspace(0.0, t_end, n_samples)
    settings = DynamicSettings(
        t_end, atol=config.get("atol", 1e-8), rtol=config.get("rtol", 1e-8), fixed_step=config.get("fixed_step")
    )
    dynamics = RodDynamics(rod, bc)
    t0 = time.perf_counter()
    traj = integrate_dynamic(dynamics, state0, settings, t_eval=t_eval)
    runtime = time.perf_counter() - t0
    tip = traj.q[:, -6:-3]
    tip_rigid, _ = rigid_top_trajectory(params, t_eval, config.get("rigid_tol", 1e-10))
    energies = np.array([dynamics.energies(q, u, t) for t, q, u in zip(t_eval, traj.q, traj.u)])
    e_tot = energies[:, 2]
    result = HeavyTopResult(
        t=t_eval,
        tip=tip,
        tip_rigid=tip_rigid,
        energies=energies,
        max_deviation=float(np.max(np.linalg.norm(tip - tip_rigid, axis=1))),
        energy_drift=float(np.max(np.abs(e_tot - e_tot[0])) / abs(e_tot[0])),
        n_accepted=traj.n_accepted,
        n_rejected=traj.n_rejected,
        runtime=runtime,
    )
    out = config.get("out")
    if out:
        tag = f"heavy_top_k{factor:g}"
        write_csv(
            Path(out) / f"{tag}_trajectory.csv",
            ["t", "tip_x", "tip_y", "tip_z", "rigid_x", "rigid_y", "rigid_z"],
            ["s", "m", "m", "m", "m", "m", "m"],
            np.column_stack((t_eval, tip, tip_rigid)),
        )
        write_csv(
            Path(out) / f"{tag}_energy.csv",
            ["t", "E_kin", "E_pot", "E_tot"],
            ["s", "J", "J", "J"],
            np.column_stack((t_eval, energies)),
        )
        write_json(
            Path(out) / f"{tag}.json",
            {
                "stiffness_factor": factor,
                "max_deviation": result.max_deviation,
                "max_deviation_over_length": result.max_deviation / params.length,
                "energy_drift": result.energy_drift,
                "n_accepted": result.n_accepted,
                "n_rejected": result.n_rejected,
                "runtime": runtime,
            },
        )
    return result


# ----------------------------------------------------------------------------
# generic runs
# ----------------------------------------------------------------------------


def _section(cfg):
    shape = cfg["shape"]
    rho0, E = cfg.get("rho0", 1.0), cfg["E"]
    if "G" in cfg:
        G = cfg["G"]
    elif "nu" in cfg:
        G = E / (2.0 * (1.0 + cfg["nu"]))
    else:
        raise ValueError("section needs either G or nu")
    if shape == "circular":
        return section_circular(cfg["radius"], rho0, E, G)
    return section_rectangular(cfg["width"], cfg.get("height", cfg["width"]), rho0, E, G)


def build_generic(config):
    """Rod, boundary conditions and initial velocity described by a config."""
    kind = InterpolationKind.parse(config["kind"])
    p = config.get("order", 1)
    n_el = config["n_el"]
    if "q0" in config:
        q0 = np.asarray(config["q0"], dtype=float)
    else:
        geo = config.get("geometry", {})
        q0 = straight_configuration(
            n_el, geo.get("length", 1.0), p, geo.get("origin", (0.0, 0.0, 0.0)), geo.get("psi", (0.0, 0.0, 0.0))
        )
    inertia, law = _section(config["section"])
    if "stiffness_scale" in config:
        law = law.scaled(config["stiffness_scale"])
    loads = LoadCase(**{k: (np.asarray(v, dtype=float) if isinstance(v, list) else v)
                        for k, v in config.get("loads", {}).items()})
    rod = Rod(kind, n_el, q0, inertia, law, p=p, integration=config.get("integration", "reduced"), loads=loads)
    boundary = config.get("boundary", {})
    bc = BoundaryConditions.for_nodes(q0, clamped=boundary.get("clamped", ()), pinned=boundary.get("pinned", ()))
    u0 = np.asarray(config.get("initial_velocity", np.zeros(rod.n_dof)), dtype=float)
    if u0.shape != (rod.n_dof,):
        raise ValueError(f"initial_velocity must have length {rod.n_dof}")
    return rod, bc, u0


def run_generic(config):
    """Static or dynamic run of a user-described rod.

    Static runs return the final coordinates; dynamic runs the
    :class:`~pgrod.solvers.Trajectory`.
    """
    rod, bc, u0 = build_generic(config)
    out = config.get("out")
    name = config.get("name", "generic")
    if config.get("analysis", "static") == "static":
        s = config.get("static", {})
        settings = StaticSettings(
            n_load_steps=s.get("n_load_steps", 50), atol=s.get("atol", 1e-8), max_iter=s.get("max_iter", 30)
        )
        res = solve_static(rod, bc, settings)
        if out:
            write_csv(Path(out) / f"{name}_state.csv", _STATE_COLUMNS, _STATE_UNITS, _state_rows(rod, res.q))
        return res.q
    d = config["dynamic"]
    t_eval = np.linspace(0.0, d["t_end"], d.get("n_samples", 101))
    settings = DynamicSettings(
        d["t_end"], atol=d.get("atol", 1e-8), rtol=d.get("rtol", 1e-8), fixed_step=d.get("fixed_step")
    )
    dynamics = RodDynamics(rod, bc)
    traj = integrate_dynamic(dynamics, SystemState(rod.q0.copy(), u0), settings, t_eval=t_eval)
    if out:
        n = rod.n_nodes
        cols = ["t"] + [f"{c}{i}" for i in range(n) for c in ("r_x", "r_y", "r_z", "psi_x", "psi_y", "psi_z")]
        units = ["s"] + ["m", "m", "m", "rad", "rad", "rad"] * n
        write_csv(Path(out) / f"{name}_trajectory.csv", cols, units, np.column_stack((t_eval, traj.q)))
        energies = np.array([dynamics.energies(q, u, t) for t, q, u in zip(t_eval, traj.q, traj.u)])
        write_csv(
            Path(out) / f"{name}_energy.csv",
            ["t", "E_kin", "E_pot", "E_tot"],
            ["s", "J", "J", "J"],
            np.column_stack((t_eval, energies)),
        )
    return traj

