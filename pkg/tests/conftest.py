import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from pgrod.liegroup import exp_so3, log_so3, rotation_angle


def random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def moved_nodes(q, R, t):
    """Nodal data ``(R r_i + t, log(R A_i))`` of a rigidly moved rod.

    Returns ``None`` when a moved nodal rotation gets too close to a half
    turn for the logarithm.
    """
    nodes = np.asarray(q, dtype=float).reshape(-1, 6)
    A = R @ exp_so3(nodes[:, 3:])
    if np.any(rotation_angle(A) > np.pi - 1e-3):
        return None
    out = np.empty_like(nodes)
    out[:, :3] = nodes[:, :3] @ R.T + t
    out[:, 3:] = log_so3(A)
    return out.ravel()


def random_rod_nodes(rng, n_nodes, spacing=0.3, angle=0.6):
    """Gently curved nodal data with moderate relative rotations."""
    q = np.zeros((n_nodes, 6))
    q[:, :3] = np.cumsum(spacing * (np.array([1.0, 0.0, 0.0]) + 0.3 * rng.normal(size=(n_nodes, 3))), axis=0)
    q[:, 3:] = angle * rng.uniform(-1.0, 1.0, size=(n_nodes, 3))
    return q.ravel()


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
