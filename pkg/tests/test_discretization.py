import numpy as np
import pytest
from conftest import moved_nodes, random_rod_nodes, random_rotation

from pgrod.discretization import (
    InterpolationKind,
    Mesh,
    eval_r3so3,
    eval_r12,
    eval_se3,
    lagrange_local,
    strain_measures,
    strain_r3so3,
    strain_r12,
    strain_se3,
)
from pgrod.errors import AngleAtPi
from pgrod.experiments import quarter_circle_nodes
from pgrod.liegroup import exp_so3

QUARTER = quarter_circle_nodes(2)
QUARTER_P2 = quarter_circle_nodes(3)


def arc(xi):
    a = 0.5 * np.pi * xi
    return np.array([1.0 - np.cos(a), 0.0, np.sin(a)]) * 2.0 / np.pi


class TestKind:
    def test_parse(self):
        assert InterpolationKind.parse("SE3") is InterpolationKind.SE3
        assert InterpolationKind.parse(InterpolationKind.R12) is InterpolationKind.R12

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown interpolation kind"):
            InterpolationKind.parse("se4")


class TestLagrange:
    def test_linear_midpoint(self):
        N, _ = Mesh(1, 1).lagrange_basis(0, 0.5)
        np.testing.assert_allclose(N, [0.5, 0.5])

    def test_quadratic_middle_node(self):
        mesh = Mesh(2, 2)
        N, _ = mesh.lagrange_basis(1, 0.75)
        np.testing.assert_allclose(N, [0.0, 1.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("p", [1, 2])
    def test_partition_of_unity(self, p):
        mesh = Mesh(3, p)
        rng = np.random.default_rng(p)
        for xi in rng.uniform(0, 1, 20):
            N, dN = mesh.lagrange_basis(mesh.locate(xi), xi)
            assert abs(N.sum() - 1.0) < 1e-12
            assert abs(dN.sum()) < 1e-12

    def test_derivative_fd(self):
        mesh = Mesh(2, 2)
        h = 1e-6
        for xi in np.random.default_rng(3).uniform(0.05, 0.45, 10):
            _, dN = mesh.lagrange_basis(0, xi)
            Np, _ = mesh.lagrange_basis(0, xi + h)
            Nm, _ = mesh.lagrange_basis(0, xi - h)
            np.testing.assert_allclose(dN, (Np - Nm) / (2 * h), atol=1e-7)

    def test_outside_element(self):
        with pytest.raises(ValueError):
            Mesh(4, 1).lagrange_basis(0, 0.6)

    def test_cached_tables_are_copies(self):
        N, _ = lagrange_local(1, np.array([0.5]))
        N[:] = 7.0
        np.testing.assert_allclose(lagrange_local(1, np.array([0.5]))[0], [[0.5, 0.5]])


class TestMesh:
    def test_counts(self):
        mesh = Mesh(4, 2)
        assert mesh.n_nodes == 9
        assert mesh.n_dof == 54
        np.testing.assert_array_equal(mesh.element_nodes[1], [2, 3, 4])

    def test_locate(self):
        mesh = Mesh(4, 1)
        assert mesh.locate(0.0) == 0
        assert mesh.locate(1.0) == 3
        assert mesh.locate(0.3) == 1
        with pytest.raises(ValueError):
            mesh.locate(1.0001)

    def test_invalid(self):
        with pytest.raises(ValueError):
            Mesh(0, 1)
        with pytest.raises(ValueError):
            Mesh(2, 3)

    def test_element_coordinates_share_nodes(self):
        mesh = Mesh(3, 1)
        q = np.arange(mesh.n_dof, dtype=float)
        qe = mesh.element_coordinates(q)
        np.testing.assert_array_equal(qe[0, 1], qe[1, 0])


class TestR12:
    def test_constant_nodes(self):
        node = np.array([1.0, 2.0, 3.0, 0.1, -0.2, 0.3])
        qe = np.tile(node, 3)
        for xi in (0.0, 0.3, 1.0):
            r, r_xi, A, _ = eval_r12(qe, xi)
            np.testing.assert_allclose(r, node[:3])
            np.testing.assert_allclose(A, exp_so3(node[3:]), atol=1e-15)
            np.testing.assert_allclose(r_xi, 0.0, atol=1e-14)

    def test_straight(self):
        qe = np.array([0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0], dtype=float)
        r, _, A, _ = eval_r12(qe, 0.5)
        np.testing.assert_allclose(r, [0.5, 0, 0])
        np.testing.assert_allclose(A, np.eye(3))
        s = strain_r12(qe, 0.5, J=1.0)
        np.testing.assert_allclose(s.gamma, [1, 0, 0])
        np.testing.assert_allclose(s.kappa, [0, 0, 0])

    def test_reference_length(self):
        L = 5.0
        qe = np.array([0, 0, 0, 0, 0, 0, L, 0, 0, 0, 0, 0], dtype=float)
        s = strain_r12(qe, 0.2, J=L)
        np.testing.assert_allclose(s.gamma, [1, 0, 0])

    def test_nodal_interpolation(self):
        qe = QUARTER_P2
        for xi, node in zip((0.0, 0.5, 1.0), qe.reshape(3, 6)):
            r, _, A, _ = eval_r12(qe, xi)
            np.testing.assert_allclose(r, node[:3], atol=1e-15)
            np.testing.assert_allclose(A, exp_so3(node[3:]), atol=1e-15)

    def test_quarter_circle_not_orthogonal(self):
        _, _, A, _ = eval_r12(QUARTER, 0.5)
        assert np.abs(A.T @ A - np.eye(3)).max() > 1e-3

    def test_quarter_circle_linear_curvature(self):
        # for p = 1, skw(A^T A_xi) = skw(A_0^T A_1) / dxi does not depend on xi
        k = np.array([strain_r12(QUARTER, xi, 1.0).kappa for xi in np.linspace(0, 1, 11)])
        np.testing.assert_allclose(k, np.tile([0.0, 1.0, 0.0], (11, 1)), atol=1e-14)
        g = np.array([strain_r12(QUARTER, xi, 1.0).gamma for xi in np.linspace(0, 1, 11)])
        assert np.ptp(g, axis=0).max() > 1e-2

    def test_quarter_circle_quadratic_curvature_varies(self):
        k = np.array([strain_r12(QUARTER_P2, xi, 1.0).kappa[1] for xi in np.linspace(0, 1, 11)])
        assert np.ptp(k) > 1e-3


class TestR3xSO3:
    def test_equal_nodes(self):
        node = np.array([0.0, 0.0, 0.0, 0.3, 0.1, -0.4])
        qe = np.concatenate((node, node + [1, 0, 0, 0, 0, 0]))
        for xi in (0.0, 0.4, 1.0):
            np.testing.assert_allclose(eval_r3so3(qe, xi)[2], exp_so3(node[3:]), atol=1e-15)

    def test_geodesic_midpoint(self):
        _, _, A = eval_r3so3(QUARTER, 0.5)
        np.testing.assert_allclose(A, exp_so3([0.0, np.pi / 4, 0.0]), atol=1e-15)

    def test_endpoints(self):
        nodes = QUARTER.reshape(2, 6)
        for xi, node in zip((0.0, 1.0), nodes):
            r, _, A = eval_r3so3(QUARTER, xi)
            np.testing.assert_allclose(r, node[:3], atol=1e-15)
            np.testing.assert_allclose(A, exp_so3(node[3:]), atol=1e-14)

    def test_quarter_circle_curvature(self):
        k = np.array([strain_r3so3(QUARTER, xi, 1.0).kappa for xi in np.linspace(0, 1, 101)])
        np.testing.assert_allclose(k, np.tile([0, np.pi / 2, 0], (101, 1)), atol=1e-14)
        assert np.array_equal(strain_r3so3(QUARTER, 0.25, 1.0).kappa, strain_r3so3(QUARTER, 0.75, 1.0).kappa)
        g = np.array([strain_r3so3(QUARTER, xi, 1.0).gamma for xi in np.linspace(0, 1, 11)])
        assert np.ptp(g[:, 0]) > 1e-2

    def test_straight(self):
        qe = np.array([0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0], dtype=float)
        np.testing.assert_allclose(strain_r3so3(qe, 0.3, 2.0).kappa, 0.0)

    def test_half_turn(self):
        qe = np.array([0, 0, 0, 0, 0, 0, 1, 0, 0, np.pi, 0, 0], dtype=float)
        with pytest.raises(AngleAtPi):
            eval_r3so3(qe, 0.5)


class TestSE3:
    def test_constant(self):
        node = np.array([1.0, 0.0, 2.0, 0.3, 0.1, -0.4])
        H = eval_se3(np.tile(node, 2), 0.7)
        np.testing.assert_allclose(H[:3, 3], node[:3], atol=1e-15)
        np.testing.assert_allclose(H[:3, :3], exp_so3(node[3:]), atol=1e-15)

    def test_arc(self):
        for xi in np.linspace(0, 1, 21):
            np.testing.assert_allclose(eval_se3(QUARTER, xi)[:3, 3], arc(xi), atol=1e-10)

    def test_rotation_matches_r3so3(self):
        rng = np.random.default_rng(5)
        qe = random_rod_nodes(rng, 2)
        for xi in rng.uniform(0, 1, 10):
            np.testing.assert_allclose(eval_se3(qe, xi)[:3, :3], eval_r3so3(qe, xi)[2], atol=1e-12)

    def test_midpoint_differs_from_linear(self):
        assert np.linalg.norm(eval_se3(QUARTER, 0.5)[:3, 3] - eval_r3so3(QUARTER, 0.5)[0]) > 1e-2

    def test_quarter_circle_strains(self):
        s = strain_se3(QUARTER, 1.0)
        np.testing.assert_allclose(s.gamma, [0, 0, 1], atol=1e-14)
        np.testing.assert_allclose(s.kappa, [0, np.pi / 2, 0], atol=1e-14)

    def test_straight_reference(self):
        qe = np.array([0, 0, 0, 0, 0, 0, 3, 0, 0, 0, 0, 0], dtype=float)
        s = strain_se3(qe, 3.0)
        np.testing.assert_allclose(s.as_array(), [1, 0, 0, 0, 0, 0], atol=1e-15)


class TestObjectivity:
    @pytest.mark.parametrize("kind,p", [("r12", 1), ("r12", 2), ("r3so3", 1), ("se3", 1)])
    def test_rigid_motion(self, kind, p):
        rng = np.random.default_rng(11)
        mesh = Mesh(2, p)
        checked = 0
        while checked < 10:
            q = random_rod_nodes(rng, mesh.n_nodes)
            moved = moved_nodes(q, random_rotation(rng), rng.normal(size=3))
            if moved is None:
                continue
            s = rng.uniform(0, 1, 10)
            for a, b in zip(
                strain_measures(kind, mesh.element_coordinates(q), s, mesh.element_length)[:2],
                strain_measures(kind, mesh.element_coordinates(moved), s, mesh.element_length)[:2],
            ):
                np.testing.assert_allclose(a, b, atol=1e-11)
            checked += 1


def test_two_node_kinds_reject_quadratic_elements():
    qe = np.zeros((3, 6))
    with pytest.raises(ValueError):
        strain_measures("se3", qe, np.array([0.5]), 1.0)
