"""Closed-form SO(3) and SE(3) kernels.

All functions accept a single vector/matrix or a stack of them; leading
dimensions broadcast. Rotation vectors have shape ``(..., 3)``, rotation
matrices ``(..., 3, 3)``, Euclidean transformations are homogeneous
``(..., 4, 4)`` matrices and twists ``(..., 6)`` ordered as
``(d, psi)`` (translational part first).
"""

import numpy as np

from .errors import AngleAtPi, NotSkewSymmetric, TangentSingular

# below this angle the first-order approximations are used
EPS_ANGLE = 1.0e-6
# distance to pi (resp. 2*pi*k) treated as singular
TOL_PI = 1.0e-9
SKEW_TOL = 1.0e-8


def hat(v):
    v = np.asarray(v, dtype=float)
    B = np.zeros(v.shape[:-1] + (3, 3))
    B[..., 0, 1] = -v[..., 2]
    B[..., 0, 2] = v[..., 1]
    B[..., 1, 0] = v[..., 2]
    B[..., 1, 2] = -v[..., 0]
    B[..., 2, 0] = -v[..., 1]
    B[..., 2, 1] = v[..., 0]
    return B


def vee(B, tol=SKEW_TOL):
    """Inverse of :func:`hat`; raises if ``B`` is not skew-symmetric."""
    B = np.asarray(B, dtype=float)
    defect = np.abs(B + np.swapaxes(B, -1, -2)).max(initial=0.0)
    if defect > tol:
        raise NotSkewSymmetric(f"skewness defect {defect:.3e} exceeds {tol:.1e}")
    return np.stack((B[..., 2, 1], B[..., 0, 2], B[..., 1, 0]), axis=-1)


def cross(a, b):
    """Batched cross product; cheaper than ``np.cross`` for small stacks."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack((a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0), axis=-1)


def skw(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A - np.swapaxes(A, -1, -2))


def _angle(psi):
    psi = np.asarray(psi, dtype=float)
    theta = np.linalg.norm(psi, axis=-1)
    small = theta < EPS_ANGLE
    # dummy angle on the small branch keeps the exact formulas finite
    safe = np.where(small, 1.0, theta)
    return psi, theta, small, safe


def exp_so3(psi):
    """Rodrigues formula; ``I + hat(psi)`` below ``EPS_ANGLE``."""
    psi, _, small, th = _angle(psi)
    s2 = np.sin(0.5 * th)
    alpha = np.where(small, 1.0, np.sin(th) / th)
    beta = np.where(small, 0.0, 2.0 * s2 * s2 / (th * th))
    P = hat(psi)
    return np.eye(3) + alpha[..., None, None] * P + beta[..., None, None] * (P @ P)


def _axis_sine(A):
    # vee(skw(A)) = sin(angle) * axis
    return 0.5 * np.stack(
        (A[..., 2, 1] - A[..., 1, 2], A[..., 0, 2] - A[..., 2, 0], A[..., 1, 0] - A[..., 0, 1]),
        axis=-1,
    )


def rotation_angle(A):
    # atan2 keeps full relative accuracy near 0 and pi, unlike arccos of the trace
    A = np.asarray(A, dtype=float)
    c = 0.5 * (np.trace(A, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(np.linalg.norm(_axis_sine(A), axis=-1), c)


def log_so3(A):
    A = np.asarray(A, dtype=float)
    v = _axis_sine(A)
    s = np.linalg.norm(v, axis=-1)
    omega = np.arctan2(s, 0.5 * (np.trace(A, axis1=-2, axis2=-1) - 1.0))
    if np.any(omega >= np.pi - TOL_PI):
        raise AngleAtPi(f"rotation angle {np.max(omega):.12f} too close to pi")
    small = omega < EPS_ANGLE
    # omega / s rather than omega / sin(omega) so that errors in s cancel
    factor = np.where(small, 1.0, omega / np.where(small, 1.0, s))
    return factor[..., None] * v


def tangent_so3(psi):
    """Tangent map ``T`` with ``omega_K = T(psi) psi_dot``."""
    psi, _, small, th = _angle(psi)
    s2 = np.sin(0.5 * th)
    a = np.where(small, 0.5, 2.0 * s2 * s2 / (th * th))
    b = np.where(small, 0.0, (th - np.sin(th)) / th**3)
    P = hat(psi)
    return np.eye(3) - a[..., None, None] * P + b[..., None, None] * (P @ P)


def tangent_so3_inv(psi):
    psi, theta, small, th = _angle(psi)
    k = np.rint(theta / (2.0 * np.pi))
    if np.any((k >= 1) & (np.abs(theta - 2.0 * np.pi * k) < TOL_PI)):
        raise TangentSingular("inverse tangent map is singular at |psi| = 2*pi*k")
    half = 0.5 * th
    c = np.where(small, 0.0, (1.0 - half / np.tan(half)) / (th * th))
    P = hat(psi)
    return np.eye(3) + 0.5 * P + c[..., None, None] * (P @ P)


def transform(A, r):
    """Assemble homogeneous matrices from rotations ``A`` and translations ``r``."""
    A = np.asarray(A, dtype=float)
    r = np.asarray(r, dtype=float)
    shape = np.broadcast_shapes(A.shape[:-2], r.shape[:-1])
    H = np.zeros(shape + (4, 4))
    H[..., :3, :3] = A
    H[..., :3, 3] = r
    H[..., 3, 3] = 1.0
    return H


def inverse_transform(H):
    H = np.asarray(H, dtype=float)
    At = np.swapaxes(H[..., :3, :3], -1, -2)
    return transform(At, -np.einsum("...ij,...j->...i", At, H[..., :3, 3]))


def exp_se3(theta):
    theta = np.asarray(theta, dtype=float)
    d, psi = theta[..., :3], theta[..., 3:]
    Tt = np.swapaxes(tangent_so3(psi), -1, -2)
    return transform(exp_so3(psi), np.einsum("...ij,...j->...i", Tt, d))


def log_se3(H):
    H = np.asarray(H, dtype=float)
    psi = log_so3(H[..., :3, :3])
    Tit = np.swapaxes(tangent_so3_inv(psi), -1, -2)
    d = np.einsum("...ij,...j->...i", Tit, H[..., :3, 3])
    return np.concatenate((d, psi), axis=-1)


def complement_rotation(psi):
    """Replace rotation vectors longer than pi by their complement.

    ``exp_so3`` of the result equals that of the input; vectors with norm
    at most pi are returned unchanged.
    """
    psi = np.asarray(psi, dtype=float)
    theta = np.linalg.norm(psi, axis=-1)
    big = theta > np.pi
    scale = np.where(big, 1.0 - 2.0 * np.pi / np.where(big, theta, 1.0), 1.0)
    return scale[..., None] * psi
