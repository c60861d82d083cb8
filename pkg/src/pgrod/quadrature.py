import math

import numpy as np


def _legendre(m, x):
    """Legendre polynomial ``P_m`` and its derivative at ``x``."""
    P0, P1 = np.ones_like(x), x.copy()
    for n in range(2, m + 1):
        P0, P1 = P1, ((2 * n - 1) * x * P1 - (n - 1) * P0) / n
    return P1, m * (x * P1 - P0) / (x * x - 1.0)


def gauss_legendre(m, tol=1e-15, max_iter=100):
    """Nodes and weights of the ``m``-point Gauss-Legendre rule on ``[-1, 1]``.

    Roots of the Legendre polynomial are found by Newton iteration from
    Chebyshev-like initial guesses.
    """
    if m < 1:
        raise ValueError("number of quadrature points must be positive")
    k = np.arange(1, m + 1)
    x = np.cos(np.pi * (k - 0.25) / (m + 0.5))
    for _ in range(max_iter):
        P, dP = _legendre(m, x)
        dx = P / dP
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    _, dP = _legendre(m, x)
    w = 2.0 / ((1.0 - x * x) * dP * dP)
    order = np.argsort(x)
    return x[order], w[order]


def quadrature_counts(p):
    """Full and reduced number of Gauss points for order ``p`` elements."""
    if p not in (1, 2):
        raise ValueError(f"unsupported polynomial order p={p}")
    return math.ceil((p + 1) ** 2 / 2), p


class QuadratureRule:
    """Gauss-Legendre rule mapped to local element coordinates ``[0, 1]``.

    ``weights`` are scaled to the element length ``dxi`` so that they sum
    to it.
    """

    def __init__(self, m, dxi):
        x, w = gauss_legendre(m)
        self.m = m
        self.points = 0.5 * (x + 1.0)
        self.weights = 0.5 * w * dxi

    def __repr__(self):
        return f"QuadratureRule(m={self.m})"
