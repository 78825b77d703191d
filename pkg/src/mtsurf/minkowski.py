"""Linear algebra in R^5_1 with signature (+,+,+,+,-) and its complexification.

Every function accepts batches: the last axis holds the five components and
leading axes broadcast.  5x5 frames use columns as frame vectors.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, OrientationError

ETA = np.diag([1.0, 1.0, 1.0, 1.0, -1.0])
_SIGN = np.array([1.0, 1.0, 1.0, 1.0, -1.0])

NULL_TOL = 1e-9


def basis(k: int) -> np.ndarray:
    e = np.zeros(5)
    e[k] = 1.0
    return e


def lorentz_inner(x, y):
    """<x, y> = x0 y0 + x1 y1 + x2 y2 + x3 y3 - x4 y4."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.sum(x * y * _SIGN, axis=-1)


def complex_bilinear_inner(z, w):
    """Complex bilinear extension of the Lorentz product (no conjugation)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.sum(z * w * _SIGN, axis=-1)


def bilinear(z, w):
    """Bilinear pairing that keeps real inputs real."""
    return np.sum(np.asarray(z) * np.asarray(w) * _SIGN, axis=-1)


def is_future_pointing(x) -> bool:
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise DomainError("the zero vector has no time orientation")
    return bool(x[4] > 0)


def so41_membership_residual(F) -> float:
    """max |F^T eta F - eta| over all entries."""
    F = np.asarray(F)
    return float(np.max(np.abs(np.swapaxes(F, -1, -2) @ ETA @ F - ETA)))


def null_line_normalize(x, tol: float = NULL_TOL):
    """Representative of the null line through x with last component 1."""
    x = np.asarray(x, dtype=float)
    norm2 = np.sum(x * x, axis=-1)
    bad = np.abs(lorentz_inner(x, x)) > tol * norm2
    if np.any(bad) or np.any(norm2 == 0):
        raise DomainError("vector is not null")
    if np.any(x[..., 4] <= 0):
        raise OrientationError("null vector is not future pointing")
    return x / x[..., 4:5]


def lorentz_inverse(F):
    """Inverse of a Lorentz matrix, eta F^T eta."""
    return ETA @ np.swapaxes(F, -1, -2) @ ETA


def eta_polar(F):
    """Orthogonal factor (with respect to eta) of the polar decomposition of F.

    Uses the Newton iteration X <- (X + eta X^{-T} eta) / 2, which converges
    quadratically for matrices near the group.
    """
    X = np.array(F, dtype=float)
    for _ in range(6):
        Y = 0.5 * (X + ETA @ np.linalg.inv(np.swapaxes(X, -1, -2)) @ ETA)
        if np.max(np.abs(Y - X)) < 1e-15:
            return Y
        X = Y
    return X


def boost(s: float, i: int = 3, j: int = 4) -> np.ndarray:
    """Hyperbolic rotation with rapidity s in the (x_i, x_4) plane."""
    B = np.eye(5)
    c, sh = np.cosh(s), np.sinh(s)
    B[i, i] = B[j, j] = c
    B[i, j] = B[j, i] = sh
    return B


def rotation(angle: float, i: int, j: int) -> np.ndarray:
    R = np.eye(5)
    c, s = np.cos(angle), np.sin(angle)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -s, s
    return R


def random_lorentz(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element of the identity component of SO(4,1)."""
    F = np.eye(5)
    for i in range(4):
        for j in range(i + 1, 4):
            F = F @ rotation(rng.uniform(-np.pi, np.pi), i, j)
    for i in range(4):
        F = F @ boost(scale * rng.normal(), i, 4)
    return F
