"""Covariance functions: Matern-5/2 ARD, subset-size basis kernels, task kernel."""

from __future__ import annotations

import numpy as np

SQRT5 = np.sqrt(5.0)


def _check_positive(name: str, value) -> None:
    if np.any(np.asarray(value) <= 0.0):
        raise ValueError(f"{name} must be strictly positive")


def matern52_ard(x: np.ndarray, x2: np.ndarray, theta: float, lambdas: np.ndarray) -> float:
    """Matern-5/2 covariance with per-dimension inverse-squared length scales.

    r is the square root of the quadratic form (x-x2)^T diag(lambdas) (x-x2);
    the returned value is theta * (1 + sqrt5 r + 5/3 r^2) exp(-sqrt5 r).
    """
    _check_positive("theta", theta)
    _check_positive("lambdas", lambdas)
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.shape[-1] != len(np.atleast_1d(lambdas)):
        raise ValueError("x, x2 and lambdas must have matching lengths")
    diff = x - x2
    r = np.sqrt(np.dot(diff * np.atleast_1d(lambdas), diff))
    return float(theta * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r))


def matern52_gram(
    A: np.ndarray, B: np.ndarray, theta: float, lambdas: np.ndarray
) -> np.ndarray:
    """Cross-covariance matrix of the Matern-5/2 ARD kernel over two point sets."""
    _check_positive("theta", theta)
    _check_positive("lambdas", lambdas)
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    As = A * np.sqrt(lambdas)
    Bs = B * np.sqrt(lambdas)
    sq = (
        np.sum(As**2, axis=1)[:, None]
        + np.sum(Bs**2, axis=1)[None, :]
        - 2.0 * As @ Bs.T
    )
    r = np.sqrt(np.maximum(sq, 0.0))
    return theta * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def env_basis_loss(s_t) -> np.ndarray:
    """Basis (1, (1-s)^2): monotone in the size coordinate with extremum at 1."""
    s_t = np.asarray(s_t, dtype=float)
    if np.any(s_t < -1e-12) or np.any(s_t > 1.0 + 1e-12):
        raise ValueError("subset-size coordinate must lie in [0, 1]")
    return np.stack([np.ones_like(s_t), (1.0 - s_t) ** 2], axis=-1)


def env_basis_cost(s) -> np.ndarray:
    """Basis (1, s) for the log-cost model: polynomial growth in subset size."""
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("subset-size coordinate must lie in [0, 1]")
    return np.stack([np.ones_like(s), s], axis=-1)


def _check_psd2(sigma_phi: np.ndarray) -> None:
    sigma_phi = np.asarray(sigma_phi, dtype=float)
    if sigma_phi.shape != (2, 2) or not np.allclose(sigma_phi, sigma_phi.T):
        raise ValueError("basis weight covariance must be symmetric 2x2")
    if np.min(np.linalg.eigvalsh(sigma_phi)) < -1e-12:
        raise ValueError("basis weight covariance must be PSD")


def env_kernel_gram(
    A: np.ndarray,
    B: np.ndarray,
    theta: float,
    lambdas: np.ndarray,
    sigma_phi: np.ndarray,
    basis: str,
) -> np.ndarray:
    """Factorized kernel: Matern over configurations times a finite-rank size kernel.

    A and B carry the size coordinate in their last column.
    """
    _check_psd2(sigma_phi)
    basis_fn = {"loss": env_basis_loss, "cost": env_basis_cost}[basis]
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    kx = matern52_gram(A[:, :-1], B[:, :-1], theta, lambdas)
    pa = basis_fn(A[:, -1])
    pb = basis_fn(B[:, -1])
    return kx * (pa @ np.asarray(sigma_phi) @ pb.T)


def task_kernel_matrix(task_chol: np.ndarray) -> np.ndarray:
    """Task covariance L L^T from its lower-triangular Cholesky factor."""
    L = np.atleast_2d(np.asarray(task_chol, dtype=float))
    if np.any(np.diag(L) <= 0.0):
        raise ValueError("task Cholesky factor needs a positive diagonal")
    return L @ L.T


def task_kernel_gram(
    A: np.ndarray,
    B: np.ndarray,
    theta: float,
    lambdas: np.ndarray,
    task_chol: np.ndarray,
) -> np.ndarray:
    """Product kernel: Matern over configurations times a discrete task covariance.

    A and B carry the integer task index in their last column.
    """
    KT = task_kernel_matrix(task_chol)
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    ta = A[:, -1].astype(int)
    tb = B[:, -1].astype(int)
    if ta.max(initial=0) >= KT.shape[0] or tb.max(initial=0) >= KT.shape[0]:
        raise IndexError("task index out of range")
    kx = matern52_gram(A[:, :-1], B[:, :-1], theta, lambdas)
    return kx * KT[np.ix_(ta, tb)]
