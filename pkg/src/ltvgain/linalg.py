"""Small dense linear algebra: symmetric eigensolver, largest singular value, linear solve.

Matrices here are at most a few hundred rows, so clarity wins over speed.
Arithmetic on whole rows and columns is delegated to numpy.
"""

import math

import numpy as np

from .errors import AsymmetricMatrixError, SingularMatrixError

__all__ = ["sym_eig", "max_singular_value", "solve"]


def sym_eig(M, tol=1e-12, max_sweeps=100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Args:
        M: Square symmetric array.
        tol: Sweeps stop once the off-diagonal Frobenius mass is at most
            ``tol * ||M||_F``.
        max_sweeps: Hard cap on full sweeps over the upper triangle.

    Returns:
        ``(w, V)`` with eigenvalues ``w`` in descending order and orthonormal
        eigenvectors as the columns of ``V``.

    Raises:
        AsymmetricMatrixError: if ``max|M - M^T| > 1e-10 * max|M|``.
    """
    a = np.array(M, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    scale_max = np.max(np.abs(a))
    if np.max(np.abs(a - a.T)) > 1e-10 * scale_max:
        raise AsymmetricMatrixError("matrix is not symmetric within 1e-10 relative")
    a = 0.5 * (a + a.T)
    V = np.eye(n)
    fro = np.linalg.norm(a)
    target = tol * fro

    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-100 * abs(diff):
                    t = apq / diff  # theta would overflow; small-angle limit
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q]
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def max_singular_value(M):
    """Largest singular value, as ``sqrt(lambda_max(M^T M))``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    # the smaller Gram matrix has the same nonzero spectrum
    G = M.T @ M if M.shape[1] <= M.shape[0] else M @ M.T
    w, _ = sym_eig(G)
    return math.sqrt(max(w[0], 0.0))


def solve(M, rhs, pivot_tol=1e-12):
    """Solve ``M X = rhs`` by Gaussian elimination with partial pivoting.

    ``rhs`` may be a vector or a matrix; the result has the same shape.
    A pivot smaller than ``pivot_tol * max|M|`` raises SingularMatrixError.
    """
    a = np.array(M, dtype=float, copy=True)
    b = np.array(rhs, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"solve needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if b.shape[0] != n:
        raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {n}")
    threshold = pivot_tol * (np.max(np.abs(a)) if n else 0.0)

    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) <= threshold or a[piv, k] == 0.0:
            raise SingularMatrixError(f"pivot {a[piv, k]:.3e} below threshold in column {k}")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        b[k + 1:] -= np.outer(factors, b[k])

    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x[:, 0] if vector else x
