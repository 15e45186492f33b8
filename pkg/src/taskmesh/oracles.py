"""Independent dense/matrix reference implementations.

These oracles never share code with the stencil paths they check: the Poisson
oracle runs red-black Gauss-Seidel directly on the assembled sparse-as-dense
matrix, and the diffusion oracle solves the backward-Euler system with a
direct dense solve.
"""

from __future__ import annotations

import numpy as np


def dense_poisson_system(extents, spacing, rhs_grid, boundary_value=0.0):
    """Assemble A p = b for the folded-reflection Dirichlet discretization.

    Unknowns are cell centers in row-major order.  A boundary face folds the
    reflection ghost (2 g - p_C) into the diagonal and right-hand side.
    """
    dims = len(extents)
    n = int(np.prod(extents))
    inv_sq = [1.0 / s**2 for s in spacing]
    A = np.zeros((n, n))
    b = np.asarray(rhs_grid, dtype=float).reshape(n).copy()
    strides = [int(np.prod(extents[a + 1 :])) for a in range(dims)]
    for k in range(n):
        idx = np.unravel_index(k, extents)
        diag = 0.0
        for axis in range(dims):
            diag -= 2.0 * inv_sq[axis]
            for step in (-1, 1):
                nb = idx[axis] + step
                if 0 <= nb < extents[axis]:
                    A[k, k + step * strides[axis]] = inv_sq[axis]
                else:
                    diag -= inv_sq[axis]
                    b[k] -= 2.0 * boundary_value * inv_sq[axis]
        A[k, k] = diag
    return A, b


def dense_red_black_gsm(A, b, extents, p0, pairs):
    """Red-black Gauss-Seidel on the assembled matrix, from matrix rows."""
    extents = tuple(extents)
    p = np.asarray(p0, dtype=float).reshape(-1).copy()
    n = p.size
    parity = np.array(
        [sum(np.unravel_index(k, extents)) % 2 for k in range(n)]
    )
    for _ in range(pairs):
        for color in (0, 1):
            for k in np.nonzero(parity == color)[0]:
                off = A[k] @ p - A[k, k] * p[k]
                p[k] = (b[k] - off) / A[k, k]
    return p.reshape(extents)


def dense_gauss_seidel_solve(A, b, tol=1e-13, max_iters=200000):
    """Plain (lexicographic) Gauss-Seidel iteration used for convergence checks."""
    p = np.zeros_like(b)
    for _ in range(max_iters):
        for k in range(b.size):
            off = A[k] @ p - A[k, k] * p[k]
            p[k] = (b[k] - off) / A[k, k]
        if np.linalg.norm(A @ p - b) < tol:
            break
    return p


def dense_diffusion_system(extents, spacing, face_coeffs, dt, periodic=()):
    """Assemble (I - dt * div(D grad)) x = b for frozen face coefficients.

    ``face_coeffs[axis]`` holds the diffusion coefficient on the low face of
    every cell along ``axis`` plus one trailing face, shape
    ``extents[:axis] + (extents[axis]+1,) + extents[axis+1:]``.  On periodic
    axes the leading entry is the wrap face; on non-periodic axes the domain
    boundary carries zero flux (the edge coefficients are ignored).
    """
    dims = len(extents)
    if not periodic:
        periodic = (False,) * dims
    n = int(np.prod(extents))
    A = np.eye(n)
    for k in range(n):
        idx = np.unravel_index(k, extents)
        for axis in range(dims):
            inv_sq = 1.0 / spacing[axis] ** 2
            for step, face_off in ((-1, 0), (1, 1)):
                nb = idx[axis] + step
                if not 0 <= nb < extents[axis]:
                    if not periodic[axis]:
                        continue
                    nb %= extents[axis]
                face_idx = list(idx)
                face_idx[axis] += face_off
                nb_idx = list(idx)
                nb_idx[axis] = nb
                D = face_coeffs[axis][tuple(face_idx)]
                col = int(np.ravel_multi_index(nb_idx, extents))
                A[k, k] += dt * D * inv_sq
                A[k, col] -= dt * D * inv_sq
    return A


def mean_ci_summary(values):
    """Naive mean / median / min / max / 95% CI half-width, exactly as written."""
    values = list(values)
    n = len(values)
    mean = sum(values) / n
    ordered = sorted(values)
    mid = n // 2
    median = ordered[mid] if n % 2 == 1 else (ordered[mid - 1] + ordered[mid]) / 2
    if n > 1:
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        ci = 1.96 * (var**0.5) / (n**0.5)
    else:
        ci = 0.0
    return mean, median, ordered[0], ordered[-1], ci
