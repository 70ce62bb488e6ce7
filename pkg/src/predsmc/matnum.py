"""Dense linear algebra kernel: matrix exponential, Lyapunov solve, norms, pseudo-inverse.

Everything here targets desk-scale matrices (n <= ~10); algorithms are chosen
for verifiability, not asymptotics.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, DomainError, NotHurwitzError, SingularMatrixError

# Relative cutoff for the truncated series on the scaled matrix.
_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 120


def _as_square(M, name: str) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name}: expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name}: matrix has non-finite entries")
    return A


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """Return e^{M t} by scaling-and-squaring with a truncated power series.

    The scaled matrix has infinity-norm <= 0.5, so the series terminates in a
    few dozen terms; squaring restores the scale.
    """
    A = _as_square(M, "mat_exp")
    t = float(t)
    if not math.isfinite(t):
        raise DomainError("mat_exp: time must be finite")
    A = A * t
    n = A.shape[0]
    if n == 1:  # scalar case: the series/squaring pipeline reduces to exp
        return np.array([[math.exp(A[0, 0])]])
    nrm = np.linalg.norm(A, np.inf)
    squarings = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0 else 0
    S = A / (2.0**squarings)

    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _SERIES_MAX_TERMS + 1):
        term = term @ S / k
        E = E + term
        if np.linalg.norm(term, np.inf) <= _SERIES_RTOL * np.linalg.norm(E, np.inf):
            break
    for _ in range(squarings):
        E = E @ E
    return E


def solve_lyapunov(Abar22) -> np.ndarray:
    """Solve P A + A^T P = -I for symmetric positive definite P.

    The equation is vectorized into an n^2 x n^2 linear system and solved
    densely.  Positive definiteness of the result certifies that the input is
    Hurwitz; otherwise NotHurwitzError is raised.
    """
    A = _as_square(Abar22, "solve_lyapunov")
    n = A.shape[0]
    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    rhs = -eye.flatten(order="F")
    try:
        vec = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise NotHurwitzError(
            "solve_lyapunov: singular Lyapunov operator (eigenvalue pair sums to zero)"
        ) from exc
    P = vec.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise NotHurwitzError(
            "solve_lyapunov: solution is not positive definite; input is not Hurwitz"
        ) from exc
    residual = spectral_norm(P @ A + A.T @ P + eye)
    if residual > 1e-10:
        raise NotHurwitzError(f"solve_lyapunov: residual {residual:.3e} exceeds 1e-10")
    return P


def pseudo_inverse(B1) -> np.ndarray:
    """Left Moore-Penrose pseudo-inverse (B^T B)^{-1} B^T of a full-column-rank matrix."""
    B = np.asarray(B1, dtype=float)
    if B.ndim != 2:
        raise DimensionError(f"pseudo_inverse: expected a 2-D matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise DomainError("pseudo_inverse: matrix has non-finite entries")
    gram = B.T @ B
    try:
        # Cholesky doubles as the full-column-rank check: gram is PD iff rank(B) == cols.
        np.linalg.cholesky(gram)
        return np.linalg.solve(gram, B.T)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("pseudo_inverse: matrix is rank deficient") from exc


def spectral_norm(M) -> float:
    """Largest singular value (Euclidean norm for vectors)."""
    A = np.asarray(M, dtype=float)
    if A.ndim <= 1:
        return float(np.linalg.norm(A))
    return float(np.linalg.norm(A, 2))


def is_hurwitz(M) -> bool:
    """True iff the Lyapunov solve certifies a stable spectrum."""
    try:
        solve_lyapunov(M)
    except NotHurwitzError:
        return False
    return True
