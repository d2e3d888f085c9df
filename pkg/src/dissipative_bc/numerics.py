"""Dense linear-algebra helpers: eigenvalues, definiteness, Lyapunov and
Riccati solvers.

Everything here works on small (order <= ~10) dense float64 arrays.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import InfeasibleInput, NumericalFailure

TOL_HURWITZ = 1e-9


def as_symmetric(M):
    """Return ``(M + M.T) / 2`` as a float array, rejecting non-finite input."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (M + M.T)


def sym_eigen(M):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending."""
    M = as_symmetric(M)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigensolver failed: {exc}") from exc
    return w, V


def eigvals(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}") from exc


def is_hurwitz(A, tol=TOL_HURWITZ):
    """True iff every eigenvalue of ``A`` has real part below ``-tol``."""
    return bool(np.all(eigvals(A).real < -tol))


class Definiteness(Enum):
    PD = "PD"
    PSD = "PSD"
    ND = "ND"
    NSD = "NSD"
    INDEFINITE = "Indefinite"


@dataclass(frozen=True)
class DefinitenessVerdict:
    min_eigenvalue: float
    max_eigenvalue: float
    classification: Definiteness


def definiteness(M, tol=None):
    """Classify a symmetric matrix.

    The default tolerance is ``1e-9 * max(1, ||M||_F)``.  Eigenvalues with
    magnitude below it count as zero, so e.g. ``diag(1, 1e-12)`` is PSD,
    not PD.
    """
    M = as_symmetric(M)
    if tol is None:
        tol = 1e-9 * max(1.0, np.linalg.norm(M, "fro"))
    w, _ = sym_eigen(M)
    lo, hi = float(w[0]), float(w[-1])
    if lo > tol:
        cls = Definiteness.PD
    elif hi < -tol:
        cls = Definiteness.ND
    elif lo >= -tol:
        cls = Definiteness.PSD
    elif hi <= tol:
        cls = Definiteness.NSD
    else:
        cls = Definiteness.INDEFINITE
    return DefinitenessVerdict(lo, hi, cls)


def is_pd(M, tol=None):
    return definiteness(M, tol).classification is Definiteness.PD


def solve_lyapunov(A, M):
    """Solve ``A X + X A^T + M = 0`` for symmetric ``X``.

    Uses the vectorized (Kronecker) form, which costs O(n^6) and is only
    meant for small orders.  ``A`` must be Hurwitz so the solution is
    unique; it is positive definite whenever ``M`` is.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = as_symmetric(M)
    n = A.shape[0]
    if A.shape != (n, n) or M.shape != (n, n):
        raise ValueError(f"shape mismatch: A {A.shape}, M {M.shape}")
    if not is_hurwitz(A):
        raise InfeasibleInput("solve_lyapunov requires a Hurwitz matrix")
    eye = np.eye(n)
    # column-major vec: vec(A X) = (I kron A) vec X, vec(X A^T) = (A kron I) vec X
    K = np.kron(eye, A) + np.kron(A, eye)
    x = np.linalg.solve(K, -M.reshape(-1, order="F"))
    return as_symmetric(x.reshape(n, n, order="F"))


def lyapunov_residual(A, X, M):
    return np.linalg.norm(A @ X + X @ A.T + M, "fro")


def solve_care(A, B, E, F_weight):
    """Stabilizing solution of ``A^T X + X A - X B E^{-1} B^T X + F = 0``.

    ``F_weight`` is the assembled constant term (``C^T F C`` for a
    regulator, ``B F B^T`` when called on the dual pair for an observer).
    Computed from the stable invariant subspace of the Hamiltonian matrix
    via an ordered real Schur form.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    B = B.reshape(n, -1)
    E = np.atleast_2d(np.asarray(E, dtype=float))
    F = as_symmetric(F_weight)
    if A.shape != (n, n) or F.shape != (n, n) or E.shape != (B.shape[1],) * 2:
        raise ValueError("solve_care: inconsistent dimensions")
    E = as_symmetric(E)
    if not is_pd(E):
        raise InfeasibleInput("control weight E must be positive definite")

    G = B @ np.linalg.solve(E, B.T)
    H = np.block([[A, -G], [-F, -A.T]])
    ham_eigs = np.linalg.eigvals(H)
    scale = max(1.0, np.abs(ham_eigs).max())
    if np.any(np.abs(ham_eigs.real) <= 1e-10 * scale):
        raise InfeasibleInput("Hamiltonian has eigenvalues on the imaginary axis; "
                              "no stabilizing solution")
    try:
        T, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise InfeasibleInput(f"stable subspace has dimension {sdim}, expected {n}")
    U11, U21 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U11) > 1e12:
        raise InfeasibleInput("stable subspace is not a graph; pair not stabilizable")
    X = as_symmetric(np.linalg.solve(U11.T, U21.T).T)
    if not is_hurwitz(A - G @ X):
        raise InfeasibleInput("Riccati solution is not stabilizing")
    return X


def care_residual(A, B, E, F_weight, X):
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    G = B @ np.linalg.solve(np.atleast_2d(E), B.T)
    return np.linalg.norm(A.T @ X + X @ A - X @ G @ X + F_weight, "fro")


def controllability_matrix(A, B):
    A = np.atleast_2d(A)
    B = np.asarray(B).reshape(A.shape[0], -1)
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def numerical_rank(M, tol=1e-8):
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def sqrtm_psd(M):
    """Symmetric square root of a PSD matrix via its eigendecomposition."""
    w, V = sym_eigen(M)
    return as_symmetric((V * np.sqrt(np.clip(w, 0.0, None))) @ V.T)
