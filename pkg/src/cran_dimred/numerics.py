"""
Deterministic complex-matrix kernels.

Every other module goes through these helpers for eigendecompositions,
log-determinants and Hermitian solves, so the numerical conventions
(eigenvector phase, tie breaking, tolerances) live in one place.
"""

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, NumericalError, ValidationError

# Tolerances are read at call time, so tests may monkeypatch them.
HERMITIAN_TOL = 1e-12
PHASE_TOL = 1e-9
RANK_TOL = 1e-12
INV_SQRT_TOL = 1e-14

LN2 = np.log(2.0)


def as_complex_matrix(X, name="matrix"):
    """Return `X` as a finite 2-D complex array, raising on NaN/Inf."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} has non-finite entries")
    return X


def hermitian_part(G):
    """Return (G + G^H) / 2."""
    G = np.asarray(G)
    return 0.5 * (G + G.conj().T)


def check_hermitian(G, name="matrix"):
    G = as_complex_matrix(G, name)
    if G.shape[0] != G.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {G.shape}")
    scale = np.max(np.abs(G)) if G.size else 0.0
    if scale > 0 and np.max(np.abs(G - G.conj().T)) > HERMITIAN_TOL * scale:
        raise ValidationError(f"{name} is not Hermitian")
    return hermitian_part(G)


def fix_column_phases(V):
    """Rotate each column so its first non-negligible entry is real and >= 0."""
    V = np.array(V, dtype=complex, copy=True)
    for j in range(V.shape[1]):
        col = V[:, j]
        idx = np.flatnonzero(np.abs(col) > PHASE_TOL)
        if idx.size:
            lead = col[idx[0]]
            V[:, j] = col * (np.conj(lead) / np.abs(lead))
    return V


def hermitian_top_eig(G, n):
    """Largest `n` eigenpairs of a Hermitian matrix.

    Returns
    -------
    values : ndarray, shape (n,)
        Eigenvalues in descending order.
    vectors : ndarray, shape (M, n)
        Orthonormal eigenvectors with the phase convention of
        :func:`fix_column_phases`. Ties keep the ascending index order of
        the full decomposition returned by LAPACK.
    """
    G = check_hermitian(G, "G")
    M = G.shape[0]
    if not 1 <= n <= M:
        raise ValidationError(f"n must satisfy 1 <= n <= {M}, got {n}")
    w, V = np.linalg.eigh(G)
    order = np.argsort(-w, kind="stable")[:n]
    return w[order], fix_column_phases(V[:, order])


def hermitian_top_eigvecs(G, n):
    """Eigenvectors of the `n` largest eigenvalues of Hermitian `G` (M x n)."""
    return hermitian_top_eig(G, n)[1]


def orthonormalize(A_raw):
    """Semi-orthogonal basis with the same column span as `A_raw`.

    Uses a thin QR factorization with the R diagonal made positive, so the
    result is unique for a given input.
    """
    A_raw = as_complex_matrix(A_raw, "A_raw")
    M, N = A_raw.shape
    if N > M:
        raise DegenerateInputError(f"cannot have {N} orthonormal columns in dimension {M}")
    Q, R = np.linalg.qr(A_raw, mode="reduced")
    d = np.diag(R)
    scale = max(1.0, float(np.max(np.linalg.norm(A_raw, axis=0))))
    if np.min(np.abs(d)) < RANK_TOL * scale:
        raise DegenerateInputError("A_raw is rank deficient")
    return Q * (np.abs(d) / d)[None, :].conj()


def logdet2_id_plus(G):
    """log2 det(I + G) for Hermitian PSD `G`, via Cholesky."""
    G = check_hermitian(G, "G")
    n = G.shape[0]
    try:
        c = np.linalg.cholesky(np.eye(n) + G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("I + G is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.real(np.diag(c)))) / LN2)


def logdet2_hpd(G):
    """log2 det(G) for Hermitian positive definite `G`."""
    G = check_hermitian(G, "G")
    try:
        c = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("G is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.real(np.diag(c)))) / LN2)


def solve_hpd(G, RHS):
    """Solve G X = RHS for Hermitian positive definite `G`."""
    G = check_hermitian(G, "G")
    RHS = np.asarray(RHS, dtype=complex)
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("G is singular or indefinite") from exc
    return scipy.linalg.cho_solve(factor, RHS)


def inv_hpd(G):
    """Inverse of a Hermitian positive definite matrix, returned exactly Hermitian."""
    G = check_hermitian(G, "G")
    return hermitian_part(solve_hpd(G, np.eye(G.shape[0])))


def inv_sqrt_hpd(G):
    """Principal inverse square root S = G^{-1/2}, so that S G S = I."""
    G = check_hermitian(G, "G")
    w, V = np.linalg.eigh(G)
    if w.size and w[0] <= INV_SQRT_TOL * max(w[-1], 0.0):
        raise NumericalError("G is singular or indefinite")
    S = (V / np.sqrt(w)[None, :]) @ V.conj().T
    return hermitian_part(S)
