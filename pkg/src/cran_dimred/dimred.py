"""
Per-RRH linear dimension reduction filters.

A filter bank holds one semi-orthogonal M x N matrix A_l per RRH; RRH ``l``
forwards ``A_l^H y_l`` to the central processor. Designs provided:

* ``klt``    principal eigenvectors of H_l H_l^H (local signal power)
* ``cklt``   conditional KLT, jointly optimised by block coordinate ascent
* ``dcklt``  decentralised CKLT using only local CSI and slow-fading statistics
* ``antsel`` greedy joint antenna selection
* ``antred`` first N antennas at each RRH (an N-antenna network)
* ``random`` Haar-distributed column spans
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .channel import crandn
from .errors import ValidationError
from .numerics import (
    hermitian_part,
    hermitian_top_eigvecs,
    inv_hpd,
    logdet2_id_plus,
    orthonormalize,
)

METHODS = ("klt", "cklt", "dcklt", "antsel", "antred", "random")
SEMI_ORTHOGONAL_TOL = 1e-10


@dataclass
class FilterBank:
    A: np.ndarray  # (L, M, N)
    method: str
    trace: List[float] = field(default_factory=list)
    sweeps: int = 0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)
        if self.A.ndim != 3:
            raise ValidationError(f"filters must have shape (L, M, N), got {self.A.shape}")
        L, M, N = self.A.shape
        if N > M:
            raise ValidationError(f"N={N} exceeds M={M}")
        gram = np.einsum("lmi,lmj->lij", self.A.conj(), self.A)
        if np.max(np.abs(gram - np.eye(N)[None])) > SEMI_ORTHOGONAL_TOL:
            raise ValidationError("filters are not semi-orthogonal")

    @property
    def L(self):
        return self.A.shape[0]

    @property
    def M(self):
        return self.A.shape[1]

    @property
    def N(self):
        return self.A.shape[2]


@dataclass
class ReducedChannelSet:
    H_rd: np.ndarray  # (L, N, K)


@dataclass
class PsiSet:
    """Diagonals of E{H_j^H H_j}, one row per RRH: entries p_k beta_{j,k} M."""

    diag: np.ndarray  # (L, K)

    @property
    def matrices(self):
        L, K = self.diag.shape
        out = np.zeros((L, K, K))
        idx = np.arange(K)
        out[:, idx, idx] = self.diag
        return out


def _as_channels(H):
    H = np.asarray(getattr(H, "H", H), dtype=complex)
    if H.ndim != 3:
        raise ValidationError(f"channels must have shape (L, M, K), got {H.shape}")
    return H


def _gram(H_rd):
    """Per-RRH Gram matrices H_rd_l^H H_rd_l, shape (L, K, K)."""
    return np.einsum("lnk,lnj->lkj", H_rd.conj(), H_rd)


def reduce(H, fb):
    """Reduced channels H_rd_l = A_l^H H_l."""
    H = _as_channels(H)
    A = fb.A if isinstance(fb, FilterBank) else np.asarray(fb)
    if A.shape[0] != H.shape[0] or A.shape[1] != H.shape[1]:
        raise ValidationError(f"filter shape {A.shape} does not match channels {H.shape}")
    return ReducedChannelSet(H_rd=np.einsum("lmn,lmk->lnk", A.conj(), H))


def joint_mi(H, A, rho):
    """log2 det(I_K + rho sum_l H_l^H A_l A_l^H H_l)."""
    H_rd = np.einsum("lmn,lmk->lnk", np.asarray(A).conj(), _as_channels(H))
    return logdet2_id_plus(rho * hermitian_part(_gram(H_rd).sum(axis=0)))


def klt_filter(H_l, rho, N):
    """Top-N eigenvectors of H_l H_l^H. ``rho`` only scales the covariance."""
    H_l = np.asarray(H_l, dtype=complex)
    if N > H_l.shape[0]:
        raise ValidationError(f"N={N} exceeds M={H_l.shape[0]}")
    return hermitian_top_eigvecs(hermitian_part(H_l @ H_l.conj().T), N)


def compute_Q(H, A, l, rho):
    """Q_l = (I_K + rho sum_{j != l} H_j^H A_j A_j^H H_j)^{-1}."""
    H = _as_channels(H)
    A = np.asarray(getattr(A, "A", A))
    K = H.shape[2]
    others = [j for j in range(H.shape[0]) if j != l]
    if not others:
        return np.eye(K, dtype=complex)
    H_rd = np.einsum("lmn,lmk->lnk", A[others].conj(), H[others])
    return inv_hpd(np.eye(K) + rho * hermitian_part(_gram(H_rd).sum(axis=0)))


def cklt_filter(H_l, Q_l, rho, N):
    """Top-N eigenvectors of H_l Q_l H_l^H, the conditional-MI maximiser."""
    H_l = np.asarray(H_l, dtype=complex)
    if N > H_l.shape[0]:
        raise ValidationError(f"N={N} exceeds M={H_l.shape[0]}")
    return hermitian_top_eigvecs(hermitian_part(H_l @ Q_l @ H_l.conj().T), N)


def conditional_mi(H_l, Q_l, A_l, rho):
    """log2 det(I_N + rho A_l^H H_l Q_l H_l^H A_l)."""
    B = np.asarray(A_l).conj().T @ H_l
    return logdet2_id_plus(rho * hermitian_part(B @ Q_l @ B.conj().T))


def bca_joint_design(H, rho, N, max_sweeps=10, rel_tol=1e-6):
    """Joint CKLT design by block coordinate ascent.

    Starts from the KLT filters and cycles l = 0..L-1, replacing A_l by the
    CKLT given the current filters at the other RRHs. Each update is the
    global optimum of its block, so the joint MI never decreases. Stops
    after ``max_sweeps`` sweeps or when a sweep improves the objective by
    less than ``rel_tol`` (relative).

    The returned bank's ``trace`` holds the objective after initialisation
    followed by the value after every single-RRH update.
    """
    if max_sweeps < 1:
        raise ValidationError("max_sweeps must be >= 1")
    H = _as_channels(H)
    L, M, K = H.shape
    A = np.stack([klt_filter(H[l], rho, N) for l in range(L)])
    H_rd = np.einsum("lmn,lmk->lnk", A.conj(), H)
    S = _gram(H_rd)
    eye = np.eye(K)

    def objective():
        return logdet2_id_plus(rho * hermitian_part(S.sum(axis=0)))

    trace = [objective()]
    sweeps = 0
    for _ in range(max_sweeps):
        start = trace[-1]
        for l in range(L):
            Q = inv_hpd(eye + rho * hermitian_part(S.sum(axis=0) - S[l]))
            A[l] = cklt_filter(H[l], Q, rho, N)
            B = A[l].conj().T @ H[l]
            S[l] = B.conj().T @ B
            trace.append(objective())
        sweeps += 1
        if trace[-1] - start < rel_tol * abs(start):
            break
    return FilterBank(A=A, method="cklt", trace=trace, sweeps=sweeps)


def psi_set(sf, M):
    """Slow-fading statistics Psi_j with diagonal p_k beta_{j,k} M."""
    return PsiSet(diag=sf.gain * M)


def psi_from_gain(gain, M):
    """Psi from per-antenna average gains (L, K), e.g. of whitened channels."""
    return PsiSet(diag=np.asarray(gain, dtype=float) * M)


def dcklt_filter(H_l, psi, l, rho, N):
    """Top-N eigenvectors of H_l (I_K + rho sum_{j != l} Psi_j)^{-1} H_l^H."""
    H_l = np.asarray(H_l, dtype=complex)
    d = np.asarray(getattr(psi, "diag", psi), dtype=float)
    if np.any(d < 0):
        raise ValidationError("Psi must be nonnegative")
    others = np.delete(d, l, axis=0).sum(axis=0)
    q = 1.0 / (1.0 + rho * others)
    return cklt_filter(H_l, np.diag(q), rho, N)


def dcklt_filters(H, psi, rho, N):
    H = _as_channels(H)
    A = np.stack([dcklt_filter(H[l], psi, l, rho, N) for l in range(H.shape[0])])
    return FilterBank(A=A, method="dcklt")


def klt_filters(H, rho, N):
    H = _as_channels(H)
    return FilterBank(A=np.stack([klt_filter(Hl, rho, N) for Hl in H]), method="klt")


def _selection_bank(rows, M, method):
    L = len(rows)
    N = len(rows[0])
    A = np.zeros((L, M, N), dtype=complex)
    for l, r in enumerate(rows):
        A[l, sorted(r), np.arange(N)] = 1.0
    return FilterBank(A=A, method=method)


def antenna_selection_filters(H, rho, N):
    """Greedy joint antenna selection.

    Starting from all ML antennas, repeatedly drops the antenna whose
    removal costs the least joint MI, never taking an RRH below N
    antennas, until every RRH keeps exactly N. The loss of dropping row g
    from I + rho sum(rows) is -log2(1 - rho g G^{-1} g^H).
    """
    H = _as_channels(H)
    L, M, K = H.shape
    if N > M:
        raise ValidationError(f"N={N} exceeds M={M}")
    rows = np.sqrt(rho) * H  # row (l, m) is the scaled 1 x K channel of one antenna
    G = np.eye(K) + hermitian_part(np.einsum("lmk,lmj->kj", rows.conj(), rows))
    active = np.ones((L, M), dtype=bool)
    for _ in range(L * (M - N)):
        Ginv = inv_hpd(G)
        quad = np.real(np.einsum("lmk,kj,lmj->lm", rows, Ginv, rows.conj()))
        eligible = active & (active.sum(axis=1) > N)[:, None]
        quad = np.where(eligible, quad, np.inf)
        l, m = np.unravel_index(np.argmin(quad), quad.shape)
        g = rows[l, m][None, :]
        G = hermitian_part(G - g.conj().T @ g)
        active[l, m] = False
    return _selection_bank([np.flatnonzero(a) for a in active], M, "antsel")


def antenna_reduction_filters(M, N, L):
    """First N standard basis vectors of C^M at every RRH."""
    if N > M:
        raise ValidationError(f"N={N} exceeds M={M}")
    return _selection_bank([np.arange(N)] * L, M, "antred")


def random_filters(M, N, L, rng):
    """Orthonormalised i.i.d. complex Gaussian filters (Haar column spans)."""
    if N > M:
        raise ValidationError(f"N={N} exceeds M={M}")
    A = np.stack([orthonormalize(crandn(rng, (M, N))) for _ in range(L)])
    return FilterBank(A=A, method="random")


def design_filters(method, H, rho, N, psi=None, rng=None, max_sweeps=10, rel_tol=1e-6):
    """Build a filter bank by method tag (see module docstring)."""
    H = _as_channels(H)
    L, M, _ = H.shape
    if method == "klt":
        return klt_filters(H, rho, N)
    if method == "cklt":
        return bca_joint_design(H, rho, N, max_sweeps=max_sweeps, rel_tol=rel_tol)
    if method == "dcklt":
        if psi is None:
            raise ValidationError("dcklt needs slow-fading statistics (psi)")
        return dcklt_filters(H, psi, rho, N)
    if method == "antsel":
        return antenna_selection_filters(H, rho, N)
    if method == "antred":
        return antenna_reduction_filters(M, N, L)
    if method == "random":
        if rng is None:
            raise ValidationError("random filters need an rng")
        return random_filters(M, N, L, rng)
    raise ValidationError(f"unknown filter method {method!r}")
