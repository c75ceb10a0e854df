"""
Two-stage reduced-dimension downlink precoding.

The CP applies inner precoders F_l (N x K) and ships the N-dimensional
signals over fronthaul; RRH ``l`` maps them to its M antennas with the outer
precoder B_l, here the RRH's uplink filter. Inner precoders are zero-forcing
over the stacked effective channel [H_bar_1^H B_1, ..., H_bar_L^H B_L].
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InfeasibleError, ValidationError
from .numerics import hermitian_part, solve_hpd

ZF_RANK_TOL = 1e-10


@dataclass
class DownlinkPrecoders:
    B: np.ndarray  # (L, M, N) outer
    F: np.ndarray  # (L, N, K) inner
    gamma: np.ndarray  # (K,) effective SNRs rho_k
    U: np.ndarray  # (L, N, K) unnormalised ZF directions


@dataclass
class PowerReport:
    power: np.ndarray  # (L,) tr(F_l^H F_l)
    P: float
    violations: np.ndarray  # (L,) bool

    @property
    def ok(self):
        return not self.violations.any()


def outer_from_uplink(fb):
    """Outer precoders B_l = A_l."""
    return np.array(fb.A, copy=True)


def effective_channel(H_bar, B):
    """Stacked K x NL matrix [H_bar_1^H B_1, ..., H_bar_L^H B_L]."""
    H_bar = np.asarray(getattr(H_bar, "H_bar", H_bar), dtype=complex)
    B = np.asarray(B, dtype=complex)
    if H_bar.shape[:2] != B.shape[:2]:
        raise ValidationError(f"outer precoders {B.shape} do not match channels {H_bar.shape}")
    per_rrh = np.einsum("lmk,lmn->lkn", H_bar.conj(), B)
    return np.concatenate(list(per_rrh), axis=1)


def zf_directions(H_bar, B):
    """Minimum-norm right inverse of the stacked effective channel, split per RRH.

    Returns U with shape (L, N, K) such that sum_l H_bar_l^H B_l U_l = I_K.
    """
    B = np.asarray(B, dtype=complex)
    L, _, N = B.shape
    G = effective_channel(H_bar, B)
    K = G.shape[0]
    GG = hermitian_part(G @ G.conj().T)
    w = np.linalg.eigvalsh(GG)
    if K > G.shape[1] or w[-1] <= 0 or w[0] <= ZF_RANK_TOL * w[-1]:
        raise InfeasibleError(f"effective channel has rank < K={K} (NL={N * L})")
    # G^H (G G^H)^{-1}
    U = solve_hpd(GG, G).conj().T
    return U.reshape(L, N, K)


def maxmin_power_allocation(U, P):
    """Equal effective SNR for all users at the largest feasible level.

    Per-RRH power is sum_k rho_k ||U_l[:, k]||^2, so with rho_k = t the
    binding RRH gives t = P / max_l sum_k ||U_l[:, k]||^2.
    """
    if not P > 0:
        raise ValidationError("P must be positive")
    c = np.sum(np.abs(np.asarray(U)) ** 2, axis=1)  # (L, K)
    load = c.sum(axis=1)
    if not np.any(load > 0):
        raise DegenerateInputError("all precoding directions are zero")
    t = P / load.max()
    return np.full(c.shape[1], t)


def inner_precoders(U, gamma):
    return np.asarray(U) * np.sqrt(np.asarray(gamma))[None, None, :]


def downlink_rates(gamma):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValidationError("effective SNRs must be nonnegative")
    return np.log2(1.0 + gamma)


def verify_transmit_power(F, P, rel_tol=1e-9):
    F = np.asarray(F)
    power = np.real(np.einsum("lnk,lnk->l", F.conj(), F))
    return PowerReport(power=power, P=P, violations=power > P * (1.0 + rel_tol))


def transmit_power(B, F):
    """E{s_l^H s_l} = tr(F_l^H B_l^H B_l F_l) for unit-variance symbols."""
    s = np.einsum("lmn,lnk->lmk", np.asarray(B), np.asarray(F))
    return np.real(np.einsum("lmk,lmk->l", s.conj(), s))


def composite_channel(H_bar, B, F):
    """sum_l H_bar_l^H B_l F_l (K x K)."""
    H_bar = np.asarray(getattr(H_bar, "H_bar", H_bar))
    return np.einsum("lmk,lmn,lnj->kj", H_bar.conj(), B, F)


def two_stage_precoding(H_bar, fb, P):
    """Outer = uplink filters, inner = ZF with max-min power allocation."""
    B = outer_from_uplink(fb)
    U = zf_directions(H_bar, B)
    gamma = maxmin_power_allocation(U, P)
    return DownlinkPrecoders(B=B, F=inner_precoders(U, gamma), gamma=gamma, U=U)
