"""
Uplink performance metrics.

All functions take power-adjusted channels; noise has unit variance so
``rho`` is the per-user transmit SNR.
"""

from dataclasses import dataclass

import numpy as np

from .dimred import ReducedChannelSet, reduce
from .errors import DomainError, ValidationError
from .numerics import hermitian_part, inv_hpd, logdet2_hpd, logdet2_id_plus

GRAM_RANK_TOL = 1e-10


@dataclass
class RateReport:
    sum_rate_bits: float
    user_sinr: np.ndarray
    user_rate_bits: np.ndarray
    delta_bits: float
    gram_rank: int


def _reduced(H_rd):
    H_rd = np.asarray(getattr(H_rd, "H_rd", H_rd), dtype=complex)
    if H_rd.ndim == 2:
        H_rd = H_rd[None]
    if H_rd.ndim != 3:
        raise ValidationError(f"reduced channels must have shape (L, N, K), got {H_rd.shape}")
    return H_rd


def total_gram(H_rd):
    """sum_l H_rd_l^H H_rd_l (K x K)."""
    H_rd = _reduced(H_rd)
    return hermitian_part(np.einsum("lnk,lnj->kj", H_rd.conj(), H_rd))


def joint_mutual_information(H_rd, rho):
    """Joint MI of the reduced signals, equal to the MMSE-SIC sum rate (bits)."""
    return logdet2_id_plus(rho * total_gram(H_rd))


def full_mutual_information(H, rho):
    """Joint MI with every RRH forwarding its full M-dimensional signal."""
    return joint_mutual_information(np.asarray(getattr(H, "H", H)), rho)


def mmse_user_metrics(H_rd, rho):
    """Per-user linear MMSE SINR and rate.

    SINR_k = 1 / [(I + rho G)^{-1}]_{kk} - 1 with G the total reduced Gram.
    """
    G = total_gram(H_rd)
    inv = inv_hpd(np.eye(G.shape[0]) + rho * G)
    sinr = np.maximum(1.0 / np.real(np.diag(inv)) - 1.0, 0.0)
    return sinr, np.log2(1.0 + sinr)


def gram_rank(H_rd):
    w = np.linalg.eigvalsh(total_gram(H_rd))
    if w[-1] <= 0:
        return 0
    return int(np.sum(w > GRAM_RANK_TOL * w[-1]))


def information_loss(H, fb, rho):
    """Delta = MI(full signals) - MI(reduced signals), in bits."""
    H = np.asarray(getattr(H, "H", H))
    return full_mutual_information(H, rho) - joint_mutual_information(reduce(H, fb), rho)


def high_snr_loss_limit(H, fb):
    """rho -> infinity limit of the information loss.

    log2 det(sum H_l^H H_l) - log2 det(sum H_rd_l^H H_rd_l); raises
    :class:`DomainError` if the reduced Gram is rank deficient (the limit
    is then infinite).
    """
    H = np.asarray(getattr(H, "H", H))
    rd = reduce(H, fb)
    K = H.shape[2]
    if gram_rank(rd) < K or gram_rank(H) < K:
        raise DomainError("reduced system is rank deficient; loss grows without bound")
    return logdet2_hpd(total_gram(H)) - logdet2_hpd(total_gram(rd))


def rate_report(H, fb, rho):
    H = np.asarray(getattr(H, "H", H))
    rd = reduce(H, fb)
    mi = joint_mutual_information(rd, rho)
    sinr, rate = mmse_user_metrics(rd, rho)
    return RateReport(
        sum_rate_bits=mi,
        user_sinr=sinr,
        user_rate_bits=rate,
        delta_bits=full_mutual_information(H, rho) - mi,
        gram_rank=gram_rank(rd),
    )


def outage_stats(user_rates, threshold_bits):
    """Fraction of (user, trial) rate samples strictly below the threshold."""
    if not threshold_bits > 0:
        raise ValidationError("threshold must be positive")
    r = np.asarray(user_rates, dtype=float).ravel()
    if r.size == 0:
        raise ValidationError("no rate samples")
    return float(np.mean(r < threshold_bits))


__all__ = [
    "RateReport",
    "ReducedChannelSet",
    "full_mutual_information",
    "gram_rank",
    "high_snr_loss_limit",
    "information_loss",
    "joint_mutual_information",
    "mmse_user_metrics",
    "outage_stats",
    "rate_report",
    "total_gram",
]
