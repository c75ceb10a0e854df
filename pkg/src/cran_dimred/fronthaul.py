"""
Fronthaul traffic accounting, in complex coefficients.

Each coherence block of ``T_coh`` channel uses spends K uses on uplink
pilots (one orthogonal pilot per user); the remaining uses carry data.
CSI exchanged with the CP once per block:

================  ==============  =============
method            RRH -> CP       CP -> RRH
================  ==============  =============
standard          H_l   (M K)     none
centralised       H_l   (M K)     A_l (M N)
decentralised     H_rd  (N K)     none
================  ==============  =============
"""

from dataclasses import dataclass

from .errors import ValidationError

FH_METHODS = ("standard", "centralised", "decentralised")
PILOT_SPLIT_NOTE = "K pilot uses per coherence block, T_coh - K data uses"


@dataclass
class FronthaulLoad:
    method: str
    rrh_to_cp_csi: int
    cp_to_rrh_csi: int
    signal_per_use: int
    mean_per_use: float
    T_coh: int

    @property
    def csi_total(self):
        return self.rrh_to_cp_csi + self.cp_to_rrh_csi


def _check_method(method):
    if method not in FH_METHODS:
        raise ValidationError(f"unknown fronthaul method {method!r}; expected one of {FH_METHODS}")


def csi_overhead(method, M, N, K):
    """(RRH->CP, CP->RRH) CSI coefficients per RRH per coherence block."""
    _check_method(method)
    if N > M:
        raise ValidationError(f"N={N} exceeds M={M}")
    if method == "standard":
        return M * K, 0
    if method == "centralised":
        return M * K, M * N
    return N * K, 0


def mean_fronthaul_load(method, cfg):
    """Mean per-RRH coefficients per channel use, CSI included."""
    _check_method(method)
    if cfg.T_coh < cfg.K:
        raise ValidationError("T_coh must be at least K")
    up, down = csi_overhead(method, cfg.M, cfg.N, cfg.K)
    dim = cfg.M if method == "standard" else cfg.N
    mean = (dim * (cfg.T_coh - cfg.K) + up + down) / cfg.T_coh
    return FronthaulLoad(method, up, down, dim, mean, cfg.T_coh)


def reduction_ratio(method, cfg):
    """Mean load of ``method`` relative to the standard full-dimension system."""
    return (mean_fronthaul_load(method, cfg).mean_per_use
            / mean_fronthaul_load("standard", cfg).mean_per_use)
