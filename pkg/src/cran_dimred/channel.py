"""
Network geometry, slow fading, power control and fast-fading channels.

Channel sets are stored as stacked arrays of shape (L, M, K): index ``[l]``
gives the M x K channel of RRH ``l``. All generators take an explicit
``numpy.random.Generator``; :func:`trial_rng` derives the per-trial
substreams from one master seed.
"""

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, ValidationError
from .numerics import inv_sqrt_hpd


@dataclass
class SystemConfig:
    """Scalar system parameters. SNR and power values are linear."""

    K: int = 8
    L: int = 4
    M: int = 8
    N: int = 3
    rho: float = 10 ** 0.5
    P: float = 10 ** 0.9
    fc_ghz: float = 3.5
    gamma: float = 2.7
    sigma_psi_sq: float = 5.7  # dB^2
    area_m: float = 200.0
    user_height_m: float = 1.0
    rrh_height_m: float = 6.0
    T_coh: int = 200
    rho_csi: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("K", "L", "M", "N"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v}")
        if self.N > self.M:
            raise ValidationError(f"N={self.N} exceeds M={self.M}")
        if not self.rho > 0:
            raise ValidationError(f"rho must be positive, got {self.rho}")
        if not self.P > 0:
            raise ValidationError(f"P must be positive, got {self.P}")
        if self.T_coh < self.K:
            raise ValidationError(f"T_coh={self.T_coh} is shorter than K={self.K}")
        if self.rho_csi is not None and not self.rho_csi > 0:
            raise ValidationError(f"rho_csi must be positive, got {self.rho_csi}")
        if self.sigma_psi_sq < 0 or self.area_m <= 0:
            raise ValidationError("sigma_psi_sq must be >= 0 and area_m > 0")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown SystemConfig fields: {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return type(self)(**d)


@dataclass
class Geometry:
    user_xy: np.ndarray  # (K, 2) metres
    rrh_xy: np.ndarray  # (L, 2) metres
    dist: np.ndarray  # (L, K) 3-D distance, metres


@dataclass
class SlowFading:
    beta: np.ndarray  # (L, K) linear
    beta_db: np.ndarray  # (L, K)
    p: np.ndarray  # (K,)
    psi_shadow: np.ndarray  # (L, K) dB

    @property
    def gain(self):
        """Power-adjusted average gains p_k * beta_{l,k}, shape (L, K)."""
        return self.beta * self.p[None, :]


@dataclass
class ChannelSet:
    H: np.ndarray  # (L, M, K) power adjusted
    H_bar: np.ndarray  # (L, M, K) raw

    @property
    def L(self):
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[1]

    @property
    def K(self):
        return self.H.shape[2]


@dataclass
class CsiModel:
    """MMSE channel estimates of the power-adjusted channels.

    ``C[l, k]`` is the per-antenna error variance, i.e. the error
    covariance of user ``k`` at RRH ``l`` is ``C[l, k] * I_M``.
    ``Omega`` and ``H_check`` are filled in once an uplink SNR is known.
    """

    H_hat: np.ndarray  # (L, M, K)
    C: np.ndarray  # (L, K)
    p: np.ndarray  # (K,)
    est_var: np.ndarray  # (L, K) per-antenna variance of the estimate
    Omega: Optional[np.ndarray] = None  # (L, M, M)
    H_check: Optional[np.ndarray] = None  # (L, M, K)
    rho: Optional[float] = field(default=None)


def trial_rng(seed, *keys):
    """Independent generator for (seed, *keys); order of creation is irrelevant."""
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


def distances(user_xy, rrh_xy, user_height_m, rrh_height_m):
    """3-D RRH-user distances, shape (L, K)."""
    user_xy = np.atleast_2d(np.asarray(user_xy, dtype=float))
    rrh_xy = np.atleast_2d(np.asarray(rrh_xy, dtype=float))
    d2 = np.sum((rrh_xy[:, None, :] - user_xy[None, :, :]) ** 2, axis=-1)
    return np.sqrt(d2 + (rrh_height_m - user_height_m) ** 2)


def sample_geometry(cfg, rng):
    user_xy = rng.uniform(0.0, cfg.area_m, size=(cfg.K, 2))
    rrh_xy = rng.uniform(0.0, cfg.area_m, size=(cfg.L, 2))
    dist = distances(user_xy, rrh_xy, cfg.user_height_m, cfg.rrh_height_m)
    return Geometry(user_xy=user_xy, rrh_xy=rrh_xy, dist=dist)


def pathloss_db(d_m, cfg, psi_db=0.0):
    """Log-distance pathloss gain in dB (carrier in GHz, distance in metres)."""
    d_m = np.asarray(d_m, dtype=float)
    if np.any(d_m <= 0):
        raise ValidationError("distance must be positive")
    out = 147.5 - 20.0 * np.log10(cfg.fc_ghz) - 10.0 * cfg.gamma * np.log10(d_m) + psi_db
    return float(out) if out.ndim == 0 else out


def power_control(beta):
    """p_k = L / sum_l beta_{l,k}: unit average power-adjusted gain per user."""
    beta = np.asarray(beta, dtype=float)
    col = beta.sum(axis=0)
    if np.any(col <= 0):
        raise DegenerateInputError("a user has zero total slow-fading gain")
    return beta.shape[0] / col


def slow_fading_from_db(beta_db, psi_db=None):
    beta_db = np.asarray(beta_db, dtype=float)
    beta = 10.0 ** (beta_db / 10.0)
    if psi_db is None:
        psi_db = np.zeros_like(beta_db)
    return SlowFading(beta=beta, beta_db=beta_db, p=power_control(beta), psi_shadow=psi_db)


def sample_slow_fading(geom, cfg, rng):
    # Shadowing is a real Gaussian in dB.
    psi = rng.normal(0.0, np.sqrt(cfg.sigma_psi_sq), size=geom.dist.shape)
    return slow_fading_from_db(pathloss_db(geom.dist, cfg, psi), psi)


def crandn(rng, shape):
    """Circularly symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(sf, cfg, rng, M=None):
    """Draw i.i.d. Rayleigh channels h_{l,k} ~ CN(0, beta_{l,k} I_M)."""
    M = cfg.M if M is None else M
    L, K = sf.beta.shape
    H_bar = crandn(rng, (L, M, K)) * np.sqrt(sf.beta)[:, None, :]
    H = H_bar * np.sqrt(sf.p)[None, None, :]
    return ChannelSet(H=H, H_bar=H_bar)


def channels_from_power_adjusted(H, p=None):
    """Wrap power-adjusted channels; with ``p`` omitted the raw channels coincide."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 3:
        raise ValidationError(f"channels must have shape (L, M, K), got {H.shape}")
    if p is None:
        return ChannelSet(H=H, H_bar=H.copy())
    return ChannelSet(H=H, H_bar=H / np.sqrt(np.asarray(p, dtype=float))[None, None, :])


def estimate_csi(ch, sf, rho_csi, rng, rho=None):
    """MMSE estimation of the power-adjusted channels from orthogonal pilots.

    Pilots observe ``h + n / sqrt(rho_csi)`` per antenna. With ``g = p_k
    beta_{l,k}`` the estimate has per-antenna variance ``g^2 rho_csi / (1 +
    rho_csi g)`` and the error variance is ``g / (1 + rho_csi g)``; the two
    are uncorrelated.
    """
    if not rho_csi > 0:
        raise ValidationError(f"rho_csi must be positive, got {rho_csi}")
    g = sf.gain
    noise = crandn(rng, ch.H.shape)
    y = ch.H + noise / np.sqrt(rho_csi)
    w = g * rho_csi / (1.0 + rho_csi * g)
    H_hat = y * w[:, None, :]
    C = g / (1.0 + rho_csi * g)
    est_var = g * g * rho_csi / (1.0 + rho_csi * g)
    csi = CsiModel(H_hat=H_hat, C=C, p=sf.p.copy(), est_var=est_var)
    if rho is not None:
        whiten(csi, rho)
    return csi


def error_covariances(csi, rho):
    """Omega_l = I_M + rho * sum_k C_{l,k}, shape (L, M, M)."""
    L, M, _ = csi.H_hat.shape
    s = csi.C.sum(axis=1)
    return (1.0 + rho * s)[:, None, None] * np.eye(M)[None, :, :]


def whiten(csi, rho, Omega=None):
    """Equivalent channel set Omega_l^{-1/2} H_hat_l (unit-covariance noise).

    Also stores ``Omega`` and ``H_check`` on ``csi``.
    """
    if Omega is None:
        Omega = error_covariances(csi, rho)
    H_check = np.stack([inv_sqrt_hpd(Om) @ Hh for Om, Hh in zip(Omega, csi.H_hat)])
    csi.Omega, csi.H_check, csi.rho = Omega, H_check, rho
    return channels_from_power_adjusted(H_check, csi.p)


def whitened_gain(csi, rho):
    """Per-antenna variance of the whitened channel entries, shape (L, K)."""
    omega = 1.0 + rho * csi.C.sum(axis=1)
    return csi.est_var / omega[:, None]
