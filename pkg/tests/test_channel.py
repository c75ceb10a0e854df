import numpy as np
import pytest

from cran_dimred import channel as chn
from cran_dimred.errors import DegenerateInputError, ValidationError
from cran_dimred.numerics import inv_sqrt_hpd

from .conftest import network


def test_config_defaults():
    cfg = chn.SystemConfig()
    assert (cfg.K, cfg.L, cfg.M) == (8, 4, 8)
    assert cfg.fc_ghz == 3.5 and cfg.gamma == 2.7 and cfg.sigma_psi_sq == 5.7
    assert cfg.area_m == 200.0 and cfg.user_height_m == 1.0 and cfg.rrh_height_m == 6.0
    assert 10 * np.log10(cfg.rho) == pytest.approx(5.0)


@pytest.mark.parametrize("changes", [
    {"K": 0}, {"N": 9}, {"rho": 0.0}, {"P": -1.0}, {"T_coh": 4}, {"rho_csi": 0.0}, {"L": 1.5},
])
def test_config_invariants(changes):
    with pytest.raises(ValidationError):
        chn.SystemConfig().replace(**changes)


def test_config_from_dict_rejects_unknown():
    with pytest.raises(ValidationError):
        chn.SystemConfig.from_dict({"bogus": 1})


def test_distance_height_gap():
    d = chn.distances([[0.0, 0.0]], [[0.0, 0.0]], 1.0, 6.0)
    assert d[0, 0] == pytest.approx(5.0)


def test_distance_345():
    d = chn.distances([[3.0, 0.0]], [[0.0, 4.0]], 1.0, 1.0)
    assert d[0, 0] == pytest.approx(5.0)


def test_geometry_uniform_moment(rng):
    cfg = chn.SystemConfig(K=10_000, L=1, T_coh=10_000)
    g = chn.sample_geometry(cfg, rng)
    assert abs(g.user_xy[:, 0].mean() - 100.0) < 3.0
    assert g.user_xy.min() >= 0 and g.user_xy.max() <= 200.0
    assert g.dist.min() >= 5.0


def test_pathloss_values():
    cfg = chn.SystemConfig()
    assert chn.pathloss_db(1.0, cfg) == pytest.approx(136.6186, abs=1e-4)
    assert chn.pathloss_db(10.0, cfg) == pytest.approx(109.6186, abs=1e-4)
    assert chn.pathloss_db(37.0, cfg, 3.0) - chn.pathloss_db(37.0, cfg) == pytest.approx(3.0)


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(ValidationError):
        chn.pathloss_db(0.0, chn.SystemConfig())


def test_power_control_examples():
    np.testing.assert_allclose(chn.power_control(np.ones((2, 5))), np.ones(5))
    assert chn.power_control(np.array([[1.0], [3.0]]))[0] == pytest.approx(0.5)
    with pytest.raises(DegenerateInputError):
        chn.power_control(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_power_control_identity(rng):
    beta = 10 ** rng.uniform(-3, 3, size=(4, 8))
    p = chn.power_control(beta)
    np.testing.assert_allclose(p * beta.sum(axis=0) / 4, 1.0, rtol=1e-12)


def test_slow_fading_identity_per_instance():
    for seed in range(20):
        sf, _ = network(seed)
        np.testing.assert_allclose(sf.p * sf.beta.sum(axis=0) / sf.beta.shape[0], 1.0, rtol=1e-12)
        assert np.all(sf.beta > 0)


@pytest.mark.parametrize("offset", [-50.0, 50.0])
def test_gain_invariant_to_db_offset(offset):
    sf, _ = network(3)
    shifted = chn.slow_fading_from_db(sf.beta_db + offset)
    np.testing.assert_allclose(shifted.gain, sf.gain, rtol=1e-9)


def test_shadowing_is_real_with_configured_variance(rng):
    cfg = chn.SystemConfig(K=200, L=50, T_coh=200)
    g = chn.sample_geometry(cfg, rng)
    sf = chn.sample_slow_fading(g, cfg, rng)
    assert sf.psi_shadow.dtype == float
    assert sf.psi_shadow.var() == pytest.approx(5.7, rel=0.05)


def test_zero_gain_gives_zero_column(rng):
    sf = chn.SlowFading(beta=np.array([[1.0, 0.0]]), beta_db=np.zeros((1, 2)),
                        p=np.ones(2), psi_shadow=np.zeros((1, 2)))
    ch = chn.sample_channels(sf, chn.SystemConfig(K=2, L=1, M=3), rng)
    assert np.all(ch.H_bar[0, :, 1] == 0)


def test_channel_entry_variance(rng):
    beta = np.array([[2.0]])
    sf = chn.SlowFading(beta=beta, beta_db=np.zeros((1, 1)), p=np.ones(1), psi_shadow=np.zeros((1, 1)))
    cfg = chn.SystemConfig(K=1, L=1, M=1, N=1, T_coh=10)
    x = np.array([chn.sample_channels(sf, cfg, rng).H_bar[0, 0, 0] for _ in range(10_000)])
    assert np.mean(np.abs(x) ** 2) == pytest.approx(2.0, abs=0.1)
    # circular symmetry: E{x^2} ~ 0
    assert abs(np.mean(x * x)) < 0.1


def test_channel_norm_normalisation(rng):
    cfg = chn.SystemConfig()
    sf, _ = network(1)
    norms = np.zeros((cfg.L, cfg.K))
    n = 10_000
    for _ in range(n):
        ch = chn.sample_channels(sf, cfg, rng)
        norms += np.sum(np.abs(ch.H_bar) ** 2, axis=1)
    np.testing.assert_allclose(norms / n / cfg.M, sf.beta, rtol=0.05)


def test_power_adjusted_channels_exact(rng):
    sf, ch = network(2)
    assert np.array_equal(ch.H, ch.H_bar * np.sqrt(sf.p)[None, None, :])


# ---------------------------------------------------------------- imperfect CSI


def _unit_fading(L, K):
    return chn.SlowFading(beta=np.ones((L, K)), beta_db=np.zeros((L, K)), p=np.ones(K),
                          psi_shadow=np.zeros((L, K)))


def test_csi_error_scalar():
    sf = _unit_fading(1, 1)
    ch = chn.sample_channels(sf, chn.SystemConfig(K=1, L=1, M=2, N=1, T_coh=5), np.random.default_rng(0))
    csi = chn.estimate_csi(ch, sf, 1.0, np.random.default_rng(1))
    assert csi.C[0, 0] == pytest.approx(0.5)


def test_csi_perfect_limit(rng):
    sf, ch = network(4)
    csi = chn.estimate_csi(ch, sf, 1e12, rng)
    assert csi.C.max() < 1e-11
    np.testing.assert_allclose(csi.H_hat, ch.H, atol=1e-5)


def test_csi_error_moments_and_orthogonality():
    sf = chn.SlowFading(beta=np.array([[1.0, 3.0]]), beta_db=np.zeros((1, 2)),
                        p=np.array([1.0, 0.5]), psi_shadow=np.zeros((1, 2)))
    cfg = chn.SystemConfig(K=2, L=1, M=4, N=1, T_coh=5)
    rng = np.random.default_rng(9)
    err = np.zeros(2)
    cross = np.zeros(2, dtype=complex)
    n = 10_000
    for _ in range(n):
        ch = chn.sample_channels(sf, cfg, rng)
        csi = chn.estimate_csi(ch, sf, 2.0, rng)
        e = ch.H - csi.H_hat
        err += np.sum(np.abs(e[0]) ** 2, axis=0)
        cross += np.sum(e[0].conj() * csi.H_hat[0], axis=0)
    np.testing.assert_allclose(err / n / cfg.M, csi.C[0], rtol=0.05)
    assert np.all(np.abs(cross / n / cfg.M) < 0.02)


def test_whiten_perfect_csi_passthrough(rng):
    _, ch = network(5)
    csi = chn.CsiModel(H_hat=ch.H.copy(), C=np.zeros((4, 8)), p=np.ones(8), est_var=np.ones((4, 8)))
    eq = chn.whiten(csi, 10.0)
    np.testing.assert_allclose(csi.Omega, np.broadcast_to(np.eye(8), (4, 8, 8)))
    np.testing.assert_allclose(eq.H, ch.H, atol=1e-14)


def test_whiten_uniform_error(rng):
    sf, ch = network(6)
    c, rho = 0.3, 10 ** 0.5
    csi = chn.CsiModel(H_hat=ch.H.copy(), C=np.full((4, 8), c), p=sf.p, est_var=np.ones((4, 8)))
    eq = chn.whiten(csi, rho)
    np.testing.assert_allclose(eq.H, ch.H / np.sqrt(1 + rho * 8 * c), atol=1e-10)


def test_whiten_general_omega(rng):
    _, ch = network(7)
    X = chn.crandn(rng, (4, 8, 8))
    Omega = np.eye(8)[None] + np.einsum("lij,lkj->lik", X, X.conj())
    csi = chn.CsiModel(H_hat=ch.H.copy(), C=np.zeros((4, 8)), p=np.ones(8), est_var=np.ones((4, 8)))
    eq = chn.whiten(csi, 1.0, Omega=Omega)
    for l in range(4):
        S = inv_sqrt_hpd(Omega[l])
        np.testing.assert_allclose(S @ Omega[l] @ S, np.eye(8), atol=1e-9)
        np.testing.assert_allclose(eq.H[l], S @ ch.H[l], atol=1e-12)


def test_whitened_noise_covariance():
    # nu = sqrt(rho) E x + eta with e_{k} ~ CN(0, c_k I), x ~ CN(0, I)
    M, K, rho = 4, 3, 2.0
    c = np.array([0.2, 0.5, 1.0])
    rng = np.random.default_rng(21)
    csi = chn.CsiModel(H_hat=np.zeros((1, M, K)), C=c[None], p=np.ones(K), est_var=np.ones((1, K)))
    chn.whiten(csi, rho)
    S = inv_sqrt_hpd(csi.Omega[0])
    n = 10_000
    E = chn.crandn(rng, (n, M, K)) * np.sqrt(c)[None, None, :]
    x = chn.crandn(rng, (n, K))
    nu = np.sqrt(rho) * np.einsum("nmk,nk->nm", E, x) + chn.crandn(rng, (n, M))
    w = nu @ S.T
    cov = w.T @ w.conj() / n
    assert np.linalg.norm(cov - np.eye(M)) < 0.05 * M


def test_trial_rng_order_independent():
    a = chn.trial_rng(7, 3).standard_normal(4)
    chn.trial_rng(7, 1).standard_normal(10)
    b = chn.trial_rng(7, 3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, chn.trial_rng(7, 4).standard_normal(4))
