import numpy as np
import pytest

from cran_dimred import channel as chn


def iid_channels(rng, L, M, K, scale=1.0):
    """i.i.d. CN(0, scale) channels, shape (L, M, K)."""
    return scale * chn.crandn(rng, (L, M, K))


def network(seed, cfg=None):
    """One (SlowFading, ChannelSet) draw of the simulated network."""
    cfg = cfg or chn.SystemConfig()
    rng = chn.trial_rng(seed, 0)
    geom = chn.sample_geometry(cfg, rng)
    sf = chn.sample_slow_fading(geom, cfg, rng)
    return sf, chn.sample_channels(sf, cfg, rng)


def random_psd(rng, n, rank=None):
    X = chn.crandn(rng, (n, rank or n))
    return X @ X.conj().T


def random_semi_orthogonal(rng, count, M, N):
    """Batch of Haar-like semi-orthogonal M x N matrices via batched QR."""
    Q, _ = np.linalg.qr(chn.crandn(rng, (count, M, N)))
    return Q


def batched_logdet2_id_plus(G):
    sign, logabs = np.linalg.slogdet(np.eye(G.shape[-1]) + G)
    return logabs / np.log(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from tests import test_acceptance
    except ImportError:
        try:
            import test_acceptance
        except ImportError:
            return
    lines = getattr(test_acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
