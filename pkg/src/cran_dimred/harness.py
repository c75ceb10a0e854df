"""
Monte Carlo experiment engine.

A trial draws one network (geometry, slow fading, power control, fast
fading) from its own substream ``trial_rng(seed, trial)`` and evaluates
every (method, swept value) cell on it, so curves are paired across the
sweep. Aggregation happens in trial order, which makes the output
independent of the number of worker processes.
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import channel as chn
from . import dimred, downlink, fronthaul, rates
from .channel import SystemConfig
from .errors import InfeasibleError, ValidationError

CSV_HEADER = ["scenario", "method", "param", "metric", "mean", "stderr", "trials", "seed"]

SCENARIOS = (
    "MiVsSnr",
    "SumRateVsN",
    "SumRateVsM",
    "UserRateVsN",
    "OutageVsN",
    "DensityScaling",
    "CsiSweep",
    "DownlinkVsN",
    "FronthaulVsT",
)

UPLINK_METHODS = ("full",) + dimred.METHODS

DEFAULT_METHODS = {
    "MiVsSnr": ["full", "cklt", "antred"],
    "SumRateVsN": ["full", "cklt", "dcklt", "antsel", "antred"],
    "SumRateVsM": ["full", "cklt"],
    "UserRateVsN": ["full", "cklt", "dcklt", "antred"],
    "OutageVsN": ["full", "cklt", "dcklt", "antred"],
    "DensityScaling": ["full", "cklt", "dcklt"],
    "CsiSweep": ["full", "cklt", "dcklt"],
    "DownlinkVsN": ["full", "cklt", "dcklt", "antsel", "antred"],
    "FronthaulVsT": list(fronthaul.FH_METHODS),
}


def default_sweep(scenario, base):
    return {
        "MiVsSnr": [-10, -5, 0, 5, 10, 15, 20, 25, 30],
        "SumRateVsM": [3, 4, 6, 8, 12],
        "DensityScaling": [8, 16, 32],
        "CsiSweep": [-10, -5, 0, 5, 10, 15, 20],
        "FronthaulVsT": [10, 20, 50, 100, 200, 500, 1000],
    }.get(scenario, list(range(1, base.M + 1)))


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment.

    The meaning of ``sweep`` depends on the scenario: SNR in dB
    (MiVsSnr), reduced dimension N (SumRateVsN, UserRateVsN, OutageVsN,
    DownlinkVsN), antennas M (SumRateVsM), user count K with L scaled
    proportionally (DensityScaling), pilot SNR in dB (CsiSweep) or
    coherence length (FronthaulVsT). ``dims`` lists the reduced dimensions
    drawn as separate curves in MiVsSnr.
    """

    scenario: str
    base: SystemConfig = field(default_factory=SystemConfig)
    sweep: Optional[List[float]] = None
    methods: Optional[List[str]] = None
    trials: int = 100
    seed: int = 0
    out_path: Optional[str] = None
    dims: Optional[List[int]] = None
    threshold_bits: float = 4.0
    max_sweeps: int = 10
    rel_tol: float = 1e-6

    def __post_init__(self):
        if isinstance(self.base, dict):
            self.base = SystemConfig.from_dict(self.base)
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}")
        if self.sweep is None:
            self.sweep = default_sweep(self.scenario, self.base)
        if self.methods is None:
            self.methods = list(DEFAULT_METHODS[self.scenario])
        if self.dims is None:
            self.dims = [self.base.N]
        self.sweep = list(self.sweep)
        self.methods = list(self.methods)
        self.validate()

    def validate(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError(f"trials must be a positive integer, got {self.trials}")
        if not self.sweep:
            raise ValidationError("sweep must be non-empty")
        if not self.methods:
            raise ValidationError("methods must be non-empty")
        allowed = fronthaul.FH_METHODS if self.scenario == "FronthaulVsT" else UPLINK_METHODS
        bad = [m for m in self.methods if m not in allowed]
        if bad:
            raise ValidationError(f"unknown methods {bad} for {self.scenario}; allowed {list(allowed)}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.threshold_bits <= 0:
            raise ValidationError("threshold must be positive")
        sc, b = self.scenario, self.base
        if sc in ("SumRateVsN", "UserRateVsN", "OutageVsN", "DownlinkVsN"):
            _check_ints(self.sweep, 1, b.M, "reduced dimension")
        elif sc == "MiVsSnr":
            _check_ints(self.dims, 1, b.M, "reduced dimension")
        elif sc == "SumRateVsM":
            _check_ints(self.sweep, 1, None, "antenna count")
        elif sc == "DensityScaling":
            _check_ints(self.sweep, 1, None, "user count")
            for K in self.sweep:
                if self.rrhs_for(K) < 1:
                    raise ValidationError(f"K={K} gives no RRHs at L/K={b.L}/{b.K}")
        elif sc == "FronthaulVsT":
            _check_ints(self.sweep, b.K, None, "coherence length")

    def rrhs_for(self, K):
        return int(round(K * self.base.L / self.base.K))

    def to_dict(self):
        d = asdict(self)
        d["base"] = asdict(self.base)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown ExperimentConfig fields: {sorted(unknown)}")
        return cls(**d)


def _check_ints(values, lo, hi, what):
    for v in values:
        if int(v) != v or v < lo or (hi is not None and v > hi):
            rng = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
            raise ValidationError(f"{what} must be an integer in {rng}, got {v}")


@dataclass
class ResultRow:
    scenario: str
    method: str
    param: float
    metric: str
    mean: float
    stderr: float
    trials: int
    seed: int


class _Trial:
    """Accumulates {(method, param, metric): value} for one trial."""

    def __init__(self):
        self.values = {}
        self.infeasible = {}

    def put(self, method, param, metric, value):
        self.values[(method, float(param), metric)] = float(value)

    def mark(self, method, param, failed):
        self.infeasible[(method, float(param))] = bool(failed)


def _network(cfg, rng, M=None):
    geom = chn.sample_geometry(cfg, rng)
    sf = chn.sample_slow_fading(geom, cfg, rng)
    ch = chn.sample_channels(sf, cfg, rng, M=M)
    return sf, ch


def _filters(ecfg, method, H, rho, N, psi, rng):
    if method == "full":
        M = H.shape[1]
        return dimred.FilterBank(A=np.broadcast_to(np.eye(M), (H.shape[0], M, M)), method="full")
    return dimred.design_filters(method, H, rho, N, psi=psi, rng=rng,
                                 max_sweeps=ecfg.max_sweeps, rel_tol=ecfg.rel_tol)


def _trial_mi_vs_snr(ecfg, t, out):
    b = ecfg.base
    rng = chn.trial_rng(ecfg.seed, t)
    sf, ch = _network(b, rng)
    psi = dimred.psi_set(sf, b.M)
    for snr_db in ecfg.sweep:
        rho = db_to_linear(snr_db)
        for m in ecfg.methods:
            if m == "full":
                out.put(m, snr_db, "joint_mi", rates.full_mutual_information(ch.H, rho))
                continue
            for N in ecfg.dims:
                fb = _filters(ecfg, m, ch.H, rho, N, psi, rng)
                out.put(f"{m}:N={N}", snr_db, "joint_mi",
                        rates.joint_mutual_information(dimred.reduce(ch.H, fb), rho))


def _trial_vs_n(ecfg, t, out):
    b = ecfg.base
    rng = chn.trial_rng(ecfg.seed, t)
    sf, ch = _network(b, rng)
    psi = dimred.psi_set(sf, b.M)
    full = None
    for N in ecfg.sweep:
        N = int(N)
        for m in ecfg.methods:
            if m == "full":
                if full is None:
                    full = rates.rate_report(ch.H, _filters(ecfg, m, ch.H, b.rho, b.M, psi, rng), b.rho)
                rep = full
            else:
                rep = rates.rate_report(ch.H, _filters(ecfg, m, ch.H, b.rho, N, psi, rng), b.rho)
            if ecfg.scenario == "SumRateVsN":
                out.put(m, N, "sum_rate", rep.sum_rate_bits)
                out.put(m, N, "delta", rep.delta_bits)
            elif ecfg.scenario == "UserRateVsN":
                out.put(m, N, "user_rate", rep.user_rate_bits.mean())
                out.put(m, N, "gram_rank", rep.gram_rank)
            else:
                out.put(m, N, "outage", rates.outage_stats(rep.user_rate_bits, ecfg.threshold_bits))


def _trial_vs_m(ecfg, t, out):
    b = ecfg.base
    M_max = int(max(ecfg.sweep))
    cfg = b.replace(M=M_max, N=min(b.N, M_max))
    rng = chn.trial_rng(ecfg.seed, t)
    sf, ch_max = _network(cfg, rng)
    for M in ecfg.sweep:
        M = int(M)
        H = ch_max.H[:, :M, :]
        psi = dimred.psi_set(sf, M)
        for m in ecfg.methods:
            if m != "full" and b.N > M:
                out.mark(m, M, True)
                continue
            fb = _filters(ecfg, m, H, b.rho, b.N, psi, rng)
            out.put(m, M, "sum_rate", rates.joint_mutual_information(dimred.reduce(H, fb), b.rho))


def _trial_density(ecfg, t, out):
    b = ecfg.base
    for i, K in enumerate(ecfg.sweep):
        K = int(K)
        cfg = b.replace(K=K, L=ecfg.rrhs_for(K), T_coh=max(b.T_coh, K))
        rng = chn.trial_rng(ecfg.seed, t, i)
        sf, ch = _network(cfg, rng)
        psi = dimred.psi_set(sf, cfg.M)
        for m in ecfg.methods:
            rep = rates.rate_report(ch.H, _filters(ecfg, m, ch.H, cfg.rho, cfg.N, psi, rng), cfg.rho)
            out.put(m, K, "user_rate", rep.user_rate_bits.mean())
            out.put(m, K, "sum_rate", rep.sum_rate_bits)


def _trial_csi(ecfg, t, out):
    b = ecfg.base
    sf, ch = _network(b, chn.trial_rng(ecfg.seed, t))
    for csi_db in ecfg.sweep:
        # same pilot noise for every pilot SNR: curves stay paired
        pilot_rng = chn.trial_rng(ecfg.seed, t, 1)
        csi = chn.estimate_csi(ch, sf, db_to_linear(csi_db), pilot_rng)
        eq = chn.whiten(csi, b.rho)
        psi = dimred.psi_from_gain(chn.whitened_gain(csi, b.rho), b.M)
        rng = chn.trial_rng(ecfg.seed, t, 2)
        for m in ecfg.methods:
            fb = _filters(ecfg, m, eq.H, b.rho, b.N, psi, rng)
            out.put(m, csi_db, "sum_rate", rates.joint_mutual_information(dimred.reduce(eq.H, fb), b.rho))


def downlink_channels(sf, ch):
    """Raw channels rescaled so the network-average slow-fading gain is one.

    The generated pathloss gains carry an arbitrary intercept; uplink power
    control cancels it, but the downlink uses raw channels against unit
    noise, so they are normalised by the mean of beta.
    """
    return ch.H_bar / np.sqrt(np.mean(sf.beta))


def _trial_downlink(ecfg, t, out):
    b = ecfg.base
    rng = chn.trial_rng(ecfg.seed, t)
    sf, ch = _network(b, rng)
    psi = dimred.psi_set(sf, b.M)
    H_bar = downlink_channels(sf, ch)
    for N in ecfg.sweep:
        N = int(N)
        for m in ecfg.methods:
            fb = _filters(ecfg, m, ch.H, b.rho, b.M if m == "full" else N, psi, rng)
            try:
                pre = downlink.two_stage_precoding(H_bar, fb, b.P)
            except InfeasibleError:
                out.mark(m, N, True)
                continue
            out.mark(m, N, False)
            out.put(m, N, "user_rate", downlink.downlink_rates(pre.gamma).mean())


def _trial_fronthaul(ecfg, t, out):
    b = ecfg.base
    for T in ecfg.sweep:
        cfg = b.replace(T_coh=int(T))
        for m in ecfg.methods:
            out.put(m, T, "mean_load", fronthaul.mean_fronthaul_load(m, cfg).mean_per_use)
            out.put(m, T, "reduction_ratio", fronthaul.reduction_ratio(m, cfg))


_TRIALS = {
    "MiVsSnr": _trial_mi_vs_snr,
    "SumRateVsN": _trial_vs_n,
    "UserRateVsN": _trial_vs_n,
    "OutageVsN": _trial_vs_n,
    "SumRateVsM": _trial_vs_m,
    "DensityScaling": _trial_density,
    "CsiSweep": _trial_csi,
    "DownlinkVsN": _trial_downlink,
    "FronthaulVsT": _trial_fronthaul,
}


def run_trial(ecfg, t):
    out = _Trial()
    _TRIALS[ecfg.scenario](ecfg, t, out)
    return out.values, out.infeasible


def worker_count():
    """Worker processes from DIMRED_THREADS (unset: 1, 0: one per CPU)."""
    raw = os.environ.get("DIMRED_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"DIMRED_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValidationError("DIMRED_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _run_trial_args(args):
    return run_trial(*args)


def collect_trials(ecfg, workers=None):
    """Per-trial results, in trial order."""
    n_trials = 1 if ecfg.scenario == "FronthaulVsT" else int(ecfg.trials)
    workers = worker_count() if workers is None else workers
    jobs = [(ecfg, t) for t in range(n_trials)]
    if workers <= 1 or n_trials == 1:
        return [_run_trial_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_trial_args, jobs, chunksize=max(1, n_trials // (4 * workers))))


def aggregate(ecfg, trial_results):
    samples = {}
    failed = {}
    for values, infeasible in trial_results:
        for key, v in values.items():
            samples.setdefault(key, []).append(v)
        for key, f in infeasible.items():
            failed.setdefault(key, []).append(1.0 if f else 0.0)
    rows = []
    for (method, param, metric), vals in samples.items():
        rows.append(_row(ecfg, method, param, metric, vals))
    for (method, param), vals in failed.items():
        if any(vals):
            rows.append(_row(ecfg, method, param, "infeasible", vals))
    return sort_rows(rows)


def _row(ecfg, method, param, metric, vals):
    a = np.asarray(vals, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return ResultRow(ecfg.scenario, method, float(param), metric, float(a.mean()), se,
                     int(a.size), int(ecfg.seed))


def sort_rows(rows):
    return sorted(rows, key=lambda r: (r.scenario, r.method, r.param))


def run_experiment(ecfg, workers=None, dump_trials=None):
    """Run all trials and return aggregated rows (deterministic for a seed)."""
    results = collect_trials(ecfg, workers)
    if dump_trials:
        write_trial_dump(results, dump_trials)
    return aggregate(ecfg, results)


def write_trial_dump(results, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "method", "param", "metric", "value"])
        for t, (values, _) in enumerate(results):
            for (method, param, metric), v in values.items():
                w.writerow([t, method, repr(param), metric, repr(v)])


def _format_rows(rows):
    for r in sort_rows(rows):
        yield [r.scenario, r.method, repr(float(r.param)), r.metric, repr(float(r.mean)),
               repr(float(r.stderr)), str(int(r.trials)), str(int(r.seed))]


def emit_csv(rows, path):
    """Write rows as UTF-8 CSV with a fixed header and deterministic order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, fh)


def write_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(_format_rows(rows))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValidationError(f"unexpected CSV header {reader.fieldnames}")
        return [
            ResultRow(d["scenario"], d["method"], float(d["param"]), d["metric"],
                      float(d["mean"]), float(d["stderr"]), int(d["trials"]), int(d["seed"]))
            for d in reader
        ]


def lookup(rows, method, param, metric):
    for r in rows:
        if r.method == method and r.param == float(param) and r.metric == metric:
            return r
    raise KeyError((method, param, metric))
