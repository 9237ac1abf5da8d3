"""Finite-N simulation of the entanglement-based protocol.

Every emitted pair is i.i.d. given the channel. Outcomes are drawn by
inverse-CDF sampling over the exact outcome distribution of each
measurement, using numpy's PCG64 generator so records are reproducible
across platforms.

Two modes:

``operational``
    QND on all 2N pairs, random permutation of survivors, check pairs
    measured with Alice-Z and Bob's POVM, data pairs filtered and
    classified for bit and phase errors.
``gedanken``
    Everything above plus the counterfactual gedanken measurements: the
    product X-basis measurement on the first N pairs (giving ``n_ij'``)
    and the Gamma-basis measurement on the survivors of the last N pairs
    (giving ``m_ij``). Both refine the QND measurement, so they are drawn
    conditionally on each pair's recorded QND outcome.

Bit and phase errors of one filtered pair do not commute; each is drawn
from its own marginal.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import stats

from . import qmath
from .b92model import AttackChannel, Measurements, ProtocolParams, measurements, output_state
from .estimator import BoundInput, phase_bound

Mode = Literal["operational", "gedanken"]

# probabilities below this are roundoff and are set to zero
PROB_FLOOR = 1e-13

N_KEYS = [(i, j) for i in (0, 1) for j in (0, 1, "v")]
M_KEYS = [(i, j) for i in (0, 1) for j in (0, 1)]
CHECK_KEYS = [(a, b) for a in (0, 1) for b in (0, 1, "null")]


def _key(k) -> str:
    return f"{k[0]}{k[1]}"


@dataclass(frozen=True)
class SimConfig:
    params: ProtocolParams
    channel: AttackChannel
    N: int
    seed: int
    mode: Mode = "operational"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode not in ("operational", "gedanken"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def echo(self) -> dict:
        return {
            "alpha2": self.params.alpha2,
            "gamma": self.params.gamma,
            "channel": self.channel.label,
            "N": self.N,
            "seed": self.seed,
            "mode": self.mode,
        }


@dataclass
class SimRecord:
    N: int
    seed: int
    mode: str
    counts: dict
    epsilons: dict = field(default_factory=dict)
    angles: dict = field(default_factory=dict)
    flagged: bool = False
    config: dict = field(default_factory=dict)

    @property
    def loss(self) -> float:
        return self.counts["lost"] / (2 * self.N)

    def rate(self, name: str) -> float:
        """Count per group size N."""
        return self.counts[name] / self.N

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, allow_nan=True)


@dataclass(frozen=True)
class _Distributions:
    loss: float
    check: np.ndarray  # conditional on "s", ordered as CHECK_KEYS
    fil: float  # conditional on "s"
    bit: float  # conditional on passing the filter
    ph: float
    n_s: np.ndarray  # product-basis outcomes given "s", N_KEYS without "v"
    n_v: np.ndarray  # Alice outcome given "v"
    m_s: np.ndarray  # Gamma outcomes given "s", ordered as M_KEYS


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.where(np.abs(p) < PROB_FLOOR, 0.0, np.asarray(p, dtype=float))
    if np.any(p < 0):
        raise ValueError(f"negative outcome probability {p.min():.3e}")
    total = p.sum()
    return p / total if total > 0 else p


def _distributions(params: ProtocolParams, channel: AttackChannel, meas: Measurements) -> _Distributions:
    rho = output_state(channel, params)
    ev = qmath.expectation
    loss = min(max(ev(meas.loss, rho), 0.0), 1.0)
    s = 1.0 - loss
    k = np.asarray(meas.filter_kraus)
    filtered = k @ rho @ k.conj().T
    fil = ev(meas.fil, rho)
    n = {key: ev(meas.n[key], rho) for key in N_KEYS}
    return _Distributions(
        loss=loss,
        check=_clean(np.array([ev(meas.check[key], rho) for key in CHECK_KEYS])),
        fil=min(max(fil / s, 0.0), 1.0) if s > 0 else 0.0,
        bit=min(max(ev(meas.bit, filtered) / fil, 0.0), 1.0) if fil > PROB_FLOOR else 0.0,
        ph=min(max(ev(meas.ph, filtered) / fil, 0.0), 1.0) if fil > PROB_FLOOR else 0.0,
        n_s=_clean(np.array([n[(i, j)] for i in (0, 1) for j in (0, 1)])),
        n_v=_clean(np.array([n[(0, "v")], n[(1, "v")]])),
        m_s=_clean(np.array([ev(meas.m[key], rho) for key in M_KEYS])),
    )


def _draw(rng: np.random.Generator, probs: np.ndarray, size: int) -> np.ndarray:
    """Category counts of ``size`` inverse-CDF draws."""
    if size == 0:
        return np.zeros(len(probs), dtype=np.int64)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.bincount(idx, minlength=len(probs))


def _binomial_draw(rng: np.random.Generator, p: float, size: int) -> int:
    if size == 0:
        return 0
    return int(np.count_nonzero(rng.random(size) < p))


def simulate(config: SimConfig, meas: Measurements | None = None) -> SimRecord:
    params, N = config.params, config.N
    dist = _distributions(params, config.channel, meas or measurements(params))
    rng = np.random.Generator(np.random.PCG64(config.seed))

    lost_mask = rng.random(2 * N) < dist.loss
    survivors = np.flatnonzero(~lost_mask)
    order = rng.permutation(survivors)
    half = len(order) // 2
    check, data = order[:half], order[half : 2 * half]

    check_counts = _draw(rng, dist.check, len(check))
    by_key = dict(zip(CHECK_KEYS, check_counts.tolist()))
    n_err = by_key[(0, 1)] + by_key[(1, 0)]
    n_fil = _binomial_draw(rng, dist.fil, len(data))
    n_bit = _binomial_draw(rng, dist.bit, n_fil)
    n_ph = _binomial_draw(rng, dist.ph, n_fil)
    counts = {
        "lost": int(lost_mask.sum()),
        "n_check": int(len(check)),
        "n_data": int(len(data)),
        "n_err": int(n_err),
        "n_fil": n_fil,
        "n_bit": n_bit,
        "n_ph": n_ph,
    }
    flagged = len(survivors) == 0

    epsilons: dict = {}
    angles: dict = {}
    if config.mode == "gedanken":
        first = lost_mask[:N]
        v_first = int(first.sum())
        ns = _draw(rng, dist.n_s, N - v_first)
        nv = _draw(rng, dist.n_v, v_first)
        n = {(0, 0): ns[0], (0, 1): ns[1], (1, 0): ns[2], (1, 1): ns[3], (0, "v"): nv[0], (1, "v"): nv[1]}
        s_last = int(N - lost_mask[N:].sum())
        ms = _draw(rng, dist.m_s, s_last)
        m = dict(zip(M_KEYS, ms.tolist()))
        for key in N_KEYS:
            counts[f"n_{_key(key)}"] = int(n[key])
        for key in M_KEYS:
            counts[f"m_{_key(key)}"] = int(m[key])
        epsilons = realized_epsilons(counts, params, N)
        angles = realized_angles(counts, params)
    else:
        epsilons = {"eps1": _eps1(counts, N)}

    return SimRecord(N, config.seed, config.mode, counts, epsilons, angles, flagged, config.echo())


def _scale(counts: dict, N: int) -> float:
    surv = (1.0 - counts["lost"] / (2 * N)) * N
    return surv if surv > 0 else math.nan


def _eps1(counts: dict, N: int) -> float:
    return abs(counts["n_bit"] - counts["n_err"]) / _scale(counts, N)


def realized_epsilons(counts: dict, params: ProtocolParams, N: int) -> dict:
    """Deviations from the large-N identities, each normalized as in its concentration bound."""
    a2, b2, g2 = params.alpha2, params.beta2, params.gamma**2
    n = {key: counts[f"n_{_key(key)}"] for key in N_KEYS}
    m = {key: counts[f"m_{_key(key)}"] for key in M_KEYS}
    sc = _scale(counts, N)
    eps = {
        "eps1": _eps1(counts, N),
        "eps2": abs(a2 * (n[0, 0] + n[1, 0]) + b2 * (n[0, 1] + n[1, 1]) - b2 / g2 * counts["n_fil"]) / sc,
        "eps3": abs(a2 * n[1, 0] + b2 * n[0, 1] - b2 / g2 * counts["n_ph"]) / sc,
        "eps4": abs(a2 * N - (n[1, 0] + n[1, 1] + n[1, "v"])) / N,
        "eps5": abs((m[1, 1] + m[0, 1]) / 2 - b2 / g2 * counts["n_err"]) / sc,
        "eps6": abs((m[1, 0] + m[0, 1]) - (n[1, 0] + n[0, 1])) / sc,
    }
    ang = realized_angles(counts, params)
    e7 = e8 = 0.0
    theta = math.asin(params.alpha)
    for l in (0, 1):
        s_th, s_ph = ang[f"sin2_theta{l}"], ang[f"sin2_phi{l}"]
        if math.isnan(s_th) or math.isnan(s_ph):
            continue
        th = math.asin(math.sqrt(s_th))
        e7 = max(e7, math.sin(th - theta) ** 2 - s_ph)
        e8 = max(e8, s_ph - math.sin(th + theta) ** 2)
    eps["eps7"] = e7
    eps["eps8"] = e8
    return eps


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else math.nan


def realized_angles(counts: dict, params: ProtocolParams) -> dict:
    c = counts
    return {
        "sin2_theta0": _ratio(c["n_11"], c["n_11"] + c["n_00"]),
        "sin2_theta1": _ratio(c["n_01"], c["n_01"] + c["n_10"]),
        "sin2_phi0": _ratio(c["m_11"], c["m_11"] + c["m_00"]),
        "sin2_phi1": _ratio(c["m_01"], c["m_01"] + c["m_10"]),
        "sin2_theta": params.alpha2,
    }


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Independent 64-bit seeds for each trial, derived from one master seed."""
    state = np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint64)
    return [int(s) for s in state]


def run_trials(params: ProtocolParams, channel: AttackChannel, N: int, trials: int, seed: int, mode: Mode = "operational"):
    meas = measurements(params)
    return [simulate(SimConfig(params, channel, N, s, mode), meas) for s in trial_seeds(seed, trials)]


def write_jsonl(records: Iterable[SimRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_jsonl(path) -> list[SimRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(SimRecord(**json.loads(line)))
    return out


MIN_RECORDS = 30


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


def check_concentration(records_by_n: dict, scaling_factor: float = 0.6) -> dict:
    """Deviation quantiles per N and the 1/sqrt(N) scaling check.

    ``records_by_n`` maps N to a list of gedanken-mode records. For every
    pair of schedule points with ratio 4 the median deviation must shrink
    to at most ``scaling_factor`` times its value (zero medians pass).
    """
    if len(records_by_n) < 2:
        raise ValueError("need records at two or more N values")
    for n, recs in records_by_n.items():
        if len(recs) < MIN_RECORDS:
            raise ValueError(f"only {len(recs)} records at N={n}; need at least {MIN_RECORDS}")
    ns = sorted(records_by_n)
    names = sorted(records_by_n[ns[0]][0].epsilons)
    report: dict = {"N": ns, "inequalities": {}}
    for name in names:
        per_n = {}
        for n in ns:
            vals = np.array([r.epsilons[name] for r in records_by_n[n]], dtype=float)
            vals = vals[~np.isnan(vals)]
            per_n[n] = {
                "median": float(np.median(vals)) if vals.size else math.nan,
                "q90": float(np.quantile(vals, 0.9)) if vals.size else math.nan,
                "max": float(vals.max()) if vals.size else math.nan,
            }
        ratios = []
        ok = True
        for a in ns:
            b = 4 * a
            if b in per_n:
                ma, mb = per_n[a]["median"], per_n[b]["median"]
                if ma > 0:
                    ratios.append(mb / ma)
                    ok &= mb <= scaling_factor * ma
                else:
                    ok &= mb == 0
        meds = [per_n[n]["median"] for n in ns]
        slope = loglog_slope(ns, meds) if all(v > 0 for v in meds) else math.nan
        report["inequalities"][name] = {"per_N": per_n, "ratios_4N": ratios, "scaling_ok": bool(ok), "slope": slope}
    return report


def compare_loss_counts(a: Sequence[SimRecord], b: Sequence[SimRecord], level: float = 0.01) -> dict:
    """Two-sample KS test on the lost-pair counts of two record sets."""
    res = stats.ks_2samp([r.counts["lost"] for r in a], [r.counts["lost"] for r in b])
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue), "agree": bool(res.pvalue > level)}


@dataclass(frozen=True)
class CoverageResult:
    under_fraction: float
    abort_fraction: float
    mean_slack: float
    trials: int


def coverage_from_records(records: Sequence[SimRecord], params: ProtocolParams) -> CoverageResult:
    """How often the asymptotic bound, fed with sampled data, falls below the sampled phase errors."""
    under = aborted = 0
    slack = []
    for r in records:
        N = r.N
        try:
            b = phase_bound(BoundInput(r.loss, r.rate("n_err"), r.rate("n_fil"), params))
        except ValueError:
            aborted += 1
            continue
        if not b.feasible:
            aborted += 1
            continue
        gap = b.ph_rate_bound * N - r.counts["n_ph"]
        slack.append(gap / N)
        if gap < 0:
            under += 1
    n = len(records)
    return CoverageResult(under / n, aborted / n, float(np.mean(slack)) if slack else math.nan, n)


def coverage_test(configs: Sequence[tuple[ProtocolParams, AttackChannel]], N: int, trials: int, seed: int) -> list[CoverageResult]:
    if trials < 100:
        raise ValueError("coverage needs at least 100 trials")
    seeds = trial_seeds(seed, len(configs))
    return [
        coverage_from_records(run_trials(params, channel, N, trials, s), params)
        for (params, channel), s in zip(configs, seeds)
    ]
