"""Key length, key gain and noise cutoffs for the depolarizing-with-loss family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .b92model import GammaMode, Observables, ProtocolParams, depolarizing_observables
from .estimator import RATIO_CAP, PhaseBound, bound_from_observables

OVERLAP2_MIN = 1e-3
OVERLAP2_MAX = 0.999
N_OVERLAP = 400
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
CUTOFF_TOL = 1e-4

# documentation only: depolarizing cutoffs of other protocols
BB84_CUTOFF_P = 0.165
SIX_STATE_CUTOFF_P = 0.1905


def binary_entropy(q: float) -> float:
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"binary entropy needs q in [0, 1], got {q!r}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


@dataclass(frozen=True)
class KeyRateResult:
    G: float
    n_key_rate: float
    bit_ratio: float
    ph_ratio: float
    # key rate before clipping at zero; negative means no key
    raw: float = 0.0
    # 1 - h(bit) - h(ph); same sign as raw
    bracket: float = 0.0


def key_rate(
    obs: Observables,
    bound: PhaseBound,
    params: ProtocolParams,
    clamp_to_fil: bool = False,
    use_measured_bit: bool = False,
) -> KeyRateResult:
    """``n_key/N = (gamma^2/beta^2) (n_fil/N) [1 - h(n_bit/n_fil) - h(nbar_ph/n_fil)]``.

    ``n_bit`` is estimated by ``n_err`` unless ``use_measured_bit``.
    ``clamp_to_fil`` caps ``n_key`` at ``n_fil`` (the prefactor exceeds one
    when ``gamma > beta``).
    """
    s = obs.fil_rate
    if s <= 0.0:
        return KeyRateResult(0.0, 0.0, 0.0, 0.0, 0.0, -1.0)
    bits = obs.bit_rate if use_measured_bit else obs.err_rate
    bit_ratio = min(max(bits / s, 0.0), RATIO_CAP)
    ph_ratio = min(max(bound.ratio, 0.0), RATIO_CAP)
    pref = params.gamma**2 / params.beta2
    if clamp_to_fil:
        pref = min(pref, 1.0)
    bracket = 1.0 - binary_entropy(bit_ratio) - binary_entropy(ph_ratio)
    if not bound.feasible:
        bracket = min(bracket, -1.0)
    raw = pref * s * bracket
    g = max(0.0, raw) if ph_ratio < RATIO_CAP else 0.0
    return KeyRateResult(g, g, bit_ratio, ph_ratio, raw, bracket)


def gamma_for(mode: GammaMode, params_alpha: float) -> float:
    if mode == "beta":
        return math.sqrt(1.0 - params_alpha**2)
    if mode == "one":
        return 1.0
    raise ValueError(f"unknown gamma mode {mode!r}")


@dataclass(frozen=True)
class OverlapPoint:
    overlap2: float
    params: ProtocolParams
    obs: Observables
    bound: PhaseBound
    key: KeyRateResult


def evaluate_overlap(
    overlap2: float, L: float, p: float, gamma_mode: GammaMode = "beta", convention: str = "p/3", **key_kw
) -> OverlapPoint:
    params = ProtocolParams.from_overlap2(overlap2, gamma_mode=gamma_mode)
    obs = depolarizing_observables(L, p, params, convention)
    bound = bound_from_observables(obs, params)
    return OverlapPoint(overlap2, params, obs, bound, key_rate(obs, bound, params, **key_kw))


def overlap_grid(n: int = N_OVERLAP, lo: float = OVERLAP2_MIN, hi: float = OVERLAP2_MAX) -> np.ndarray:
    """Half log-spaced, half uniform points in ``[lo, hi]``, sorted and unique."""
    half = n // 2
    g = np.concatenate([np.geomspace(lo, hi, half), np.linspace(lo, hi, n - half)])
    return np.unique(g)


@dataclass(frozen=True)
class OverlapOptimum:
    best_overlap_sq: float
    best_G: float
    best_raw: float
    positive: bool


def optimize_overlap(
    L: float,
    p: float,
    gamma_mode: GammaMode = "beta",
    grid: np.ndarray | None = None,
    refine_tol: float = 1e-7,
    convention: str = "p/3",
    **key_kw,
) -> OverlapOptimum:
    """Maximize the key gain over ``|<phi_0|phi_1>|^2`` on a grid plus golden-section refinement.

    When no grid point has a positive gain the search maximizes the
    entropy bracket instead, which has the same sign as the gain but does
    not vanish as the filter-pass rate goes to zero. That keeps the
    refinement pointed at narrow windows of positive gain near a cutoff.
    """
    grid = overlap_grid() if grid is None else np.asarray(grid, dtype=float)
    keys = [evaluate_overlap(o2, L, p, gamma_mode, convention, **key_kw).key for o2 in grid]
    use_raw = any(kr.raw > 0.0 for kr in keys)

    def raw(o2: float) -> float:
        kr = evaluate_overlap(o2, L, p, gamma_mode, convention, **key_kw).key
        return kr.raw if use_raw else kr.bracket

    vals = np.array([kr.raw if use_raw else kr.bracket for kr in keys])
    k = int(np.argmax(vals))
    best_o2, best = float(grid[k]), float(vals[k])
    lo = float(grid[max(k - 1, 0)])
    hi = float(grid[min(k + 1, len(grid) - 1)])
    if hi > lo:
        a = hi - GOLDEN * (hi - lo)
        b = lo + GOLDEN * (hi - lo)
        fa, fb = raw(a), raw(b)
        while hi - lo > refine_tol:
            if fa < fb:
                lo, a, fa = a, b, fb
                b = lo + GOLDEN * (hi - lo)
                fb = raw(b)
            else:
                hi, b, fb = b, a, fa
                a = hi - GOLDEN * (hi - lo)
                fa = raw(a)
        for o2, v in ((a, fa), (b, fb)):
            if v > best:
                best_o2, best = o2, v
    kr = evaluate_overlap(best_o2, L, p, gamma_mode, convention, **key_kw).key
    return OverlapOptimum(best_o2, kr.G, kr.raw, kr.G > 0.0)


def find_cutoff(
    L: float,
    gamma_mode: GammaMode = "beta",
    p_hi: float = 0.25,
    tol: float = CUTOFF_TOL,
    grid: np.ndarray | None = None,
    convention: str = "p/3",
) -> float:
    """Largest depolarizing rate ``p`` with positive optimized key gain (bisection)."""

    def positive(p: float) -> bool:
        return optimize_overlap(L, p, gamma_mode, grid, convention=convention).positive

    lo, hi = 0.0, p_hi
    if not positive(lo):
        return 0.0
    if positive(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
