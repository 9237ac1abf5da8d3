"""Asymptotic upper bound on the phase-error rate of the filtered pairs.

Inputs are the observed loss ``L``, conclusive-error rate ``n_err/N`` and
filter-pass rate ``n_fil/N``. In the large-N limit the gedanken counts obey
linear identities; eliminating them leaves the constraint

    (beta^2/gamma^2) |n_fil - 2 n_err| / N  <=  alpha beta f(x)

for each split of the loss between Alice's two X outcomes. The bound is the
largest phase-error rate compatible with that constraint for some split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .b92model import ProtocolParams

N_GRID = 2001
X_TOL = 1e-12
L1_REL_TOL = 1e-10
# a split whose max f falls short of c by less than this is tangent, not infeasible
FEAS_SLACK = 1e-12
RATIO_CAP = 0.5


@dataclass(frozen=True)
class BoundInput:
    loss_L: float
    err_rate: float
    fil_rate: float
    params: ProtocolParams

    def __post_init__(self):
        tol = 1e-12
        if not (0.0 <= self.loss_L <= 1.0):
            raise ValueError(f"loss must lie in [0, 1], got {self.loss_L!r}")
        if self.err_rate < -tol:
            raise ValueError("err_rate must be non-negative")
        if self.err_rate > self.fil_rate + tol:
            raise ValueError(f"err_rate {self.err_rate!r} exceeds fil_rate {self.fil_rate!r}")
        if self.fil_rate > 1.0 - self.loss_L + tol:
            raise ValueError(f"fil_rate {self.fil_rate!r} exceeds 1 - L = {1.0 - self.loss_L!r}")


@dataclass(frozen=True)
class LossSplit:
    """How the loss ``L`` divides between Alice's X outcomes: ``l1 = n_1v/N``."""

    loss_L: float
    l1: float
    params: ProtocolParams

    @property
    def l0(self) -> float:
        return self.loss_L - self.l1

    @property
    def L0(self) -> float:
        return self.params.alpha2 * self.l1 + self.params.beta2 * self.l0

    @property
    def L1(self) -> float:
        return self.params.alpha2 * self.l0 + self.params.beta2 * self.l1

    @staticmethod
    def l1_range(loss_L: float, params: ProtocolParams) -> tuple[float, float]:
        lo = max(0.0, loss_L - params.beta2)
        return lo, max(lo, min(loss_L, params.alpha2))


@dataclass(frozen=True)
class PhaseBound:
    ph_rate_bound: float
    ratio: float
    argmax_l1: float
    feasible: bool
    uncapped_ratio: float = math.nan


def delta_of(fil_rate: float, params: ProtocolParams) -> float:
    a2, b2 = params.alpha2, params.beta2
    return (b2 / params.gamma**2 * fil_rate - 2.0 * a2 * b2) / (b2 - a2)


def c_of(err_rate: float, fil_rate: float, params: ProtocolParams) -> float:
    return params.beta2 / params.gamma**2 * abs(fil_rate - 2.0 * err_rate) / (params.alpha * params.beta)


def x_of_ph_rate(ph_rate: float, fil_rate: float, params: ProtocolParams) -> float:
    b2 = params.beta2
    return b2 / params.gamma**2 * 2.0 * ph_rate - (b2 - params.alpha2) * delta_of(fil_rate, params)


def ph_rate_of_x(x: float, fil_rate: float, params: ProtocolParams) -> float:
    b2 = params.beta2
    return params.gamma**2 / b2 * (x + (b2 - params.alpha2) * delta_of(fil_rate, params)) / 2.0


def x_domain(delta: float, split: LossSplit) -> tuple[float, float]:
    a2, b2 = split.params.alpha2, split.params.beta2
    L0, L1 = split.L0, split.L1
    lo = L1 + abs(-delta + L1 / (a2 - b2))
    hi = 1.0 - L0 - abs(-delta - a2 + b2 + L0 / (a2 - b2))
    return lo, hi


def f_value(x: float, delta: float, split: LossSplit) -> float | None:
    """The constraint function ``f(x)``; ``None`` outside its domain."""
    a2, b2 = split.params.alpha2, split.params.beta2
    L0, L1 = split.L0, split.L1
    u1, d1 = x - L1, -delta + L1 / (a2 - b2)
    u0, d0 = 1.0 - x - L0, b2 - a2 - delta + L0 / (a2 - b2)
    r1, r0 = u1 * u1 - d1 * d1, u0 * u0 - d0 * d0
    if u1 < 0 or u0 < 0 or r1 < 0 or r0 < 0:
        return None
    return math.sqrt(r1) + math.sqrt(r0)


def phase_bound(inp: BoundInput, n_grid: int = N_GRID) -> PhaseBound:
    params = inp.params
    if inp.fil_rate <= 0.0:
        return PhaseBound(0.0, 0.0, 0.0, True, 0.0)
    a2, b2 = params.alpha2, params.beta2
    c = c_of(inp.err_rate, inp.fil_rate, params)
    delta = delta_of(inp.fil_rate, params)
    x_best, l1_best = kernels.max_x_over_splits(
        a2, b2, c, delta, inp.loss_L, n_grid, FEAS_SLACK, X_TOL, L1_REL_TOL
    )
    if x_best == -math.inf:
        # callers treat this as an abort
        return PhaseBound(RATIO_CAP * inp.fil_rate, RATIO_CAP, math.nan, False, math.nan)
    ph = max(0.0, ph_rate_of_x(x_best, inp.fil_rate, params))
    ratio = ph / inp.fil_rate
    return PhaseBound(ph, min(ratio, RATIO_CAP), l1_best, True, ratio)


def bound_from_observables(obs, params: ProtocolParams, n_grid: int = N_GRID) -> PhaseBound:
    return phase_bound(BoundInput(obs.loss_L, obs.err_rate, obs.fil_rate, params), n_grid)


def closed_form_zero_error(loss_L: float, params: ProtocolParams) -> float:
    """Maximal phase-error ratio when no bit errors are seen and ``n_fil/N = 2 alpha^2 gamma^2 (1-L)``.

    Capped at 1/2 past the loss ``beta^2 - alpha^2`` where no key is possible.
    """
    s = params.overlap
    if loss_L > s:
        return RATIO_CAP
    if loss_L >= 1.0:
        return RATIO_CAP
    return min(RATIO_CAP, params.alpha2 / s * loss_L / (1.0 - loss_L))
