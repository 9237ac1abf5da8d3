"""B92 states, measurements, attack channels and exact observable rates.

Bob's system is a qubit plus a one-dimensional sink ``|V>`` standing for
vacuum and multi-photon events (the QND measurement cannot tell these
apart, so a single sink state suffices). All rates are per emitted signal,
normalized by the group size N of the protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import qmath
from .qmath import QuantumOperation

# Bob basis: |0_x>, |1_x>, |V>
X0 = qmath.basis(2, 0)
X1 = qmath.basis(2, 1)
Z0 = qmath.ket((X0 + X1) / math.sqrt(2))
Z1 = qmath.ket((X0 - X1) / math.sqrt(2))
B0 = qmath.basis(3, 0)
B1 = qmath.basis(3, 1)
VAC = qmath.basis(3, 2)

PI_S = qmath.embed_qubit_operator(np.eye(2))
I3 = qmath.identity(3)

GammaMode = Literal["beta", "one"]


@dataclass(frozen=True)
class ProtocolParams:
    """Signal amplitude ``alpha`` and filter strength ``gamma``."""

    alpha: float
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0 / math.sqrt(2.0)):
            raise ValueError(f"alpha must lie in (0, 1/sqrt(2)), got {self.alpha!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")

    @property
    def beta(self) -> float:
        return math.sqrt(1.0 - self.alpha**2)

    @property
    def alpha2(self) -> float:
        return self.alpha**2

    @property
    def beta2(self) -> float:
        return 1.0 - self.alpha**2

    @property
    def overlap(self) -> float:
        """``<phi_0|phi_1> = beta^2 - alpha^2``."""
        return self.beta2 - self.alpha2

    @property
    def overlap2(self) -> float:
        return self.overlap**2

    @classmethod
    def from_alpha2(cls, alpha2: float, gamma: float | None = None, gamma_mode: GammaMode | None = None):
        if not (0.0 < alpha2 < 0.5):
            raise ValueError(f"alpha^2 must lie in (0, 1/2), got {alpha2!r}")
        alpha = math.sqrt(alpha2)
        return cls(alpha, _resolve_gamma(alpha, gamma, gamma_mode))

    @classmethod
    def from_overlap2(cls, overlap2: float, gamma: float | None = None, gamma_mode: GammaMode | None = None):
        if not (0.0 < overlap2 < 1.0):
            raise ValueError(f"overlap^2 must lie in (0, 1), got {overlap2!r}")
        return cls.from_alpha2((1.0 - math.sqrt(overlap2)) / 2.0, gamma, gamma_mode)

    def with_gamma(self, gamma: float) -> "ProtocolParams":
        return ProtocolParams(self.alpha, gamma)


def _resolve_gamma(alpha: float, gamma: float | None, gamma_mode: GammaMode | None) -> float:
    if gamma is not None and gamma_mode is not None:
        raise ValueError("give gamma or gamma_mode, not both")
    if gamma is not None:
        return gamma
    mode = gamma_mode or "beta"
    if mode == "beta":
        return math.sqrt(1.0 - alpha**2)
    if mode == "one":
        return 1.0
    raise ValueError(f"unknown gamma mode {mode!r}")


@dataclass(frozen=True)
class SignalSet:
    phi0: np.ndarray
    phi1: np.ndarray
    phibar0: np.ndarray
    phibar1: np.ndarray
    psi: np.ndarray  # Alice (x) Bob-qubit, dim 4

    def phi(self, j: int) -> np.ndarray:
        return (self.phi0, self.phi1)[j]

    def phibar(self, j: int) -> np.ndarray:
        return (self.phibar0, self.phibar1)[j]


def make_signals(params: ProtocolParams) -> SignalSet:
    a, b = params.alpha, params.beta
    phi = [qmath.ket(b * X0 + (-1) ** j * a * X1) for j in (0, 1)]
    phibar = [qmath.ket(a * X0 - (-1) ** j * b * X1) for j in (0, 1)]
    psi = (qmath.tensor(Z0, phi[0]) + qmath.tensor(Z1, phi[1])) / math.sqrt(2)
    return SignalSet(phi[0], phi[1], phibar[0], phibar[1], qmath.ket(psi))


def embed_bob(v: np.ndarray) -> np.ndarray:
    """Qubit ket of Bob into his 3-d space."""
    return qmath.ket([v[0], v[1], 0.0])


def embed_pair(v: np.ndarray) -> np.ndarray:
    """Alice (x) Bob-qubit ket (dim 4) into Alice (x) Bob (dim 6)."""
    v = np.asarray(v).reshape(2, 2)
    out = np.zeros((2, 3), dtype=complex)
    out[:, :2] = v
    return qmath.ket(out.ravel())


def filter_operator(params: ProtocolParams) -> np.ndarray:
    """Local filtering Kraus operator on Bob's 3-d space; kills ``|V>``."""
    a, b, g = params.alpha, params.beta, params.gamma
    return qmath.embed_qubit_operator((g / b) * np.diag([a, b]))


@dataclass(frozen=True)
class BobPovm:
    F0: np.ndarray
    F1: np.ndarray
    Fnull: np.ndarray
    Fv: np.ndarray

    def conclusive(self, j: int) -> np.ndarray:
        return (self.F0, self.F1)[j]

    def elements(self) -> tuple[np.ndarray, ...]:
        return (self.F0, self.F1, self.Fnull, self.Fv)


def bob_povm(params: ProtocolParams) -> BobPovm:
    """QND measurement, filter and Z readout folded into one POVM.

    Outcome ``j`` identifies ``|phi_j>``: ``F_j`` is proportional to the
    projector on ``|phibar_{1-j}>``, which is orthogonal to ``|phi_{1-j}>``.
    """
    sig = make_signals(params)
    w = params.gamma**2 / (2.0 * params.beta2)
    f0 = w * qmath.projector(embed_bob(sig.phibar1))
    f1 = w * qmath.projector(embed_bob(sig.phibar0))
    fnull = PI_S - f0 - f1
    fv = I3 - f0 - f1 - fnull
    return BobPovm(qmath._frozen(f0), qmath._frozen(f1), qmath._frozen(fnull), qmath._frozen(fv))


def qnd_povm() -> tuple[np.ndarray, np.ndarray]:
    return PI_S, qmath._frozen(I3 - PI_S)


def gamma_basis(params: ProtocolParams) -> dict[tuple[int, int], np.ndarray]:
    """Entangled basis ``|Gamma_ij>`` on Alice (x) Bob-qubit (dim 4), keyed by ``(i, j)``.

    ``|Gamma_ij> = (-1)^(ij) beta |i_x j_x> + (-1)^(j(i+1)) alpha |(i+1)_x (j+1)_x>``.
    With this sign pattern the check-pair error element equals
    ``(gamma^2 / 2 beta^2) (|Gamma_01><Gamma_01| + |Gamma_11><Gamma_11|)``.
    """
    a, b = params.alpha, params.beta
    xs = (X0, X1)
    out = {}
    for i in (0, 1):
        for j in (0, 1):
            v = (-1) ** (i * j) * b * qmath.tensor(xs[i], xs[j]) + (-1) ** (j * (i + 1)) * a * qmath.tensor(
                xs[(i + 1) % 2], xs[(j + 1) % 2]
            )
            out[(i, j)] = qmath.ket(v)
    return out


@dataclass(frozen=True)
class AttackChannel:
    op: QuantumOperation
    label: str = "channel"

    def __post_init__(self):
        if self.op.dim_in != 3 or self.op.dim_out != 3:
            raise ValueError("attack channels act on Bob's 3-d space")


def _pauli_sum_elements(p: float, convention: str) -> list[np.ndarray]:
    if convention == "p/3":
        w_id, w_pauli = 1.0 - p, p / 3.0
    elif convention == "unweighted":
        # (1-p) rho + sum_i sigma rho sigma, renormalized to unit trace
        w_id, w_pauli = (1.0 - p) / (4.0 - p), 1.0 / (4.0 - p)
    else:
        raise ValueError(f"unknown depolarizing convention {convention!r}")
    return [math.sqrt(w_id) * np.eye(2)] + [math.sqrt(w_pauli) * s for s in qmath.PAULIS]


def depolarizing_loss_channel(L: float, p: float, convention: str = "p/3") -> AttackChannel:
    """Loss ``L`` into the sink, then isotropic Pauli noise of strength ``p`` on survivors.

    ``convention="p/3"`` gives ``(1-p) rho + (p/3) sum_i sigma_i rho sigma_i``.
    """
    if not (0.0 <= L <= 1.0):
        raise ValueError(f"loss must lie in [0, 1], got {L!r}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    elems = [
        math.sqrt(L) * np.asarray(qmath.outer(VAC, B0)),
        math.sqrt(L) * np.asarray(qmath.outer(VAC, B1)),
        np.asarray(qmath.projector(VAC)),
    ]
    for k in _pauli_sum_elements(p, convention):
        if np.any(k):
            elems.append(math.sqrt(1.0 - L) * np.asarray(qmath.embed_qubit_operator(k)))
    return AttackChannel(QuantumOperation(elems), label=f"depol(L={L:g}, p={p:g})")


def usd_attack_channel(params: ProtocolParams) -> AttackChannel:
    """Eve discriminates the signals unambiguously and resends only conclusive results."""
    sig = make_signals(params)
    s = params.overlap
    elems = []
    for j in (0, 1):
        u = sig.phibar(1 - j) / math.sqrt(1.0 + s)
        elems.append(np.asarray(qmath.outer(embed_bob(sig.phi(j)), embed_bob(u))))
    e_inc = np.eye(2) - sum(np.outer(sig.phibar(j), sig.phibar(j).conj()) for j in (0, 1)) / (1.0 + s)
    root = np.asarray(qmath.sqrtm_psd(e_inc))
    elems.append(np.asarray(qmath.outer(VAC, B0)) @ qmath.embed_qubit_operator(root))
    elems.append(np.asarray(qmath.outer(VAC, B1)) @ qmath.embed_qubit_operator(root))
    elems.append(np.asarray(qmath.projector(VAC)))
    return AttackChannel(QuantumOperation(elems), label="usd")


def usd_inconclusive_element(params: ProtocolParams) -> np.ndarray:
    sig = make_signals(params)
    s = params.overlap
    return qmath._frozen(
        np.eye(2) - sum(np.outer(sig.phibar(j), sig.phibar(j).conj()) for j in (0, 1)) / (1.0 + s)
    )


def identity_channel() -> AttackChannel:
    return AttackChannel(qmath.identity_operation(3), label="identity")


def random_attack_channel(rng: np.random.Generator, n_elements: int | None = None) -> AttackChannel:
    """Random trace-preserving map on Bob's 3-d space (2 to 4 elements)."""
    k = int(rng.integers(2, 5)) if n_elements is None else n_elements
    return AttackChannel(qmath.random_cptp(3, k, rng), label=f"random({k})")


@dataclass(frozen=True)
class Observables:
    """Exact per-emitted-signal rates for a given channel.

    ``gedanken_n`` is keyed by ``(i, j)`` with ``j`` in ``0, 1, "v"``;
    ``gedanken_m`` by ``(i, j)`` with both in ``0, 1``.
    """

    loss_L: float
    err_rate: float
    fil_rate: float
    bit_rate: float
    ph_rate: float
    gedanken_n: dict
    gedanken_m: dict

    @property
    def bit_ratio(self) -> float:
        return self.bit_rate / self.fil_rate if self.fil_rate > 0 else 0.0

    @property
    def ph_ratio(self) -> float:
        return self.ph_rate / self.fil_rate if self.fil_rate > 0 else 0.0


@dataclass(frozen=True)
class Measurements:
    """Six-dimensional (Alice (x) Bob) operators behind every observable rate."""

    loss: np.ndarray
    err: np.ndarray
    fil: np.ndarray
    filter_kraus: np.ndarray  # I (x) A_fil
    bit: np.ndarray  # projector on filtered (qubit-block) states
    ph: np.ndarray
    n: dict
    m: dict
    # joint (Alice z outcome, Bob outcome) elements for the check pairs
    check: dict


def measurements(params: ProtocolParams) -> Measurements:
    povm = bob_povm(params)
    a_fil = np.asarray(filter_operator(params))
    i2 = np.eye(2)
    pz = [qmath.projector(Z0), qmath.projector(Z1)]
    px = [qmath.projector(X0), qmath.projector(X1)]
    err = qmath.tensor(pz[0], povm.F1) + qmath.tensor(pz[1], povm.F0)
    bit = qmath.projector(embed_pair(qmath.tensor(Z0, Z1))) + qmath.projector(embed_pair(qmath.tensor(Z1, Z0)))
    ph = qmath.projector(embed_pair(qmath.tensor(X0, X1))) + qmath.projector(embed_pair(qmath.tensor(X1, X0)))
    bob_x = {0: qmath.projector(B0), 1: qmath.projector(B1), "v": qmath.projector(VAC)}
    n = {(i, j): qmath.tensor(px[i], bob_x[j]) for i in (0, 1) for j in (0, 1, "v")}
    m = {k: qmath.projector(embed_pair(v)) for k, v in gamma_basis(params).items()}
    bob_out = {0: povm.F0, 1: povm.F1, "null": povm.Fnull}
    check = {(a, b): qmath.tensor(pz[a], f) for a in (0, 1) for b, f in bob_out.items()}
    return Measurements(
        loss=qmath.tensor(i2, qnd_povm()[1]),
        err=qmath._frozen(err),
        fil=qmath.tensor(i2, a_fil.conj().T @ a_fil),
        filter_kraus=qmath.tensor(i2, a_fil),
        bit=qmath._frozen(bit),
        ph=qmath._frozen(ph),
        n=n,
        m=m,
        check=check,
    )


def initial_state(params: ProtocolParams) -> np.ndarray:
    return qmath.projector(embed_pair(make_signals(params).psi))


def output_state(channel: AttackChannel, params: ProtocolParams) -> np.ndarray:
    """``(id_A (x) channel)(|Psi><Psi|)`` on the 6-d Alice (x) Bob space."""
    return qmath.apply_operation(channel.op.extend_left(2), initial_state(params))


def observables(channel: AttackChannel, params: ProtocolParams, meas: Measurements | None = None) -> Observables:
    if not channel.op.is_trace_preserving(1e-10):
        raise ValueError(f"channel {channel.label!r} is not trace preserving")
    meas = meas or measurements(params)
    rho = output_state(channel, params)
    k = np.asarray(meas.filter_kraus)
    filtered = k @ rho @ k.conj().T
    ev = qmath.expectation
    fil = ev(meas.fil, rho)
    if fil > 0:
        bit = ev(meas.bit, filtered)
        ph = ev(meas.ph, filtered)
    else:
        bit = ph = 0.0
    return Observables(
        loss_L=ev(meas.loss, rho),
        err_rate=ev(meas.err, rho),
        fil_rate=fil,
        bit_rate=bit,
        ph_rate=ph,
        gedanken_n={key: ev(op, rho) for key, op in meas.n.items()},
        gedanken_m={key: ev(op, rho) for key, op in meas.m.items()},
    )


def depolarizing_observables(L: float, p: float, params: ProtocolParams, convention: str = "p/3") -> Observables:
    return observables(depolarizing_loss_channel(L, p, convention), params)
