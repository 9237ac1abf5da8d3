import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from b92qkd import qmath
from b92qkd.b92model import (
    B0,
    B1,
    PI_S,
    VAC,
    ProtocolParams,
    bob_povm,
    depolarizing_loss_channel,
    embed_bob,
    embed_pair,
    filter_operator,
    gamma_basis,
    identity_channel,
    make_signals,
    observables,
    qnd_povm,
    random_attack_channel,
    usd_attack_channel,
    usd_inconclusive_element,
)

from conftest import param_settings

X0 = np.array([1.0, 0.0])  # Bob's qubit basis is the X basis
X1 = np.array([0.0, 1.0])


def exact_identities(obs, params):
    """Residuals of the three linear identities linking gedanken counts to observed rates."""
    n, m = obs.gedanken_n, obs.gedanken_m
    a2, b2, g2 = params.alpha2, params.beta2, params.gamma**2
    ra = a2 * (n[0, 0] + n[1, 0]) + b2 * (n[0, 1] + n[1, 1]) - b2 / g2 * obs.fil_rate
    rb = a2 * n[1, 0] + b2 * n[0, 1] - b2 / g2 * obs.ph_rate
    rc = (m[1, 1] + m[0, 1]) / 2 - b2 / g2 * obs.err_rate
    return ra, rb, rc


class TestParams:
    def test_overlap(self, params02):
        assert math.isclose(params02.overlap, 0.6)
        assert math.isclose(params02.overlap2, 0.36)

    def test_overlap_roundtrip(self):
        p = ProtocolParams.from_overlap2(0.36)
        assert math.isclose(p.alpha2, 0.2)

    @pytest.mark.parametrize("alpha", [0.0, 1 / math.sqrt(2), 0.8, -0.1])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ValueError):
            ProtocolParams(alpha, 0.5)

    def test_gamma_out_of_range(self):
        with pytest.raises(ValueError):
            ProtocolParams(0.3, 1.2)

    def test_gamma_modes(self):
        assert math.isclose(ProtocolParams.from_alpha2(0.2, gamma_mode="beta").gamma, math.sqrt(0.8))
        assert ProtocolParams.from_alpha2(0.2, gamma_mode="one").gamma == 1.0

    def test_phi_orthogonal_to_its_bar(self, params02):
        sig = make_signals(params02)
        for j in (0, 1):
            assert abs(qmath.inner(sig.phi(j), sig.phibar(j))) < 1e-15
        assert math.isclose(qmath.inner(sig.phi(0), sig.phi(1)).real, 0.6)


class TestFilter:
    def test_success_and_epr(self, params02):
        sig = make_signals(params02)
        k = np.kron(np.eye(2), np.asarray(filter_operator(params02)))
        out = k @ embed_pair(sig.psi)
        p = float(np.vdot(out, out).real)
        assert math.isclose(p, 2 * 0.2 * 0.8, rel_tol=1e-12)
        epr = embed_pair((np.kron(X0, X0) + np.kron(X1, X1)) / math.sqrt(2))
        assert math.isclose(abs(np.vdot(epr, out / math.sqrt(p))), 1.0, rel_tol=1e-12)

    def test_x1_pass_probability(self, params02):
        a = filter_operator(params02) @ embed_bob(X1)
        assert math.isclose(np.vdot(a, a).real, 0.8)

    def test_vacuum_blocked(self, params02):
        assert np.allclose(filter_operator(params02) @ VAC, 0)

    def test_bounded_by_qubit_projector(self, params02):
        a = np.asarray(filter_operator(params02))
        assert qmath.is_psd(PI_S - a.conj().T @ a)


class TestPovm:
    def test_conclusive_values(self, params02):
        sig = make_signals(params02)
        povm = bob_povm(params02)
        phi = [embed_bob(sig.phi(j)) for j in (0, 1)]
        assert abs(qmath.inner(phi[1], povm.F0 @ phi[1])) < 1e-15
        assert abs(qmath.inner(phi[0], povm.F1 @ phi[0])) < 1e-15
        # 2 alpha^2 gamma^2 with gamma = beta
        assert math.isclose(qmath.inner(phi[0], povm.F0 @ phi[0]).real, 0.32, rel_tol=1e-12)

    def test_sink_element(self, params02):
        povm = bob_povm(params02)
        assert np.allclose(povm.Fv[:2, :2], 0)
        assert math.isclose(povm.Fv[2, 2].real, 1.0)

    def test_qnd(self):
        qs, qv = qnd_povm()
        assert np.allclose(qs + qv, np.eye(3))
        assert np.allclose(qs @ VAC, 0)
        assert np.allclose(qs @ qs, qs)

    @pytest.mark.parametrize("k", range(100))
    def test_completeness_and_positivity(self, k):
        r = np.random.default_rng(1000 + k)
        params = ProtocolParams(float(r.uniform(0.01, 0.7)), float(r.uniform(0.05, 1.0)))
        povm = bob_povm(params)
        assert np.max(np.abs(sum(povm.elements()) - np.eye(3))) < 1e-12
        for e in povm.elements():
            assert qmath.is_hermitian(e) and qmath.is_psd(e)


class TestGammaBasis:
    def test_orthonormal(self, params02):
        g = gamma_basis(params02)
        keys = list(g)
        gram = np.array([[qmath.inner(g[a], g[b]) for b in keys] for a in keys])
        assert np.max(np.abs(gram - np.eye(4))) < 1e-12

    def test_odd_span(self, params02):
        g = gamma_basis(params02)
        p_gamma = qmath.projector(g[0, 1]) + qmath.projector(g[1, 0])
        p_x = qmath.projector(np.kron(X0, X1)) + qmath.projector(np.kron(X1, X0))
        assert np.max(np.abs(p_gamma - p_x)) < 1e-12

    def test_coefficients(self, params02):
        g = gamma_basis(params02)
        assert math.isclose(qmath.inner(np.kron(X0, X0), g[0, 0]).real, params02.beta)
        assert math.isclose(qmath.inner(np.kron(X1, X1), g[0, 0]).real, params02.alpha)


class TestChannels:
    def test_depol_identity(self):
        ch = depolarizing_loss_channel(0.0, 0.0)
        rho = qmath.projector(embed_bob(X0))
        assert np.allclose(qmath.apply_operation(ch.op, rho), rho)

    def test_full_loss(self):
        ch = depolarizing_loss_channel(1.0, 0.3)
        for v in (embed_bob(X0), embed_bob(X1), VAC):
            assert np.allclose(qmath.apply_operation(ch.op, qmath.projector(v)), qmath.projector(VAC))

    def test_fully_depolarizing_p34(self):
        ch = depolarizing_loss_channel(0.0, 0.75)
        out = qmath.apply_operation(ch.op, qmath.projector(embed_bob(X0)))
        assert np.allclose(out, qmath.embed_qubit_operator(np.eye(2) / 2), atol=1e-15)

    @pytest.mark.parametrize("conv", ["p/3", "unweighted"])
    @pytest.mark.parametrize("L,p", [(0.0, 0.01), (0.5, 0.2), (0.9, 1.0)])
    def test_trace_preserving(self, conv, L, p):
        assert depolarizing_loss_channel(L, p, conv).op.trace_deviation() < 1e-12

    def test_bad_args(self):
        with pytest.raises(ValueError):
            depolarizing_loss_channel(1.5, 0.0)
        with pytest.raises(ValueError):
            depolarizing_loss_channel(0.0, -0.1)

    def test_usd(self, params02):
        ch = usd_attack_channel(params02)
        assert ch.op.trace_deviation() < 1e-12
        e_inc = np.asarray(usd_inconclusive_element(params02))
        assert qmath.is_psd(e_inc)
        sig = make_signals(params02)
        avg = sum(np.outer(sig.phi(j), sig.phi(j)) for j in (0, 1)) / 2
        assert math.isclose(np.trace(e_inc @ avg).real, 0.6, rel_tol=1e-12)


class TestObservables:
    def test_identity_channel(self, params02):
        obs = observables(identity_channel(), params02)
        assert abs(obs.loss_L) < 1e-15 and abs(obs.err_rate) < 1e-15
        assert math.isclose(obs.fil_rate, 0.32, rel_tol=1e-12)
        assert abs(obs.bit_rate) < 1e-15 and abs(obs.ph_rate) < 1e-15

    @pytest.mark.parametrize("L", [0.0, 0.3, 0.8])
    def test_loss_only(self, params02, L):
        obs = observables(depolarizing_loss_channel(L, 0.0), params02)
        assert math.isclose(obs.loss_L, L, abs_tol=1e-14)
        assert abs(obs.err_rate) < 1e-14 and abs(obs.ph_rate) < 1e-14
        assert math.isclose(obs.fil_rate, 0.32 * (1 - L), rel_tol=1e-12)

    def test_depol_example(self, params02):
        obs = observables(depolarizing_loss_channel(0.5, 0.01), params02)
        for r in exact_identities(obs, params02):
            assert abs(r) < 1e-12
        assert math.isclose(obs.bit_rate, obs.err_rate, rel_tol=1e-10)
        assert 0 < obs.ph_rate < obs.fil_rate

    def test_usd_observables(self, params02):
        obs = observables(usd_attack_channel(params02), params02)
        assert abs(obs.err_rate) < 1e-12
        assert abs(obs.loss_L - 0.6) < 1e-10

    def test_rejects_non_tp(self, params02):
        from b92qkd.b92model import AttackChannel

        ch = AttackChannel(qmath.QuantumOperation([0.9 * np.eye(3)]), label="leaky")
        with pytest.raises(ValueError):
            observables(ch, params02)

    @pytest.mark.parametrize("params", param_settings(8, seed=5))
    def test_gamma_scaling(self, params):
        ch = depolarizing_loss_channel(0.3, 0.05)
        g2 = 0.5 * params.gamma
        o1 = observables(ch, params)
        o2 = observables(ch, params.with_gamma(g2))
        ratio = (params.gamma / g2) ** 2
        for name in ("err_rate", "fil_rate", "ph_rate", "bit_rate"):
            assert math.isclose(getattr(o1, name), ratio * getattr(o2, name), rel_tol=1e-10, abs_tol=1e-15)
        assert math.isclose(o1.ph_ratio, o2.ph_ratio, rel_tol=1e-10)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a2=st.floats(0.01, 0.49), g=st.floats(0.1, 1.0))
def test_identities_hold_for_random_channels(seed, a2, g):
    params = ProtocolParams.from_alpha2(a2, gamma=g)
    obs = observables(random_attack_channel(np.random.default_rng(seed)), params)
    for r in exact_identities(obs, params):
        assert abs(r) < 1e-9
    n = obs.gedanken_n
    assert abs(sum(n.values()) - 1) < 1e-12
    assert abs(sum(obs.gedanken_m.values()) - (1 - obs.loss_L)) < 1e-12
    assert abs(n[1, 0] + n[1, 1] + n[1, "v"] - a2) < 1e-12
    assert abs(obs.bit_rate - obs.err_rate) < 1e-12
