import math

import numpy as np
import pytest

from b92qkd import montecarlo as mc
from b92qkd.b92model import (
    ProtocolParams,
    depolarizing_loss_channel,
    identity_channel,
    observables,
    usd_attack_channel,
)


def se(p, n):
    return math.sqrt(max(p * (1 - p), 1e-300) / n)


class TestSimulate:
    def test_deterministic(self, params02):
        cfg = mc.SimConfig(params02, depolarizing_loss_channel(0.5, 0.01), 5000, 42, "gedanken")
        a, b = mc.simulate(cfg), mc.simulate(cfg)
        assert a.to_json() == b.to_json()

    def test_seed_changes_record(self, params02):
        ch = depolarizing_loss_channel(0.5, 0.01)
        a = mc.simulate(mc.SimConfig(params02, ch, 5000, 1))
        b = mc.simulate(mc.SimConfig(params02, ch, 5000, 2))
        assert a.counts != b.counts

    def test_fixed_generator_stream(self, params02):
        # pins the PCG64 stream so a generator change is caught
        rec = mc.simulate(mc.SimConfig(params02, depolarizing_loss_channel(0.5, 0.0), 100, 7))
        rng = np.random.Generator(np.random.PCG64(7))
        assert rec.counts["lost"] == int(np.count_nonzero(rng.random(200) < 0.5))

    def test_identity_channel(self, params02):
        for seed in range(5):
            rec = mc.simulate(mc.SimConfig(params02, identity_channel(), 20000, seed, "gedanken"))
            assert rec.counts["n_err"] == 0 and rec.counts["n_bit"] == 0 and rec.counts["n_ph"] == 0
            for name in ("eps1", "eps3", "eps5", "eps6"):
                assert rec.epsilons[name] == 0.0

    def test_identity_filter_rate_converges(self, params02):
        devs = []
        for n in (1000, 100000):
            recs = mc.run_trials(params02, identity_channel(), n, 20, seed=3)
            devs.append(abs(np.mean([r.rate("n_fil") for r in recs]) - 0.32))
        assert devs[1] < devs[0] and devs[1] < 5 * se(0.32, 100000 * 20)

    def test_usd_has_no_errors(self, params02):
        recs = mc.run_trials(params02, usd_attack_channel(params02), 20000, 20, seed=5)
        assert all(r.counts["n_err"] == 0 for r in recs)

    def test_zero_survivors_flagged(self, params02):
        rec = mc.simulate(mc.SimConfig(params02, depolarizing_loss_channel(1.0, 0.0), 50, 0, "gedanken"))
        assert rec.flagged and rec.counts["n_fil"] == 0 and rec.counts["n_err"] == 0

    @pytest.mark.parametrize("kw", [dict(N=0, seed=0), dict(N=10, seed=-1), dict(N=10, seed=2**64), dict(N=10, seed=0, mode="x")])
    def test_config_validation(self, params02, kw):
        with pytest.raises(ValueError):
            mc.SimConfig(params02, identity_channel(), **kw)

    @pytest.mark.parametrize("L", [0.0, 0.5])
    def test_rates_within_five_se(self, params02, L):
        ch = depolarizing_loss_channel(L, 0.01)
        obs = observables(ch, params02)
        N, trials = 100000, 10
        recs = mc.run_trials(params02, ch, N, trials, seed=11)
        checks = {
            "loss": ([r.loss for r in recs], obs.loss_L, 2 * N),
            "n_err": ([r.rate("n_err") for r in recs], obs.err_rate, N),
            "n_fil": ([r.rate("n_fil") for r in recs], obs.fil_rate, N),
            "n_ph": ([r.rate("n_ph") for r in recs], obs.ph_rate, N),
        }
        for name, (vals, ref, n) in checks.items():
            assert abs(np.mean(vals) - ref) <= 5 * se(ref, n * trials), name

    def test_gedanken_counts_match_analytic(self, params02):
        ch = depolarizing_loss_channel(0.3, 0.05)
        obs = observables(ch, params02)
        N, trials = 50000, 10
        recs = mc.run_trials(params02, ch, N, trials, seed=9, mode="gedanken")
        for key, ref in obs.gedanken_n.items():
            mean = np.mean([r.counts[f"n_{key[0]}{key[1]}"] / N for r in recs])
            assert abs(mean - ref) <= 5 * se(ref, N * trials) + 1e-12
        for key, ref in obs.gedanken_m.items():
            mean = np.mean([r.counts[f"m_{key[0]}{key[1]}"] / N for r in recs])
            assert abs(mean - ref) <= 5 * se(ref, N * trials) + 1e-12


class TestRecords:
    def test_jsonl_roundtrip(self, params02, tmp_path):
        recs = mc.run_trials(params02, depolarizing_loss_channel(0.2, 0.02), 1000, 3, seed=1, mode="gedanken")
        path = tmp_path / "r.jsonl"
        mc.write_jsonl(recs, path)
        back = mc.read_jsonl(path)
        assert [r.to_json() for r in back] == [r.to_json() for r in recs]

    def test_trial_seeds_distinct(self):
        s = mc.trial_seeds(0, 1000)
        assert len(set(s)) == 1000 and all(0 <= v < 2**64 for v in s)
        assert mc.trial_seeds(0, 10) == s[:10]


class TestConcentration:
    def test_needs_enough_records(self, params02):
        recs = mc.run_trials(params02, identity_channel(), 100, 5, seed=0, mode="gedanken")
        with pytest.raises(ValueError):
            mc.check_concentration({100: recs, 400: recs})

    def test_needs_two_sizes(self, params02):
        with pytest.raises(ValueError):
            mc.check_concentration({100: []})

    def test_identity_deviations_zero(self, params02):
        recs = {n: mc.run_trials(params02, identity_channel(), n, 30, seed=n, mode="gedanken") for n in (250, 1000)}
        rep = mc.check_concentration(recs)
        for name in ("eps1", "eps3", "eps5", "eps6"):
            assert rep["inequalities"][name]["per_N"][1000]["max"] == 0.0
            assert rep["inequalities"][name]["scaling_ok"]

    def test_scaling(self, params02):
        ch = depolarizing_loss_channel(0.2, 0.03)
        recs = {n: mc.run_trials(params02, ch, n, 200, seed=n, mode="gedanken") for n in (10000, 40000)}
        rep = mc.check_concentration(recs)
        for name in ("eps2", "eps3", "eps4", "eps5", "eps6"):
            assert rep["inequalities"][name]["scaling_ok"], name

    def test_loglog_slope(self):
        ns = [1e3, 1e4, 1e5]
        assert math.isclose(mc.loglog_slope(ns, [1 / math.sqrt(n) for n in ns]), -0.5, rel_tol=1e-9)


class TestCoverage:
    def test_noiseless(self, params02):
        res = mc.coverage_test([(params02, identity_channel())], N=2000, trials=100, seed=0)
        assert res[0].under_fraction == 0.0

    def test_needs_trials(self, params02):
        with pytest.raises(ValueError):
            mc.coverage_test([(params02, identity_channel())], N=100, trials=10, seed=0)

    def test_modes_agree_on_loss(self, params02):
        ch = depolarizing_loss_channel(0.5, 0.01)
        a = mc.run_trials(params02, ch, 20000, 100, seed=1)
        b = mc.run_trials(params02, ch, 20000, 100, seed=2, mode="gedanken")
        assert mc.compare_loss_counts(a, b)["agree"]
