import numpy as np
import pytest

from switchpoint.core import (
    ConfigError,
    CostModel,
    Discard,
    DiscountSpec,
    EpochSchedule,
    Horizon,
    PolicyConfig,
    PowerLawCurve,
    SampleFlow,
    Switch,
    TabulatedCurve,
)
from switchpoint.env import EnvSpec, NoiseSpec, synth_path
from switchpoint.evaluate import (
    SweepSpec,
    _mode,
    ensemble,
    run_policy,
    run_policy_traced,
    sweep,
)
from switchpoint.policies import PolicyKind
from switchpoint.value import ValueContext, value_switch

UNIT = PowerLawCurve(g_star=1, g0=1, alpha=1)


def make_ctx(beta=1.0, T=10, n=1, schedule=None, **costs):
    return ValueContext(
        flow=SampleFlow.constant(n),
        horizon=Horizon.finite(T),
        discount=DiscountSpec(beta=beta),
        costs=CostModel(**costs),
        schedule=schedule,
    )


def make_env(ctx, curve=UNIT, sigma0=0.0, rho=0.5):
    return EnvSpec(
        truth=curve,
        flow=ctx.flow,
        schedule=ctx.schedule,
        horizon_T=ctx.horizon.T,
        rho=rho,
        noise=NoiseSpec(sigma0=sigma0),
    )


class TestAccounting:
    def test_discard_pays_acquisition_up_to_stop(self):
        # discard at step 2 with beta = 1 and 0.1 per-sample acquisition: -0.2
        sched = EpochSchedule(epochs=(1, 2))
        ctx = make_ctx(T=4, c_acq_pre=0.1, schedule=sched)
        env = make_env(ctx, curve=TabulatedCurve(values=(-0.1, -0.1, -0.1, -0.1)))
        path = synth_path(env)
        config = PolicyConfig(ose_epoch_index=2)
        result = run_policy(ctx, path, PolicyKind.OSE, config)
        assert isinstance(result.decision, Discard)
        assert result.total_value == pytest.approx(-0.2)
        np.testing.assert_allclose(result.pi_stream, [-0.1, -0.1, 0.0, 0.0])

    def test_never_switch_pays_all_pre_costs(self):
        # force the one-shot policy out to the last epoch (step 8 = T) so the
        # acquisition bill covers the whole horizon
        sched = EpochSchedule(epochs=(2, 4, 6, 8))
        ctx = make_ctx(beta=0.9, T=8, c_acq_pre=0.3, c_acq_post=10.0, schedule=sched)
        env = make_env(ctx)
        result = run_policy(ctx, synth_path(env), PolicyKind.OSE,
                            PolicyConfig(ose_epoch_index=4))
        assert isinstance(result.decision, Discard)
        want = -0.3 * sum(0.9 ** t for t in range(1, 9))
        assert result.total_value == pytest.approx(want)

    def test_noiseless_switch_total_matches_value_function(self):
        # realized total of a noiseless greedy run equals the analytic switch
        # value with training charged at every visited epoch
        sched = EpochSchedule(epochs=(1, 2, 4, 8))
        ctx = make_ctx(
            beta=0.95, T=16, c_acq_pre=0.02, c_acq_post=0.1, c_s=0.3,
            c_train=0.05, schedule=sched,
        )
        env = make_env(ctx)
        result, trace = run_policy_traced(ctx, synth_path(env), PolicyKind.GSE,
                                          PolicyConfig(rho=0.5, gamma=0.5))
        assert isinstance(result.decision, Switch)
        assert result.stop_epoch == 3  # continues past two epochs first
        stop_t = sched.epochs[result.stop_epoch - 1]
        visited = tuple(t for t in sched.epochs if t <= stop_t)
        want = value_switch(ctx, stop_t, UNIT.gap_at_samples(stop_t),
                            train_at=visited).total
        assert result.total_value == pytest.approx(want, abs=1e-12)

    def test_regret_is_oracle_minus_total(self):
        sched = EpochSchedule(epochs=(2, 4, 8))
        ctx = make_ctx(beta=0.98, T=16, c_acq_post=0.2, c_s=0.2, schedule=sched)
        env = make_env(ctx, sigma0=0.5)
        result = run_policy(ctx, synth_path(env.with_seed(7)), PolicyKind.GSE,
                            PolicyConfig(rho=0.5, gamma=1.0))
        assert result.regret == pytest.approx(result.oracle_value - result.total_value)

    def test_mismatched_schedule_rejected(self):
        sched = EpochSchedule(epochs=(2, 4, 8))
        ctx = make_ctx(T=16, schedule=sched)
        env = make_env(ctx)
        path = synth_path(env)
        short_ctx = make_ctx(T=16, schedule=EpochSchedule(epochs=(2, 4)))
        with pytest.raises(ConfigError):
            run_policy(short_ctx, path, PolicyKind.GSE, PolicyConfig())


class TestEnsemble:
    SCHED = EpochSchedule(epochs=(2, 4, 8, 16))

    def ctx(self):
        return make_ctx(beta=0.97, T=16, c_acq_pre=0.02, c_acq_post=0.2,
                        c_s=0.2, schedule=self.SCHED)

    def test_bit_for_bit_reproducible(self):
        ctx = self.ctx()
        env = make_env(ctx, sigma0=0.8)
        kinds = [PolicyKind.GSE, PolicyKind.LSEC]
        config = PolicyConfig(rho=0.5, gamma=1.0, w=2)
        a = ensemble(ctx, env, kinds, config, seeds=30, base_seed=11)
        b = ensemble(ctx, env, kinds, config, seeds=30, base_seed=11)
        assert repr(a) == repr(b)

    def test_base_seed_changes_results(self):
        ctx = self.ctx()
        env = make_env(ctx, sigma0=0.8)
        config = PolicyConfig(rho=0.5, gamma=1.0)
        a, _ = ensemble(ctx, env, [PolicyKind.GSE], config, seeds=10, base_seed=0)
        b, _ = ensemble(ctx, env, [PolicyKind.GSE], config, seeds=10, base_seed=999)
        assert a[0].mean_value != b[0].mean_value

    def test_decision_frequencies_sum_to_one(self):
        ctx = self.ctx()
        env = make_env(ctx, sigma0=0.8)
        stats, ostats = ensemble(ctx, env, [PolicyKind.GSE],
                                 PolicyConfig(rho=0.5, gamma=1.0),
                                 seeds=50, base_seed=3)
        st = stats[0]
        assert st.switch_freq + st.discard_freq == pytest.approx(1.0)
        assert st.seeds == ostats.seeds == 50

    def test_mode_ties_resolve_to_smallest(self):
        assert _mode([3, 1, 3, 1, 2]) == 1
        assert _mode([5]) == 5


class TestSweep:
    SCHED = EpochSchedule(epochs=(2, 4, 8, 16))

    def make_spec(self, **kw):
        env = EnvSpec(
            truth=UNIT, flow=SampleFlow.constant(1), schedule=self.SCHED,
            horizon_T=16, rho=0.5, noise=NoiseSpec(sigma0=0.5),
        )
        defaults = dict(
            env=env, c_acq_grid=(0.1,), c_train_grid=(0.0,),
            beta_grid=(0.97,), c_s_grid=(0.2,),
            policies=(PolicyKind.GSE,),
            policy_config=PolicyConfig(rho=0.5, gamma=1.0),
            seeds=20, base_seed=5,
        )
        defaults.update(kw)
        return SweepSpec(**defaults)

    def test_single_cell_matches_ensemble(self):
        spec = self.make_spec()
        rows = sweep(spec)
        assert len(rows) == 1
        ctx = make_ctx(beta=0.97, T=16, c_acq_pre=0.1, c_acq_post=0.1,
                       c_s=0.2, schedule=self.SCHED)
        stats, ostats = ensemble(ctx, spec.env, [PolicyKind.GSE],
                                 spec.policy_config, seeds=20, base_seed=5)
        row = rows[0]
        assert row["mean_value"] == stats[0].mean_value
        assert row["oracle_mean_value"] == ostats.mean_value
        assert row["policy"] == "gse"

    def test_grid_ordering_and_cell_ids(self):
        spec = self.make_spec(c_acq_grid=(0.0, 0.1), c_s_grid=(0.0, 0.2), seeds=3)
        rows = sweep(spec)
        assert [r["cell_id"] for r in rows] == [0, 1, 2, 3]
        assert [(r["c_acq"], r["c_s"]) for r in rows] == [
            (0.0, 0.0), (0.0, 0.2), (0.1, 0.0), (0.1, 0.2),
        ]

    def test_workers_do_not_change_output(self):
        spec = self.make_spec(c_acq_grid=(0.0, 0.1), seeds=5)
        assert repr(sweep(spec, workers=1)) == repr(sweep(spec, workers=2))

    def test_resource_guard(self):
        with pytest.raises(ConfigError, match="sweep too large"):
            self.make_spec(seeds=10_000, max_work=1000)
