import io

import numpy as np
import pytest

from switchpoint.core import (
    ConfigError,
    EpochSchedule,
    PowerLawCurve,
    SampleFlow,
    TabulatedCurve,
)
from switchpoint.env import (
    EnvSpec,
    NoiseKind,
    NoiseSpec,
    ReplayError,
    replay_from_csv,
    synth_path,
)

UNIT = PowerLawCurve(g_star=1, g0=1, alpha=1)


def make_env(sigma0=1.0, seed=0, kind=NoiseKind.GAUSSIAN, drift=0.0, n=2, T=20,
             epochs=(2, 5, 10, 20), rho=0.5):
    return EnvSpec(
        truth=UNIT,
        flow=SampleFlow.constant(n),
        schedule=EpochSchedule(epochs=epochs),
        horizon_T=T,
        rho=rho,
        noise=NoiseSpec(kind=kind, sigma0=sigma0, seed=seed),
        drift=drift,
    )


class TestSynthPath:
    def test_noiseless_matches_truth(self):
        env = make_env(sigma0=0.0)
        path = synth_path(env)
        for est in path.estimates:
            assert est.g_hat == pytest.approx(env.true_gap_at_epoch(est.t))
        # future gaps equal the frozen training-time gap on every later step
        for est in path.estimates:
            row = path.future_gap_row(est.k)
            assert np.all(np.isnan(row[: est.t]))
            np.testing.assert_allclose(row[est.t:], env.true_gap_at_epoch(est.t))

    def test_determinism(self):
        a = synth_path(make_env(seed=42))
        b = synth_path(make_env(seed=42))
        assert a.estimates == b.estimates
        np.testing.assert_array_equal(a.future_gaps, b.future_gaps)

    def test_different_seeds_differ(self):
        a = synth_path(make_env(seed=1))
        b = synth_path(make_env(seed=2))
        assert a.estimates != b.estimates

    def test_noise_scaling(self):
        # empirical sd of the epoch estimate error matches sigma0/sqrt(rho N)
        env = make_env(sigma0=2.0, n=40, epochs=(5, 20), T=20)
        errs = {1: [], 2: []}
        for seed in range(10_000):
            path = synth_path(env.with_seed(seed), include_future=False)
            for est in path.estimates:
                errs[est.k].append(est.g_hat - env.true_gap_at_epoch(est.t))
        for est in synth_path(env, include_future=False).estimates:
            want = 2.0 / np.sqrt(0.5 * est.n_cum)
            got = np.std(errs[est.k])
            assert abs(got / want - 1) < 0.05

    def test_bounded_noise_clipped(self):
        env = make_env(sigma0=50.0, kind=NoiseKind.BOUNDED, n=1, epochs=(1, 2), T=4)
        for seed in range(200):
            path = synth_path(env.with_seed(seed))
            for est in path.estimates:
                truth = env.true_gap_at_epoch(est.t)
                assert truth - 2.0 - 1e-12 <= est.g_hat <= truth + 2.0 + 1e-12

    def test_drift_shifts_estimates(self):
        quiet = make_env(sigma0=0.0)
        drifting = make_env(sigma0=0.0, drift=0.01)
        p0, p1 = synth_path(quiet), synth_path(drifting)
        for e0, e1 in zip(p0.estimates, p1.estimates):
            assert e1.g_hat == pytest.approx(e0.g_hat + 0.01 * e1.t)

    def test_tabulated_truth(self):
        curve = TabulatedCurve(values=tuple(0.1 * t for t in range(1, 21)))
        env = EnvSpec(
            truth=curve, flow=SampleFlow.constant(1),
            schedule=EpochSchedule(epochs=(3, 7)), horizon_T=20,
            noise=NoiseSpec(sigma0=0.0),
        )
        path = synth_path(env)
        assert path.estimates[0].g_hat == pytest.approx(0.3)
        assert path.estimates[1].g_hat == pytest.approx(0.7)

    def test_validation(self):
        with pytest.raises(ConfigError):
            make_env(epochs=(2, 25))  # beyond horizon
        with pytest.raises(ConfigError):
            make_env(rho=1.0)
        with pytest.raises(ConfigError):
            NoiseSpec(sigma0=-1.0)


REPLAY_HEADER = "epoch_index,k_time_step,cumulative_samples,gap_estimate\n"


class TestReplay:
    def test_reference_cumulative_sizes(self):
        rows = [REPLAY_HEADER]
        sizes = [500, 1500, 3500, 7500, 15500, 31500, 63500, 127500]
        for k, (t, n) in enumerate(zip((1, 2, 4, 8, 16, 32, 64, 128), sizes), start=1):
            rows.append(f"{k},{t},{n},0.{k}\n")
        path = replay_from_csv(io.StringIO("".join(rows)))
        assert len(path) == 8
        assert [e.n_cum for e in path.estimates] == sizes

    def test_empty_file(self):
        with pytest.raises(ReplayError):
            replay_from_csv(io.StringIO(""))
        with pytest.raises(ReplayError):
            replay_from_csv(io.StringIO(REPLAY_HEADER))

    def test_duplicate_epoch(self):
        text = REPLAY_HEADER + "1,1,10,0.1\n1,2,20,0.2\n"
        with pytest.raises(ReplayError, match="duplicated"):
            replay_from_csv(io.StringIO(text))

    def test_malformed_row_names_line(self):
        text = REPLAY_HEADER + "1,1,10,0.1\n2,2,twenty,0.2\n"
        with pytest.raises(ReplayError, match="line 3"):
            replay_from_csv(io.StringIO(text))

    def test_non_monotone_samples(self):
        text = REPLAY_HEADER + "1,1,10,0.1\n2,2,10,0.2\n"
        with pytest.raises(ReplayError, match="strictly increasing"):
            replay_from_csv(io.StringIO(text))

    def test_missing_column(self):
        with pytest.raises(ReplayError, match="missing required columns"):
            replay_from_csv(io.StringIO("epoch_index,k_time_step\n1,1\n"))

    def test_future_gap_file(self):
        main = REPLAY_HEADER + "1,1,10,0.1\n2,2,20,0.2\n"
        fut_rows = ["challenger_epoch_index,time_step,gap\n"]
        for t in (2, 3):
            fut_rows.append(f"1,{t},0.1\n")
        fut_rows.append("2,3,0.5\n")
        path = replay_from_csv(io.StringIO(main), io.StringIO("".join(fut_rows)))
        assert path.horizon_T == 3
        np.testing.assert_allclose(path.future_gap_row(1)[1:], [0.1, 0.1])
        assert np.isnan(path.future_gap_row(2)[1])
        assert path.future_gap_row(2)[2] == pytest.approx(0.5)

    def test_future_gap_bad_reference(self):
        main = REPLAY_HEADER + "1,1,10,0.1\n"
        fut = "challenger_epoch_index,time_step,gap\n5,2,0.1\n"
        with pytest.raises(ReplayError, match="unknown epoch"):
            replay_from_csv(io.StringIO(main), io.StringIO(fut))
