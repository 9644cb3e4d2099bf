import math

import numpy as np
import pytest

from noma_pa.allocation import oma_equivalent, strategy_allocation
from noma_pa.channel import ChannelModel1, ChannelModel2, cdf_model1, sample_gains
from noma_pa.model import IndexOutOfRange, NomaError, PowerAllocation, make_config
from noma_pa.outage import (
    CHUNK_TRIALS,
    CSV_COLUMNS,
    analytic_outage,
    analytic_success,
    binomial_se,
    capacity_outage,
    effective_thresholds,
    montecarlo_outage,
    noma_thresholds,
    oma_threshold,
    parse_grid,
    resolve_workers,
    simulate_counts,
    stage_thresholds,
    sweep,
    write_csv,
)
from noma_pa.rng import stream


def proportional(cfg):
    return strategy_allocation(cfg, "proportional")[0]


class TestThresholds:
    def test_two_user_example(self):
        cfg = make_config([1.0, 1.0], [0.5, 0.5], 10.0)
        thr = stage_thresholds(cfg, PowerAllocation((0.8, 0.2)))
        # (2^1 - 1) / (10 (0.8 - 0.2)) and (2^1 - 1) / (10 * 0.2)
        np.testing.assert_allclose(thr, [1 / 6, 0.5], rtol=1e-14)
        users = noma_thresholds(cfg, PowerAllocation((0.8, 0.2)))
        assert users[1].stage_thresholds == pytest.approx((1 / 6, 0.5))
        assert users[1].effective == pytest.approx(0.5)
        assert not users[1].certain_outage

    def test_oma_threshold(self, ref5):
        # user 1 at 10 dB: (2^{10/3} - 1) / 10
        assert oma_threshold(ref5, 1) == pytest.approx((2 ** (10 / 3) - 1) / 10, rel=1e-14)
        assert oma_threshold(ref5.with_snr(1.0), 1) == pytest.approx(9.0793684, rel=1e-7)
        with pytest.raises(IndexOutOfRange):
            oma_threshold(ref5, 6)

    def test_nonpositive_margin_sentinel(self, ref5):
        alloc = PowerAllocation((0.25, 0.35, 0.2, 0.12, 0.08))
        thr = stage_thresholds(ref5, alloc)
        assert np.isinf(thr[0]) and np.isinf(thr[1])
        assert np.all(np.isfinite(thr[2:]))
        users = noma_thresholds(ref5, alloc)
        assert all(u.certain_outage and math.isinf(u.effective) for u in users)
        probs = analytic_outage(ref5, alloc, ChannelModel1(5))
        assert np.all(probs == 1.0)

    def test_stage_thresholds_shared_across_users(self, ref5):
        users = noma_thresholds(ref5, proportional(ref5))
        for u in users[1:]:
            assert u.stage_thresholds[:-1] == users[u.user - 2].stage_thresholds

    def test_oma_equivalent_equalizes_probabilities(self, ref5):
        alloc = oma_equivalent(ref5).as_allocation()
        ch = ChannelModel1(5)
        np.testing.assert_allclose(
            analytic_outage(ref5, alloc, ch, "noma"), analytic_outage(ref5, alloc, ch, "oma"), rtol=1e-11
        )

    def test_proportional_beats_oma(self, ref5):
        alloc = proportional(ref5)
        for ch in (ChannelModel1(5), ChannelModel2.with_random_precoder(2, 3, (0.5, 1.4, 0.8, 1.7, 1.1), 0)):
            for xi_db in (0, 20, 40):
                cfg = ref5.with_snr_db(xi_db)
                assert np.all(analytic_outage(cfg, alloc, ch, "noma") <= analytic_outage(cfg, alloc, ch, "oma"))
                # strict in the success probabilities, which keep precision near outage 1
                assert np.all(analytic_success(cfg, alloc, ch, "noma") > analytic_success(cfg, alloc, ch, "oma"))

    def test_analytic_matches_cdf(self, ref5):
        alloc = proportional(ref5)
        thr = effective_thresholds(ref5, alloc)
        probs = analytic_outage(ref5, alloc, ChannelModel1(5))
        for n in range(5):
            assert probs[n] == cdf_model1(thr[n], n + 1, 5)

    def test_success_complements_outage(self, ref5):
        alloc = proportional(ref5)
        ch2 = ChannelModel2.with_random_precoder(2, 3, (0.5, 1.4, 0.8, 1.7, 1.1), 0)
        for ch in (ChannelModel1(5), ch2):
            for mode in ("noma", "oma"):
                total = analytic_outage(ref5, alloc, ch, mode) + analytic_success(ref5, alloc, ch, mode)
                np.testing.assert_allclose(total, 1.0, rtol=1e-13)
        dead = PowerAllocation((0.25, 0.35, 0.2, 0.12, 0.08))
        assert np.all(analytic_success(ref5, dead, ChannelModel1(5)) == 0.0)

    def test_bad_mode(self, ref5):
        with pytest.raises(NomaError):
            analytic_outage(ref5, proportional(ref5), ChannelModel1(5), "both")


class TestMonteCarlo:
    def test_union_is_max_against_capacities(self, ref5):
        for alloc in (proportional(ref5), PowerAllocation((0.3, 0.25, 0.2, 0.15, 0.1))):
            gains = sample_gains(stream(5, 0), ChannelModel1(5), 10_000)
            user, stage = capacity_outage(ref5, alloc, gains)
            thr = stage_thresholds(ref5, alloc)
            np.testing.assert_array_equal(user, stage.any(axis=2))
            np.testing.assert_array_equal(user, gains < np.maximum.accumulate(thr))
            assert not stage[:, 0, 1:].any()

    def test_debug_mode(self, ref5):
        rep = montecarlo_outage(ref5, proportional(ref5), ChannelModel1(5), trials=20_000, seed=1, debug=True)
        assert rep.trials == 20_000

    def test_within_band_of_analytic(self, ref5):
        alloc = proportional(ref5)
        ch = ChannelModel1(5)
        rep = montecarlo_outage(ref5, alloc, ch, trials=200_000, seed=3)
        for emp, mode in ((rep.empirical_noma, "noma"), (rep.empirical_oma, "oma")):
            p = analytic_outage(ref5, alloc, ch, mode)
            assert np.all(np.abs(emp - p) <= 6 * binomial_se(p, rep.trials))

    def test_probabilities_and_stage_layout(self, ref5):
        rep = montecarlo_outage(ref5, proportional(ref5), ChannelModel1(5), trials=50_000, seed=2)
        for v in (rep.empirical_noma, rep.empirical_oma):
            assert np.all((v >= 0) & (v <= 1))
        stage = rep.stage_empirical
        assert np.isnan(stage[0, 1])
        assert not np.isnan(np.tril(stage)).any()
        # own stage dominates for a well-behaved allocation
        np.testing.assert_array_equal(np.diag(stage), rep.empirical_noma)
        for n in range(5):
            assert np.all(np.diff(stage[n, : n + 1]) >= 0)

    def test_noma_not_worse_than_oma(self, ref5):
        rep = montecarlo_outage(ref5, proportional(ref5), ChannelModel1(5), trials=50_000, seed=2)
        assert np.all(rep.empirical_noma <= rep.empirical_oma)

    def test_oma_only(self, ref5):
        rep = montecarlo_outage(ref5, None, ChannelModel1(5), trials=1000, seed=0, mode="oma")
        assert rep.empirical_noma is None and rep.empirical_oma is not None
        with pytest.raises(NomaError):
            montecarlo_outage(ref5, None, ChannelModel1(5), trials=1000, mode="noma")

    def test_worker_count_does_not_change_counts(self, ref5):
        alloc = proportional(ref5)
        trials = 3 * CHUNK_TRIALS + 17
        a = montecarlo_outage(ref5, alloc, ChannelModel1(5), trials=trials, seed=8, workers=1)
        b = montecarlo_outage(ref5, alloc, ChannelModel1(5), trials=trials, seed=8, workers=3)
        np.testing.assert_array_equal(a.empirical_noma, b.empirical_noma)
        np.testing.assert_array_equal(a.stage_empirical, b.stage_empirical)

    def test_seed_changes_counts(self, ref5):
        alloc = proportional(ref5)
        a = montecarlo_outage(ref5, alloc, ChannelModel1(5), trials=5000, seed=1)
        b = montecarlo_outage(ref5, alloc, ChannelModel1(5), trials=5000, seed=2)
        assert not np.array_equal(a.empirical_noma, b.empirical_noma)

    def test_no_trials(self):
        with pytest.raises(NomaError):
            simulate_counts(ChannelModel1(1), np.zeros((1, 1, 3)), 0, 0)

    def test_resolve_workers(self, monkeypatch):
        assert resolve_workers(2) == 2
        monkeypatch.setenv("NOMA_PA_THREADS", "3")
        assert resolve_workers() == 3
        monkeypatch.setenv("NOMA_PA_THREADS", "0")
        assert resolve_workers() >= 1
        monkeypatch.setenv("NOMA_PA_THREADS", "many")
        with pytest.raises(NomaError):
            resolve_workers()


class TestSweep:
    def test_parse_grid(self):
        assert parse_grid("0:40:10") == [0.0, 10.0, 20.0, 30.0, 40.0]
        assert parse_grid("0:1:0.3") == [0.0, 0.3, 0.6, 0.9]
        assert parse_grid("5") == [5.0]
        assert parse_grid(7) == [7.0]
        assert len(parse_grid("0:40:2")) == 21
        for bad in ("a:b:c", "0:10", "10:0:1", "0:10:0"):
            with pytest.raises(NomaError):
                parse_grid(bad)

    def test_analytic_sweep_monotone_in_snr(self, ref5):
        reports = sweep(ref5, "proportional", ChannelModel1(5), "0:40:5", montecarlo=False)
        noma = np.array([r.analytic_noma for r in reports])
        oma = np.array([r.analytic_oma for r in reports])
        assert np.all(np.diff(noma, axis=0) <= 0)
        assert np.all(np.diff(oma, axis=0) <= 0)
        assert np.all(noma <= oma)

    def test_montecarlo_sweep_uses_common_draws(self, ref5):
        reports = sweep(ref5, "proportional", ChannelModel1(5), "0:40:10", trials=20_000, seed=4, analytic=False)
        emp = np.array([r.empirical_noma for r in reports])
        # same draws at every point: counts can only fall as the SNR grows
        assert np.all(np.diff(emp, axis=0) <= 0)
        single = montecarlo_outage(ref5.with_snr_db(20), proportional(ref5), ChannelModel1(5), 20_000, 4)
        np.testing.assert_array_equal(reports[2].empirical_noma, single.empirical_noma)

    def test_callable_allocation(self, ref5):
        reports = sweep(ref5, lambda cfg: oma_equivalent(cfg).as_allocation(), ChannelModel1(5), [10], montecarlo=False)
        np.testing.assert_allclose(reports[0].analytic_noma, reports[0].analytic_oma, rtol=1e-11)

    def test_nothing_requested(self, ref5):
        with pytest.raises(NomaError):
            sweep(ref5, "proportional", ChannelModel1(5), [0], analytic=False, montecarlo=False)


class TestCsv:
    def test_layout(self, ref5):
        reports = sweep(ref5, "proportional", ChannelModel1(5), [10, 0], trials=1000, seed=6)
        text = write_csv(reports)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        # per user n: four summary rows plus n stage rows
        assert len(lines) == 1 + 2 * sum(4 + n for n in range(1, 6))
        first = lines[1].split(",")
        assert first[:3] == ["0.0", "1", "noma_analytic"]
        assert first[4:] == ["", ""]
        metrics = [line.split(",")[2] for line in lines[1:10]]
        assert metrics[:5] == ["noma_analytic", "oma_analytic", "noma_mc", "oma_mc", "stage_mc:1"]
        assert metrics[5:] == ["noma_analytic", "oma_analytic", "noma_mc", "oma_mc"]
        mc = [line.split(",") for line in lines if ",noma_mc," in line]
        assert all(row[4:] == ["1000", "6"] for row in mc)
        assert lines[-1].startswith("10.0,5,stage_mc:5,")

    def test_values_round_trip(self, ref5):
        reports = sweep(ref5, "proportional", ChannelModel1(5), [20], montecarlo=False)
        rows = [line.split(",") for line in write_csv(reports).splitlines()[1:]]
        values = [float(r[3]) for r in rows if r[2] == "noma_analytic"]
        assert values == list(reports[0].analytic_noma)
